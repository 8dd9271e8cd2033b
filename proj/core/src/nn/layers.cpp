#include "cdpauth/nn/layers.hpp"

#include <cmath>

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth::nn {

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value().size();
  return n;
}

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

std::vector<Tensor> snapshot(const ParameterList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value());
  return out;
}

void restore(const ParameterList& params, const std::vector<Tensor>& values) {
  if (values.size() != params.size()) {
    throw ShapeError("restore: " + std::to_string(values.size()) +
                     " tensors for " + std::to_string(params.size()) +
                     " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i]->value().shape()) {
      throw ShapeError("restore: shape mismatch for " + params[i]->name());
    }
    params[i]->value() = values[i];
  }
}

Tensor he_uniform(Shape shape, std::size_t fan_in, std::uint64_t seed) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Rng rng(seed);
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

Conv2d::Conv2d(std::string name, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel_size,
               Conv2dOptions options, std::uint64_t seed)
    : kernel_(name + ".kernel",
              he_uniform({out_channels, in_channels, kernel_size, kernel_size},
                         in_channels * kernel_size * kernel_size, seed)),
      bias_(name + ".bias", Tensor({out_channels})),
      options_(options) {}

Var Conv2d::operator()(Graph& g, Var x) {
  return conv2d(g, x, g.parameter(kernel_), g.parameter(bias_), options_);
}

Var Conv2d::operator()(Graph& g, Var x) const {
  return conv2d(g, x, g.constant(kernel_.value(), kernel_.name()),
                g.constant(bias_.value(), bias_.name()), options_);
}

void Conv2d::append_parameters(ParameterList& out) {
  out.push_back(&kernel_);
  out.push_back(&bias_);
}

Dense::Dense(std::string name, std::size_t in_features,
             std::size_t out_features, std::uint64_t seed)
    : weight_(name + ".weight",
              he_uniform({out_features, in_features}, in_features, seed)),
      bias_(name + ".bias", Tensor({out_features})) {}

Var Dense::operator()(Graph& g, Var x) {
  return dense(g, x, g.parameter(weight_), g.parameter(bias_));
}

Var Dense::operator()(Graph& g, Var x) const {
  return dense(g, x, g.constant(weight_.value(), weight_.name()),
               g.constant(bias_.value(), bias_.name()));
}

void Dense::append_parameters(ParameterList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

}  // namespace cdpauth::nn
