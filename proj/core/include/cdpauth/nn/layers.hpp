#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdpauth/nn/graph.hpp"
#include "cdpauth/nn/ops.hpp"

namespace cdpauth::nn {

/// Ordered, named view over the parameters of a network.
using ParameterList = std::vector<Parameter*>;

std::size_t parameter_count(const ParameterList& params);
void zero_grads(const ParameterList& params);
/// Deep copy of parameter values, in list order.
std::vector<Tensor> snapshot(const ParameterList& params);
void restore(const ParameterList& params, const std::vector<Tensor>& values);

/// He-style fan-in scaled uniform initialisation: U(-sqrt(6/fan_in), +).
Tensor he_uniform(Shape shape, std::size_t fan_in, std::uint64_t seed);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel_size, Conv2dOptions options, std::uint64_t seed);

  /// Trainable use: registers the parameters on the graph.
  Var operator()(Graph& g, Var x);
  /// Inference use: parameters enter the graph as constants.
  Var operator()(Graph& g, Var x) const;
  void append_parameters(ParameterList& out);

  Parameter& kernel() { return kernel_; }
  Parameter& bias() { return bias_; }
  const Parameter& kernel() const { return kernel_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter kernel_;
  Parameter bias_;
  Conv2dOptions options_;
};

class Dense {
 public:
  Dense() = default;
  Dense(std::string name, std::size_t in_features, std::size_t out_features,
        std::uint64_t seed);

  Var operator()(Graph& g, Var x);
  Var operator()(Graph& g, Var x) const;
  void append_parameters(ParameterList& out);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
};

}  // namespace cdpauth::nn
