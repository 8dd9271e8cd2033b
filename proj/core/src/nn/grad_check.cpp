#include "cdpauth/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cdpauth/error.hpp"

namespace cdpauth::nn {
namespace {

double evaluate(const LossBuilder& build) {
  Graph g;
  const Var loss = build(g);
  return g.value(loss)[0];
}

}  // namespace

std::vector<std::string> GradCheckReport::failed_blocks() const {
  std::vector<std::string> out;
  for (const auto& b : blocks) {
    if (!b.passed) out.push_back(b.name);
  }
  return out;
}

GradCheckReport grad_check(const LossBuilder& build, const ParameterList& params,
                           double tolerance) {
  GradCheckReport report;
  try {
    zero_grads(params);
    {
      Graph g;
      const Var loss = build(g);
      g.backward(loss);
    }
    for (Parameter* p : params) {
      BlockReport block;
      block.name = p->name();
      Tensor& value = p->value();
      const Tensor analytic = p->grad();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double original = value[i];
        const double h = 1e-4 * std::max(1.0, std::abs(original));
        value[i] = original + h;
        const double plus = evaluate(build);
        value[i] = original - h;
        const double minus = evaluate(build);
        value[i] = original;
        const double numeric = (plus - minus) / (2.0 * h);
        if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
          throw NonFiniteError("non-finite gradient for " + p->name() +
                               " at index " + std::to_string(i));
        }
        const double denom =
            std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > block.max_relative_error) {
          block.max_relative_error = rel;
          block.worst_index = i;
        }
      }
      block.passed = block.max_relative_error < tolerance;
      report.passed = report.passed && block.passed;
      report.max_relative_error =
          std::max(report.max_relative_error, block.max_relative_error);
      report.blocks.push_back(std::move(block));
    }
  } catch (const NonFiniteError& e) {
    report.passed = false;
    report.failure = e.what();
  }
  zero_grads(params);
  return report;
}

}  // namespace cdpauth::nn
