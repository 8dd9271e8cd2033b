#pragma once

#include <cstdint>
#include <vector>

#include "cdpauth/nn/layers.hpp"

namespace cdpauth::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  friend bool operator==(const AdamOptions&, const AdamOptions&) = default;
};

/// Moment accumulators mirroring a parameter list.
struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  AdamState(const ParameterList& params, AdamOptions opts);
};

/// Bias-corrected Adam update from the gradients currently held by `params`.
/// Gradients are left untouched.
void adam_step(const ParameterList& params, AdamState& state);

}  // namespace cdpauth::nn
