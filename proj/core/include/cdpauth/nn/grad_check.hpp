#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cdpauth/nn/layers.hpp"

namespace cdpauth::nn {

struct BlockReport {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<BlockReport> blocks;
  double max_relative_error = 0.0;
  bool passed = true;
  /// Set when a non-finite value was met; names the location.
  std::string failure;

  /// Names of the blocks that failed the tolerance.
  std::vector<std::string> failed_blocks() const;
};

/// Builds the scalar loss on a fresh graph. Must be deterministic.
using LossBuilder = std::function<Var(Graph&)>;

/// Compares the adjoint gradient of every parameter in `params` against
/// central finite differences with step 1e-4 * max(1, |theta|).
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport grad_check(const LossBuilder& build, const ParameterList& params,
                           double tolerance);

}  // namespace cdpauth::nn
