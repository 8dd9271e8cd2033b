#pragma once

#include <cstddef>
#include <span>

#include "cdpauth/nn/graph.hpp"

namespace cdpauth::nn {

// Image tensors are N x C x H x W.

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Cross-correlation of `x` (N x C x H x W) with `kernel` (O x C x kh x kw)
/// plus an optional per-output-channel `bias` (pass Var{} for none).
Var conv2d(Graph& g, Var x, Var kernel, Var bias, Conv2dOptions options = {});

Var relu(Graph& g, Var x);
Var sigmoid(Graph& g, Var x);

/// Non-overlapping max pooling; trailing rows/columns that do not fill a
/// window are dropped.
Var max_pool2d(Graph& g, Var x, std::size_t window = 2);

/// Nearest-neighbour resize to an arbitrary output size.
Var upsample_nearest(Graph& g, Var x, std::size_t out_height,
                     std::size_t out_width);

/// Concatenates along the channel axis.
Var concat_channels(Graph& g, Var a, Var b);

/// Collapses every axis after the first.
Var flatten(Graph& g, Var x);

/// y = x W^T + b with x: N x F, W: O x F, b: O (optional).
Var dense(Graph& g, Var x, Var weight, Var bias);

Var add(Graph& g, Var a, Var b);
Var scale(Graph& g, Var x, double factor);

/// Mean of squared differences over all elements; scalar output.
Var mse_loss(Graph& g, Var pred, Var target);

/// Mean over the batch of softmax cross-entropy; logits are N x K.
Var softmax_cross_entropy(Graph& g, Var logits,
                          std::span<const std::size_t> labels);

/// Mean binary cross-entropy on logits (any shape, one target per element).
Var bce_with_logits(Graph& g, Var logits, std::span<const double> targets);

}  // namespace cdpauth::nn
