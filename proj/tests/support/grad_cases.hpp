#pragma once

// Gradient-check cases shared by the unit tests and the acceptance binary.
// Each case builds fresh parameters from a seed and returns the report.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <numeric>
#include <string>
#include <vector>

#include "cdpauth/nn/grad_check.hpp"
#include "cdpauth/nn/networks.hpp"
#include "cdpauth/nn/ops.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth::testing {

inline nn::Tensor random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero: |v| in [0.05, 1].
inline nn::Tensor off_zero_tensor(nn::Shape shape, Rng& rng) {
  nn::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.05, 1.0);
  return t;
}

// Distinct values at least 0.01 apart, in random order (no max-pool ties).
inline nn::Tensor distinct_tensor(nn::Shape shape, Rng& rng) {
  nn::Tensor t(std::move(shape));
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = -1.0 + 0.01 * static_cast<double>(order[i]) + rng.uniform(0.0, 0.002);
  return t;
}

struct GradCase {
  std::string name;
  std::function<nn::GradCheckReport(std::uint64_t seed, double tolerance)> run;
};

namespace detail {

// Sums op output against a random target through MSE so every element matters.
inline nn::Var reduce(nn::Graph& g, nn::Var y, const nn::Tensor& target) {
  return nn::mse_loss(g, y, g.constant(target));
}

inline nn::Tensor target_like(nn::Graph& g, nn::Var y, std::uint64_t seed) {
  Rng rng(seed);
  return random_tensor(g.value(y).shape(), rng);
}

// Fresh layers start with zero biases, which puts every pre-activation fed by
// a dead region exactly on a ReLU kink. Checks are run at random points.
inline void randomize_biases(const nn::ParameterList& params, Rng& rng) {
  for (auto* p : params)
    if (p->name().ends_with("bias"))
      for (auto& v : p->value().values()) v = rng.uniform(-0.2, 0.2);
}

inline constexpr double kKinkMargin = 1e-3;

// Smallest distance of any ReLU input from 0 and of any max-pool winner from
// its runner-up, over one forward pass.
inline double kink_distance(const nn::LossBuilder& build) {
  nn::Graph g;
  build(g);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const nn::Var v{i};
    const std::string& op = g.op_name(v);
    if (op.ends_with("relu")) {
      for (double a : g.value(g.inputs(v).front()).values()) margin = std::min(margin, std::abs(a));
    } else if (op.ends_with("max_pool2d")) {
      const nn::Tensor& in = g.value(g.inputs(v).front());
      const nn::Tensor& out = g.value(v);
      const std::size_t h = in.dim(2), w = in.dim(3), oh = out.dim(2), ow = out.dim(3);
      const std::size_t win = h / oh;
      for (std::size_t p = 0; p < in.dim(0) * in.dim(1); ++p)
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            std::vector<double> vals;
            for (std::size_t dy = 0; dy < win; ++dy)
              for (std::size_t dx = 0; dx < win; ++dx)
                vals.push_back(in[(p * h + oy * win + dy) * w + ox * win + dx]);
            std::partial_sort(vals.begin(), vals.begin() + 2, vals.end(), std::greater<>());
            margin = std::min(margin, vals[0] - vals[1]);
          }
    }
  }
  return margin;
}

inline bool smooth_point(const nn::LossBuilder& build, std::uint64_t attempt) {
  if (attempt >= 10000) throw std::runtime_error("no smooth point found for gradient check");
  return kink_distance(build) >= kKinkMargin;
}

}  // namespace detail

inline std::vector<GradCase> grad_cases() {
  using namespace nn;
  std::vector<GradCase> cases;

  cases.push_back({"conv2d", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", random_tensor({2, 2, 5, 5}, rng));
    Parameter k("kernel", random_tensor({3, 2, 3, 3}, rng));
    Parameter b("bias", random_tensor({3}, rng));
    return grad_check([&](Graph& g) {
      Var y = conv2d(g, g.parameter(x), g.parameter(k), g.parameter(b), {1, 1});
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x, &k, &b}, tol);
  }});

  cases.push_back({"conv2d_strided", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", random_tensor({1, 2, 7, 7}, rng));
    Parameter k("kernel", random_tensor({2, 2, 3, 3}, rng));
    return grad_check([&](Graph& g) {
      Var y = conv2d(g, g.parameter(x), g.parameter(k), Var{}, {2, 0});
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x, &k}, tol);
  }});

  cases.push_back({"relu", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", off_zero_tensor({2, 3, 4, 4}, rng));
    return grad_check([&](Graph& g) {
      Var y = relu(g, g.parameter(x));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x}, tol);
  }});

  cases.push_back({"sigmoid", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", random_tensor({2, 3, 4, 4}, rng, -4.0, 4.0));
    return grad_check([&](Graph& g) {
      Var y = sigmoid(g, g.parameter(x));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x}, tol);
  }});

  cases.push_back({"max_pool2d", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", distinct_tensor({1, 2, 7, 7}, rng));
    return grad_check([&](Graph& g) {
      Var y = max_pool2d(g, g.parameter(x), 2);
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x}, tol);
  }});

  cases.push_back({"upsample_nearest", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", random_tensor({1, 2, 3, 3}, rng));
    return grad_check([&](Graph& g) {
      Var y = upsample_nearest(g, g.parameter(x), 7, 5);
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x}, tol);
  }});

  cases.push_back({"concat_channels", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter a("a", random_tensor({2, 2, 3, 3}, rng));
    Parameter b("b", random_tensor({2, 1, 3, 3}, rng));
    return grad_check([&](Graph& g) {
      Var y = concat_channels(g, g.parameter(a), g.parameter(b));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&a, &b}, tol);
  }});

  cases.push_back({"flatten_dense", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter x("x", random_tensor({2, 2, 2, 2}, rng));
    Parameter w("weight", random_tensor({3, 8}, rng));
    Parameter b("bias", random_tensor({3}, rng));
    return grad_check([&](Graph& g) {
      Var y = dense(g, flatten(g, g.parameter(x)), g.parameter(w), g.parameter(b));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&x, &w, &b}, tol);
  }});

  cases.push_back({"add_scale", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter a("a", random_tensor({2, 3}, rng));
    Parameter b("b", random_tensor({2, 3}, rng));
    const double factor = rng.uniform(-2.0, 2.0);
    return grad_check([&](Graph& g) {
      Var y = add(g, scale(g, g.parameter(a), factor), g.parameter(b));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, {&a, &b}, tol);
  }});

  cases.push_back({"mse_loss", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter p("pred", random_tensor({3, 4}, rng));
    Parameter t("target", random_tensor({3, 4}, rng));
    return grad_check([&](Graph& g) { return mse_loss(g, g.parameter(p), g.parameter(t)); },
                      {&p, &t}, tol);
  }});

  cases.push_back({"softmax_cross_entropy", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter z("logits", random_tensor({4, 3}, rng, -3.0, 3.0));
    std::vector<std::size_t> labels(4);
    for (auto& l : labels) l = rng.below(3);
    return grad_check([&](Graph& g) { return softmax_cross_entropy(g, g.parameter(z), labels); },
                      {&z}, tol);
  }});

  cases.push_back({"bce_with_logits", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Parameter z("logits", random_tensor({2, 5}, rng, -3.0, 3.0));
    std::vector<double> targets(10);
    for (auto& t : targets) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return grad_check([&](Graph& g) { return bce_with_logits(g, g.parameter(z), targets); },
                      {&z}, tol);
  }});

  cases.push_back({"Conv2d_layer", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Conv2d layer("conv", 2, 3, 3, {1, 1}, derive_seed(seed, "layer"));
    const Tensor x = random_tensor({1, 2, 4, 4}, rng);
    ParameterList params;
    layer.append_parameters(params);
    detail::randomize_biases(params, rng);
    return grad_check([&](Graph& g) {
      Var y = layer(g, g.constant(x));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, params, tol);
  }});

  cases.push_back({"Dense_layer", [](std::uint64_t seed, double tol) {
    Rng rng(seed);
    Dense layer("dense", 5, 3, derive_seed(seed, "layer"));
    const Tensor x = random_tensor({4, 5}, rng);
    ParameterList params;
    layer.append_parameters(params);
    detail::randomize_biases(params, rng);
    return grad_check([&](Graph& g) {
      Var y = layer(g, g.constant(x));
      return detail::reduce(g, y, detail::target_like(g, y, seed + 1));
    }, params, tol);
  }});

  // Network points are redrawn until no ReLU input or max-pool runner-up lies
  // within kKinkMargin of its kink, so the finite-difference stencil sees a
  // smooth function.
  cases.push_back({"ConvClassifier", [](std::uint64_t seed, double tol) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, "point", attempt));
      ConvClassifier net({{1, 8, 8}, {2, 3, 2}, 2}, derive_seed(seed, "net", attempt));
      detail::randomize_biases(net.parameters(), rng);
      const Tensor x = random_tensor({3, 1, 8, 8}, rng, 0.0, 1.0);
      const std::vector<std::size_t> labels{0, 1, 1};
      const LossBuilder loss = [&](Graph& g) {
        return softmax_cross_entropy(g, net.forward(g, g.constant(x)), labels);
      };
      if (detail::smooth_point(loss, attempt)) return grad_check(loss, net.parameters(), tol);
    }
  }});

  cases.push_back({"UNet", [](std::uint64_t seed, double tol) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, "point", attempt));
      UNet net({1, 1, 2}, derive_seed(seed, "net", attempt), "unet");
      detail::randomize_biases(net.parameters(), rng);
      const Tensor x = random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
      const Tensor t = random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
      const LossBuilder loss = [&](Graph& g) {
        return mse_loss(g, net.forward(g, g.constant(x)), g.constant(t));
      };
      if (detail::smooth_point(loss, attempt)) return grad_check(loss, net.parameters(), tol);
    }
  }});

  cases.push_back({"Discriminator", [](std::uint64_t seed, double tol) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, "point", attempt));
      Discriminator net({{1, 8, 8}, 2}, derive_seed(seed, "net", attempt), "disc");
      detail::randomize_biases(net.parameters(), rng);
      const Tensor x = random_tensor({4, 1, 8, 8}, rng, 0.0, 1.0);
      const std::vector<double> targets{1.0, 0.0, 1.0, 0.0};
      const LossBuilder loss = [&](Graph& g) {
        return bce_with_logits(g, net.forward(g, g.constant(x)), targets);
      };
      if (detail::smooth_point(loss, attempt)) return grad_check(loss, net.parameters(), tol);
    }
  }});

  return cases;
}

}  // namespace cdpauth::testing
