#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cdpauth/error.hpp"
#include "cdpauth/nn/adam.hpp"
#include "cdpauth/nn/grad_check.hpp"
#include "cdpauth/nn/networks.hpp"
#include "cdpauth/nn/ops.hpp"
#include "grad_cases.hpp"

using namespace cdpauth;
using namespace cdpauth::nn;
using cdpauth::testing::random_tensor;

namespace {

// Direct nested-loop cross-correlation with zero padding.
Tensor conv_oracle(const Tensor& x, const Tensor& k, const Tensor& b, std::size_t stride,
                   std::size_t pad) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t o = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (w + 2 * pad - kw) / stride + 1;
  Tensor y({n, o, oh, ow});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b.empty() ? 0.0 : b[oc];
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long yy = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                const long xx = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w))
                  continue;
                acc += x[((s * c + ic) * h + yy) * w + xx] * k[((oc * c + ic) * kh + u) * kw + v];
              }
          y[((s * o + oc) * oh + i) * ow + j] = acc;
        }
  return y;
}

}  // namespace

TEST(Conv2d, OneByOneIdentityKernel) {
  Rng rng(1);
  const Tensor x = random_tensor({2, 1, 5, 6}, rng);
  Graph g;
  const Var y = conv2d(g, g.constant(x), g.constant(Tensor({1, 1, 1, 1}, 1.0)), Var{});
  EXPECT_EQ(g.value(y), x);
}

TEST(Conv2d, AveragingKernelOnConstantImage) {
  Graph g;
  const Var y = conv2d(g, g.constant(Tensor({1, 1, 6, 6}, 0.7)),
                       g.constant(Tensor({1, 1, 3, 3}, 1.0 / 9.0)), Var{});
  ASSERT_EQ(g.value(y).shape(), (Shape{1, 1, 4, 4}));
  for (double v : g.value(y).values()) EXPECT_NEAR(v, 0.7, 1e-12);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  Rng rng(2);
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}, {2, 0}}) {
    const Tensor x = random_tensor({2, 3, 7, 6}, rng);
    const Tensor k = random_tensor({4, 3, 3, 3}, rng);
    const Tensor b = random_tensor({4}, rng);
    Graph g;
    const Var y = conv2d(g, g.constant(x), g.constant(k), g.constant(b), {stride, pad});
    const Tensor expected = conv_oracle(x, k, b, stride, pad);
    ASSERT_EQ(g.value(y).shape(), expected.shape());
    for (std::size_t i = 0; i < expected.size(); ++i)
      EXPECT_NEAR(g.value(y)[i], expected[i], 1e-12);
  }
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  Graph g;
  EXPECT_THROW(conv2d(g, g.constant(Tensor({1, 2, 5, 5})), g.constant(Tensor({1, 3, 3, 3})), Var{}),
               ShapeError);
}

TEST(Losses, MseValues) {
  Graph g;
  const Var a = g.constant(Tensor({2, 2}, 0.3));
  EXPECT_DOUBLE_EQ(g.value(mse_loss(g, a, a))[0], 0.0);
  EXPECT_NEAR(g.value(mse_loss(g, a, g.constant(Tensor({2, 2}, 0.4))))[0], 0.01, 1e-15);
  EXPECT_THROW(mse_loss(g, a, g.constant(Tensor({4}, 0.0))), ShapeError);
}

TEST(Losses, CrossEntropyValues) {
  Graph g;
  const std::size_t zero[] = {0};
  EXPECT_NEAR(g.value(softmax_cross_entropy(g, g.constant(Tensor({1, 2}, {0.0, 0.0})), zero))[0],
              std::log(2.0), 1e-15);
  EXPECT_NEAR(
      g.value(softmax_cross_entropy(g, g.constant(Tensor({1, 2}, {1000.0, -1000.0})), zero))[0],
      0.0, 1e-12);
  const double big = g.value(softmax_cross_entropy(g, g.constant(Tensor({1, 2}, {-1e6, 1e6})), zero))[0];
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 2e6, 1e-6);
}

TEST(Losses, BceOnLogits) {
  Graph g;
  const double t[] = {1.0, 0.0};
  EXPECT_NEAR(g.value(bce_with_logits(g, g.constant(Tensor({2}, 0.0)), t))[0], std::log(2.0), 1e-15);
  const double v = g.value(bce_with_logits(g, g.constant(Tensor({2}, {1e6, -1e6})), t))[0];
  EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("w", Tensor({3}, {1.0, -2.0, 0.5}));
  p.grad() = Tensor({3}, {0.3, -5.0, 1e-3});
  AdamState st({&p}, AdamOptions{.lr = 1e-4});
  adam_step({&p}, st);
  EXPECT_NEAR(p.value()[0], 1.0 - 1e-4, 1e-9);
  EXPECT_NEAR(p.value()[1], -2.0 + 1e-4, 1e-9);
  EXPECT_NEAR(p.value()[2], 0.5 - 1e-4, 1e-8);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter p("w", Tensor({2}, {0.2, 0.4}));
  p.grad() = Tensor({2}, 0.0);
  AdamState st({&p}, AdamOptions{});
  for (int i = 0; i < 5; ++i) adam_step({&p}, st);
  EXPECT_EQ(p.value(), Tensor({2}, {0.2, 0.4}));
}

TEST(Adam, DescendsQuadratic) {
  Parameter p("w", Tensor({1}, {1.0}));
  AdamState st({&p}, AdamOptions{.lr = 0.05});
  double previous = 1.0;
  for (int i = 0; i < 10; ++i) {
    p.grad()[0] = 2.0 * p.value()[0];
    adam_step({&p}, st);
    EXPECT_LT(std::abs(p.value()[0]), previous);
    previous = std::abs(p.value()[0]);
  }
}

TEST(GradCheck, LinearModelIsExact) {
  Rng rng(3);
  Parameter w("w", random_tensor({2, 4}, rng));
  Parameter b("b", random_tensor({2}, rng));
  const Tensor x = random_tensor({3, 4}, rng);
  const Tensor target = random_tensor({3, 2}, rng);
  const auto r = grad_check(
      [&](Graph& g) {
        return mse_loss(g, dense(g, g.constant(x), g.parameter(w), g.parameter(b)), g.constant(target));
      },
      {&w, &b}, 1e-8);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_LT(r.max_relative_error, 1e-8);
}

// A conv whose kernel gradient is scaled by 1.1 must fail only the kernel block.
TEST(GradCheck, DetectsCorruptedKernelGradient) {
  Rng rng(4);
  Parameter k("kernel", random_tensor({2, 1, 3, 3}, rng));
  Parameter b("bias", random_tensor({2}, rng));
  const Tensor x = random_tensor({1, 1, 5, 5}, rng);
  const Tensor target = random_tensor({1, 2, 3, 3}, rng);
  const auto r = grad_check(
      [&](Graph& g) {
        const Var kv = g.parameter(k);
        const Var skewed = g.record("skew", g.value(kv), {kv}, [kv](Graph& gg, Var self) {
          const Tensor up = gg.grad(self);
          Tensor& down = gg.grad(kv);
          for (std::size_t i = 0; i < up.size(); ++i) down[i] += 1.1 * up[i];
        });
        return mse_loss(g, conv2d(g, g.constant(x), skewed, g.parameter(b)), g.constant(target));
      },
      {&k, &b}, 1e-4);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.failed_blocks(), std::vector<std::string>{"kernel"});
}

TEST(GradCheck, AllCasesPass) {
  for (const auto& c : cdpauth::testing::grad_cases()) {
    const auto r = c.run(0, 1e-4);
    EXPECT_TRUE(r.passed) << c.name << " max rel " << r.max_relative_error << " " << r.failure;
  }
}

TEST(Graph, NonFiniteValueRaises) {
  Graph g;
  EXPECT_THROW(g.constant(Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()})),
               NonFiniteError);
  const Var x = g.constant(Tensor({2}, {0.0, 1.0}));
  EXPECT_THROW(scale(g, x, std::numeric_limits<double>::infinity()), NonFiniteError);
}

TEST(Networks, ClassifierOutputShape) {
  ConvClassifier net({{1, 16, 16}, {2, 3, 4}, 2}, 7);
  Graph g;
  const Var z = net.forward(g, g.constant(Tensor({3, 1, 16, 16}, 0.5)));
  EXPECT_EQ(g.value(z).shape(), (Shape{3, 2}));
}

TEST(Networks, UNetPreservesOddSizes) {
  UNet net({1, 1, 2}, 3, "u");
  Graph g;
  const Var y = net.forward(g, g.constant(Tensor({1, 1, 15, 13}, 0.5)));
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 1, 15, 13}));
  for (double v : g.value(y).values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Networks, ZeroHeadDiscriminatorGivesZeroLogits) {
  Discriminator d({{2, 12, 12}, 3}, 5, "d");
  d.zero_head();
  Rng rng(1);
  Graph g;
  const Var z = d.forward(g, g.constant(random_tensor({2, 2, 12, 12}, rng, 0.0, 1.0)));
  for (double v : g.value(z).values()) EXPECT_EQ(v, 0.0);
}
