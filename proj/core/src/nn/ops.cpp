#include "cdpauth/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "cdpauth/error.hpp"

namespace cdpauth::nn {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

struct ConvGeometry {
  std::size_t n, c, h, w;
  std::size_t o, kh, kw;
  std::size_t stride, pad;
  std::size_t oh, ow;

  std::size_t patch() const { return c * kh * kw; }
  std::size_t out_plane() const { return oh * ow; }
};

void im2col(const double* x, const ConvGeometry& cg, double* cols) {
  const auto h = static_cast<std::ptrdiff_t>(cg.h);
  const auto w = static_cast<std::ptrdiff_t>(cg.w);
  for (std::size_t c = 0; c < cg.c; ++c) {
    const double* plane = x + c * cg.h * cg.w;
    for (std::size_t ky = 0; ky < cg.kh; ++ky) {
      for (std::size_t kx = 0; kx < cg.kw; ++kx) {
        double* row = cols + ((c * cg.kh + ky) * cg.kw + kx) * cg.out_plane();
        for (std::size_t oy = 0; oy < cg.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * cg.stride + ky) -
                          static_cast<std::ptrdiff_t>(cg.pad);
          double* dst = row + oy * cg.ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + cg.ow, 0.0);
            continue;
          }
          const double* src = plane + iy * w;
          for (std::size_t ox = 0; ox < cg.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * cg.stride + kx) -
                            static_cast<std::ptrdiff_t>(cg.pad);
            dst[ox] = (ix < 0 || ix >= w) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& cg, double* x) {
  const auto h = static_cast<std::ptrdiff_t>(cg.h);
  const auto w = static_cast<std::ptrdiff_t>(cg.w);
  for (std::size_t c = 0; c < cg.c; ++c) {
    double* plane = x + c * cg.h * cg.w;
    for (std::size_t ky = 0; ky < cg.kh; ++ky) {
      for (std::size_t kx = 0; kx < cg.kw; ++kx) {
        const double* row =
            cols + ((c * cg.kh + ky) * cg.kw + kx) * cg.out_plane();
        for (std::size_t oy = 0; oy < cg.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * cg.stride + ky) -
                          static_cast<std::ptrdiff_t>(cg.pad);
          if (iy < 0 || iy >= h) continue;
          const double* src = row + oy * cg.ow;
          double* dst = plane + iy * w;
          for (std::size_t ox = 0; ox < cg.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * cg.stride + kx) -
                            static_cast<std::ptrdiff_t>(cg.pad);
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op,
                  const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " +
                     std::to_string(rank) + ", got shape " +
                     to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

}  // namespace

Var conv2d(Graph& g, Var x, Var kernel, Var bias, Conv2dOptions options) {
  const Tensor& xv = g.value(x);
  const Tensor& kv = g.value(kernel);
  require_rank(xv, 4, "conv2d", "input");
  require_rank(kv, 4, "conv2d", "kernel");
  if (options.stride == 0) throw InvalidInput("conv2d: stride must be >= 1");
  ConvGeometry cg{};
  cg.n = xv.dim(0);
  cg.c = xv.dim(1);
  cg.h = xv.dim(2);
  cg.w = xv.dim(3);
  cg.o = kv.dim(0);
  cg.kh = kv.dim(2);
  cg.kw = kv.dim(3);
  cg.stride = options.stride;
  cg.pad = options.padding;
  if (kv.dim(1) != cg.c) {
    throw ShapeError("conv2d: input has " + std::to_string(cg.c) +
                     " channels but kernel " + to_string(kv.shape()) +
                     " expects " + std::to_string(kv.dim(1)));
  }
  if (cg.h + 2 * cg.pad < cg.kh || cg.w + 2 * cg.pad < cg.kw) {
    throw ShapeError("conv2d: kernel " + to_string(kv.shape()) +
                     " larger than padded input " + to_string(xv.shape()));
  }
  if (bias.valid() && g.value(bias).size() != cg.o) {
    throw ShapeError("conv2d: bias has " +
                     std::to_string(g.value(bias).size()) +
                     " entries for " + std::to_string(cg.o) + " outputs");
  }
  cg.oh = (cg.h + 2 * cg.pad - cg.kh) / cg.stride + 1;
  cg.ow = (cg.w + 2 * cg.pad - cg.kw) / cg.stride + 1;

  Tensor out({cg.n, cg.o, cg.oh, cg.ow});
  RowMat cols(cg.patch(), cg.out_plane());
  const MapConstMat k(kv.data(), cg.o, cg.patch());
  for (std::size_t n = 0; n < cg.n; ++n) {
    im2col(xv.data() + n * cg.c * cg.h * cg.w, cg, cols.data());
    MapMat y(out.data() + n * cg.o * cg.out_plane(), cg.o, cg.out_plane());
    y.noalias() = k * cols;
    if (bias.valid()) {
      const Tensor& bv = g.value(bias);
      for (std::size_t o = 0; o < cg.o; ++o) y.row(o).array() += bv[o];
    }
  }

  std::vector<Var> inputs{x, kernel};
  if (bias.valid()) inputs.push_back(bias);
  return g.record(
      "conv2d", std::move(out), std::move(inputs),
      [x, kernel, bias, cg](Graph& g, Var self) {
        const Tensor& gy = g.grad(self);
        const Tensor& xv = g.value(x);
        const Tensor& kv = g.value(kernel);
        const MapConstMat k(kv.data(), cg.o, cg.patch());
        const bool need_x = g.requires_grad(x);
        const bool need_k = g.requires_grad(kernel);
        const bool need_b = bias.valid() && g.requires_grad(bias);
        RowMat cols(cg.patch(), cg.out_plane());
        RowMat dcols;
        if (need_x) dcols.resize(cg.patch(), cg.out_plane());
        for (std::size_t n = 0; n < cg.n; ++n) {
          const MapConstMat gyn(gy.data() + n * cg.o * cg.out_plane(), cg.o,
                                cg.out_plane());
          if (need_k) {
            im2col(xv.data() + n * cg.c * cg.h * cg.w, cg, cols.data());
            MapMat dk(g.grad(kernel).data(), cg.o, cg.patch());
            dk.noalias() += gyn * cols.transpose();
          }
          if (need_b) {
            Tensor& db = g.grad(bias);
            for (std::size_t o = 0; o < cg.o; ++o) db[o] += gyn.row(o).sum();
          }
          if (need_x) {
            dcols.noalias() = k.transpose() * gyn;
            col2im_add(dcols.data(), cg,
                       g.grad(x).data() + n * cg.c * cg.h * cg.w);
          }
        }
      });
}

Var relu(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return g.record("relu", std::move(out), {x}, [x](Graph& g, Var self) {
    const Tensor& xv = g.value(x);
    const Tensor& gy = g.grad(self);
    Tensor& gx = g.grad(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += gy[i];
    }
  });
}

Var sigmoid(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double z = xv[i];
    if (z >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      out[i] = e / (1.0 + e);
    }
  }
  return g.record("sigmoid", std::move(out), {x}, [x](Graph& g, Var self) {
    const Tensor& y = g.value(self);
    const Tensor& gy = g.grad(self);
    Tensor& gx = g.grad(x);
    for (std::size_t i = 0; i < y.size(); ++i) {
      gx[i] += gy[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var max_pool2d(Graph& g, Var x, std::size_t window) {
  const Tensor& xv = g.value(x);
  require_rank(xv, 4, "max_pool2d", "input");
  if (window == 0) throw InvalidInput("max_pool2d: window must be >= 1");
  const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t oh = h / window, ow = w / window;
  if (oh == 0 || ow == 0) {
    throw ShapeError("max_pool2d: input " + to_string(xv.shape()) +
                     " smaller than window " + std::to_string(window));
  }
  Tensor out({n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  std::size_t k = 0;
  for (std::size_t p = 0; p < n * c; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++k) {
        std::size_t best = base + (oy * window) * w + ox * window;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx =
                base + (oy * window + dy) * w + ox * window + dx;
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        out[k] = xv[best];
        (*argmax)[k] = best;
      }
    }
  }
  return g.record("max_pool2d", std::move(out), {x},
                  [x, argmax](Graph& g, Var self) {
                    const Tensor& gy = g.grad(self);
                    Tensor& gx = g.grad(x);
                    for (std::size_t i = 0; i < gy.size(); ++i) {
                      gx[(*argmax)[i]] += gy[i];
                    }
                  });
}

Var upsample_nearest(Graph& g, Var x, std::size_t out_height,
                     std::size_t out_width) {
  const Tensor& xv = g.value(x);
  require_rank(xv, 4, "upsample_nearest", "input");
  if (out_height == 0 || out_width == 0) {
    throw ShapeError("upsample_nearest: output size must be positive");
  }
  const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  auto source = std::make_shared<std::vector<std::size_t>>(
      n * c * out_height * out_width);
  Tensor out({n, c, out_height, out_width});
  std::size_t k = 0;
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t oy = 0; oy < out_height; ++oy) {
      const std::size_t iy = oy * h / out_height;
      for (std::size_t ox = 0; ox < out_width; ++ox, ++k) {
        const std::size_t ix = ox * w / out_width;
        const std::size_t idx = (p * h + iy) * w + ix;
        out[k] = xv[idx];
        (*source)[k] = idx;
      }
    }
  }
  return g.record("upsample_nearest", std::move(out), {x},
                  [x, source](Graph& g, Var self) {
                    const Tensor& gy = g.grad(self);
                    Tensor& gx = g.grad(x);
                    for (std::size_t i = 0; i < gy.size(); ++i) {
                      gx[(*source)[i]] += gy[i];
                    }
                  });
}

Var concat_channels(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_rank(av, 4, "concat_channels", "first input");
  require_rank(bv, 4, "concat_channels", "second input");
  if (av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) ||
      av.dim(3) != bv.dim(3)) {
    throw ShapeError("concat_channels: incompatible shapes " +
                     to_string(av.shape()) + " and " + to_string(bv.shape()));
  }
  const std::size_t n = av.dim(0), ca = av.dim(1), cb = bv.dim(1);
  const std::size_t plane = av.dim(2) * av.dim(3);
  Tensor out({n, ca + cb, av.dim(2), av.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.data() + i * ca * plane, ca * plane,
                out.data() + i * (ca + cb) * plane);
    std::copy_n(bv.data() + i * cb * plane, cb * plane,
                out.data() + (i * (ca + cb) + ca) * plane);
  }
  return g.record(
      "concat_channels", std::move(out), {a, b},
      [a, b, n, ca, cb, plane](Graph& g, Var self) {
        const Tensor& gy = g.grad(self);
        if (g.requires_grad(a)) {
          Tensor& ga = g.grad(a);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < ca * plane; ++k)
              ga[i * ca * plane + k] += gy[i * (ca + cb) * plane + k];
        }
        if (g.requires_grad(b)) {
          Tensor& gb = g.grad(b);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < cb * plane; ++k)
              gb[i * cb * plane + k] += gy[(i * (ca + cb) + ca) * plane + k];
        }
      });
}

Var flatten(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  if (xv.rank() == 0) throw ShapeError("flatten: empty shape");
  const std::size_t n = xv.dim(0);
  const std::size_t f = n == 0 ? 0 : xv.size() / n;
  return g.record("flatten", xv.reshaped({n, f}), {x},
                  [x](Graph& g, Var self) {
                    const Tensor& gy = g.grad(self);
                    Tensor& gx = g.grad(x);
                    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
                  });
}

Var dense(Graph& g, Var x, Var weight, Var bias) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(weight);
  require_rank(xv, 2, "dense", "input");
  require_rank(wv, 2, "dense", "weight");
  const std::size_t n = xv.dim(0), f = xv.dim(1), o = wv.dim(0);
  if (wv.dim(1) != f) {
    throw ShapeError("dense: input " + to_string(xv.shape()) +
                     " incompatible with weight " + to_string(wv.shape()));
  }
  if (bias.valid() && g.value(bias).size() != o) {
    throw ShapeError("dense: bias size does not match output width");
  }
  Tensor out({n, o});
  MapMat y(out.data(), n, o);
  y.noalias() = MapConstMat(xv.data(), n, f) *
                MapConstMat(wv.data(), o, f).transpose();
  if (bias.valid()) {
    const Tensor& bv = g.value(bias);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < o; ++j) y(i, j) += bv[j];
  }
  std::vector<Var> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return g.record(
      "dense", std::move(out), std::move(inputs),
      [x, weight, bias, n, f, o](Graph& g, Var self) {
        const MapConstMat gy(g.grad(self).data(), n, o);
        if (g.requires_grad(weight)) {
          MapMat gw(g.grad(weight).data(), o, f);
          gw.noalias() += gy.transpose() * MapConstMat(g.value(x).data(), n, f);
        }
        if (bias.valid() && g.requires_grad(bias)) {
          Tensor& gb = g.grad(bias);
          for (std::size_t j = 0; j < o; ++j) gb[j] += gy.col(j).sum();
        }
        if (g.requires_grad(x)) {
          MapMat gx(g.grad(x).data(), n, f);
          gx.noalias() += gy * MapConstMat(g.value(weight).data(), o, f);
        }
      });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return g.record("add", std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& gy = g.grad(self);
    for (const Var v : {a, b}) {
      if (!g.requires_grad(v)) continue;
      Tensor& gv = g.grad(v);
      for (std::size_t i = 0; i < gy.size(); ++i) gv[i] += gy[i];
    }
  });
}

Var scale(Graph& g, Var x, double factor) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = factor * xv[i];
  return g.record("scale", std::move(out), {x},
                  [x, factor](Graph& g, Var self) {
                    const Tensor& gy = g.grad(self);
                    Tensor& gx = g.grad(x);
                    for (std::size_t i = 0; i < gy.size(); ++i)
                      gx[i] += factor * gy[i];
                  });
}

Var mse_loss(Graph& g, Var pred, Var target) {
  const Tensor& pv = g.value(pred);
  const Tensor& tv = g.value(target);
  require_same_shape(pv, tv, "mse_loss");
  if (pv.size() == 0) throw ShapeError("mse_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    acc += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(pv.size());
  return g.record("mse_loss", Tensor::scalar(acc * inv_n), {pred, target},
                  [pred, target, inv_n](Graph& g, Var self) {
                    const double gy = g.grad(self)[0];
                    const Tensor& pv = g.value(pred);
                    const Tensor& tv = g.value(target);
                    const bool need_p = g.requires_grad(pred);
                    const bool need_t = g.requires_grad(target);
                    for (std::size_t i = 0; i < pv.size(); ++i) {
                      const double d = 2.0 * inv_n * gy * (pv[i] - tv[i]);
                      if (need_p) g.grad(pred)[i] += d;
                      if (need_t) g.grad(target)[i] -= d;
                    }
                  });
}

Var softmax_cross_entropy(Graph& g, Var logits,
                          std::span<const std::size_t> labels) {
  const Tensor& zv = g.value(logits);
  require_rank(zv, 2, "softmax_cross_entropy", "logits");
  const std::size_t n = zv.dim(0), k = zv.dim(1);
  if (labels.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<std::vector<double>>(n * k);
  auto targets = std::make_shared<std::vector<std::size_t>>(labels.begin(),
                                                            labels.end());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= k) {
      throw InvalidInput("softmax_cross_entropy: label " +
                         std::to_string(labels[i]) + " out of range for " +
                         std::to_string(k) + " classes");
    }
    const double* z = zv.data() + i * k;
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(z[j] - zmax);
      (*probs)[i * k + j] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] /= sum;
    loss += zmax + std::log(sum) - z[labels[i]];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return g.record("softmax_cross_entropy", Tensor::scalar(loss * inv_n),
                  {logits},
                  [logits, probs, targets, n, k, inv_n](Graph& g, Var self) {
                    const double gy = g.grad(self)[0] * inv_n;
                    Tensor& gz = g.grad(logits);
                    for (std::size_t i = 0; i < n; ++i) {
                      for (std::size_t j = 0; j < k; ++j) {
                        const double onehot = (*targets)[i] == j ? 1.0 : 0.0;
                        gz[i * k + j] += gy * ((*probs)[i * k + j] - onehot);
                      }
                    }
                  });
}

Var bce_with_logits(Graph& g, Var logits, std::span<const double> targets) {
  const Tensor& zv = g.value(logits);
  if (targets.size() != zv.size()) {
    throw ShapeError("bce_with_logits: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(zv.size()) + " logits");
  }
  auto y = std::make_shared<std::vector<double>>(targets.begin(), targets.end());
  double loss = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const double z = zv[i];
    loss += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  const double inv_n = 1.0 / static_cast<double>(zv.size());
  return g.record("bce_with_logits", Tensor::scalar(loss * inv_n), {logits},
                  [logits, y, inv_n](Graph& g, Var self) {
                    const double gy = g.grad(self)[0] * inv_n;
                    const Tensor& zv = g.value(logits);
                    Tensor& gz = g.grad(logits);
                    for (std::size_t i = 0; i < zv.size(); ++i) {
                      const double z = zv[i];
                      const double s = z >= 0.0
                                           ? 1.0 / (1.0 + std::exp(-z))
                                           : std::exp(z) / (1.0 + std::exp(z));
                      gz[i] += gy * (s - (*y)[i]);
                    }
                  });
}

}  // namespace cdpauth::nn
