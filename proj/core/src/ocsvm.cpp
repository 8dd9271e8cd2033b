#include "cdpauth/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdpauth/error.hpp"

namespace cdpauth {

std::string_view to_string(KernelType k) {
  return k == KernelType::rbf ? "rbf" : "linear";
}

std::optional<KernelType> parse_kernel_type(std::string_view name) {
  if (name == "rbf") return KernelType::rbf;
  if (name == "linear") return KernelType::linear;
  return std::nullopt;
}

double kernel_value(const KernelParams& params, std::span<const double> a,
                    std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("kernel: dimension mismatch " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  double acc = 0.0;
  if (params.type == KernelType::linear) {
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::exp(-params.gamma * acc);
}

std::vector<double> gram_matrix(const KernelParams& params,
                                std::span<const FeatureRow> rows) {
  const std::size_t n = rows.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernel_value(params, rows[i], rows[j]);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  return k;
}

Standardizer Standardizer::fit(std::span<const FeatureRow> rows) {
  if (rows.empty()) throw InvalidInput("standardizer: no rows");
  const std::size_t d = rows.front().size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw ShapeError("standardizer: ragged feature rows");
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r[j] - s.mean[j];
      s.scale[j] += c * c;
    }
  for (auto& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (!(v >= 1e-12)) v = 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t dims) {
  return Standardizer{std::vector<double>(dims, 0.0),
                      std::vector<double>(dims, 1.0)};
}

FeatureRow Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size())
    throw ShapeError("feature has " + std::to_string(row.size()) +
                     " dims, model expects " + std::to_string(mean.size()));
  FeatureRow out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    out[j] = (row[j] - mean[j]) / scale[j];
  return out;
}

namespace {

// Bounds with a relative slack so that values produced by clipping count as
// exactly at the bound.
bool below_upper(double a, double c) { return a < c; }
bool above_zero(double a) { return a > 0.0; }

}  // namespace

double kkt_gap(std::span<const double> gram, std::size_t n,
               std::span<const double> alpha, double upper_bound) {
  double min_up = std::numeric_limits<double>::infinity();
  double max_low = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j) g += gram[i * n + j] * alpha[j];
    if (below_upper(alpha[i], upper_bound)) min_up = std::min(min_up, g);
    if (above_zero(alpha[i])) max_low = std::max(max_low, g);
  }
  if (!std::isfinite(min_up) || !std::isfinite(max_low)) return 0.0;
  return std::max(0.0, max_low - min_up);
}

DualSolution solve_oneclass_dual(std::span<const double> gram, std::size_t n,
                                 double nu, const SolverOptions& options) {
  if (n < 2) throw InvalidInput("ocsvm: need at least 2 training vectors");
  if (gram.size() != n * n) throw ShapeError("ocsvm: gram matrix is not n x n");
  if (!(nu > 0.0 && nu <= 1.0))
    throw InvalidInput("ocsvm: nu must lie in (0, 1], got " + std::to_string(nu));
  for (double v : gram)
    if (!std::isfinite(v)) throw NonFiniteError("ocsvm: non-finite kernel value");

  const double c = 1.0 / (nu * static_cast<double>(n));
  std::vector<double> k(gram.begin(), gram.end());
  for (std::size_t i = 0; i < n; ++i) k[i * n + i] += options.jitter;

  // Feasible start: fill the first floor(nu n) coordinates to the bound and
  // put the remainder on the next one.
  DualSolution sol;
  sol.upper_bound = c;
  sol.alpha.assign(n, 0.0);
  double remaining = 1.0;
  for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
    const double a = std::min(c, remaining);
    sol.alpha[i] = a;
    remaining -= a;
    if (remaining < 1e-15) remaining = 0.0;
  }

  std::vector<double> grad(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) grad[i] += k[i * n + j] * sol.alpha[j];

  constexpr double kTau = 1e-12;
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    // i gains mass (alpha_i < C, smallest gradient); j loses mass.
    std::size_t i = n;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (below_upper(sol.alpha[t], c) && grad[t] < g_min) {
        g_min = grad[t];
        i = t;
      }
      if (above_zero(sol.alpha[t])) g_max = std::max(g_max, grad[t]);
    }
    if (i == n || g_max - g_min <= options.tolerance) break;

    std::size_t j = n;
    double best = -1.0;
    const double* ki = &k[i * n];
    for (std::size_t t = 0; t < n; ++t) {
      if (!above_zero(sol.alpha[t])) continue;
      const double diff = grad[t] - g_min;
      if (diff <= 0.0) continue;
      double eta = ki[i] + k[t * n + t] - 2.0 * ki[t];
      if (eta <= 0.0) eta = kTau;
      const double gain = diff * diff / eta;
      if (gain > best) {
        best = gain;
        j = t;
      }
    }
    if (j == n) break;

    double eta = ki[i] + k[j * n + j] - 2.0 * ki[j];
    if (eta <= 0.0) eta = kTau;
    double delta = (grad[j] - grad[i]) / eta;
    const double room_i = c - sol.alpha[i];
    const double room_j = sol.alpha[j];
    bool i_hits = false;
    bool j_hits = false;
    if (delta >= room_i) {
      delta = room_i;
      i_hits = true;
    }
    if (delta >= room_j) {
      delta = room_j;
      j_hits = true;
      i_hits = room_i == room_j;
    }
    if (delta <= 0.0) break;
    sol.alpha[i] = i_hits ? c : sol.alpha[i] + delta;
    sol.alpha[j] = j_hits ? 0.0 : sol.alpha[j] - delta;
    const double* kj = &k[j * n];
    for (std::size_t t = 0; t < n; ++t) grad[t] += delta * (ki[t] - kj[t]);
  }
  sol.iterations = it;

  // Offset and objective use the kernel without jitter so they agree with
  // decision_score on the training points.
  std::vector<double> plain(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < n; ++s)
      plain[t] += gram[t * n + s] * sol.alpha[s];

  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lo = -std::numeric_limits<double>::infinity();  // from alpha = C
  double hi = std::numeric_limits<double>::infinity();   // from alpha = 0
  for (std::size_t t = 0; t < n; ++t) {
    const double a = sol.alpha[t];
    if (a > 0.0 && a < c) {
      free_sum += plain[t];
      ++free_count;
    } else if (a >= c) {
      lo = std::max(lo, plain[t]);
    } else {
      hi = std::min(hi, plain[t]);
    }
  }
  if (free_count > 0) {
    sol.rho = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(lo) && std::isfinite(hi)) {
    sol.rho = 0.5 * (lo + hi);
  } else {
    sol.rho = std::isfinite(lo) ? lo : hi;
  }

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += sol.alpha[t] * plain[t];
  sol.objective = 0.5 * obj;
  sol.kkt_gap = kkt_gap(gram, n, sol.alpha, c);
  return sol;
}

OcSvmModel fit_ocsvm(std::span<const FeatureRow> originals, double nu,
                     const OcSvmOptions& options) {
  if (originals.size() < 2)
    throw InvalidInput("ocsvm: need at least 2 training vectors, got " +
                       std::to_string(originals.size()));
  if (!(nu > 0.0 && nu <= 1.0))
    throw InvalidInput("ocsvm: nu must lie in (0, 1], got " + std::to_string(nu));
  if (options.kernel.type == KernelType::rbf && !(options.kernel.gamma > 0.0))
    throw InvalidInput("ocsvm: kernel gamma must be positive");
  const std::size_t d = originals.front().size();
  if (d == 0) throw InvalidInput("ocsvm: empty feature vectors");
  for (const auto& r : originals) {
    if (r.size() != d) throw ShapeError("ocsvm: ragged feature rows");
    for (double v : r)
      if (!std::isfinite(v)) throw NonFiniteError("ocsvm: non-finite feature");
  }

  OcSvmModel model;
  model.kernel = options.kernel;
  model.nu = nu;
  model.training_size = originals.size();
  model.standardizer = options.standardize ? Standardizer::fit(originals)
                                           : Standardizer::identity(d);
  std::vector<FeatureRow> z;
  z.reserve(originals.size());
  for (const auto& r : originals) z.push_back(model.standardizer.apply(r));

  const auto gram = gram_matrix(model.kernel, z);
  const auto sol = solve_oneclass_dual(gram, z.size(), nu, options.solver);
  model.rho = sol.rho;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      model.support_vectors.push_back(z[i]);
      model.alphas.push_back(sol.alpha[i]);
    }
  }
  return model;
}

double decision_score(const OcSvmModel& model, std::span<const double> f) {
  const FeatureRow z = model.standardizer.apply(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    acc += model.alphas[i] * kernel_value(model.kernel, model.support_vectors[i], z);
  return acc - model.rho;
}

Decision decide(const OcSvmModel& model, std::span<const double> f) {
  Decision d;
  d.score = decision_score(model, f);
  d.verdict = d.score > 0.0 ? Verdict::original : Verdict::fake;
  return d;
}

std::size_t choose_grid_point(std::span<const GridResult> results) {
  if (results.empty()) throw InvalidInput("ocsvm: empty hyperparameter grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const auto& a = results[i];
    const auto& b = results[best];
    if (a.validation_p_miss != b.validation_p_miss) {
      if (a.validation_p_miss < b.validation_p_miss) best = i;
    } else if (a.point.nu != b.point.nu) {
      if (a.point.nu < b.point.nu) best = i;
    } else if (a.point.gamma < b.point.gamma) {
      best = i;
    }
  }
  return best;
}

std::vector<GridPoint> default_ocsvm_grid() {
  std::vector<GridPoint> grid;
  for (double nu : {0.01, 0.05, 0.1})
    for (double g : {0.1, 1.0, 10.0}) grid.push_back({nu, g});
  return grid;
}

HyperparamSelection select_hyperparams(std::span<const FeatureRow> train,
                                       std::span<const FeatureRow> validation,
                                       std::span<const GridPoint> grid,
                                       const OcSvmOptions& base) {
  if (grid.empty()) throw InvalidInput("ocsvm: empty hyperparameter grid");
  if (validation.empty())
    throw InvalidInput("ocsvm: validation set has no originals");
  std::vector<OcSvmModel> models;
  HyperparamSelection sel;
  for (const auto& p : grid) {
    OcSvmOptions opts = base;
    opts.kernel.gamma = p.gamma;
    models.push_back(fit_ocsvm(train, p.nu, opts));
    std::size_t misses = 0;
    for (const auto& f : validation)
      if (decide(models.back(), f).verdict == Verdict::fake) ++misses;
    sel.table.push_back(
        {p, static_cast<double>(misses) / static_cast<double>(validation.size())});
  }
  sel.chosen = choose_grid_point(sel.table);
  sel.model = std::move(models[sel.chosen]);
  return sel;
}

}  // namespace cdpauth
