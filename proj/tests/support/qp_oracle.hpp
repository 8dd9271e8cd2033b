#pragma once

// Dense brute-force solver for the one-class dual
//   min 0.5 a'Ka  s.t.  0 <= a_i <= C,  sum a = 1
// by enumerating every assignment of each coordinate to {lower, upper, free}
// (3^n candidates) and solving the equality-constrained KKT system of the
// free block. Exact up to linear-solve round-off; meant for n <= 8.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cdpauth::testing {

struct QpSolution {
  std::vector<double> alpha;
  double rho = 0.0;
  double objective = std::numeric_limits<double>::infinity();
};

inline QpSolution brute_force_oneclass(std::span<const double> gram, std::size_t n, double nu) {
  const double C = 1.0 / (nu * static_cast<double>(n));
  const double tol = 1e-9;
  auto K = [&](std::size_t i, std::size_t j) { return gram[i * n + j]; };

  QpSolution best;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  std::vector<int> state(n);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    std::vector<std::size_t> free_set;
    double upper_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);  // 0 lower, 1 upper, 2 free
      c /= 3;
      if (state[i] == 1) upper_mass += C;
      if (state[i] == 2) free_set.push_back(i);
    }
    std::vector<double> alpha(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (state[i] == 1) alpha[i] = C;
    double rho;
    const std::size_t f = free_set.size();
    if (f == 0) {
      if (std::abs(upper_mass - 1.0) > tol) continue;
    } else {
      // [K_FF  -1] [a_F]   [-K_FU a_U]
      // [1'     0] [rho] = [1 - sum a_U]
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(f + 1);
      for (std::size_t r = 0; r < f; ++r) {
        for (std::size_t s = 0; s < f; ++s) A(r, s) = K(free_set[r], free_set[s]);
        A(r, f) = -1.0;
        A(f, r) = 1.0;
        for (std::size_t u = 0; u < n; ++u)
          if (state[u] == 1) b(r) -= K(free_set[r], u) * C;
      }
      b(f) = 1.0 - upper_mass;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd x = lu.solve(b);
      if ((A * x - b).norm() > 1e-9) continue;
      bool inside = true;
      for (std::size_t r = 0; r < f; ++r) {
        if (x(r) < -tol || x(r) > C + tol) inside = false;
        alpha[free_set[r]] = std::min(C, std::max(0.0, x(r)));
      }
      if (!inside) continue;
    }
    // Gradient G = K a; KKT: G_lower >= rho >= G_upper, G_free = rho.
    std::vector<double> grad(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) grad[i] += K(i, j) * alpha[j];
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 1) lo = std::max(lo, grad[i]);
      if (state[i] == 0) hi = std::min(hi, grad[i]);
    }
    if (f > 0) {
      double mean = 0.0;
      for (auto i : free_set) mean += grad[i];
      rho = mean / static_cast<double>(f);
      if (rho < lo - 1e-7 || rho > hi + 1e-7) continue;
    } else {
      if (lo > hi + 1e-7) continue;
      // Any rho in [lo, hi] is optimal; take the midpoint, or the finite end.
      rho = std::isfinite(hi) ? 0.5 * (lo + hi) : lo;
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += 0.5 * alpha[i] * grad[i];
    if (obj < best.objective) best = {alpha, rho, obj};
  }
  return best;
}

}  // namespace cdpauth::testing
