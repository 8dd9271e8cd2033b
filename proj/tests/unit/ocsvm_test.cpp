#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdpauth/error.hpp"
#include "cdpauth/ocsvm.hpp"
#include "cdpauth/rng.hpp"
#include "qp_oracle.hpp"

using namespace cdpauth;

namespace {

std::vector<FeatureRow> gaussian_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureRow> rows(n, FeatureRow(d));
  for (auto& r : rows)
    for (auto& v : r) v = rng.normal();
  return rows;
}

OcSvmOptions raw_rbf(double gamma) {
  OcSvmOptions o;
  o.kernel.gamma = gamma;
  o.standardize = false;
  return o;
}

// Decision value computed from the model fields without the library helper.
double direct_score(const OcSvmModel& m, const FeatureRow& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double z = (f[k] - m.standardizer.mean[k]) / m.standardizer.scale[k];
      d2 += (z - m.support_vectors[i][k]) * (z - m.support_vectors[i][k]);
    }
    acc += m.alphas[i] * std::exp(-m.kernel.gamma * d2);
  }
  return acc - m.rho;
}

}  // namespace

TEST(Dual, MatchesBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    const double nu = rng.uniform(0.05, 1.0);
    const auto rows = gaussian_rows(n, 2, 100 + trial);
    const auto gram = gram_matrix({KernelType::rbf, rng.uniform(0.1, 2.0)}, rows);
    const auto sol = solve_oneclass_dual(gram, n, nu);
    const auto oracle = cdpauth::testing::brute_force_oneclass(gram, n, nu);
    EXPECT_NEAR(sol.objective, oracle.objective, 1e-6) << "trial " << trial;
    EXPECT_NEAR(std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0), 1.0, 1e-9);
    for (double a : sol.alpha) {
      EXPECT_GE(a, -1e-12);
      EXPECT_LE(a, sol.upper_bound + 1e-12);
    }
    EXPECT_LT(kkt_gap(gram, n, sol.alpha, sol.upper_bound), 1e-6);
  }
}

TEST(Dual, DuplicatedPointSplitsWeight) {
  const std::vector<FeatureRow> rows{{0.5, 0.5}, {0.5, 0.5}};
  const OcSvmModel m = fit_ocsvm(rows, 1.0, raw_rbf(1.0));
  const double total = std::accumulate(m.alphas.begin(), m.alphas.end(), 0.0);
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (double a : m.alphas) EXPECT_NEAR(a, 0.5, 1e-9);
  // Both points sit exactly on the boundary: score 0 and, since acceptance
  // is strict, a rejection.
  EXPECT_NEAR(decision_score(m, rows[0]), 0.0, 1e-9);
}

TEST(Dual, SmallNuSeparatesCentreFromFarPoints) {
  const auto rows = gaussian_rows(40, 2, 3);
  const OcSvmModel m = fit_ocsvm(rows, 0.1, raw_rbf(0.1));
  EXPECT_EQ(decide(m, FeatureRow{0.0, 0.0}).verdict, Verdict::original);
  EXPECT_EQ(decide(m, FeatureRow{8.0, -8.0}).verdict, Verdict::fake);
}

TEST(Decision, MatchesDirectEvaluation) {
  const auto rows = gaussian_rows(30, 3, 4);
  OcSvmOptions o;
  o.kernel.gamma = 0.7;
  const OcSvmModel m = fit_ocsvm(rows, 0.2, o);
  for (const auto& f : gaussian_rows(20, 3, 5))
    EXPECT_NEAR(decision_score(m, f), direct_score(m, f), 1e-12);
}

TEST(Decision, NuBoundsOutliersAndSupportVectors) {
  for (double nu : {0.05, 0.2, 0.5, 0.8}) {
    const auto rows = gaussian_rows(60, 2, 6);
    const OcSvmModel m = fit_ocsvm(rows, nu, raw_rbf(1.0));
    std::size_t outliers = 0;
    for (const auto& r : rows)
      if (decision_score(m, r) < -1e-7) ++outliers;
    const double n = static_cast<double>(rows.size());
    EXPECT_LE(outliers / n, nu + 1e-9) << nu;
    EXPECT_GE(m.support_vectors.size() / n, nu - 1e-9) << nu;
  }
}

TEST(Decision, TrainingOrderInvariant) {
  auto rows = gaussian_rows(25, 2, 7);
  const OcSvmModel a = fit_ocsvm(rows, 0.3, raw_rbf(1.0));
  std::reverse(rows.begin(), rows.end());
  const OcSvmModel b = fit_ocsvm(rows, 0.3, raw_rbf(1.0));
  for (const auto& f : gaussian_rows(20, 2, 8))
    EXPECT_NEAR(decision_score(a, f), decision_score(b, f), 1e-6);
}

TEST(Decision, DimensionMismatchRejected) {
  const OcSvmModel m = fit_ocsvm(gaussian_rows(5, 2, 9), 0.5);
  EXPECT_THROW(decision_score(m, FeatureRow{1.0, 2.0, 3.0}), ShapeError);
}

TEST(Fit, RejectsBadInput) {
  EXPECT_THROW(fit_ocsvm(gaussian_rows(1, 2, 1), 0.5), InvalidInput);
  EXPECT_THROW(fit_ocsvm(gaussian_rows(5, 2, 1), 0.0), InvalidInput);
  EXPECT_THROW(fit_ocsvm(gaussian_rows(5, 2, 1), 1.5), InvalidInput);
  auto rows = gaussian_rows(5, 2, 1);
  rows[2][1] = std::nan("");
  EXPECT_THROW(fit_ocsvm(rows, 0.5), NonFiniteError);
}

TEST(Standardizer, ZeroMeanUnitScaleAndConstantColumns) {
  std::vector<FeatureRow> rows{{1.0, 5.0}, {3.0, 5.0}, {5.0, 5.0}};
  const auto s = Standardizer::fit(rows);
  EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
  EXPECT_EQ(s.scale[1], 1.0);
  EXPECT_EQ(s.apply(rows[1]), (FeatureRow{0.0, 0.0}));
}

TEST(Grid, ArgminAndTieBreak) {
  const std::vector<GridResult> rs{
      {{0.2, 1.0}, 0.1}, {{0.1, 2.0}, 0.05}, {{0.1, 0.5}, 0.05}, {{0.3, 0.1}, 0.2}};
  EXPECT_EQ(choose_grid_point(rs), 2u);
  EXPECT_EQ(choose_grid_point(std::span<const GridResult>(rs.data(), 1)), 0u);
  EXPECT_THROW(choose_grid_point(std::span<const GridResult>{}), InvalidInput);
}

TEST(Grid, SelectionKeepsChosenModel) {
  const auto train = gaussian_rows(30, 2, 10);
  const auto val = gaussian_rows(10, 2, 11);
  const std::vector<GridPoint> grid{{0.5, 1.0}, {0.05, 0.1}};
  const auto sel = select_hyperparams(train, val, grid);
  ASSERT_EQ(sel.table.size(), 2u);
  EXPECT_EQ(sel.chosen, choose_grid_point(sel.table));
  EXPECT_EQ(sel.model.nu, grid[sel.chosen].nu);
  EXPECT_THROW(select_hyperparams(train, val, std::span<const GridPoint>{}), InvalidInput);
}
