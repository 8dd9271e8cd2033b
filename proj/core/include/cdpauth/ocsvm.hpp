#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cdpauth/metrics.hpp"

namespace cdpauth {

using FeatureRow = std::vector<double>;

enum class KernelType { rbf, linear };

std::string_view to_string(KernelType k);
std::optional<KernelType> parse_kernel_type(std::string_view name);

struct KernelParams {
  KernelType type = KernelType::rbf;
  /// RBF width: k(a,b) = exp(-gamma * |a-b|^2).
  double gamma = 1.0;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

double kernel_value(const KernelParams& params, std::span<const double> a,
                    std::span<const double> b);

/// Row-major n x n Gram matrix.
std::vector<double> gram_matrix(const KernelParams& params,
                                std::span<const FeatureRow> rows);

/// Per-dimension z-score transform.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  /// Scales below 1e-12 are replaced by 1.
  static Standardizer fit(std::span<const FeatureRow> rows);
  static Standardizer identity(std::size_t dims);
  FeatureRow apply(std::span<const double> row) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct SolverOptions {
  /// Stop when max_{a_j > 0} G_j - min_{a_i < C} G_i <= tolerance.
  double tolerance = 1e-9;
  std::size_t max_iterations = 10'000'000;
  double jitter = 1e-10;
};

struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;
  /// 0.5 * alpha' K alpha, evaluated on the unjittered kernel.
  double objective = 0.0;
  double kkt_gap = 0.0;
  std::size_t iterations = 0;
  double upper_bound = 0.0;  // C = 1 / (nu n)
};

/// Solves min 0.5 a'Ka  s.t. 0 <= a_i <= 1/(nu n), sum a = 1 with SMO
/// (second-order working-set selection). `gram` is row-major n x n.
DualSolution solve_oneclass_dual(std::span<const double> gram, std::size_t n,
                                 double nu, const SolverOptions& options = {});

/// KKT violation of a feasible alpha for the problem above.
double kkt_gap(std::span<const double> gram, std::size_t n,
               std::span<const double> alpha, double upper_bound);

struct OcSvmOptions {
  KernelParams kernel{};
  bool standardize = true;
  SolverOptions solver{};
};

/// Fitted nu-one-class SVM. Support vectors are stored in standardised space.
struct OcSvmModel {
  std::vector<FeatureRow> support_vectors;
  std::vector<double> alphas;
  double rho = 0.0;
  KernelParams kernel{};
  double nu = 0.5;
  Standardizer standardizer;
  std::size_t training_size = 0;

  std::size_t dims() const { return standardizer.mean.size(); }

  friend bool operator==(const OcSvmModel&, const OcSvmModel&) = default;
};

/// Trains on features of originals only. Throws InvalidInput for n < 2 or nu
/// outside (0,1], NonFiniteError for non-finite features.
OcSvmModel fit_ocsvm(std::span<const FeatureRow> originals, double nu,
                     const OcSvmOptions& options = {});

struct Decision {
  Verdict verdict = Verdict::fake;
  double score = 0.0;
};

/// score = sum_i alpha_i k(s_i, f) - rho; accept iff score > 0.
double decision_score(const OcSvmModel& model, std::span<const double> f);
Decision decide(const OcSvmModel& model, std::span<const double> f);

struct GridPoint {
  double nu = 0.1;
  double gamma = 1.0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct GridResult {
  GridPoint point;
  double validation_p_miss = 1.0;
};

/// Index of the lowest validation P_miss; ties go to the smaller nu, then the
/// smaller gamma. Throws InvalidInput on an empty list.
std::size_t choose_grid_point(std::span<const GridResult> results);

struct HyperparamSelection {
  OcSvmModel model;
  std::vector<GridResult> table;
  std::size_t chosen = 0;
};

std::vector<GridPoint> default_ocsvm_grid();

/// Fits one model per grid point on `train` and keeps the one with the lowest
/// P_miss on `validation` (originals only).
HyperparamSelection select_hyperparams(std::span<const FeatureRow> train,
                                       std::span<const FeatureRow> validation,
                                       std::span<const GridPoint> grid,
                                       const OcSvmOptions& base = {});

}  // namespace cdpauth
