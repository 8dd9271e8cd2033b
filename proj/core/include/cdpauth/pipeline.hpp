#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cdpauth/dataset.hpp"
#include "cdpauth/metrics.hpp"
#include "cdpauth/ocsvm.hpp"
#include "cdpauth/oneclass.hpp"
#include "cdpauth/supervised.hpp"

namespace cdpauth {

enum class PipelineKind { supervised, oneclass };

std::string_view to_string(PipelineKind k);  // "supervised", "oneclass"
std::optional<PipelineKind> parse_pipeline_kind(std::string_view name);

struct SupervisedConfig {
  std::vector<SupervisedSetup> setups{std::begin(kSupervisedSetups),
                                      std::end(kSupervisedSetups)};
  SupervisedHyper hyper{};
  friend bool operator==(const SupervisedConfig&, const SupervisedConfig&) = default;
};

struct OneClassConfig {
  std::vector<FeatureSetup> setups{std::begin(kFeatureSetups),
                                   std::end(kFeatureSetups)};
  double beta = 1.0;
  DiscriminatorStatistic statistic = DiscriminatorStatistic::logit;
  ExtractorHyper hyper{};
  std::vector<GridPoint> grid = default_ocsvm_grid();
  KernelType kernel = KernelType::rbf;
  bool standardize = true;
  /// The OC-SVM is fitted on the training originals under these transforms.
  bool fit_rotations = true;
  std::vector<double> fit_gammas{0.8, 1.0, 1.2};
  friend bool operator==(const OneClassConfig&, const OneClassConfig&) = default;
};

/// Everything a full experiment needs; validated before anything runs.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t runs = 5;
  SyntheticConfig dataset{};
  PipelineKind pipeline = PipelineKind::supervised;
  SupervisedConfig supervised{};
  OneClassConfig oneclass{};

  /// Throws InvalidInput describing the first problem found.
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Template assignment for run `run`: the dataset's own splits for run 0, a
/// fresh permutation seeded from the dataset master seed afterwards.
SplitView split_view_for_run(const Dataset& dataset,
                             std::array<double, 3> fractions, std::size_t run);

std::uint64_t supervised_seed(std::uint64_t seed, SupervisedSetup setup,
                              std::size_t run);
std::uint64_t extractor_seed(std::uint64_t seed, ExtractorVariant variant,
                             std::size_t run);

/// Trains on the setup's slice of `view.train` and evaluates on all of
/// `view.test`.
ClassifierModel train_supervised_run(const SplitView& view,
                                     SupervisedSetup setup,
                                     const SupervisedHyper& hyper);

struct OneClassData {
  std::vector<PairedProbe> train;  // originals
  std::vector<PairedProbe> val;    // originals
  std::vector<PairedProbe> test;   // everything
};

OneClassData pair_split(const Dataset& dataset, const SplitView& view);

/// OC-SVM fit (augmented training originals) and grid selection (validation
/// originals) for one feature setup.
HyperparamSelection fit_feature_setup(const TrainedExtractor& extractor,
                                      const OneClassData& data,
                                      FeatureSetup setup,
                                      const OneClassConfig& config);

Metrics evaluate_oneclass(const TrainedExtractor& extractor,
                          const OcSvmModel& model,
                          std::span<const PairedProbe> test, FeatureSetup setup,
                          DiscriminatorStatistic statistic);

/// Table row label, e.g. "ALL_FAKES" or "(4) L2 {d_tt, d_xx}".
std::string row_name(SupervisedSetup setup);
std::string row_name(FeatureSetup setup);

struct RowResult {
  std::string row;
  std::vector<Metrics> runs;

  friend bool operator==(const RowResult&, const RowResult&) = default;
};

struct ExperimentResult {
  PipelineKind kind = PipelineKind::supervised;
  std::vector<RowResult> rows;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

/// Observers for intermediate artefacts. All are optional.
struct ExperimentHooks {
  std::function<void(const std::string&)> log;
  std::function<void(std::size_t run, SupervisedSetup, const ClassifierModel&)>
      on_classifier;
  std::function<void(std::size_t run, const TrainedExtractor&)> on_extractor;
  std::function<void(std::size_t run, FeatureSetup, const HyperparamSelection&)>
      on_ocsvm;
  /// Test-set feature rows (one-class) or penultimate activations
  /// (supervised), for projections.
  std::function<void(std::size_t run, const std::string& row,
                     const std::vector<Label>&,
                     const std::vector<std::vector<double>>&)>
      on_test_features;
};

/// Runs every configured row for config.runs repetitions.
ExperimentResult run_experiment(const Dataset& dataset, const RunConfig& config,
                                const ExperimentHooks& hooks = {});

}  // namespace cdpauth
