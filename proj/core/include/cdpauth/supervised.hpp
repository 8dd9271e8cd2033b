#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cdpauth/cdp_core.hpp"
#include "cdpauth/history.hpp"
#include "cdpauth/metrics.hpp"
#include "cdpauth/nn/adam.hpp"
#include "cdpauth/nn/networks.hpp"

namespace cdpauth {

/// Which fakes the defender has at training time.
enum class SupervisedSetup { all_fakes, f1_white, f1_gray, f2_white, f2_gray };

inline constexpr SupervisedSetup kSupervisedSetups[] = {
    SupervisedSetup::all_fakes, SupervisedSetup::f1_white,
    SupervisedSetup::f1_gray, SupervisedSetup::f2_white,
    SupervisedSetup::f2_gray};

std::string_view to_string(SupervisedSetup s);  // "ALL_FAKES", "F1_WHITE", ...
std::optional<SupervisedSetup> parse_supervised_setup(std::string_view name);

/// Fake labels the setup trains on.
std::vector<Label> training_fakes(SupervisedSetup setup);

/// Keeps originals and the setup's fakes.
std::vector<ProbeRecord> filter_for_setup(std::span<const ProbeRecord> records,
                                          SupervisedSetup setup);

struct SupervisedHyper {
  nn::AdamOptions adam{};
  std::size_t batch_size = 21;
  std::size_t epochs = 1000;
  /// Early stopping on class-balanced validation cross-entropy.
  std::size_t patience = 10;
  /// 0 means ceil(training set size / batch size).
  std::size_t steps_per_epoch = 0;
  std::vector<double> gammas = gamma_grid(0.4, 1.3, 0.2);
  bool rotations = true;
  std::array<std::size_t, 3> widths{8, 16, 16};
  std::uint64_t seed = 1;
  friend bool operator==(const SupervisedHyper&, const SupervisedHyper&) = default;
};

/// Binary original-vs-fake classifier. Class 0 is original, class 1 fake.
struct ClassifierModel {
  nn::ConvClassifier network;
  SupervisedSetup setup = SupervisedSetup::all_fakes;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  TrainingHistory history;

  nn::ImageGeometry geometry() const { return network.config().input; }
};

/// Minimises batch-mean softmax cross-entropy with Adam on class-balanced,
/// rotation- and gamma-augmented batches; returns the epoch with the lowest
/// class-balanced validation cross-entropy. Throws InvalidInput when the
/// training set lacks originals or fakes, or contains fakes outside the setup.
ClassifierModel train_supervised(std::span<const ProbeRecord> train,
                                 std::span<const ProbeRecord> val,
                                 SupervisedSetup setup,
                                 const SupervisedHyper& hyper);

/// Two logits per probe: (original, fake).
std::vector<std::array<double, 2>> classifier_logits(
    const ClassifierModel& model, std::span<const CodeImage> probes);

/// Accept only if the original logit is strictly larger; ties reject.
Verdict verdict_from_logits(const std::array<double, 2>& logits);

Verdict classify(const ClassifierModel& model, const CodeImage& probe);
std::vector<Verdict> classify(const ClassifierModel& model,
                              std::span<const CodeImage> probes);

Metrics evaluate(const ClassifierModel& model,
                 std::span<const ProbeRecord> test);

/// Mean cross-entropy on unaugmented records.
double mean_cross_entropy(const ClassifierModel& model,
                          std::span<const ProbeRecord> records);

/// Average of the per-class mean cross-entropies. Used for early stopping, so
/// that the 4:1 fake/original ratio of ALL_FAKES does not favour rejecting.
double balanced_cross_entropy(const ClassifierModel& model,
                              std::span<const ProbeRecord> records);

/// Penultimate-layer activations, one row per probe (for projections).
std::vector<std::vector<double>> classifier_features(
    const ClassifierModel& model, std::span<const CodeImage> probes);

}  // namespace cdpauth
