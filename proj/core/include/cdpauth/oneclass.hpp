#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cdpauth/cdp_core.hpp"
#include "cdpauth/history.hpp"
#include "cdpauth/nn/adam.hpp"
#include "cdpauth/nn/networks.hpp"

namespace cdpauth {

/// L1: reconstruction terms only. L2: adds adversarial regularisers.
enum class ExtractorVariant { l1, l2 };

std::string_view to_string(ExtractorVariant v);  // "L1", "L2"
std::optional<ExtractorVariant> parse_extractor_variant(std::string_view name);

/// Which scalars are fed to the OC-SVM. Setups 2-5 need an L2 extractor.
enum class FeatureSetup {
  l1_reconstruction = 1,  // (d_tt, d_xx)
  template_terms = 2,     // (d_tt, d_t)
  print_terms = 3,        // (d_xx, d_x)
  l2_reconstruction = 4,  // (d_tt, d_xx)
  all_terms = 5,          // (d_tt, d_t, d_xx, d_x)
};

inline constexpr FeatureSetup kFeatureSetups[] = {
    FeatureSetup::l1_reconstruction, FeatureSetup::template_terms,
    FeatureSetup::print_terms, FeatureSetup::l2_reconstruction,
    FeatureSetup::all_terms};

int setup_number(FeatureSetup s);
std::optional<FeatureSetup> feature_setup_from_number(int n);
ExtractorVariant required_variant(FeatureSetup s);
std::size_t feature_length(FeatureSetup s);
/// Short description of the inputs, e.g. "{d_tt, d_xx}".
std::string_view feature_inputs(FeatureSetup s);

/// Scalar taken from a discriminator output z.
enum class DiscriminatorStatistic {
  logit,          // z
  probability,    // sigmoid(z)
  log_one_minus,  // log(1 - sigmoid(z))
};

std::string_view to_string(DiscriminatorStatistic s);
std::optional<DiscriminatorStatistic> parse_discriminator_statistic(
    std::string_view name);
double apply_statistic(DiscriminatorStatistic s, double logit);

/// A probe together with the digital template it should match.
struct PairedProbe {
  CodeImage probe;
  Image template_image;
  Label label = Label::original;
};

/// Attaches templates by id, resampled (bilinear) to the probe's height and
/// width when the acquisition changed the scale. Throws InvalidInput naming
/// the first probe whose template is missing.
std::vector<PairedProbe> pair_with_templates(
    std::span<const ProbeRecord> records,
    std::span<const DigitalTemplate> templates);

/// Copies of each pair under every rotation (when enabled) and gamma, in
/// that nesting order. Templates are rotated with their probes.
std::vector<PairedProbe> augment_pairs(std::span<const PairedProbe> pairs,
                                       bool rotations,
                                       std::span<const double> gammas);

struct ExtractorHyper {
  nn::AdamOptions adam{.lr = 1e-3};
  std::size_t batch_size = 18;
  std::size_t epochs = 500;
  std::size_t patience = 10;
  /// 0 means ceil(training set size / batch size).
  std::size_t steps_per_epoch = 0;
  std::vector<double> gammas = gamma_grid(0.5, 1.2, 0.1);
  bool rotations = true;
  std::size_t base_width = 4;
  std::size_t discriminator_width = 4;
  /// Weight of the adversarial terms in the L2 generator loss.
  double adversarial_weight = 1e-3;
  std::uint64_t seed = 1;
  friend bool operator==(const ExtractorHyper&, const ExtractorHyper&) = default;
};

/// Encoder x -> t_hat and decoder t_hat -> x_hat.
struct ExtractorModel {
  nn::UNet encoder;
  nn::UNet decoder;
  ExtractorVariant variant = ExtractorVariant::l1;
  double beta = 1.0;
  nn::ImageGeometry probe_geometry;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  TrainingHistory history;

  nn::ImageGeometry template_geometry() const {
    return {1, probe_geometry.height, probe_geometry.width};
  }
};

/// Density-ratio estimators on template space and print space.
struct DiscriminatorPair {
  nn::Discriminator template_disc;
  nn::Discriminator print_disc;
};

struct TrainedExtractor {
  ExtractorModel model;
  /// Present for L2 only.
  std::optional<DiscriminatorPair> discriminators;
};

/// Builds the networks for a probe geometry without training them.
ExtractorModel make_extractor(const nn::ImageGeometry& probe_geometry,
                              ExtractorVariant variant, double beta,
                              const ExtractorHyper& hyper);
DiscriminatorPair make_discriminators(const nn::ImageGeometry& probe_geometry,
                                      const ExtractorHyper& hyper);

/// Trains on originals only. The checkpoint with the lowest validation
/// reconstruction loss MSE(t, t_hat) + beta MSE(x, x_hat) is returned.
/// Throws InvalidInput for fakes in either set, negative beta, or probes whose
/// size differs from their template.
TrainedExtractor train_extractor(std::span<const PairedProbe> train,
                                 std::span<const PairedProbe> val,
                                 ExtractorVariant variant, double beta,
                                 const ExtractorHyper& hyper);

struct Reconstruction {
  Image template_estimate;  // t_hat
  Image probe_estimate;     // x_hat
};

std::vector<Reconstruction> reconstruct(const ExtractorModel& model,
                                        std::span<const CodeImage> probes);

struct ReconstructionScores {
  double d_tt = 0.0;  // MSE(t, t_hat)
  double d_xx = 0.0;  // MSE(x, x_hat)
};

/// Per-sample mean squared error between equally shaped images.
double per_sample_mse(const Image& a, const Image& b);

ReconstructionScores reconstruction_scores(const ExtractorModel& model,
                                           const CodeImage& probe,
                                           const Image& template_image);

struct DiscriminatorScores {
  double d_t = 0.0;
  double d_x = 0.0;
};

DiscriminatorScores discriminator_scores(const DiscriminatorPair& discs,
                                         const Image& template_estimate,
                                         const Image& probe_estimate,
                                         DiscriminatorStatistic statistic =
                                             DiscriminatorStatistic::logit);

/// Orders the terms as the setup prescribes.
std::vector<double> assemble_features(
    FeatureSetup setup, const ReconstructionScores& rec,
    const std::optional<DiscriminatorScores>& disc);

/// Throws InvalidInput when the setup needs a variant the model was not
/// trained with, or discriminators that are absent.
std::vector<double> extract_features(
    const ExtractorModel& model, const DiscriminatorPair* discs,
    const CodeImage& probe, const Image& template_image, FeatureSetup setup,
    DiscriminatorStatistic statistic = DiscriminatorStatistic::logit);

std::vector<std::vector<double>> extract_features(
    const ExtractorModel& model, const DiscriminatorPair* discs,
    std::span<const PairedProbe> probes, FeatureSetup setup,
    DiscriminatorStatistic statistic = DiscriminatorStatistic::logit);

/// Mean validation objective MSE(t, t_hat) + beta MSE(x, x_hat).
double reconstruction_loss(const ExtractorModel& model,
                           std::span<const PairedProbe> records);

}  // namespace cdpauth
