#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cdpauth/cdp_core.hpp"
#include "cdpauth/image.hpp"

namespace cdpauth {

/// Print channel: reflectance mapping, dot gain, optical blur, noise.
struct PrintModel {
  double ink_reflectance = 0.1;
  double paper_reflectance = 1.0;
  /// Growth radius of dark regions, in pixels. Fractional values give partial
  /// coverage of the pixels at the growing edge.
  double dot_gain = 0.5;
  double psf_sigma = 0.8;
  double noise_sigma = 0.02;

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;

  friend bool operator==(const PrintModel&, const PrintModel&) = default;
};

/// Mobile acquisition: bilinear resampling, per-channel gain, sensor gamma,
/// noise. The number of gains fixes the number of output channels.
struct AcquisitionModel {
  double scale_factor = 1.0;
  double sensor_gamma = 1.0;
  double sensor_noise_sigma = 0.01;
  std::vector<double> channel_gains{1.0};

  void validate() const;

  friend bool operator==(const AcquisitionModel&,
                         const AcquisitionModel&) = default;
};

enum class AttackPreset { f1_white, f1_gray, f2_white, f2_gray };

inline constexpr AttackPreset kAttackPresets[] = {
    AttackPreset::f1_white, AttackPreset::f1_gray, AttackPreset::f2_white,
    AttackPreset::f2_gray};

std::string_view to_string(AttackPreset p);  // "F1_WHITE", ...
std::optional<AttackPreset> parse_attack_preset(std::string_view name);
Label label_of(AttackPreset p);

/// Copy attack: threshold-based template estimation followed by a reprint.
struct AttackModel {
  double estimation_threshold = 0.5;
  PrintModel reprint;
  AttackPreset preset = AttackPreset::f1_white;

  void validate() const;

  friend bool operator==(const AttackModel&, const AttackModel&) = default;
};

/// Default preset parameters: machine #1 grows dots by 1 px, machine #2 by
/// 2 px; white stock reflects 1.0, gray stock 0.8.
AttackModel default_attack(AttackPreset preset);

/// Checks the preset orderings (F2 dot gain above F1, gray paper below white).
void validate_presets(const AttackModel& f1_white, const AttackModel& f1_gray,
                      const AttackModel& f2_white, const AttackModel& f2_gray);

/// Prints a binary image (0 = ink). Returns a single-channel reflectance map.
Image print_binary(const Image& binary, const PrintModel& model,
                   std::uint64_t seed);

CodeImage print_sim(const DigitalTemplate& t, const PrintModel& model,
                    std::uint64_t seed);

/// `symbol_size` is the template symbol size in input pixels; acquisition is
/// rejected when a symbol would map to less than one sensor pixel.
CodeImage acquire_sim(const CodeImage& printed, const AcquisitionModel& model,
                      std::uint64_t seed, std::size_t symbol_size = 1);

/// Bilinear resampling with clamp-to-edge; pixel centres are aligned.
Image resample_bilinear(const Image& image, std::size_t out_height,
                        std::size_t out_width);

/// Separable Gaussian blur with clamp-to-edge borders.
Image gaussian_blur(const Image& image, double sigma);

/// Binary attacker estimate of the template: 1 where the (channel-averaged)
/// intensity is at least `threshold`.
Image estimate_template(const Image& acquired, double threshold);

/// Seeds for the two stages of a copy attack, derived from the attack seed.
std::uint64_t attack_print_seed(std::uint64_t seed);
std::uint64_t attack_acquire_seed(std::uint64_t seed);

/// threshold -> print_sim(reprint) -> acquire_sim. Result provenance is the
/// preset's fake label.
CodeImage copy_attack(const CodeImage& original, const AttackModel& attack,
                      const AcquisitionModel& acquisition, std::uint64_t seed,
                      std::size_t symbol_size = 1);

}  // namespace cdpauth
