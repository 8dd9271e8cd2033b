#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cdpauth/cdp_core.hpp"
#include "cdpauth/channel.hpp"

namespace cdpauth {

enum class Split { train, val, test };

std::string_view to_string(Split s);  // "train", "val", "test"
std::optional<Split> parse_split(std::string_view name);

/// Original print channel, acquisition and the four attack presets. The
/// default acquisition maps one template symbol (4 px) to one sensor pixel.
struct ChannelConfig {
  PrintModel original_print{};
  AcquisitionModel acquisition{0.25, 1.0, 0.01, {1.0}};
  std::array<AttackModel, 4> attacks{
      default_attack(AttackPreset::f1_white), default_attack(AttackPreset::f1_gray),
      default_attack(AttackPreset::f2_white), default_attack(AttackPreset::f2_gray)};

  const AttackModel& attack(AttackPreset p) const;
  void validate() const;

  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

struct SyntheticConfig {
  TemplateGeometry geometry{};
  std::size_t templates = 300;
  std::array<double, 3> split_fractions{0.4, 0.1, 0.5};
  ChannelConfig channel{};

  friend bool operator==(const SyntheticConfig&, const SyntheticConfig&) = default;
};

/// Templates with their split, and every probe (originals and fakes).
struct Dataset {
  std::uint64_t master_seed = 0;
  std::vector<DigitalTemplate> templates;
  std::vector<Split> template_splits;  // parallel to templates
  std::vector<ProbeRecord> probes;

  const DigitalTemplate* find_template(std::string_view id) const;
};

/// Maps each value v to round(v * 255) / 255.
Image quantize_8bit(const Image& image);
CodeImage quantize_8bit(const CodeImage& image);

/// Zero-padded template id, e.g. "t0007".
std::string template_id_for(std::size_t index);

/// Per template: one original (print then acquire) and one fake per attack
/// preset. The attacker estimates the template from the printed original. All images are quantised to 8 bits so that a dataset written to and
/// read back from disk is identical. Splits follow split_for_run(.., 0).
Dataset generate_dataset(const SyntheticConfig& config, std::uint64_t master_seed);

/// Template-level split for run `run`. Run 0 of a dataset uses the splits it
/// carries; later runs draw a fresh permutation.
DatasetSplit split_for_run(std::size_t n_templates,
                           std::array<double, 3> fractions,
                           std::uint64_t master_seed, std::size_t run);

struct SplitView {
  std::vector<ProbeRecord> train;
  std::vector<ProbeRecord> val;
  std::vector<ProbeRecord> test;
};

/// Partitions probes by the split of their template.
SplitView view_split(const Dataset& dataset, std::span<const Split> template_splits);
std::vector<Split> splits_from(const DatasetSplit& split, std::size_t n_templates);

}  // namespace cdpauth
