#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "cdpauth/image.hpp"

namespace cdpauth {

enum class Verdict { original, fake };

/// Integer counts behind one error rate.
struct RateCount {
  std::size_t errors = 0;
  std::size_t trials = 0;

  /// errors / trials; absent when there were no trials.
  std::optional<double> rate() const;

  friend bool operator==(const RateCount&, const RateCount&) = default;
};

/// P_miss over originals and P_fa per fake label.
struct Metrics {
  RateCount miss;
  std::array<RateCount, 4> false_accept;  // indexed like kFakeLabels

  std::optional<double> p_miss() const { return miss.rate(); }
  std::optional<double> p_fa(Label fake) const;
  RateCount& fa_count(Label fake);
  const RateCount& fa_count(Label fake) const;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

std::size_t fake_index(Label fake);

/// Counts errors for parallel arrays of true labels and verdicts.
Metrics tally(std::span<const Label> labels, std::span<const Verdict> verdicts);

}  // namespace cdpauth
