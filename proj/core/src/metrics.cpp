#include "cdpauth/metrics.hpp"

#include "cdpauth/error.hpp"

namespace cdpauth {

std::optional<double> RateCount::rate() const {
  if (trials == 0) return std::nullopt;
  return static_cast<double>(errors) / static_cast<double>(trials);
}

std::size_t fake_index(Label fake) {
  switch (fake) {
    case Label::f1_white: return 0;
    case Label::f1_gray: return 1;
    case Label::f2_white: return 2;
    case Label::f2_gray: return 3;
    case Label::original: break;
  }
  throw InvalidInput("original is not a fake label");
}

std::optional<double> Metrics::p_fa(Label fake) const {
  return false_accept[fake_index(fake)].rate();
}

RateCount& Metrics::fa_count(Label fake) {
  return false_accept[fake_index(fake)];
}

const RateCount& Metrics::fa_count(Label fake) const {
  return false_accept[fake_index(fake)];
}

Metrics tally(std::span<const Label> labels, std::span<const Verdict> verdicts) {
  if (labels.size() != verdicts.size()) {
    throw ShapeError("tally: " + std::to_string(labels.size()) + " labels vs " +
                     std::to_string(verdicts.size()) + " verdicts");
  }
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::original) {
      ++m.miss.trials;
      if (verdicts[i] != Verdict::original) ++m.miss.errors;
    } else {
      RateCount& c = m.fa_count(labels[i]);
      ++c.trials;
      if (verdicts[i] == Verdict::original) ++c.errors;
    }
  }
  return m;
}

}  // namespace cdpauth
