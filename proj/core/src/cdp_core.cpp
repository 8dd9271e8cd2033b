#include "cdpauth/cdp_core.hpp"

#include <cmath>
#include <numeric>

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth {

DigitalTemplate::DigitalTemplate(Image pixels, std::size_t symbol_size,
                                 std::string id, std::uint64_t seed)
    : pixels_(std::move(pixels)),
      symbol_size_(symbol_size),
      id_(std::move(id)),
      seed_(seed) {
  const std::size_t m = pixels_.height();
  if (pixels_.channels() != 1 || m == 0 || pixels_.width() != m) {
    throw InvalidInput("digital template must be a single-channel square");
  }
  if (symbol_size_ == 0 || m % symbol_size_ != 0) {
    throw InvalidInput("template size " + std::to_string(m) +
                       " is not divisible by symbol size " +
                       std::to_string(symbol_size_));
  }
  for (const double v : pixels_.values()) {
    if (v != 0.0 && v != 1.0) throw InvalidInput("template is not binary");
  }
  for (std::size_t y = 0; y < m; ++y) {
    for (std::size_t x = 0; x < m; ++x) {
      const std::size_t y0 = y - y % symbol_size_;
      const std::size_t x0 = x - x % symbol_size_;
      if (pixels_.at(0, y, x) != pixels_.at(0, y0, x0)) {
        throw InvalidInput("template symbol block at (" + std::to_string(y0) +
                           "," + std::to_string(x0) + ") is not constant");
      }
    }
  }
}

CodeImage DigitalTemplate::as_code_image() const {
  return CodeImage(pixels_, Provenance::digital, id_);
}

DigitalTemplate generate_template(std::uint64_t seed, std::size_t m,
                                  std::size_t s, double black_fraction,
                                  std::string id) {
  if (s == 0 || m == 0 || m % s != 0) {
    throw InvalidInput("template size " + std::to_string(m) +
                       " must be a positive multiple of symbol size " +
                       std::to_string(s));
  }
  if (!(black_fraction > 0.0 && black_fraction < 1.0)) {
    throw InvalidInput("black_fraction must lie strictly inside (0,1)");
  }
  Rng rng(seed);
  const std::size_t n = m / s;
  Image pixels(1, m, m);
  for (std::size_t sy = 0; sy < n; ++sy) {
    for (std::size_t sx = 0; sx < n; ++sx) {
      const double v = rng.bernoulli(black_fraction) ? 0.0 : 1.0;
      for (std::size_t dy = 0; dy < s; ++dy)
        for (std::size_t dx = 0; dx < s; ++dx)
          pixels.at(0, sy * s + dy, sx * s + dx) = v;
    }
  }
  if (id.empty()) id = "t" + std::to_string(seed);
  return DigitalTemplate(std::move(pixels), s, std::move(id), seed);
}

double black_symbol_fraction(const DigitalTemplate& t) {
  const std::size_t s = t.symbol_size();
  const std::size_t n = t.symbols_per_side();
  std::size_t black = 0;
  for (std::size_t sy = 0; sy < n; ++sy)
    for (std::size_t sx = 0; sx < n; ++sx)
      if (t.pixels().at(0, sy * s, sx * s) == 0.0) ++black;
  return static_cast<double>(black) / static_cast<double>(n * n);
}

Image augment(const Image& image, Rotation rotation, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidInput("gamma must be a positive finite number");
  }
  Image out = rotate(image, rotation);
  if (gamma != 1.0) {
    for (double& v : out.values()) v = std::pow(v, gamma);
  }
  return out;
}

CodeImage augment(const CodeImage& image, Rotation rotation, double gamma) {
  return CodeImage(augment(image.pixels(), rotation, gamma),
                   image.provenance(), image.template_id());
}

std::vector<double> gamma_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo > 0.0) || hi < lo) {
    throw InvalidInput("gamma grid needs 0 < lo <= hi and step > 0");
  }
  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double g = lo + static_cast<double>(k) * step;
    if (g > hi + 1e-9) break;
    grid.push_back(std::round(g * 1e9) / 1e9);
  }
  return grid;
}

DatasetSplit split_dataset(std::size_t n, std::array<double, 3> fractions,
                           std::uint64_t seed) {
  if (n < 3) throw InvalidInput("split_dataset needs n >= 3");
  for (const double f : fractions) {
    if (!(f > 0.0)) throw InvalidInput("split fractions must be positive");
  }
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidInput("split fractions must sum to 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto dn = static_cast<double>(n);
  auto n_train = static_cast<std::size_t>(std::llround(dn * fractions[0]));
  auto n_val = static_cast<std::size_t>(std::llround(dn * fractions[1]));
  if (n_train + n_val > n) n_val = n - n_train;

  DatasetSplit split;
  split.fractions = fractions;
  split.seed = seed;
  split.train_ids.assign(order.begin(), order.begin() + n_train);
  split.val_ids.assign(order.begin() + n_train,
                       order.begin() + n_train + n_val);
  split.test_ids.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

}  // namespace cdpauth
