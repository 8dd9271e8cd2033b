#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cdpauth/image.hpp"

namespace cdpauth {

/// Binary m x m symbol grid sent to the printer. Pixel value 0 is ink
/// (black symbol), 1 is bare paper.
class DigitalTemplate {
 public:
  /// Validates binarity and block constancy.
  DigitalTemplate(Image pixels, std::size_t symbol_size, std::string id,
                  std::uint64_t seed);

  const Image& pixels() const { return pixels_; }
  std::size_t size() const { return pixels_.height(); }
  std::size_t symbol_size() const { return symbol_size_; }
  std::size_t symbols_per_side() const { return size() / symbol_size_; }
  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }

  CodeImage as_code_image() const;

  friend bool operator==(const DigitalTemplate&,
                         const DigitalTemplate&) = default;

 private:
  Image pixels_;
  std::size_t symbol_size_;
  std::string id_;
  std::uint64_t seed_;
};

struct TemplateGeometry {
  std::size_t size = 60;         // m
  std::size_t symbol_size = 4;   // s
  double black_fraction = 0.5;
  friend bool operator==(const TemplateGeometry&, const TemplateGeometry&) = default;
};

/// Draws (m/s)^2 i.i.d. Bernoulli(black_fraction) symbols and expands each to
/// an s x s block. Pure function of its arguments.
DigitalTemplate generate_template(std::uint64_t seed, std::size_t m,
                                  std::size_t s, double black_fraction,
                                  std::string id = {});

inline DigitalTemplate generate_template(std::uint64_t seed,
                                         const TemplateGeometry& g,
                                         std::string id = {}) {
  return generate_template(seed, g.size, g.symbol_size, g.black_fraction,
                           std::move(id));
}

/// Fraction of symbols that are black.
double black_symbol_fraction(const DigitalTemplate& t);

/// Rotation followed by pixel-wise v -> v^gamma.
CodeImage augment(const CodeImage& image, Rotation rotation, double gamma);
Image augment(const Image& image, Rotation rotation, double gamma);

/// Inclusive arithmetic grid lo, lo+step, ... not exceeding hi (+1e-9).
std::vector<double> gamma_grid(double lo, double hi, double step);

struct DatasetSplit {
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> val_ids;
  std::vector<std::size_t> test_ids;
  std::array<double, 3> fractions{0.4, 0.1, 0.5};
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Random permutation of 0..n-1 partitioned by fractions. Train and
/// validation sizes are round(n * f); test takes the remainder.
DatasetSplit split_dataset(std::size_t n, std::array<double, 3> fractions,
                           std::uint64_t seed);

}  // namespace cdpauth
