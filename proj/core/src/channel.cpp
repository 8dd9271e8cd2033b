#include "cdpauth/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth {
namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void add_noise_and_clamp(Image& image, double sigma, Rng& rng) {
  for (double& v : image.values()) {
    if (sigma > 0.0) v += sigma * rng.normal();
    v = std::clamp(v, 0.0, 1.0);
  }
}

}  // namespace

void PrintModel::validate() const {
  if (!finite_nonneg(ink_reflectance) || !finite_nonneg(paper_reflectance) ||
      ink_reflectance > 1.0 || paper_reflectance > 1.0) {
    throw InvalidInput("print reflectances must lie in [0,1]");
  }
  if (!(ink_reflectance < paper_reflectance)) {
    throw InvalidInput("ink reflectance must be below paper reflectance");
  }
  if (!finite_nonneg(dot_gain) || !finite_nonneg(psf_sigma) ||
      !finite_nonneg(noise_sigma)) {
    throw InvalidInput("dot_gain, psf_sigma and noise_sigma must be finite and "
                       "nonnegative");
  }
}

void AcquisitionModel::validate() const {
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor)) {
    throw InvalidInput("scale_factor must be positive");
  }
  if (!(sensor_gamma > 0.0) || !std::isfinite(sensor_gamma)) {
    throw InvalidInput("sensor_gamma must be positive");
  }
  if (!finite_nonneg(sensor_noise_sigma)) {
    throw InvalidInput("sensor_noise_sigma must be finite and nonnegative");
  }
  if (channel_gains.size() != 1 && channel_gains.size() != 3) {
    throw InvalidInput("channel_gains must have 1 or 3 entries");
  }
  for (const double g : channel_gains) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw InvalidInput("channel gains must be positive");
    }
  }
}

std::string_view to_string(AttackPreset p) {
  switch (p) {
    case AttackPreset::f1_white: return "F1_WHITE";
    case AttackPreset::f1_gray: return "F1_GRAY";
    case AttackPreset::f2_white: return "F2_WHITE";
    case AttackPreset::f2_gray: return "F2_GRAY";
  }
  return "UNKNOWN";
}

std::optional<AttackPreset> parse_attack_preset(std::string_view name) {
  for (const auto p : kAttackPresets) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

Label label_of(AttackPreset p) {
  switch (p) {
    case AttackPreset::f1_white: return Label::f1_white;
    case AttackPreset::f1_gray: return Label::f1_gray;
    case AttackPreset::f2_white: return Label::f2_white;
    case AttackPreset::f2_gray: return Label::f2_gray;
  }
  return Label::f1_white;
}

void AttackModel::validate() const {
  if (!(estimation_threshold > 0.0 && estimation_threshold < 1.0)) {
    throw InvalidInput("estimation_threshold must lie strictly inside (0,1)");
  }
  reprint.validate();
}

AttackModel default_attack(AttackPreset preset) {
  AttackModel a;
  a.preset = preset;
  a.estimation_threshold = 0.5;
  const bool machine2 =
      preset == AttackPreset::f2_white || preset == AttackPreset::f2_gray;
  const bool gray =
      preset == AttackPreset::f1_gray || preset == AttackPreset::f2_gray;
  a.reprint.ink_reflectance = 0.1;
  a.reprint.paper_reflectance = gray ? 0.8 : 1.0;
  a.reprint.dot_gain = machine2 ? 2.0 : 1.0;
  a.reprint.psf_sigma = 0.8;
  a.reprint.noise_sigma = 0.02;
  return a;
}

void validate_presets(const AttackModel& f1_white, const AttackModel& f1_gray,
                      const AttackModel& f2_white, const AttackModel& f2_gray) {
  for (const auto* a : {&f1_white, &f1_gray, &f2_white, &f2_gray}) {
    a->validate();
  }
  if (!(f2_white.reprint.dot_gain > f1_white.reprint.dot_gain) ||
      !(f2_gray.reprint.dot_gain > f1_gray.reprint.dot_gain)) {
    throw InvalidInput("F2 presets must have larger dot gain than F1 presets");
  }
  if (!(f1_gray.reprint.paper_reflectance <
        f1_white.reprint.paper_reflectance) ||
      !(f2_gray.reprint.paper_reflectance <
        f2_white.reprint.paper_reflectance)) {
    throw InvalidInput("GRAY presets must use darker paper than WHITE presets");
  }
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sigma * sigma));
    kernel[k + radius] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const int h = static_cast<int>(image.height());
  const int w = static_cast<int>(image.width());
  Image tmp(image.channels(), image.height(), image.width());
  Image out(image.channels(), image.height(), image.width());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int xx = std::clamp(x + k, 0, w - 1);
          acc += kernel[k + radius] * image.at(c, y, xx);
        }
        tmp.at(c, y, x) = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int yy = std::clamp(y + k, 0, h - 1);
          acc += kernel[k + radius] * tmp.at(c, yy, x);
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  return out;
}

Image print_binary(const Image& binary, const PrintModel& model,
                   std::uint64_t seed) {
  model.validate();
  const Image mono = to_single_channel(binary);
  const int h = static_cast<int>(mono.height());
  const int w = static_cast<int>(mono.width());

  // Dark coverage of a paper pixel at distance d from the nearest ink pixel
  // centre is clamp(dot_gain + 1 - d, 0, 1).
  const double r = model.dot_gain;
  const int reach = static_cast<int>(std::ceil(r + 1.0));
  Image reflect(1, mono.height(), mono.width());
  const double contrast = model.paper_reflectance - model.ink_reflectance;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double coverage = 0.0;
      if (mono.at(0, y, x) < 0.5) {
        coverage = 1.0;
      } else if (r > 0.0) {
        double best = std::numeric_limits<double>::infinity();
        for (int dy = -reach; dy <= reach; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= h) continue;
          for (int dx = -reach; dx <= reach; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= w) continue;
            if (mono.at(0, yy, xx) < 0.5) {
              best = std::min(best, std::hypot(double(dy), double(dx)));
            }
          }
        }
        coverage = std::clamp(r + 1.0 - best, 0.0, 1.0);
      }
      reflect.at(0, y, x) = model.paper_reflectance - contrast * coverage;
    }
  }
  Image out = gaussian_blur(reflect, model.psf_sigma);
  Rng rng(seed);
  add_noise_and_clamp(out, model.noise_sigma, rng);
  return out;
}

CodeImage print_sim(const DigitalTemplate& t, const PrintModel& model,
                    std::uint64_t seed) {
  return CodeImage(print_binary(t.pixels(), model, seed),
                   Provenance::original, t.id());
}

Image resample_bilinear(const Image& image, std::size_t out_height,
                        std::size_t out_width) {
  if (out_height == image.height() && out_width == image.width()) return image;
  const double sy = static_cast<double>(image.height()) / out_height;
  const double sx = static_cast<double>(image.width()) / out_width;
  const auto max_y = static_cast<std::ptrdiff_t>(image.height()) - 1;
  const auto max_x = static_cast<std::ptrdiff_t>(image.width()) - 1;
  Image out(image.channels(), out_height, out_width);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t oy = 0; oy < out_height; ++oy) {
      const double fy = (oy + 0.5) * sy - 0.5;
      const double y0f = std::floor(fy);
      const double ty = fy - y0f;
      const auto y0 = std::clamp<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(y0f), 0, max_y);
      const auto y1 = std::clamp<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(y0f) + 1, 0, max_y);
      for (std::size_t ox = 0; ox < out_width; ++ox) {
        const double fx = (ox + 0.5) * sx - 0.5;
        const double x0f = std::floor(fx);
        const double tx = fx - x0f;
        const auto x0 = std::clamp<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(x0f), 0, max_x);
        const auto x1 = std::clamp<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(x0f) + 1, 0, max_x);
        const double top = (1.0 - tx) * image.at(c, y0, x0) +
                           tx * image.at(c, y0, x1);
        const double bottom = (1.0 - tx) * image.at(c, y1, x0) +
                              tx * image.at(c, y1, x1);
        out.at(c, oy, ox) = (1.0 - ty) * top + ty * bottom;
      }
    }
  }
  return out;
}

CodeImage acquire_sim(const CodeImage& printed, const AcquisitionModel& model,
                      std::uint64_t seed, std::size_t symbol_size) {
  model.validate();
  if (printed.provenance() == Provenance::digital) {
    throw InvalidInput("acquire_sim expects a printed code, got a digital "
                       "template");
  }
  const auto out_h = static_cast<std::size_t>(
      std::llround(printed.height() * model.scale_factor));
  const auto out_w = static_cast<std::size_t>(
      std::llround(printed.width() * model.scale_factor));
  if (out_h == 0 || out_w == 0 ||
      static_cast<double>(symbol_size) * model.scale_factor < 1.0) {
    throw InvalidInput("scale_factor " + std::to_string(model.scale_factor) +
                       " maps a symbol to less than one sensor pixel");
  }
  const Image& src = printed.pixels();
  const std::size_t out_c = model.channel_gains.size();
  if (src.channels() != out_c && src.channels() != 1) {
    throw ShapeError("acquisition with " + std::to_string(out_c) +
                     " gains cannot take a " + std::to_string(src.channels()) +
                     "-channel input");
  }
  const Image resampled = resample_bilinear(src, out_h, out_w);
  Image out(out_c, out_h, out_w);
  Rng rng(seed);
  for (std::size_t c = 0; c < out_c; ++c) {
    const auto in = resampled.plane(resampled.channels() == 1 ? 0 : c);
    auto dst = out.plane(c);
    const double gain = model.channel_gains[c];
    for (std::size_t i = 0; i < dst.size(); ++i) {
      double v = gain * in[i];
      if (model.sensor_gamma != 1.0) v = std::pow(v, model.sensor_gamma);
      dst[i] = v;
    }
  }
  add_noise_and_clamp(out, model.sensor_noise_sigma, rng);
  return CodeImage(std::move(out), printed.provenance(), printed.template_id());
}

Image estimate_template(const Image& acquired, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidInput("estimation threshold must lie strictly inside (0,1)");
  }
  Image mono = to_single_channel(acquired);
  for (double& v : mono.values()) v = v >= threshold ? 1.0 : 0.0;
  return mono;
}

std::uint64_t attack_print_seed(std::uint64_t seed) {
  return derive_seed(seed, "attack.print");
}

std::uint64_t attack_acquire_seed(std::uint64_t seed) {
  return derive_seed(seed, "attack.acquire");
}

CodeImage copy_attack(const CodeImage& original, const AttackModel& attack,
                      const AcquisitionModel& acquisition, std::uint64_t seed,
                      std::size_t symbol_size) {
  attack.validate();
  if (original.provenance() != Provenance::original) {
    throw InvalidInput("copy_attack expects a printed or acquired original");
  }
  const Image estimate =
      estimate_template(original.pixels(), attack.estimation_threshold);
  const CodeImage reprinted(
      print_binary(estimate, attack.reprint, attack_print_seed(seed)),
      provenance_of(label_of(attack.preset)), original.template_id());
  return acquire_sim(reprinted, acquisition, attack_acquire_seed(seed),
                     symbol_size);
}

}  // namespace cdpauth
