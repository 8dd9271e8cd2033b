#include "cdpauth/image.hpp"

#include <numeric>

#include "cdpauth/error.hpp"

namespace cdpauth {

Image::Image(std::size_t channels, std::size_t height, std::size_t width,
             double fill)
    : channels_(channels),
      height_(height),
      width_(width),
      data_(channels * height * width, fill) {}

Image::Image(std::size_t channels, std::size_t height, std::size_t width,
             std::vector<double> values)
    : channels_(channels),
      height_(height),
      width_(width),
      data_(std::move(values)) {
  if (data_.size() != channels * height * width) {
    throw ShapeError("image value count " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(channels) + "x" +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

double Image::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) /
         static_cast<double>(data_.size());
}

bool Image::within_unit_interval() const {
  for (const double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

Image rotate(const Image& image, Rotation rotation) {
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  switch (rotation) {
    case Rotation::r0:
      return image;
    case Rotation::r180: {
      Image out(image.channels(), h, w);
      for (std::size_t c = 0; c < image.channels(); ++c)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            out.at(c, h - 1 - y, w - 1 - x) = image.at(c, y, x);
      return out;
    }
    case Rotation::r90: {
      Image out(image.channels(), w, h);
      for (std::size_t c = 0; c < image.channels(); ++c)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            out.at(c, w - 1 - x, y) = image.at(c, y, x);
      return out;
    }
    case Rotation::r270: {
      Image out(image.channels(), w, h);
      for (std::size_t c = 0; c < image.channels(); ++c)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            out.at(c, x, h - 1 - y) = image.at(c, y, x);
      return out;
    }
  }
  throw InvalidInput("unknown rotation");
}

Image to_single_channel(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(1, image.height(), image.width());
  const double inv = 1.0 / static_cast<double>(image.channels());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto src = image.plane(c);
    auto dst = out.plane(0);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i] * inv;
  }
  return out;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::digital: return "digital";
    case Provenance::original: return "original";
    case Provenance::f1_white: return "f1_white";
    case Provenance::f1_gray: return "f1_gray";
    case Provenance::f2_white: return "f2_white";
    case Provenance::f2_gray: return "f2_gray";
  }
  return "unknown";
}

std::string_view to_string(Label l) { return to_string(provenance_of(l)); }

std::optional<Provenance> parse_provenance(std::string_view text) {
  for (const auto p : {Provenance::digital, Provenance::original,
                       Provenance::f1_white, Provenance::f1_gray,
                       Provenance::f2_white, Provenance::f2_gray}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view text) {
  const auto p = parse_provenance(text);
  if (!p) return std::nullopt;
  return label_of(*p);
}

Provenance provenance_of(Label label) {
  switch (label) {
    case Label::original: return Provenance::original;
    case Label::f1_white: return Provenance::f1_white;
    case Label::f1_gray: return Provenance::f1_gray;
    case Label::f2_white: return Provenance::f2_white;
    case Label::f2_gray: return Provenance::f2_gray;
  }
  return Provenance::original;
}

std::optional<Label> label_of(Provenance provenance) {
  switch (provenance) {
    case Provenance::digital: return std::nullopt;
    case Provenance::original: return Label::original;
    case Provenance::f1_white: return Label::f1_white;
    case Provenance::f1_gray: return Label::f1_gray;
    case Provenance::f2_white: return Label::f2_white;
    case Provenance::f2_gray: return Label::f2_gray;
  }
  return std::nullopt;
}

CodeImage::CodeImage(Image pixels, Provenance provenance,
                     std::string template_id)
    : pixels_(std::move(pixels)),
      provenance_(provenance),
      template_id_(std::move(template_id)) {
  if (pixels_.height() == 0 || pixels_.width() == 0) {
    throw InvalidInput("code image must have positive height and width");
  }
  if (pixels_.channels() != 1 && pixels_.channels() != 3) {
    throw InvalidInput("code image must have 1 or 3 channels, got " +
                       std::to_string(pixels_.channels()));
  }
  if (!pixels_.within_unit_interval()) {
    throw InvalidInput("code image intensities must lie in [0,1]");
  }
}

ProbeRecord make_probe(CodeImage image, Label label) {
  if (image.provenance() != provenance_of(label)) {
    throw InvalidInput("probe label " + std::string(to_string(label)) +
                       " disagrees with image provenance " +
                       std::string(to_string(image.provenance())));
  }
  return ProbeRecord{std::move(image), label};
}

}  // namespace cdpauth
