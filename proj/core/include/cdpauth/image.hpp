#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdpauth {

/// Planar (channel-major) real-valued raster.
class Image {
 public:
  Image() = default;
  Image(std::size_t channels, std::size_t height, std::size_t width,
        double fill = 0.0);
  Image(std::size_t channels, std::size_t height, std::size_t width,
        std::vector<double> values);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * height_ + y) * width_ + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> plane(std::size_t c) {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> plane(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * plane_size(),
                                                  plane_size());
  }

  bool same_geometry(const Image& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  double mean() const;
  bool within_unit_interval() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Quarter-turn rotation, counter-clockwise.
enum class Rotation { r0 = 0, r90 = 90, r180 = 180, r270 = 270 };

Image rotate(const Image& image, Rotation rotation);

/// Averages all channels into one.
Image to_single_channel(const Image& image);

/// Origin of a code image. Matches the manifest label vocabulary.
enum class Provenance { digital, original, f1_white, f1_gray, f2_white, f2_gray };

/// Class label of a probe (everything but the digital template).
enum class Label { original, f1_white, f1_gray, f2_white, f2_gray };

inline constexpr Label kFakeLabels[] = {Label::f1_white, Label::f1_gray,
                                        Label::f2_white, Label::f2_gray};
inline constexpr Label kAllLabels[] = {Label::original, Label::f1_white,
                                       Label::f1_gray, Label::f2_white,
                                       Label::f2_gray};

std::string_view to_string(Provenance p);
std::string_view to_string(Label l);
std::optional<Provenance> parse_provenance(std::string_view text);
std::optional<Label> parse_label(std::string_view text);

Provenance provenance_of(Label label);
std::optional<Label> label_of(Provenance provenance);
inline bool is_fake(Label l) { return l != Label::original; }

/// A registered code image (digital template, printed original or fake).
/// Immutable once constructed.
class CodeImage {
 public:
  CodeImage(Image pixels, Provenance provenance, std::string template_id);

  const Image& pixels() const { return pixels_; }
  Provenance provenance() const { return provenance_; }
  const std::string& template_id() const { return template_id_; }
  std::size_t channels() const { return pixels_.channels(); }
  std::size_t height() const { return pixels_.height(); }
  std::size_t width() const { return pixels_.width(); }

  friend bool operator==(const CodeImage&, const CodeImage&) = default;

 private:
  Image pixels_;
  Provenance provenance_;
  std::string template_id_;
};

/// The classification unit: an acquired code with its label.
struct ProbeRecord {
  CodeImage image;
  Label label;

  const std::string& template_id() const { return image.template_id(); }
};

/// Builds a probe, checking that label and provenance agree.
ProbeRecord make_probe(CodeImage image, Label label);

}  // namespace cdpauth
