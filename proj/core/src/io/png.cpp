#include "cdpauth/io/png.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "cdpauth/error.hpp"

namespace cdpauth::io {

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string() + ": " + img.message);
  }
  const bool colour = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = colour ? 3 : 1;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const std::size_t h = img.height;
  const std::size_t w = img.width;
  Image out(channels, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        out.at(c, y, x) = buf[(y * w + x) * channels + c] / 255.0;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3)
    throw InvalidInput("PNG output needs 1 or 3 channels, got " +
                       std::to_string(image.channels()));
  if (image.empty()) throw InvalidInput("cannot write an empty image");
  if (!image.within_unit_interval())
    throw InvalidInput("PNG output values must lie in [0, 1]: " + path.string());
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const std::size_t channels = image.channels();
  std::vector<std::uint8_t> buf(h * w * channels);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        buf[(y * w + x) * channels + c] =
            static_cast<std::uint8_t>(std::lround(image.at(c, y, x) * 255.0));

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw FormatError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace cdpauth::io
