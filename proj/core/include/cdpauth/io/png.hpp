#pragma once

#include <filesystem>

#include "cdpauth/image.hpp"

namespace cdpauth::io {

/// Reads an 8-bit PNG as v = byte / 255. Gray (with or without alpha) gives one
/// channel, colour gives three; alpha is dropped. Throws FormatError.
Image read_png(const std::filesystem::path& path);

/// Writes one- or three-channel images with byte = round(v * 255). Values must
/// lie in [0, 1].
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace cdpauth::io
