#pragma once

#include <filesystem>
#include <string>

namespace cdpauth::io {

/// Whole-file read; throws FormatError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Creates parent directories and replaces the file's contents.
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace cdpauth::io
