#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cdpauth/pipeline.hpp"

namespace cdpauth::io {

/// Parses a JSON run configuration. Keys that are absent keep their default
/// value; unknown keys and type mismatches throw FormatError naming the key
/// path (e.g. "dataset.channel.acquisition.scale_factr"). The result is
/// validated.
RunConfig parse_config(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form: every key present, sorted, two-space indent.
/// parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& config);

/// FNV-1a 64 of the canonical form, as 16 lowercase hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace cdpauth::io
