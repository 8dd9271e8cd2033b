#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdpauth/dataset.hpp"

namespace cdpauth::io {

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestHeader =
    "format_version,path,template_id,label,split";
inline constexpr const char* kManifestFile = "manifest.csv";
inline constexpr const char* kDatasetInfoFile = "dataset_info.json";

struct ManifestRow {
  std::string path;  // relative to the dataset directory
  std::string template_id;
  Provenance label = Provenance::digital;
  Split split = Split::train;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct DatasetManifest {
  int format_version = kManifestVersion;
  std::uint64_t master_seed = 0;
  std::vector<ManifestRow> rows;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

std::string manifest_to_csv(const DatasetManifest& manifest);

/// Parses the CSV body; `source` names the file in diagnostics. Throws
/// FormatError naming the offending row for a wrong header, unknown label or
/// split, bad version or wrong column count.
std::vector<ManifestRow> parse_manifest_csv(const std::string& text,
                                            const std::string& source = "manifest");

/// Checks that every template with probes also has a digital row.
void check_manifest(const DatasetManifest& manifest);

/// Writes <dir>/images/<template>_<label>.png, manifest.csv and
/// dataset_info.json (master seed, symbol size, template seeds).
DatasetManifest save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

struct LoadedDataset {
  Dataset dataset;
  DatasetManifest manifest;
};

/// Reverses save_dataset. Missing files are reported with their manifest row.
LoadedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace cdpauth::io
