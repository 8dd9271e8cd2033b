#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cdpauth/dataset.hpp"

namespace cdpauth::io {

/// Directory layout: one subfolder per label, files paired across folders by
/// file name (extension ignored).
struct IngestOptions {
  /// Label -> subfolder name. Labels without an entry are not read.
  std::map<Provenance, std::string> subfolders{
      {Provenance::digital, "digital"},   {Provenance::original, "original"},
      {Provenance::f1_white, "f1_white"}, {Provenance::f1_gray, "f1_gray"},
      {Provenance::f2_white, "f2_white"}, {Provenance::f2_gray, "f2_gray"}};
  /// Symbol size assumed for the digital templates (1 accepts any binary image).
  std::size_t symbol_size = 1;
  std::array<double, 3> split_fractions{0.4, 0.1, 0.5};
  std::uint64_t seed = 1;
};

struct IngestSummary {
  std::size_t templates = 0;
  std::size_t probes = 0;
  /// "<subfolder>/<file>" of probes without a digital template.
  std::vector<std::string> unpaired;
  std::vector<std::string> warnings;
};

struct IngestResult {
  Dataset dataset;
  IngestSummary summary;
};

/// Reads PNG files from the label subfolders. Digital templates are reduced to
/// one channel and binarised at 0.5; probes keep their channels. Throws
/// InvalidInput for a missing or empty directory, or when no template is found.
IngestResult ingest_external(const std::filesystem::path& dir,
                             const IngestOptions& options = {});

}  // namespace cdpauth::io
