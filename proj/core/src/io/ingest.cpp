#include "cdpauth/io/ingest.hpp"

#include <algorithm>
#include <set>

#include "cdpauth/error.hpp"
#include "cdpauth/io/png.hpp"

namespace cdpauth::io {
namespace {

namespace fs = std::filesystem;

// Sorted PNG files of a directory, keyed by stem.
std::map<std::string, fs::path> png_files(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") out[e.path().stem().string()] = e.path();
  }
  return out;
}

}  // namespace

IngestResult ingest_external(const fs::path& dir, const IngestOptions& options) {
  if (!fs::is_directory(dir))
    throw InvalidInput("ingest: not a directory: " + dir.string());
  if (fs::is_empty(dir)) throw InvalidInput("ingest: empty directory: " + dir.string());
  const auto digital_it = options.subfolders.find(Provenance::digital);
  if (digital_it == options.subfolders.end())
    throw InvalidInput("ingest: no subfolder mapped to the digital label");

  IngestResult result;
  Dataset& ds = result.dataset;
  ds.master_seed = options.seed;

  const fs::path digital_dir = dir / digital_it->second;
  if (!fs::is_directory(digital_dir))
    throw InvalidInput("ingest: missing template folder " + digital_dir.string());
  std::set<std::string> ids;
  for (const auto& [stem, path] : png_files(digital_dir)) {
    Image raw = to_single_channel(read_png(path));
    std::size_t non_binary = 0;
    for (double& v : raw.values()) {
      if (v != 0.0 && v != 1.0) ++non_binary;
      v = v >= 0.5 ? 1.0 : 0.0;
    }
    if (non_binary > 0)
      result.summary.warnings.push_back(digital_it->second + "/" + path.filename().string() +
                                        ": " + std::to_string(non_binary) +
                                        " non-binary pixels thresholded at 0.5");
    ds.templates.emplace_back(std::move(raw), options.symbol_size, stem, 0);
    ids.insert(stem);
  }
  if (ds.templates.empty())
    throw InvalidInput("ingest: no PNG templates in " + digital_dir.string());

  for (const auto& [prov, folder] : options.subfolders) {
    if (prov == Provenance::digital) continue;
    const fs::path sub = dir / folder;
    if (!fs::is_directory(sub)) {
      result.summary.warnings.push_back("folder '" + folder + "' for " +
                                        std::string(to_string(prov)) + " not found");
      continue;
    }
    for (const auto& [stem, path] : png_files(sub)) {
      if (!ids.count(stem)) {
        result.summary.unpaired.push_back(folder + "/" + path.filename().string());
        continue;
      }
      Image pixels = read_png(path);
      ds.probes.push_back(make_probe(CodeImage(std::move(pixels), prov, stem), *label_of(prov)));
    }
  }
  if (ds.templates.size() >= 3) {
    ds.template_splits = splits_from(
        split_for_run(ds.templates.size(), options.split_fractions, options.seed, 0),
        ds.templates.size());
  } else {
    ds.template_splits.assign(ds.templates.size(), Split::train);
    result.summary.warnings.push_back("fewer than 3 templates; all assigned to train");
  }
  result.summary.templates = ds.templates.size();
  result.summary.probes = ds.probes.size();
  return result;
}

}  // namespace cdpauth::io
