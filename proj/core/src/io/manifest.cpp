#include "cdpauth/io/manifest.hpp"

#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdpauth/error.hpp"
#include "cdpauth/io/files.hpp"
#include "cdpauth/io/png.hpp"

namespace cdpauth::io {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string manifest_to_csv(const DatasetManifest& manifest) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& r : manifest.rows) {
    out += std::to_string(manifest.format_version) + "," + r.path + "," +
           r.template_id + "," + std::string(to_string(r.label)) + "," +
           std::string(to_string(r.split)) + "\n";
  }
  return out;
}

std::vector<ManifestRow> parse_manifest_csv(const std::string& text,
                                            const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw FormatError(source + ": header mismatch, expected '" +
                      std::string(kManifestHeader) + "', got '" + line + "'");
  std::vector<ManifestRow> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + " row " + std::to_string(row_no);
    const auto cells = split_csv_line(line);
    if (cells.size() != 5)
      throw FormatError(where + ": expected 5 columns, got " +
                        std::to_string(cells.size()));
    if (cells[0] != std::to_string(kManifestVersion))
      throw FormatError(where + ": unsupported format_version '" + cells[0] + "'");
    ManifestRow r;
    r.path = cells[1];
    r.template_id = cells[2];
    if (r.path.empty()) throw FormatError(where + ": empty path");
    if (r.template_id.empty()) throw FormatError(where + ": empty template_id");
    const auto label = parse_provenance(cells[3]);
    if (!label) throw FormatError(where + ": unknown label '" + cells[3] + "'");
    r.label = *label;
    const auto split = parse_split(cells[4]);
    if (!split) throw FormatError(where + ": unknown split '" + cells[4] + "'");
    r.split = *split;
    rows.push_back(std::move(r));
  }
  return rows;
}

void check_manifest(const DatasetManifest& manifest) {
  std::set<std::string> digital;
  for (const auto& r : manifest.rows) {
    if (r.label == Provenance::digital && !digital.insert(r.template_id).second)
      throw FormatError("manifest: template '" + r.template_id +
                        "' has more than one digital row");
  }
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& r = manifest.rows[i];
    if (r.label != Provenance::digital && !digital.count(r.template_id))
      throw FormatError("manifest row " + std::to_string(i + 1) + ": template '" +
                        r.template_id + "' has no digital row");
  }
}

DatasetManifest save_dataset(const fs::path& dir, const Dataset& dataset) {
  if (dataset.templates.size() != dataset.template_splits.size())
    throw InvalidInput("dataset splits do not cover every template");
  fs::create_directories(dir / "images");
  DatasetManifest m;
  m.master_seed = dataset.master_seed;
  std::map<std::string, Split> split_of;
  nlohmann::json seeds = nlohmann::json::object();
  std::size_t symbol_size = 0;
  for (std::size_t i = 0; i < dataset.templates.size(); ++i) {
    const auto& t = dataset.templates[i];
    split_of[t.id()] = dataset.template_splits[i];
    seeds[t.id()] = t.seed();
    symbol_size = t.symbol_size();
    const std::string rel = "images/" + t.id() + "_digital.png";
    write_png(dir / rel, t.pixels());
    m.rows.push_back({rel, t.id(), Provenance::digital, dataset.template_splits[i]});
  }
  for (const auto& p : dataset.probes) {
    const auto it = split_of.find(p.template_id());
    if (it == split_of.end())
      throw InvalidInput("probe references unknown template '" + p.template_id() + "'");
    const std::string rel = "images/" + p.template_id() + "_" +
                            std::string(to_string(p.label)) + ".png";
    write_png(dir / rel, p.image.pixels());
    m.rows.push_back({rel, p.template_id(), provenance_of(p.label), it->second});
  }
  write_file(dir / kManifestFile, manifest_to_csv(m));
  nlohmann::json info;
  info["format_version"] = kManifestVersion;
  info["master_seed"] = dataset.master_seed;
  info["symbol_size"] = symbol_size;
  info["template_seeds"] = seeds;
  write_file(dir / kDatasetInfoFile, info.dump(2) + "\n");
  return m;
}

LoadedDataset load_dataset(const fs::path& dir) {
  LoadedDataset out;
  const fs::path manifest_path = dir / kManifestFile;
  out.manifest.rows = parse_manifest_csv(read_file(manifest_path), manifest_path.string());
  std::size_t symbol_size = 1;
  nlohmann::json seeds = nlohmann::json::object();
  const fs::path info_path = dir / kDatasetInfoFile;
  if (fs::exists(info_path)) {
    nlohmann::json info;
    try {
      info = nlohmann::json::parse(read_file(info_path));
      if (info.at("format_version").get<int>() != kManifestVersion)
        throw FormatError(info_path.string() + ": unsupported format_version");
      out.manifest.master_seed = info.at("master_seed").get<std::uint64_t>();
      symbol_size = info.at("symbol_size").get<std::size_t>();
      if (info.contains("template_seeds")) seeds = info.at("template_seeds");
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(info_path.string() + ": " + e.what());
    }
  }
  check_manifest(out.manifest);

  Dataset& ds = out.dataset;
  ds.master_seed = out.manifest.master_seed;
  for (std::size_t i = 0; i < out.manifest.rows.size(); ++i) {
    const auto& r = out.manifest.rows[i];
    const fs::path file = dir / r.path;
    const std::string where = manifest_path.string() + " row " + std::to_string(i + 1);
    if (!fs::exists(file)) throw FormatError(where + ": missing file " + r.path);
    Image pixels;
    try {
      pixels = read_png(file);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    try {
      if (r.label == Provenance::digital) {
        const std::uint64_t seed =
            seeds.contains(r.template_id) ? seeds[r.template_id].get<std::uint64_t>() : 0;
        ds.templates.emplace_back(to_single_channel(pixels), symbol_size, r.template_id, seed);
        ds.template_splits.push_back(r.split);
      } else {
        ds.probes.push_back(make_probe(CodeImage(std::move(pixels), r.label, r.template_id),
                                       *label_of(r.label)));
      }
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cdpauth::io
