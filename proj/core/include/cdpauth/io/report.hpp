#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdpauth/ocsvm.hpp"
#include "cdpauth/pipeline.hpp"

namespace cdpauth::io {

/// Rounds to two decimals and strips trailing zeros: 0.14, 99.4, 0.
std::string format_number(double value);

struct CellStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t runs = 0;
};

/// Statistics over the defined entries; absent when none is defined.
std::optional<CellStats> cell_stats(std::span<const std::optional<double>> values);

/// "m" for a single run or zero spread, "m (±s)" otherwise, "n/a" when absent.
std::string format_cell(const std::optional<CellStats>& stats);
/// Throws InvalidInput for an empty list.
std::string format_cell(std::span<const double> values);

/// Error rates in percent.
std::optional<double> percent(const std::optional<double>& rate);
/// P_miss plus every defined P_fa, in percent.
double total_error(const Metrics& m);

struct ReportTable {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// One row per setup, columns P_miss and the four P_fa. Throws InvalidInput
/// when the result holds no row or a row without runs.
ReportTable make_table(const ExperimentResult& result);

std::string table_csv(const ReportTable& table);
std::string table_markdown(const ReportTable& table);

/// Confusion counts per run; the exact ratios are recomputed on load.
std::string results_to_json(const ExperimentResult& result);
ExperimentResult results_from_json(std::string_view text, std::string_view source = "results");

/// Projection onto the two leading principal axes. Each axis is oriented so
/// that its largest-magnitude loading is positive. Missing axes (fewer than
/// two feature dimensions) give zero coordinates.
std::vector<std::array<double, 2>> pca_2d(std::span<const FeatureRow> rows);

/// "pc1,pc2,label" rows.
std::string projection_csv(std::span<const std::array<double, 2>> coords,
                           std::span<const Label> labels);
/// "label,f0,f1,..." rows.
std::string features_csv(std::span<const FeatureRow> rows, std::span<const Label> labels);

/// Writes tables.csv, tables.md and results.json into `dir`.
void write_report(const std::filesystem::path& dir, const ExperimentResult& result);

}  // namespace cdpauth::io
