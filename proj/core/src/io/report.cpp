#include "cdpauth/io/report.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Dense>
#include <json.hpp>

#include "cdpauth/error.hpp"
#include "cdpauth/io/files.hpp"

namespace cdpauth::io {
namespace {

using nlohmann::json;

constexpr int kResultsVersion = 1;

// Shortest round-trippable form for CSV cells.
std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json count_json(const RateCount& c) { return json::array({c.errors, c.trials}); }

RateCount count_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
    throw FormatError(where + ": expected [errors, trials]");
  RateCount c{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (c.errors > c.trials) throw FormatError(where + ": more errors than trials");
  return c;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::optional<CellStats> cell_stats(std::span<const std::optional<double>> values) {
  std::vector<double> v;
  for (const auto& x : values)
    if (x) v.push_back(*x);
  if (v.empty()) return std::nullopt;
  CellStats s;
  s.runs = v.size();
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string format_cell(const std::optional<CellStats>& stats) {
  if (!stats) return "n/a";
  std::string out = format_number(stats->mean);
  if (stats->runs > 1 && stats->std > 0.0) out += " (±" + format_number(stats->std) + ")";
  return out;
}

std::string format_cell(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("format_cell: no completed runs");
  std::vector<std::optional<double>> v(values.begin(), values.end());
  return format_cell(cell_stats(v));
}

std::optional<double> percent(const std::optional<double>& rate) {
  if (!rate) return std::nullopt;
  return *rate * 100.0;
}

double total_error(const Metrics& m) {
  double total = percent(m.p_miss()).value_or(0.0);
  for (Label l : kFakeLabels) total += percent(m.p_fa(l)).value_or(0.0);
  return total;
}

ReportTable make_table(const ExperimentResult& result) {
  if (result.rows.empty()) throw InvalidInput("report: no completed runs");
  ReportTable t;
  t.title = result.kind == PipelineKind::supervised
                ? "Supervised classification error (%)"
                : "One-class classification error (%)";
  t.header = {"setup", "P_miss"};
  for (Label l : kFakeLabels) t.header.push_back("P_fa " + std::string(to_string(l)));
  for (const auto& row : result.rows) {
    if (row.runs.empty()) throw InvalidInput("report: row '" + row.row + "' has no completed runs");
    std::vector<std::string> cells{row.row};
    std::vector<std::optional<double>> v;
    for (const auto& m : row.runs) v.push_back(percent(m.p_miss()));
    cells.push_back(format_cell(cell_stats(v)));
    for (Label l : kFakeLabels) {
      v.clear();
      for (const auto& m : row.runs) v.push_back(percent(m.p_fa(l)));
      cells.push_back(format_cell(cell_stats(v)));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string table_csv(const ReportTable& table) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + quote(cells[i]);
    out += "\n";
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

std::string table_markdown(const ReportTable& table) {
  std::string out = "### " + table.title + "\n\n";
  auto line = [&](const std::vector<std::string>& cells) {
    out += "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
  };
  line(table.header);
  out += "|";
  for (std::size_t i = 0; i < table.header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : table.rows) line(r);
  return out;
}

std::string results_to_json(const ExperimentResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json runs = json::array();
    for (const auto& m : row.runs) {
      json fa = json::object();
      for (Label l : kFakeLabels) fa[std::string(to_string(l))] = count_json(m.fa_count(l));
      runs.push_back({{"miss", count_json(m.miss)}, {"false_accept", fa}});
    }
    rows.push_back({{"row", row.row}, {"runs", runs}});
  }
  const json j = {{"format_version", kResultsVersion},
                  {"kind", std::string(to_string(result.kind))},
                  {"rows", rows}};
  return j.dump(2) + "\n";
}

ExperimentResult results_from_json(std::string_view text, std::string_view source) {
  const std::string src(source);
  ExperimentResult r;
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != kResultsVersion)
      throw FormatError(src + ": unsupported results format_version");
    const auto kind = parse_pipeline_kind(j.at("kind").get<std::string>());
    if (!kind) throw FormatError(src + ": unknown pipeline kind");
    r.kind = *kind;
    for (const auto& row : j.at("rows")) {
      RowResult rr;
      rr.row = row.at("row").get<std::string>();
      for (const auto& run : row.at("runs")) {
        Metrics m;
        m.miss = count_from(run.at("miss"), src + " row '" + rr.row + "' miss");
        const auto& fa = run.at("false_accept");
        for (Label l : kFakeLabels) {
          const std::string name(to_string(l));
          m.fa_count(l) = count_from(fa.at(name), src + " row '" + rr.row + "' " + name);
        }
        rr.runs.push_back(m);
      }
      r.rows.push_back(std::move(rr));
    }
  } catch (const json::exception& e) {
    throw FormatError(src + ": " + e.what());
  }
  return r;
}

std::vector<std::array<double, 2>> pca_2d(std::span<const FeatureRow> rows) {
  std::vector<std::array<double, 2>> out(rows.size(), {0.0, 0.0});
  if (rows.empty()) return out;
  const std::size_t d = rows.front().size();
  Eigen::MatrixXd x(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw ShapeError("pca_2d: ragged feature rows");
    for (std::size_t k = 0; k < d; ++k) x(i, k) = rows[i][k];
  }
  if (d == 0) return out;
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = x.transpose() * x / std::max<double>(1.0, rows.size() - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last two columns.
  const std::size_t axes = std::min<std::size_t>(2, d);
  for (std::size_t a = 0; a < axes; ++a) {
    Eigen::VectorXd v = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - a));
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0) v = -v;
    const Eigen::VectorXd p = x * v;
    for (std::size_t i = 0; i < rows.size(); ++i) out[i][a] = p(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::string projection_csv(std::span<const std::array<double, 2>> coords,
                           std::span<const Label> labels) {
  if (coords.size() != labels.size()) throw ShapeError("projection_csv: length mismatch");
  std::string out = "pc1,pc2,label\n";
  for (std::size_t i = 0; i < coords.size(); ++i)
    out += exact(coords[i][0]) + "," + exact(coords[i][1]) + "," +
           std::string(to_string(labels[i])) + "\n";
  return out;
}

std::string features_csv(std::span<const FeatureRow> rows, std::span<const Label> labels) {
  if (rows.size() != labels.size()) throw ShapeError("features_csv: length mismatch");
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  std::string out = "label";
  for (std::size_t k = 0; k < d; ++k) out += ",f" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw ShapeError("features_csv: ragged feature rows");
    out += to_string(labels[i]);
    for (double v : rows[i]) out += "," + exact(v);
    out += "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const ExperimentResult& result) {
  const ReportTable t = make_table(result);
  write_file(dir / "tables.csv", table_csv(t));
  write_file(dir / "tables.md", table_markdown(t));
  write_file(dir / "results.json", results_to_json(result));
}

}  // namespace cdpauth::io
