#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "cdpauth/pipeline.hpp"

namespace cdpauth::io {

struct RunOutputs {
  Dataset dataset;
  ExperimentResult result;
};

/// Full experiment with every artefact written below config.output_dir:
///   config.json, dataset/ (when generated), checkpoints/run<r>/*.ckpt,
///   features/ and projections/ CSVs per run and row, selection/ OC-SVM grid
///   tables, and tables.csv, tables.md, results.json.
/// The dataset is read from `dataset_dir` when given, generated from
/// config.dataset with master seed config.seed otherwise.
RunOutputs run_and_save(const RunConfig& config,
                        const std::optional<std::filesystem::path>& dataset_dir = std::nullopt,
                        const std::function<void(const std::string&)>& log = {});

/// File-name friendly form of a row name: "(4) L2 {d_tt, d_xx}" -> "setup4_L2".
std::string row_slug(const std::string& row);

/// "nu,gamma,validation_p_miss,chosen" rows.
std::string selection_csv(const HyperparamSelection& selection);

}  // namespace cdpauth::io
