#include "cdpauth/io/run.hpp"

#include <cctype>
#include <cstdio>

#include "cdpauth/io/checkpoint.hpp"
#include "cdpauth/io/config.hpp"
#include "cdpauth/io/files.hpp"
#include "cdpauth/io/manifest.hpp"
#include "cdpauth/io/report.hpp"

namespace cdpauth::io {

namespace fs = std::filesystem;

std::string row_slug(const std::string& row) {
  if (!row.empty() && row.front() == '(') {
    const auto close = row.find(')');
    const auto space = row.find(' ', close + 2);
    if (close != std::string::npos)
      return "setup" + row.substr(1, close - 1) + "_" +
             row.substr(close + 2, space == std::string::npos ? std::string::npos
                                                              : space - close - 2);
  }
  std::string out;
  for (char c : row) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

std::string selection_csv(const HyperparamSelection& selection) {
  std::string out = "nu,gamma,validation_p_miss,chosen\n";
  for (std::size_t i = 0; i < selection.table.size(); ++i) {
    const auto& r = selection.table[i];
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", r.point.nu, r.point.gamma,
                  r.validation_p_miss, i == selection.chosen ? 1 : 0);
    out += buf;
  }
  return out;
}

RunOutputs run_and_save(const RunConfig& config, const std::optional<fs::path>& dataset_dir,
                        const std::function<void(const std::string&)>& log) {
  config.validate();
  const fs::path out = config.output_dir;
  const std::string hash = config_hash(config);
  write_file(out / "config.json", dump_config(config));

  RunOutputs outputs;
  if (dataset_dir) {
    outputs.dataset = load_dataset(*dataset_dir).dataset;
  } else {
    outputs.dataset = generate_dataset(config.dataset, config.seed);
    save_dataset(out / "dataset", outputs.dataset);
  }
  if (log)
    log("dataset: " + std::to_string(outputs.dataset.templates.size()) + " templates, " +
        std::to_string(outputs.dataset.probes.size()) + " probes");

  auto run_dir = [&](std::size_t run) {
    return out / "checkpoints" / ("run" + std::to_string(run));
  };
  ExperimentHooks hooks;
  hooks.log = log;
  hooks.on_classifier = [&](std::size_t run, SupervisedSetup setup, const ClassifierModel& m) {
    save_checkpoint(run_dir(run) / ("classifier_" + std::string(to_string(setup)) + ".ckpt"),
                    classifier_checkpoint(m, hash));
  };
  hooks.on_extractor = [&](std::size_t run, const TrainedExtractor& e) {
    save_checkpoint(
        run_dir(run) / ("extractor_" + std::string(to_string(e.model.variant)) + ".ckpt"),
        extractor_checkpoint(e, hash));
  };
  hooks.on_ocsvm = [&](std::size_t run, FeatureSetup setup, const HyperparamSelection& sel) {
    const std::string slug = row_slug(row_name(setup));
    save_checkpoint(run_dir(run) / ("ocsvm_" + slug + ".ckpt"),
                    ocsvm_checkpoint({sel.model, setup, config.oneclass.statistic}, hash));
    write_file(out / "selection" / ("run" + std::to_string(run) + "_" + slug + ".csv"),
               selection_csv(sel));
  };
  hooks.on_test_features = [&](std::size_t run, const std::string& row,
                               const std::vector<Label>& labels,
                               const std::vector<std::vector<double>>& features) {
    const std::string name = "run" + std::to_string(run) + "_" + row_slug(row) + ".csv";
    write_file(out / "features" / name, features_csv(features, labels));
    write_file(out / "projections" / name, projection_csv(pca_2d(features), labels));
  };

  outputs.result = run_experiment(outputs.dataset, config, hooks);
  write_report(out, outputs.result);
  return outputs;
}

}  // namespace cdpauth::io
