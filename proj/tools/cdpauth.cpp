// cdpauth: command-line front end for dataset generation, training,
// evaluation and reporting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdpauth/channel.hpp"
#include "cdpauth/error.hpp"
#include "cdpauth/io/checkpoint.hpp"
#include "cdpauth/io/config.hpp"
#include "cdpauth/io/files.hpp"
#include "cdpauth/io/ingest.hpp"
#include "cdpauth/io/manifest.hpp"
#include "cdpauth/io/png.hpp"
#include "cdpauth/io/report.hpp"
#include "cdpauth/io/run.hpp"
#include "cdpauth/pipeline.hpp"
#include "cdpauth/rng.hpp"

namespace fs = std::filesystem;
using namespace cdpauth;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

RunConfig resolve(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : io::load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.output_dir = g.out;
  c.validate();
  return c;
}

void note(const std::string& msg) { std::cerr << msg << "\n"; }

SplitView view_for(const Dataset& ds, const RunConfig& c, std::size_t run) {
  return split_view_for_run(ds, c.dataset.split_fractions, run);
}

template <typename T, typename Parse>
T parse_or_throw(const std::string& text, Parse parse, const char* what) {
  const auto v = parse(text);
  if (!v) throw InvalidInput(std::string("unknown ") + what + " '" + text + "'");
  return *v;
}

void print_table(const ExperimentResult& r) {
  std::cout << io::table_markdown(io::make_table(r));
}

std::vector<fs::path> png_inputs(const fs::path& input) {
  std::vector<fs::path> out;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(input);
  }
  if (out.empty()) throw InvalidInput("no PNG files in " + input.string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copy-detection-pattern authentication toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.fallthrough();

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate a synthetic dataset");
  std::optional<std::size_t> gen_templates;
  gen->add_option("--templates", gen_templates, "Number of templates");
  gen->callback([&] {
    RunConfig c = resolve(g);
    if (gen_templates) c.dataset.templates = *gen_templates;
    const Dataset ds = generate_dataset(c.dataset, c.seed);
    const auto manifest = io::save_dataset(c.output_dir, ds);
    note("wrote " + std::to_string(manifest.rows.size()) + " manifest rows to " + c.output_dir);
  });

  // attack
  auto* atk = app.add_subcommand("attack", "Apply a copy-attack preset to PNG codes");
  std::string atk_input, atk_preset;
  std::optional<std::size_t> atk_symbol;
  atk->add_option("--input", atk_input, "PNG file or directory")->required();
  atk->add_option("--preset", atk_preset, "F1_WHITE, F1_GRAY, F2_WHITE or F2_GRAY")->required();
  atk->add_option("--symbol-size", atk_symbol, "Pixels per symbol in the input");
  atk->callback([&] {
    const RunConfig c = resolve(g);
    const auto preset = parse_or_throw<AttackPreset>(atk_preset, parse_attack_preset, "preset");
    const std::size_t symbol = atk_symbol.value_or(c.dataset.geometry.symbol_size);
    const auto inputs = png_inputs(atk_input);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const CodeImage original(io::read_png(inputs[i]), Provenance::original,
                               inputs[i].stem().string());
      const CodeImage fake =
          copy_attack(original, c.dataset.channel.attack(preset), c.dataset.channel.acquisition,
                      derive_seed(c.seed, "attack." + std::string(to_string(preset)), i), symbol);
      const fs::path dst = fs::path(c.output_dir) /
                           (inputs[i].stem().string() + "_" +
                            std::string(to_string(provenance_of(label_of(preset)))) + ".png");
      fs::create_directories(dst.parent_path());
      io::write_png(dst, fake.pixels());
    }
    note("attacked " + std::to_string(inputs.size()) + " codes into " + c.output_dir);
  });

  // ingest
  auto* ing = app.add_subcommand("ingest", "Import an external dataset laid out by label folders");
  std::string ing_input;
  std::vector<std::string> ing_map;
  std::size_t ing_symbol = 1;
  ing->add_option("--input", ing_input, "Dataset root")->required();
  ing->add_option("--map", ing_map, "label=subfolder, e.g. f1_white=fakes_1_55");
  ing->add_option("--symbol-size", ing_symbol, "Template pixels per symbol");
  ing->callback([&] {
    const RunConfig c = resolve(g);
    io::IngestOptions opts;
    opts.seed = c.seed;
    opts.symbol_size = ing_symbol;
    opts.split_fractions = c.dataset.split_fractions;
    for (const auto& m : ing_map) {
      const auto eq = m.find('=');
      if (eq == std::string::npos) throw InvalidInput("--map expects label=subfolder, got '" + m + "'");
      const auto label = parse_or_throw<Provenance>(m.substr(0, eq), parse_provenance, "label");
      opts.subfolders[label] = m.substr(eq + 1);
    }
    const auto res = io::ingest_external(ing_input, opts);
    for (const auto& w : res.summary.warnings) note("warning: " + w);
    for (const auto& u : res.summary.unpaired) note("skipped unpaired probe " + u);
    io::save_dataset(c.output_dir, res.dataset);
    note("ingested " + std::to_string(res.summary.templates) + " templates and " +
         std::to_string(res.summary.probes) + " probes; " +
         std::to_string(res.summary.unpaired.size()) + " unpaired probes skipped");
  });

  // train-supervised
  auto* ts = app.add_subcommand("train-supervised", "Train one binary classifier");
  std::string ts_dataset, ts_setup = "ALL_FAKES";
  std::size_t ts_run = 0;
  ts->add_option("--dataset", ts_dataset, "Dataset directory")->required();
  ts->add_option("--setup", ts_setup, "ALL_FAKES, F1_WHITE, F1_GRAY, F2_WHITE or F2_GRAY");
  ts->add_option("--run", ts_run, "Repetition index (selects the split and seed)");
  ts->callback([&] {
    const RunConfig c = resolve(g);
    const auto setup =
        parse_or_throw<SupervisedSetup>(ts_setup, parse_supervised_setup, "setup");
    const Dataset ds = io::load_dataset(ts_dataset).dataset;
    SupervisedHyper hyper = c.supervised.hyper;
    hyper.seed = supervised_seed(c.seed, setup, ts_run);
    const auto model = train_supervised_run(view_for(ds, c, ts_run), setup, hyper);
    const fs::path dst = fs::path(c.output_dir) /
                         ("classifier_" + ts_setup + "_run" + std::to_string(ts_run) + ".ckpt");
    io::save_checkpoint(dst, io::classifier_checkpoint(model, io::config_hash(c)));
    note("trained " + std::to_string(model.epochs_run) + " epochs (best " +
         std::to_string(model.history.best_epoch) + "); wrote " + dst.string());
  });

  // train-oneclass
  auto* to = app.add_subcommand("train-oneclass", "Train the template estimator on originals");
  std::string to_dataset, to_variant = "L2";
  std::size_t to_run = 0;
  to->add_option("--dataset", to_dataset, "Dataset directory")->required();
  to->add_option("--variant", to_variant, "L1 or L2");
  to->add_option("--run", to_run, "Repetition index");
  to->callback([&] {
    const RunConfig c = resolve(g);
    const auto variant =
        parse_or_throw<ExtractorVariant>(to_variant, parse_extractor_variant, "variant");
    const Dataset ds = io::load_dataset(to_dataset).dataset;
    const OneClassData data = pair_split(ds, view_for(ds, c, to_run));
    ExtractorHyper hyper = c.oneclass.hyper;
    hyper.seed = extractor_seed(c.seed, variant, to_run);
    const auto e = train_extractor(data.train, data.val, variant, c.oneclass.beta, hyper);
    const fs::path dst = fs::path(c.output_dir) /
                         ("extractor_" + to_variant + "_run" + std::to_string(to_run) + ".ckpt");
    io::save_checkpoint(dst, io::extractor_checkpoint(e, io::config_hash(c)));
    note("trained " + std::to_string(e.model.epochs_run) + " epochs; wrote " + dst.string());
  });

  // fit-ocsvm
  auto* fo = app.add_subcommand("fit-ocsvm", "Fit and select the one-class SVM");
  std::string fo_dataset, fo_extractor;
  int fo_setup = 4;
  std::size_t fo_run = 0;
  fo->add_option("--dataset", fo_dataset, "Dataset directory")->required();
  fo->add_option("--extractor", fo_extractor, "Extractor checkpoint")->required();
  fo->add_option("--setup", fo_setup, "Feature setup 1-5");
  fo->add_option("--run", fo_run, "Repetition index");
  fo->callback([&] {
    const RunConfig c = resolve(g);
    const auto setup = feature_setup_from_number(fo_setup);
    if (!setup) throw InvalidInput("feature setup must be 1-5");
    const Dataset ds = io::load_dataset(fo_dataset).dataset;
    const auto e = io::extractor_from_checkpoint(io::load_checkpoint(fo_extractor));
    const OneClassData data = pair_split(ds, view_for(ds, c, fo_run));
    const auto sel = fit_feature_setup(e, data, *setup, c.oneclass);
    const std::string base =
        "ocsvm_setup" + std::to_string(fo_setup) + "_run" + std::to_string(fo_run);
    const fs::path dst = fs::path(c.output_dir) / (base + ".ckpt");
    io::save_checkpoint(dst, io::ocsvm_checkpoint({sel.model, *setup, c.oneclass.statistic},
                                                  io::config_hash(c)));
    io::write_file(fs::path(c.output_dir) / (base + "_grid.csv"), io::selection_csv(sel));
    const auto& p = sel.table[sel.chosen].point;
    note("selected nu " + io::format_number(p.nu) + ", gamma " + io::format_number(p.gamma) +
         "; wrote " + dst.string());
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a trained model on the test split");
  std::string ev_dataset, ev_model, ev_extractor, ev_ocsvm;
  std::size_t ev_run = 0;
  ev->add_option("--dataset", ev_dataset, "Dataset directory")->required();
  ev->add_option("--model", ev_model, "Classifier checkpoint");
  ev->add_option("--extractor", ev_extractor, "Extractor checkpoint (one-class)");
  ev->add_option("--ocsvm", ev_ocsvm, "OC-SVM checkpoint (one-class)");
  ev->add_option("--run", ev_run, "Repetition index");
  ev->callback([&] {
    const RunConfig c = resolve(g);
    const Dataset ds = io::load_dataset(ev_dataset).dataset;
    const SplitView view = view_for(ds, c, ev_run);
    ExperimentResult r;
    if (!ev_model.empty()) {
      const auto model = io::classifier_from_checkpoint(io::load_checkpoint(ev_model));
      r.kind = PipelineKind::supervised;
      r.rows.push_back({row_name(model.setup), {evaluate(model, view.test)}});
    } else if (!ev_extractor.empty() && !ev_ocsvm.empty()) {
      const auto e = io::extractor_from_checkpoint(io::load_checkpoint(ev_extractor));
      const auto svm = io::ocsvm_from_checkpoint(io::load_checkpoint(ev_ocsvm));
      const OneClassData data = pair_split(ds, view);
      r.kind = PipelineKind::oneclass;
      r.rows.push_back({row_name(svm.setup), {evaluate_oneclass(e, svm.model, data.test,
                                                                 svm.setup, svm.statistic)}});
    } else {
      throw InvalidInput("eval needs --model, or --extractor together with --ocsvm");
    }
    io::write_file(fs::path(c.output_dir) / "results.json", io::results_to_json(r));
    print_table(r);
  });

  // report
  auto* rp = app.add_subcommand("report", "Tables from results files, PCA of feature files");
  std::vector<std::string> rp_results;
  std::vector<std::string> rp_features;
  rp->add_option("--results", rp_results, "results.json files to merge")->required();
  rp->add_option("--features", rp_features, "Feature CSVs to project");
  rp->callback([&] {
    const RunConfig c = resolve(g);
    ExperimentResult merged;
    for (std::size_t i = 0; i < rp_results.size(); ++i) {
      const auto r = io::results_from_json(io::read_file(rp_results[i]), rp_results[i]);
      if (i == 0) merged.kind = r.kind;
      if (r.kind != merged.kind) throw InvalidInput("cannot merge supervised and one-class results");
      for (const auto& row : r.rows) {
        auto it = std::find_if(merged.rows.begin(), merged.rows.end(),
                               [&](const RowResult& m) { return m.row == row.row; });
        if (it == merged.rows.end()) {
          merged.rows.push_back(row);
        } else {
          it->runs.insert(it->runs.end(), row.runs.begin(), row.runs.end());
        }
      }
    }
    io::write_report(c.output_dir, merged);
    for (const auto& f : rp_features) {
      const std::string text = io::read_file(f);
      std::vector<FeatureRow> rows;
      std::vector<Label> labels;
      std::size_t line_no = 0;
      std::size_t start = 0;
      while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line_no++ == 0 || line.empty()) continue;
        const auto comma = line.find(',');
        const auto label = parse_label(line.substr(0, comma));
        if (!label) throw FormatError(f + " row " + std::to_string(line_no - 1) + ": unknown label");
        labels.push_back(*label);
        FeatureRow row;
        std::size_t pos = comma;
        while (pos != std::string::npos) {
          const std::size_t next = line.find(',', pos + 1);
          row.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
          pos = next;
        }
        rows.push_back(std::move(row));
      }
      const fs::path dst = fs::path(c.output_dir) / ("projection_" + fs::path(f).filename().string());
      io::write_file(dst, io::projection_csv(io::pca_2d(rows), labels));
    }
    print_table(merged);
  });

  // run
  auto* rn = app.add_subcommand("run", "Full experiment with every artefact");
  std::string rn_dataset;
  rn->add_option("--dataset", rn_dataset, "Use this dataset instead of generating one");
  rn->callback([&] {
    const RunConfig c = resolve(g);
    std::optional<fs::path> ds;
    if (!rn_dataset.empty()) ds = rn_dataset;
    const auto out = io::run_and_save(c, ds, note);
    print_table(out.result);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
