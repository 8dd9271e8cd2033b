#include "cdpauth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth {

std::string_view to_string(PipelineKind k) {
  return k == PipelineKind::supervised ? "supervised" : "oneclass";
}

std::optional<PipelineKind> parse_pipeline_kind(std::string_view name) {
  if (name == "supervised") return PipelineKind::supervised;
  if (name == "oneclass") return PipelineKind::oneclass;
  return std::nullopt;
}

void RunConfig::validate() const {
  if (runs == 0) throw InvalidInput("runs must be at least 1");
  if (output_dir.empty()) throw InvalidInput("output_dir must not be empty");
  const auto& g = dataset.geometry;
  if (g.size == 0 || g.symbol_size == 0 || g.size % g.symbol_size != 0)
    throw InvalidInput("template size must be a positive multiple of the symbol size");
  if (!(g.black_fraction >= 0.0 && g.black_fraction <= 1.0))
    throw InvalidInput("black_fraction must lie in [0, 1]");
  if (dataset.templates < 3) throw InvalidInput("dataset needs at least 3 templates");
  double total = 0.0;
  for (double f : dataset.split_fractions) {
    if (!(f > 0.0)) throw InvalidInput("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("split fractions must sum to 1");
  dataset.channel.validate();
  const double sensor_symbol =
      static_cast<double>(g.symbol_size) * dataset.channel.acquisition.scale_factor;
  if (sensor_symbol < 1.0 - 1e-12)
    throw InvalidInput("acquisition scale maps a symbol to less than one sensor pixel");

  auto check_adam = [](const nn::AdamOptions& a, const char* where) {
    if (!(a.lr > 0.0) || !(a.beta1 >= 0.0 && a.beta1 < 1.0) ||
        !(a.beta2 >= 0.0 && a.beta2 < 1.0) || !(a.epsilon > 0.0))
      throw InvalidInput(std::string(where) + ": invalid Adam options");
  };
  auto check_gammas = [](const std::vector<double>& gs, const char* where) {
    if (gs.empty()) throw InvalidInput(std::string(where) + ": empty gamma list");
    for (double v : gs)
      if (!(v > 0.0)) throw InvalidInput(std::string(where) + ": gammas must be positive");
  };

  const auto& s = supervised;
  if (s.setups.empty()) throw InvalidInput("supervised.setups is empty");
  if (s.hyper.batch_size == 0 || s.hyper.epochs == 0)
    throw InvalidInput("supervised: batch size and epochs must be positive");
  check_adam(s.hyper.adam, "supervised");
  check_gammas(s.hyper.gammas, "supervised");
  for (auto w : s.hyper.widths)
    if (w == 0) throw InvalidInput("supervised: layer widths must be positive");

  const auto& o = oneclass;
  if (o.setups.empty()) throw InvalidInput("oneclass.setups is empty");
  if (!(o.beta >= 0.0) || !std::isfinite(o.beta))
    throw InvalidInput("oneclass.beta must be finite and non-negative");
  if (o.hyper.batch_size == 0 || o.hyper.epochs == 0)
    throw InvalidInput("oneclass: batch size and epochs must be positive");
  if (o.hyper.base_width == 0 || o.hyper.discriminator_width == 0)
    throw InvalidInput("oneclass: network widths must be positive");
  if (!(o.hyper.adversarial_weight >= 0.0))
    throw InvalidInput("oneclass.adversarial_weight must be non-negative");
  check_adam(o.hyper.adam, "oneclass");
  check_gammas(o.hyper.gammas, "oneclass");
  check_gammas(o.fit_gammas, "oneclass.fit_gammas");
  if (o.grid.empty()) throw InvalidInput("ocsvm grid is empty");
  for (const auto& p : o.grid) {
    if (!(p.nu > 0.0 && p.nu <= 1.0)) throw InvalidInput("ocsvm nu must lie in (0, 1]");
    if (!(p.gamma > 0.0)) throw InvalidInput("ocsvm gamma must be positive");
  }
}

SplitView split_view_for_run(const Dataset& dataset,
                             std::array<double, 3> fractions, std::size_t run) {
  if (run == 0) return view_split(dataset, dataset.template_splits);
  const auto n = dataset.templates.size();
  return view_split(
      dataset, splits_from(split_for_run(n, fractions, dataset.master_seed, run), n));
}

std::uint64_t supervised_seed(std::uint64_t seed, SupervisedSetup setup,
                              std::size_t run) {
  return derive_seed(seed, "supervised." + std::string(to_string(setup)), run);
}

std::uint64_t extractor_seed(std::uint64_t seed, ExtractorVariant variant,
                             std::size_t run) {
  return derive_seed(seed, "extractor." + std::string(to_string(variant)), run);
}

ClassifierModel train_supervised_run(const SplitView& view,
                                     SupervisedSetup setup,
                                     const SupervisedHyper& hyper) {
  return train_supervised(filter_for_setup(view.train, setup),
                          filter_for_setup(view.val, setup), setup, hyper);
}

OneClassData pair_split(const Dataset& dataset, const SplitView& view) {
  auto originals = [](const std::vector<ProbeRecord>& rs) {
    std::vector<ProbeRecord> out;
    for (const auto& r : rs)
      if (r.label == Label::original) out.push_back(r);
    return out;
  };
  OneClassData d;
  d.train = pair_with_templates(originals(view.train), dataset.templates);
  d.val = pair_with_templates(originals(view.val), dataset.templates);
  d.test = pair_with_templates(view.test, dataset.templates);
  return d;
}

namespace {

const DiscriminatorPair* discs_of(const TrainedExtractor& e) {
  return e.discriminators ? &*e.discriminators : nullptr;
}

}  // namespace

HyperparamSelection fit_feature_setup(const TrainedExtractor& extractor,
                                      const OneClassData& data,
                                      FeatureSetup setup,
                                      const OneClassConfig& config) {
  const auto fit_pairs = augment_pairs(data.train, config.fit_rotations, config.fit_gammas);
  const auto train_f = extract_features(extractor.model, discs_of(extractor),
                                        fit_pairs, setup, config.statistic);
  const auto val_f = extract_features(extractor.model, discs_of(extractor),
                                      data.val, setup, config.statistic);
  OcSvmOptions opts;
  opts.kernel.type = config.kernel;
  opts.standardize = config.standardize;
  return select_hyperparams(train_f, val_f, config.grid, opts);
}

Metrics evaluate_oneclass(const TrainedExtractor& extractor,
                          const OcSvmModel& model,
                          std::span<const PairedProbe> test, FeatureSetup setup,
                          DiscriminatorStatistic statistic) {
  const auto f = extract_features(extractor.model, discs_of(extractor), test,
                                  setup, statistic);
  std::vector<Label> labels;
  std::vector<Verdict> verdicts;
  for (std::size_t i = 0; i < test.size(); ++i) {
    labels.push_back(test[i].label);
    verdicts.push_back(decide(model, f[i]).verdict);
  }
  return tally(labels, verdicts);
}

std::string row_name(SupervisedSetup setup) { return std::string(to_string(setup)); }

std::string row_name(FeatureSetup setup) {
  return "(" + std::to_string(setup_number(setup)) + ") " +
         std::string(to_string(required_variant(setup))) + " " +
         std::string(feature_inputs(setup));
}

namespace {

void say(const ExperimentHooks& hooks, const std::string& msg) {
  if (hooks.log) hooks.log(msg);
}

std::string describe(const Metrics& m) {
  auto pct = [](std::optional<double> r) {
    if (!r) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *r);
    return std::string(buf);
  };
  std::string s = "P_miss " + pct(m.p_miss());
  for (auto l : kFakeLabels)
    s += ", " + std::string(to_string(l)) + " " + pct(m.p_fa(l));
  return s;
}

}  // namespace

ExperimentResult run_experiment(const Dataset& dataset, const RunConfig& config,
                                const ExperimentHooks& hooks) {
  config.validate();
  ExperimentResult result;
  result.kind = config.pipeline;

  if (config.pipeline == PipelineKind::supervised) {
    for (auto s : config.supervised.setups) result.rows.push_back({row_name(s), {}});
    for (std::size_t run = 0; run < config.runs; ++run) {
      const SplitView view =
          split_view_for_run(dataset, config.dataset.split_fractions, run);
      for (std::size_t i = 0; i < config.supervised.setups.size(); ++i) {
        const auto setup = config.supervised.setups[i];
        SupervisedHyper hyper = config.supervised.hyper;
        hyper.seed = supervised_seed(config.seed, setup, run);
        const ClassifierModel model = train_supervised_run(view, setup, hyper);
        const Metrics m = evaluate(model, view.test);
        result.rows[i].runs.push_back(m);
        say(hooks, "run " + std::to_string(run) + " " + row_name(setup) + ": " +
                       describe(m));
        if (hooks.on_classifier) hooks.on_classifier(run, setup, model);
        if (hooks.on_test_features) {
          std::vector<CodeImage> images;
          std::vector<Label> labels;
          for (const auto& r : view.test) {
            images.push_back(r.image);
            labels.push_back(r.label);
          }
          hooks.on_test_features(run, row_name(setup), labels,
                                 classifier_features(model, images));
        }
      }
    }
    return result;
  }

  const auto& oc = config.oneclass;
  std::set<ExtractorVariant> variants;
  for (auto s : oc.setups) {
    result.rows.push_back({row_name(s), {}});
    variants.insert(required_variant(s));
  }
  for (std::size_t run = 0; run < config.runs; ++run) {
    const SplitView view = split_view_for_run(dataset, config.dataset.split_fractions, run);
    const OneClassData data = pair_split(dataset, view);
    for (const auto variant : variants) {
      ExtractorHyper hyper = oc.hyper;
      hyper.seed = extractor_seed(config.seed, variant, run);
      const TrainedExtractor extractor =
          train_extractor(data.train, data.val, variant, oc.beta, hyper);
      say(hooks, "run " + std::to_string(run) + " extractor " +
                     std::string(to_string(variant)) + ": " +
                     std::to_string(extractor.model.epochs_run) + " epochs");
      if (hooks.on_extractor) hooks.on_extractor(run, extractor);
      for (std::size_t i = 0; i < oc.setups.size(); ++i) {
        const auto setup = oc.setups[i];
        if (required_variant(setup) != variant) continue;
        const HyperparamSelection sel = fit_feature_setup(extractor, data, setup, oc);
        const Metrics m =
            evaluate_oneclass(extractor, sel.model, data.test, setup, oc.statistic);
        result.rows[i].runs.push_back(m);
        say(hooks, "run " + std::to_string(run) + " " + row_name(setup) + ": " +
                       describe(m));
        if (hooks.on_ocsvm) hooks.on_ocsvm(run, setup, sel);
        if (hooks.on_test_features) {
          std::vector<Label> labels;
          for (const auto& p : data.test) labels.push_back(p.label);
          hooks.on_test_features(
              run, row_name(setup), labels,
              extract_features(extractor.model, discs_of(extractor), data.test,
                               setup, oc.statistic));
        }
      }
    }
  }
  return result;
}

}  // namespace cdpauth
