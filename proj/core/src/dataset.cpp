#include "cdpauth/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view name) {
  for (auto s : {Split::train, Split::val, Split::test}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

const AttackModel& ChannelConfig::attack(AttackPreset p) const {
  return attacks[static_cast<std::size_t>(p)];
}

void ChannelConfig::validate() const {
  original_print.validate();
  acquisition.validate();
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    attacks[i].validate();
    if (attacks[i].preset != kAttackPresets[i])
      throw InvalidInput("attack slot " + std::string(to_string(kAttackPresets[i])) +
                         " holds preset " + std::string(to_string(attacks[i].preset)));
  }
  validate_presets(attacks[0], attacks[1], attacks[2], attacks[3]);
}

const DigitalTemplate* Dataset::find_template(std::string_view id) const {
  for (const auto& t : templates) {
    if (t.id() == id) return &t;
  }
  return nullptr;
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (double& v : out.values()) v = std::round(v * 255.0) / 255.0;
  return out;
}

CodeImage quantize_8bit(const CodeImage& image) {
  return CodeImage(quantize_8bit(image.pixels()), image.provenance(),
                   image.template_id());
}

std::string template_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%04zu", index);
  return buf;
}

DatasetSplit split_for_run(std::size_t n_templates,
                           std::array<double, 3> fractions,
                           std::uint64_t master_seed, std::size_t run) {
  return split_dataset(n_templates, fractions,
                       derive_seed(master_seed, "split", run));
}

std::vector<Split> splits_from(const DatasetSplit& split, std::size_t n_templates) {
  std::vector<Split> out(n_templates, Split::test);
  for (auto i : split.train_ids) out.at(i) = Split::train;
  for (auto i : split.val_ids) out.at(i) = Split::val;
  for (auto i : split.test_ids) out.at(i) = Split::test;
  return out;
}

Dataset generate_dataset(const SyntheticConfig& config, std::uint64_t master_seed) {
  config.channel.validate();
  if (config.templates < 3)
    throw InvalidInput("a dataset needs at least 3 templates");
  Dataset ds;
  ds.master_seed = master_seed;
  const auto& ch = config.channel;
  for (std::size_t i = 0; i < config.templates; ++i) {
    ds.templates.push_back(generate_template(derive_seed(master_seed, "template", i),
                                             config.geometry, template_id_for(i)));
    const auto& t = ds.templates.back();
    const CodeImage printed =
        print_sim(t, ch.original_print, derive_seed(master_seed, "print", i));
    const CodeImage original =
        quantize_8bit(acquire_sim(printed, ch.acquisition,
                                  derive_seed(master_seed, "acquire", i),
                                  config.geometry.symbol_size));
    ds.probes.push_back(make_probe(original, Label::original));
    for (const auto p : kAttackPresets) {
      const auto seed =
          derive_seed(master_seed, "attack." + std::string(to_string(p)), i);
      ds.probes.push_back(make_probe(
          quantize_8bit(copy_attack(printed, ch.attack(p), ch.acquisition, seed,
                                    config.geometry.symbol_size)),
          label_of(p)));
    }
  }
  ds.template_splits = splits_from(
      split_for_run(config.templates, config.split_fractions, master_seed, 0),
      config.templates);
  return ds;
}

SplitView view_split(const Dataset& dataset, std::span<const Split> template_splits) {
  if (template_splits.size() != dataset.templates.size())
    throw InvalidInput("split assignment covers " +
                       std::to_string(template_splits.size()) + " of " +
                       std::to_string(dataset.templates.size()) + " templates");
  std::map<std::string, Split> by_id;
  for (std::size_t i = 0; i < dataset.templates.size(); ++i)
    by_id[dataset.templates[i].id()] = template_splits[i];
  SplitView view;
  for (const auto& p : dataset.probes) {
    const auto it = by_id.find(p.template_id());
    if (it == by_id.end())
      throw InvalidInput("probe references unknown template '" + p.template_id() + "'");
    switch (it->second) {
      case Split::train: view.train.push_back(p); break;
      case Split::val: view.val.push_back(p); break;
      case Split::test: view.test.push_back(p); break;
    }
  }
  return view;
}

}  // namespace cdpauth
