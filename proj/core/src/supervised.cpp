#include "cdpauth/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth {
namespace {

constexpr std::size_t kOriginalClass = 0;
constexpr std::size_t kFakeClass = 1;
constexpr std::size_t kInferenceChunk = 32;

constexpr Rotation kRotations[] = {Rotation::r0, Rotation::r90, Rotation::r180,
                                   Rotation::r270};

void check_geometry(const nn::ImageGeometry& expected, const Image& image) {
  if (nn::geometry_of(image) != expected) {
    throw ShapeError(
        "probe geometry " + std::to_string(image.channels()) + "x" +
        std::to_string(image.height()) + "x" + std::to_string(image.width()) +
        " does not match the model's " + std::to_string(expected.channels) +
        "x" + std::to_string(expected.height) + "x" +
        std::to_string(expected.width));
  }
}

template <typename Fn>
void for_each_chunk(std::size_t n, Fn&& fn) {
  for (std::size_t begin = 0; begin < n; begin += kInferenceChunk) {
    fn(begin, std::min(n, begin + kInferenceChunk));
  }
}

}  // namespace

std::string_view to_string(SupervisedSetup s) {
  switch (s) {
    case SupervisedSetup::all_fakes: return "ALL_FAKES";
    case SupervisedSetup::f1_white: return "F1_WHITE";
    case SupervisedSetup::f1_gray: return "F1_GRAY";
    case SupervisedSetup::f2_white: return "F2_WHITE";
    case SupervisedSetup::f2_gray: return "F2_GRAY";
  }
  return "UNKNOWN";
}

std::optional<SupervisedSetup> parse_supervised_setup(std::string_view name) {
  for (const auto s : kSupervisedSetups) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<Label> training_fakes(SupervisedSetup setup) {
  switch (setup) {
    case SupervisedSetup::all_fakes:
      return {std::begin(kFakeLabels), std::end(kFakeLabels)};
    case SupervisedSetup::f1_white: return {Label::f1_white};
    case SupervisedSetup::f1_gray: return {Label::f1_gray};
    case SupervisedSetup::f2_white: return {Label::f2_white};
    case SupervisedSetup::f2_gray: return {Label::f2_gray};
  }
  return {};
}

std::vector<ProbeRecord> filter_for_setup(std::span<const ProbeRecord> records,
                                          SupervisedSetup setup) {
  const auto fakes = training_fakes(setup);
  std::vector<ProbeRecord> out;
  for (const auto& r : records) {
    if (r.label == Label::original ||
        std::find(fakes.begin(), fakes.end(), r.label) != fakes.end()) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<std::array<double, 2>> classifier_logits(
    const ClassifierModel& model, std::span<const CodeImage> probes) {
  std::vector<std::array<double, 2>> out(probes.size());
  for_each_chunk(probes.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<const Image*> images;
    for (std::size_t i = begin; i < end; ++i) {
      check_geometry(model.geometry(), probes[i].pixels());
      images.push_back(&probes[i].pixels());
    }
    nn::Graph g;
    const nn::Var x = g.constant(nn::to_batch(images));
    const nn::Tensor& z = g.value(model.network.forward(g, x));
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = {z[(i - begin) * 2], z[(i - begin) * 2 + 1]};
    }
  });
  return out;
}

Verdict verdict_from_logits(const std::array<double, 2>& logits) {
  return logits[kOriginalClass] > logits[kFakeClass] ? Verdict::original
                                                     : Verdict::fake;
}

Verdict classify(const ClassifierModel& model, const CodeImage& probe) {
  return classify(model, std::span<const CodeImage>(&probe, 1)).front();
}

std::vector<Verdict> classify(const ClassifierModel& model,
                              std::span<const CodeImage> probes) {
  const auto logits = classifier_logits(model, probes);
  std::vector<Verdict> out;
  out.reserve(logits.size());
  for (const auto& z : logits) out.push_back(verdict_from_logits(z));
  return out;
}

Metrics evaluate(const ClassifierModel& model,
                 std::span<const ProbeRecord> test) {
  std::vector<CodeImage> images;
  std::vector<Label> labels;
  images.reserve(test.size());
  for (const auto& r : test) {
    images.push_back(r.image);
    labels.push_back(r.label);
  }
  const auto verdicts = classify(model, images);
  return tally(labels, verdicts);
}

namespace {

// Per-class sums and counts of the cross-entropy on unaugmented records.
std::array<std::pair<double, std::size_t>, 2> class_cross_entropy(
    const ClassifierModel& model, std::span<const ProbeRecord> records) {
  std::array<std::pair<double, std::size_t>, 2> acc{};
  for_each_chunk(records.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<const Image*> images;
    for (std::size_t i = begin; i < end; ++i) {
      check_geometry(model.geometry(), records[i].image.pixels());
      images.push_back(&records[i].image.pixels());
    }
    nn::Graph g;
    const nn::Var x = g.constant(nn::to_batch(images));
    const nn::Tensor& z = g.value(model.network.forward(g, x));
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t n = i - begin;
      const std::size_t cls =
          records[i].label == Label::original ? kOriginalClass : kFakeClass;
      const double a = z[n * 2];
      const double b = z[n * 2 + 1];
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      acc[cls].first += lse - z[n * 2 + cls];
      ++acc[cls].second;
    }
  });
  return acc;
}

}  // namespace

double mean_cross_entropy(const ClassifierModel& model,
                          std::span<const ProbeRecord> records) {
  if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto acc = class_cross_entropy(model, records);
  return (acc[0].first + acc[1].first) / static_cast<double>(records.size());
}

double balanced_cross_entropy(const ClassifierModel& model,
                              std::span<const ProbeRecord> records) {
  if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto acc = class_cross_entropy(model, records);
  double total = 0.0;
  std::size_t classes = 0;
  for (const auto& [sum, count] : acc) {
    if (count == 0) continue;
    total += sum / static_cast<double>(count);
    ++classes;
  }
  return total / static_cast<double>(classes);
}

std::vector<std::vector<double>> classifier_features(
    const ClassifierModel& model, std::span<const CodeImage> probes) {
  std::vector<std::vector<double>> out(probes.size());
  for_each_chunk(probes.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<const Image*> images;
    for (std::size_t i = begin; i < end; ++i) {
      check_geometry(model.geometry(), probes[i].pixels());
      images.push_back(&probes[i].pixels());
    }
    nn::Graph g;
    const nn::Var x = g.constant(nn::to_batch(images));
    const nn::Tensor& f = g.value(model.network.features(g, x));
    const std::size_t width = f.dim(1);
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = f.data() + (i - begin) * width;
      out[i].assign(row, row + width);
    }
  });
  return out;
}

ClassifierModel train_supervised(std::span<const ProbeRecord> train,
                                 std::span<const ProbeRecord> val,
                                 SupervisedSetup setup,
                                 const SupervisedHyper& hyper) {
  if (hyper.batch_size == 0) throw InvalidInput("batch size must be positive");
  if (hyper.gammas.empty()) throw InvalidInput("gamma grid must not be empty");
  const auto allowed = training_fakes(setup);
  std::vector<std::size_t> originals;
  std::vector<std::size_t> fakes;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Label l = train[i].label;
    if (l == Label::original) {
      originals.push_back(i);
    } else if (std::find(allowed.begin(), allowed.end(), l) != allowed.end()) {
      fakes.push_back(i);
    } else {
      throw InvalidInput("training record " + std::to_string(i) + " has label " +
                         std::string(to_string(l)) + ", not part of setup " +
                         std::string(to_string(setup)));
    }
  }
  if (originals.empty() || fakes.empty()) {
    throw InvalidInput("supervised training needs both originals and fakes "
                       "(originals: " + std::to_string(originals.size()) +
                       ", fakes: " + std::to_string(fakes.size()) + ")");
  }
  const nn::ImageGeometry geometry =
      nn::geometry_of(train[originals.front()].image.pixels());
  for (const auto& r : train) check_geometry(geometry, r.image.pixels());

  ClassifierModel model;
  model.setup = setup;
  model.seed = hyper.seed;
  nn::ConvClassifier::Config config;
  config.input = geometry;
  config.widths = hyper.widths;
  config.classes = 2;
  model.network = nn::ConvClassifier(config, derive_seed(hyper.seed, "init"));

  nn::ParameterList params = model.network.parameters();
  nn::AdamState adam(params, hyper.adam);
  Rng rng(derive_seed(hyper.seed, "batches"));

  const std::size_t steps =
      hyper.steps_per_epoch > 0
          ? hyper.steps_per_epoch
          : (train.size() + hyper.batch_size - 1) / hyper.batch_size;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best_params = nn::snapshot(params);
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<Image> batch_images;
      std::vector<std::size_t> labels;
      batch_images.reserve(hyper.batch_size);
      for (std::size_t b = 0; b < hyper.batch_size; ++b) {
        const bool want_original = b % 2 == 0;
        const auto& pool = want_original ? originals : fakes;
        const std::size_t idx = pool[rng.below(pool.size())];
        const Rotation rot =
            hyper.rotations ? kRotations[rng.below(4)] : Rotation::r0;
        const double gamma = hyper.gammas[rng.below(hyper.gammas.size())];
        batch_images.push_back(augment(train[idx].image.pixels(), rot, gamma));
        labels.push_back(want_original ? kOriginalClass : kFakeClass);
      }
      std::vector<const Image*> ptrs;
      for (const auto& im : batch_images) ptrs.push_back(&im);

      nn::zero_grads(params);
      nn::Graph g;
      const nn::Var x = g.constant(nn::to_batch(ptrs));
      const nn::Var loss =
          nn::softmax_cross_entropy(g, model.network.forward(g, x), labels);
      g.backward(loss);
      nn::adam_step(params, adam);
      epoch_loss += g.value(loss)[0];
    }
    model.history.train_loss.push_back(epoch_loss / static_cast<double>(steps));
    model.epochs_run = epoch + 1;

    if (val.empty()) {
      best_params = nn::snapshot(params);
      model.history.best_epoch = epoch;
      continue;
    }
    const double v = balanced_cross_entropy(model, val);
    model.history.val_loss.push_back(v);
    if (v < best_val) {
      best_val = v;
      best_params = nn::snapshot(params);
      model.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }
  nn::restore(params, best_params);
  return model;
}

}  // namespace cdpauth
