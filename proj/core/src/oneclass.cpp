#include "cdpauth/oneclass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "cdpauth/channel.hpp"
#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth {
namespace {

constexpr std::size_t kInferenceChunk = 32;

constexpr Rotation kRotations[] = {Rotation::r0, Rotation::r90, Rotation::r180,
                                   Rotation::r270};

std::string describe(const nn::ImageGeometry& g) {
  return std::to_string(g.channels) + "x" + std::to_string(g.height) + "x" +
         std::to_string(g.width);
}

void check_pair(const nn::ImageGeometry& probe_geometry, const Image& probe,
                const Image& template_image) {
  const auto pg = nn::geometry_of(probe);
  if (pg != probe_geometry) {
    throw ShapeError("probe geometry " + describe(pg) +
                     " does not match the extractor's " +
                     describe(probe_geometry));
  }
  const auto tg = nn::geometry_of(template_image);
  if (tg.channels != 1 || tg.height != pg.height || tg.width != pg.width) {
    throw ShapeError("template geometry " + describe(tg) +
                     " is not registered to probe geometry " + describe(pg));
  }
}

template <typename Fn>
void for_each_chunk(std::size_t n, Fn&& fn) {
  for (std::size_t begin = 0; begin < n; begin += kInferenceChunk) {
    fn(begin, std::min(n, begin + kInferenceChunk));
  }
}

// Per-sample mean squared error of sample n between two batches.
double sample_mse(const nn::Tensor& a, const nn::Tensor& b, std::size_t n) {
  const std::size_t per = a.size() / a.dim(0);
  double acc = 0.0;
  for (std::size_t i = n * per; i < (n + 1) * per; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(per);
}

nn::Tensor batch_of(std::span<const Image> images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& im : images) ptrs.push_back(&im);
  return nn::to_batch(ptrs);
}

}  // namespace

std::string_view to_string(ExtractorVariant v) {
  return v == ExtractorVariant::l1 ? "L1" : "L2";
}

std::optional<ExtractorVariant> parse_extractor_variant(std::string_view name) {
  if (name == "L1") return ExtractorVariant::l1;
  if (name == "L2") return ExtractorVariant::l2;
  return std::nullopt;
}

int setup_number(FeatureSetup s) { return static_cast<int>(s); }

std::optional<FeatureSetup> feature_setup_from_number(int n) {
  if (n < 1 || n > 5) return std::nullopt;
  return static_cast<FeatureSetup>(n);
}

ExtractorVariant required_variant(FeatureSetup s) {
  return s == FeatureSetup::l1_reconstruction ? ExtractorVariant::l1
                                              : ExtractorVariant::l2;
}

std::size_t feature_length(FeatureSetup s) {
  return s == FeatureSetup::all_terms ? 4 : 2;
}

std::string_view feature_inputs(FeatureSetup s) {
  switch (s) {
    case FeatureSetup::l1_reconstruction:
    case FeatureSetup::l2_reconstruction: return "{d_tt, d_xx}";
    case FeatureSetup::template_terms: return "{d_tt, d_t}";
    case FeatureSetup::print_terms: return "{d_xx, d_x}";
    case FeatureSetup::all_terms: return "{d_tt, d_t, d_xx, d_x}";
  }
  return "{}";
}

std::string_view to_string(DiscriminatorStatistic s) {
  switch (s) {
    case DiscriminatorStatistic::logit: return "logit";
    case DiscriminatorStatistic::probability: return "probability";
    case DiscriminatorStatistic::log_one_minus: return "log_one_minus";
  }
  return "unknown";
}

std::optional<DiscriminatorStatistic> parse_discriminator_statistic(
    std::string_view name) {
  for (auto s : {DiscriminatorStatistic::logit,
                 DiscriminatorStatistic::probability,
                 DiscriminatorStatistic::log_one_minus}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

double apply_statistic(DiscriminatorStatistic s, double z) {
  switch (s) {
    case DiscriminatorStatistic::logit: return z;
    case DiscriminatorStatistic::probability:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                      : std::exp(z) / (1.0 + std::exp(z));
    case DiscriminatorStatistic::log_one_minus:
      // log(1 - sigmoid(z)) = -softplus(z)
      return -(std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
  }
  return z;
}

std::vector<PairedProbe> pair_with_templates(
    std::span<const ProbeRecord> records,
    std::span<const DigitalTemplate> templates) {
  std::map<std::string, const DigitalTemplate*> by_id;
  for (const auto& t : templates) by_id[t.id()] = &t;
  std::vector<PairedProbe> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = by_id.find(records[i].template_id());
    if (it == by_id.end()) {
      throw InvalidInput("probe " + std::to_string(i) + " (" +
                         std::string(to_string(records[i].label)) +
                         ") references missing template '" +
                         records[i].template_id() + "'");
    }
    const Image& t = it->second->pixels();
    const auto& probe = records[i].image;
    out.push_back({probe,
                   t.height() == probe.height() && t.width() == probe.width()
                       ? t
                       : resample_bilinear(t, probe.height(), probe.width()),
                   records[i].label});
  }
  return out;
}

std::vector<PairedProbe> augment_pairs(std::span<const PairedProbe> pairs,
                                       bool rotations,
                                       std::span<const double> gammas) {
  if (gammas.empty()) throw InvalidInput("augment_pairs: empty gamma list");
  std::vector<PairedProbe> out;
  const std::size_t n_rot = rotations ? 4 : 1;
  out.reserve(pairs.size() * n_rot * gammas.size());
  for (const auto& p : pairs) {
    for (std::size_t r = 0; r < n_rot; ++r) {
      const Image t = rotate(p.template_image, kRotations[r]);
      for (const double g : gammas) {
        out.push_back({augment(p.probe, kRotations[r], g), t, p.label});
      }
    }
  }
  return out;
}

ExtractorModel make_extractor(const nn::ImageGeometry& probe_geometry,
                              ExtractorVariant variant, double beta,
                              const ExtractorHyper& hyper) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw InvalidInput("beta must be a finite non-negative number");
  ExtractorModel m;
  m.variant = variant;
  m.beta = beta;
  m.probe_geometry = probe_geometry;
  m.seed = hyper.seed;
  m.encoder = nn::UNet({probe_geometry.channels, 1, hyper.base_width},
                       derive_seed(hyper.seed, "encoder"), "encoder");
  m.decoder = nn::UNet({1, probe_geometry.channels, hyper.base_width},
                       derive_seed(hyper.seed, "decoder"), "decoder");
  return m;
}

DiscriminatorPair make_discriminators(const nn::ImageGeometry& probe_geometry,
                                      const ExtractorHyper& hyper) {
  DiscriminatorPair d;
  nn::ImageGeometry tg{1, probe_geometry.height, probe_geometry.width};
  d.template_disc = nn::Discriminator({tg, hyper.discriminator_width},
                                      derive_seed(hyper.seed, "disc_t"), "disc_t");
  d.print_disc =
      nn::Discriminator({probe_geometry, hyper.discriminator_width},
                        derive_seed(hyper.seed, "disc_x"), "disc_x");
  return d;
}

double per_sample_mse(const Image& a, const Image& b) {
  if (!a.same_geometry(b)) throw ShapeError("per_sample_mse: geometry mismatch");
  if (a.empty()) throw InvalidInput("per_sample_mse: empty images");
  double acc = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  return acc / static_cast<double>(av.size());
}

double reconstruction_loss(const ExtractorModel& model,
                           std::span<const PairedProbe> records) {
  if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
  const bool use_decoder = model.beta > 0.0;
  double total = 0.0;
  for_each_chunk(records.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<const Image*> xs;
    std::vector<const Image*> ts;
    for (std::size_t i = begin; i < end; ++i) {
      check_pair(model.probe_geometry, records[i].probe.pixels(),
                 records[i].template_image);
      xs.push_back(&records[i].probe.pixels());
      ts.push_back(&records[i].template_image);
    }
    nn::Graph g;
    const nn::Var x = g.constant(nn::to_batch(xs));
    const nn::Var t = g.constant(nn::to_batch(ts));
    const nn::Var t_hat = model.encoder.forward(g, x);
    double loss = g.value(nn::mse_loss(g, t_hat, t))[0];
    if (use_decoder) {
      const nn::Var x_hat = model.decoder.forward(g, t_hat);
      loss += model.beta * g.value(nn::mse_loss(g, x_hat, x))[0];
    }
    total += loss * static_cast<double>(end - begin);
  });
  return total / static_cast<double>(records.size());
}

TrainedExtractor train_extractor(std::span<const PairedProbe> train,
                                 std::span<const PairedProbe> val,
                                 ExtractorVariant variant, double beta,
                                 const ExtractorHyper& hyper) {
  if (hyper.batch_size == 0) throw InvalidInput("batch size must be positive");
  if (hyper.gammas.empty()) throw InvalidInput("gamma grid must not be empty");
  if (train.empty()) throw InvalidInput("one-class training set is empty");
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label != Label::original)
      throw InvalidInput("one-class training record " + std::to_string(i) +
                         " is a fake (" + std::string(to_string(train[i].label)) +
                         ")");
  }
  for (std::size_t i = 0; i < val.size(); ++i) {
    if (val[i].label != Label::original)
      throw InvalidInput("one-class validation record " + std::to_string(i) +
                         " is a fake");
  }
  const nn::ImageGeometry geometry = nn::geometry_of(train.front().probe.pixels());
  for (const auto& r : train) check_pair(geometry, r.probe.pixels(), r.template_image);
  for (const auto& r : val) check_pair(geometry, r.probe.pixels(), r.template_image);

  TrainedExtractor out;
  out.model = make_extractor(geometry, variant, beta, hyper);
  ExtractorModel& model = out.model;
  const bool use_decoder = beta > 0.0;
  const bool adversarial = variant == ExtractorVariant::l2;
  if (adversarial) out.discriminators = make_discriminators(geometry, hyper);

  nn::ParameterList gen_params = model.encoder.parameters();
  if (use_decoder) {
    for (auto* p : model.decoder.parameters()) gen_params.push_back(p);
  }
  nn::AdamState gen_adam(gen_params, hyper.adam);

  nn::ParameterList disc_params;
  if (adversarial) {
    disc_params = out.discriminators->template_disc.parameters();
    if (use_decoder) {
      for (auto* p : out.discriminators->print_disc.parameters())
        disc_params.push_back(p);
    }
  }
  nn::AdamState disc_adam(disc_params, hyper.adam);

  Rng rng(derive_seed(hyper.seed, "batches"));
  const std::size_t steps =
      hyper.steps_per_epoch > 0
          ? hyper.steps_per_epoch
          : (train.size() + hyper.batch_size - 1) / hyper.batch_size;
  const std::size_t b = hyper.batch_size;
  const std::vector<double> ones(b, 1.0);
  const std::vector<double> zeros(b, 0.0);
  std::vector<double> real_fake(2 * b, 1.0);
  std::fill(real_fake.begin() + static_cast<std::ptrdiff_t>(b), real_fake.end(), 0.0);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best_gen = nn::snapshot(gen_params);
  std::vector<nn::Tensor> best_disc = nn::snapshot(disc_params);
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<Image> xs;
      std::vector<Image> ts;
      xs.reserve(b);
      ts.reserve(b);
      for (std::size_t k = 0; k < b; ++k) {
        const auto& r = train[rng.below(train.size())];
        const Rotation rot = hyper.rotations ? kRotations[rng.below(4)] : Rotation::r0;
        const double gamma = hyper.gammas[rng.below(hyper.gammas.size())];
        xs.push_back(augment(r.probe.pixels(), rot, gamma));
        ts.push_back(rotate(r.template_image, rot));
      }
      const nn::Tensor x_batch = batch_of(xs);
      const nn::Tensor t_batch = batch_of(ts);

      // Generator step.
      nn::zero_grads(gen_params);
      nn::Graph g;
      const nn::Var x = g.constant(x_batch, "x");
      const nn::Var t = g.constant(t_batch, "t");
      const nn::Var t_hat = model.encoder.forward(g, x);
      nn::Var loss = nn::mse_loss(g, t_hat, t);
      nn::Var x_hat{};
      if (use_decoder) {
        x_hat = model.decoder.forward(g, t_hat);
        loss = nn::add(g, loss, nn::scale(g, nn::mse_loss(g, x_hat, x), beta));
      }
      epoch_loss += g.value(loss)[0];
      if (adversarial) {
        const auto& discs = *out.discriminators;
        const auto& cdiscs = discs;
        nn::Var adv = nn::bce_with_logits(g, cdiscs.template_disc.forward(g, t_hat), ones);
        if (use_decoder) {
          adv = nn::add(
              g, adv,
              nn::scale(g, nn::bce_with_logits(g, cdiscs.print_disc.forward(g, x_hat), ones),
                        beta));
        }
        loss = nn::add(g, loss, nn::scale(g, adv, hyper.adversarial_weight));
      }
      g.backward(loss);
      nn::adam_step(gen_params, gen_adam);
      if (!adversarial) continue;

      // Discriminator step on real samples vs the outputs above.
      nn::zero_grads(disc_params);
      nn::Graph gd;
      auto stack = [&](const nn::Tensor& real, const nn::Tensor& fake) {
        nn::Shape s = real.shape();
        s[0] *= 2;
        std::vector<double> v(real.values().begin(), real.values().end());
        v.insert(v.end(), fake.values().begin(), fake.values().end());
        return nn::Tensor(s, std::move(v));
      };
      auto& discs = *out.discriminators;
      nn::Var dloss = nn::bce_with_logits(
          gd,
          discs.template_disc.forward(gd, gd.constant(stack(t_batch, g.value(t_hat)))),
          real_fake);
      if (use_decoder) {
        dloss = nn::add(
            gd, dloss,
            nn::bce_with_logits(
                gd,
                discs.print_disc.forward(gd, gd.constant(stack(x_batch, g.value(x_hat)))),
                real_fake));
      }
      gd.backward(dloss);
      nn::adam_step(disc_params, disc_adam);
    }
    model.history.train_loss.push_back(epoch_loss / static_cast<double>(steps));
    model.epochs_run = epoch + 1;

    if (val.empty()) {
      best_gen = nn::snapshot(gen_params);
      best_disc = nn::snapshot(disc_params);
      model.history.best_epoch = epoch;
      continue;
    }
    const double v = reconstruction_loss(model, val);
    model.history.val_loss.push_back(v);
    if (v < best_val) {
      best_val = v;
      best_gen = nn::snapshot(gen_params);
      best_disc = nn::snapshot(disc_params);
      model.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }
  nn::restore(gen_params, best_gen);
  nn::restore(disc_params, best_disc);
  return out;
}

std::vector<Reconstruction> reconstruct(const ExtractorModel& model,
                                        std::span<const CodeImage> probes) {
  std::vector<Reconstruction> out(probes.size());
  for_each_chunk(probes.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<const Image*> xs;
    for (std::size_t i = begin; i < end; ++i) {
      const auto pg = nn::geometry_of(probes[i].pixels());
      if (pg != model.probe_geometry)
        throw ShapeError("probe geometry " + describe(pg) +
                         " does not match the extractor's " +
                         describe(model.probe_geometry));
      xs.push_back(&probes[i].pixels());
    }
    nn::Graph g;
    const nn::Var x = g.constant(nn::to_batch(xs));
    const nn::Var t_hat = model.encoder.forward(g, x);
    const nn::Var x_hat = model.decoder.forward(g, t_hat);
    for (std::size_t i = begin; i < end; ++i) {
      out[i].template_estimate = nn::sample_image(g.value(t_hat), i - begin);
      out[i].probe_estimate = nn::sample_image(g.value(x_hat), i - begin);
    }
  });
  return out;
}

ReconstructionScores reconstruction_scores(const ExtractorModel& model,
                                           const CodeImage& probe,
                                           const Image& template_image) {
  check_pair(model.probe_geometry, probe.pixels(), template_image);
  const auto rec = reconstruct(model, std::span<const CodeImage>(&probe, 1));
  return {per_sample_mse(template_image, rec.front().template_estimate),
          per_sample_mse(probe.pixels(), rec.front().probe_estimate)};
}

DiscriminatorScores discriminator_scores(const DiscriminatorPair& discs,
                                         const Image& template_estimate,
                                         const Image& probe_estimate,
                                         DiscriminatorStatistic statistic) {
  nn::Graph g;
  nn::Var zt;
  nn::Var zx;
  {
    nn::Graph::Scope scope(g, "disc_t");
    zt = discs.template_disc.forward(g, g.constant(nn::to_batch(template_estimate)));
  }
  {
    nn::Graph::Scope scope(g, "disc_x");
    zx = discs.print_disc.forward(g, g.constant(nn::to_batch(probe_estimate)));
  }
  return {apply_statistic(statistic, g.value(zt)[0]),
          apply_statistic(statistic, g.value(zx)[0])};
}

std::vector<double> assemble_features(
    FeatureSetup setup, const ReconstructionScores& rec,
    const std::optional<DiscriminatorScores>& disc) {
  const bool needs_disc = setup == FeatureSetup::template_terms ||
                          setup == FeatureSetup::print_terms ||
                          setup == FeatureSetup::all_terms;
  if (needs_disc && !disc)
    throw InvalidInput("feature setup (" + std::to_string(setup_number(setup)) +
                       ") needs discriminator scores");
  switch (setup) {
    case FeatureSetup::l1_reconstruction:
    case FeatureSetup::l2_reconstruction: return {rec.d_tt, rec.d_xx};
    case FeatureSetup::template_terms: return {rec.d_tt, disc->d_t};
    case FeatureSetup::print_terms: return {rec.d_xx, disc->d_x};
    case FeatureSetup::all_terms: return {rec.d_tt, disc->d_t, rec.d_xx, disc->d_x};
  }
  return {};
}

namespace {

void check_setup(const ExtractorModel& model, const DiscriminatorPair* discs,
                 FeatureSetup setup) {
  if (model.variant != required_variant(setup)) {
    throw InvalidInput("feature setup (" + std::to_string(setup_number(setup)) +
                       ") needs an " +
                       std::string(to_string(required_variant(setup))) +
                       " extractor, got " + std::string(to_string(model.variant)));
  }
  const bool needs_disc = setup == FeatureSetup::template_terms ||
                          setup == FeatureSetup::print_terms ||
                          setup == FeatureSetup::all_terms;
  if (needs_disc && discs == nullptr)
    throw InvalidInput("feature setup (" + std::to_string(setup_number(setup)) +
                       ") needs discriminators");
}

}  // namespace

std::vector<double> extract_features(const ExtractorModel& model,
                                     const DiscriminatorPair* discs,
                                     const CodeImage& probe,
                                     const Image& template_image,
                                     FeatureSetup setup,
                                     DiscriminatorStatistic statistic) {
  PairedProbe p{probe, template_image, Label::original};
  return extract_features(model, discs, std::span<const PairedProbe>(&p, 1),
                          setup, statistic)
      .front();
}

std::vector<std::vector<double>> extract_features(
    const ExtractorModel& model, const DiscriminatorPair* discs,
    std::span<const PairedProbe> probes, FeatureSetup setup,
    DiscriminatorStatistic statistic) {
  check_setup(model, discs, setup);
  const bool needs_disc = setup == FeatureSetup::template_terms ||
                          setup == FeatureSetup::print_terms ||
                          setup == FeatureSetup::all_terms;
  std::vector<std::vector<double>> out(probes.size());
  for_each_chunk(probes.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<const Image*> xs;
    std::vector<const Image*> ts;
    for (std::size_t i = begin; i < end; ++i) {
      check_pair(model.probe_geometry, probes[i].probe.pixels(),
                 probes[i].template_image);
      xs.push_back(&probes[i].probe.pixels());
      ts.push_back(&probes[i].template_image);
    }
    nn::Graph g;
    const nn::Var x = g.constant(nn::to_batch(xs), "x");
    const nn::Tensor t = nn::to_batch(ts);
    nn::Var t_hat;
    nn::Var x_hat;
    {
      nn::Graph::Scope scope(g, "encoder");
      t_hat = model.encoder.forward(g, x);
    }
    {
      nn::Graph::Scope scope(g, "decoder");
      x_hat = model.decoder.forward(g, t_hat);
    }
    nn::Var zt;
    nn::Var zx;
    if (needs_disc) {
      {
        nn::Graph::Scope scope(g, "disc_t");
        zt = discs->template_disc.forward(g, t_hat);
      }
      {
        nn::Graph::Scope scope(g, "disc_x");
        zx = discs->print_disc.forward(g, x_hat);
      }
    }
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t n = i - begin;
      ReconstructionScores rec{sample_mse(t, g.value(t_hat), n),
                               sample_mse(g.value(x), g.value(x_hat), n)};
      std::optional<DiscriminatorScores> disc;
      if (needs_disc) {
        disc = DiscriminatorScores{apply_statistic(statistic, g.value(zt)[n]),
                                   apply_statistic(statistic, g.value(zx)[n])};
      }
      out[i] = assemble_features(setup, rec, disc);
    }
  });
  return out;
}

}  // namespace cdpauth
