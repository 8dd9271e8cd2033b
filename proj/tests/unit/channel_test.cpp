#include <gtest/gtest.h>

#include "cdpauth/channel.hpp"
#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

using namespace cdpauth;

namespace {

PrintModel identity_print() {
  PrintModel m;
  m.ink_reflectance = 0.0;
  m.paper_reflectance = 1.0;
  m.dot_gain = 0.0;
  m.psf_sigma = 0.0;
  m.noise_sigma = 0.0;
  return m;
}

AcquisitionModel identity_acquisition() {
  AcquisitionModel a;
  a.scale_factor = 1.0;
  a.sensor_gamma = 1.0;
  a.sensor_noise_sigma = 0.0;
  a.channel_gains = {1.0};
  return a;
}

double masked_mean(const Image& im, const Image& mask, double mask_value) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < im.size(); ++i)
    if (mask.values()[i] == mask_value) {
      acc += im.values()[i];
      ++n;
    }
  return acc / static_cast<double>(n);
}

}  // namespace

TEST(PrintSim, DegenerateChannelIsIdentity) {
  const auto t = generate_template(5, 24, 4, 0.5);
  const CodeImage x = print_sim(t, identity_print(), 1);
  EXPECT_EQ(x.pixels(), t.pixels());
  EXPECT_EQ(x.provenance(), Provenance::original);
}

TEST(PrintSim, GrayStockSetsWhitePixels) {
  const auto t = generate_template(5, 24, 4, 0.5);
  PrintModel m = identity_print();
  m.paper_reflectance = 0.8;
  const Image x = print_sim(t, m, 1).pixels();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (t.pixels().values()[i] == 1.0) EXPECT_DOUBLE_EQ(x.values()[i], 0.8);
}

TEST(PrintSim, MeanNonIncreasingInDotGain) {
  const auto t = generate_template(8, 60, 4, 0.5);
  PrintModel m;
  double previous = 2.0;
  for (double dg : {0.0, 1.0, 2.0}) {
    m.dot_gain = dg;
    const double mean = print_sim(t, m, 3).pixels().mean();
    EXPECT_LE(mean, previous) << "dot_gain " << dg;
    previous = mean;
  }
}

TEST(PrintSim, DeterministicPerSeedAndClamped) {
  const auto t = generate_template(2, 32, 4, 0.5);
  PrintModel m;
  m.noise_sigma = 0.5;
  const auto a = print_sim(t, m, 10);
  EXPECT_EQ(a, print_sim(t, m, 10));
  EXPECT_NE(a.pixels(), print_sim(t, m, 11).pixels());
  EXPECT_TRUE(a.pixels().within_unit_interval());
}

TEST(PrintModel, ValidationRejectsInvertedReflectance) {
  PrintModel m;
  m.ink_reflectance = 0.9;
  m.paper_reflectance = 0.5;
  EXPECT_THROW(m.validate(), InvalidInput);
  m = PrintModel{};
  m.dot_gain = -1.0;
  EXPECT_THROW(m.validate(), InvalidInput);
}

TEST(AcquireSim, IdentitySettings) {
  const auto t = generate_template(5, 24, 4, 0.5);
  const CodeImage x = print_sim(t, PrintModel{}, 1);
  EXPECT_EQ(acquire_sim(x, identity_acquisition(), 2).pixels(), x.pixels());
}

TEST(AcquireSim, PerChannelGains) {
  const CodeImage x(Image(3, 4, 4, 0.5), Provenance::original, "t");
  AcquisitionModel a = identity_acquisition();
  a.channel_gains = {1.0, 0.9, 1.1};
  const Image y = acquire_sim(x, a, 1).pixels();
  ASSERT_EQ(y.channels(), 3u);
  EXPECT_DOUBLE_EQ(y.at(0, 1, 1), 0.5);
  EXPECT_DOUBLE_EQ(y.at(1, 1, 1), 0.45);
  EXPECT_DOUBLE_EQ(y.at(2, 1, 1), 0.55);
}

TEST(AcquireSim, GrayInputExpandsToGainCount) {
  const CodeImage x(Image(1, 4, 4, 0.5), Provenance::original, "t");
  AcquisitionModel a = identity_acquisition();
  a.channel_gains = {1.0, 1.0, 1.0};
  EXPECT_EQ(acquire_sim(x, a, 1).channels(), 3u);
}

TEST(AcquireSim, CheckerboardDownsampleIsMidGray) {
  Image board(1, 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) board.at(0, y, x) = (x + y) % 2 ? 1.0 : 0.0;
  AcquisitionModel a = identity_acquisition();
  a.scale_factor = 0.5;
  const Image y = acquire_sim(CodeImage(board, Provenance::original, "t"), a, 1, 2).pixels();
  ASSERT_EQ(y.height(), 4u);
  for (double v : y.values()) EXPECT_NEAR(v, 0.5, 1e-6);
}

TEST(Resample, HalvingEqualsBlockAverage) {
  Rng rng(4);
  Image im(1, 6, 10);
  for (auto& v : im.values()) v = rng.uniform();
  const Image out = resample_bilinear(im, 3, 5);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 5; ++x) {
      const double avg = 0.25 * (im.at(0, 2 * y, 2 * x) + im.at(0, 2 * y + 1, 2 * x) +
                                 im.at(0, 2 * y, 2 * x + 1) + im.at(0, 2 * y + 1, 2 * x + 1));
      EXPECT_NEAR(out.at(0, y, x), avg, 1e-12);
    }
}

TEST(AcquireSim, RejectsSubSymbolScale) {
  const CodeImage x(Image(1, 8, 8, 0.5), Provenance::original, "t");
  AcquisitionModel a = identity_acquisition();
  a.scale_factor = 0.2;
  EXPECT_THROW(acquire_sim(x, a, 1, 4), InvalidInput);
}

TEST(AcquireSim, OutputClampedForExtremeSettings) {
  Rng rng(1);
  Image im(1, 16, 16);
  for (auto& v : im.values()) v = rng.uniform();
  AcquisitionModel a;
  a.channel_gains = {3.0};
  a.sensor_noise_sigma = 1.0;
  a.sensor_gamma = 0.2;
  EXPECT_TRUE(acquire_sim(CodeImage(im, Provenance::original, "t"), a, 2).pixels().within_unit_interval());
}

TEST(CopyAttack, CleanPrintEstimatesTemplateExactly) {
  const auto t = generate_template(6, 40, 4, 0.5);
  const CodeImage x = print_sim(t, identity_print(), 1);
  EXPECT_EQ(estimate_template(x.pixels(), 0.5), t.pixels());
}

TEST(CopyAttack, DecomposesIntoThresholdPrintAcquire) {
  const auto t = generate_template(6, 40, 4, 0.5);
  const CodeImage x = print_sim(t, PrintModel{}, 1);
  const AttackModel atk = default_attack(AttackPreset::f2_gray);
  AcquisitionModel acq;
  acq.scale_factor = 0.5;
  const CodeImage fake = copy_attack(x, atk, acq, 77, 4);
  const Image reprint = print_binary(estimate_template(x.pixels(), atk.estimation_threshold),
                                     atk.reprint, attack_print_seed(77));
  const CodeImage expected = acquire_sim(CodeImage(reprint, Provenance::f2_gray, t.id()), acq,
                                         attack_acquire_seed(77), 4);
  EXPECT_EQ(fake, expected);
  EXPECT_EQ(fake.provenance(), Provenance::f2_gray);
}

TEST(CopyAttack, F2DarkerThanF1OnTenTemplates) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t = generate_template(s, 60, 4, 0.5);
    const CodeImage x = print_sim(t, PrintModel{}, derive_seed(s, "print"));
    const AcquisitionModel acq = identity_acquisition();
    const double f1 = copy_attack(x, default_attack(AttackPreset::f1_white), acq, s).pixels().mean();
    const double f2 = copy_attack(x, default_attack(AttackPreset::f2_white), acq, s).pixels().mean();
    EXPECT_LE(f2, f1) << "template " << s;
  }
}

TEST(CopyAttack, GrayStockDarkerBackground) {
  const auto t = generate_template(3, 60, 4, 0.5);
  const CodeImage x = print_sim(t, PrintModel{}, 9);
  const AcquisitionModel acq = identity_acquisition();
  for (auto [white, gray] : {std::pair{AttackPreset::f1_white, AttackPreset::f1_gray},
                             std::pair{AttackPreset::f2_white, AttackPreset::f2_gray}}) {
    const Image w = copy_attack(x, default_attack(white), acq, 5).pixels();
    const Image g = copy_attack(x, default_attack(gray), acq, 5).pixels();
    EXPECT_LT(masked_mean(g, t.pixels(), 1.0), masked_mean(w, t.pixels(), 1.0));
  }
}

TEST(CopyAttack, RejectsThresholdOutsideOpenInterval) {
  const CodeImage x(Image(1, 8, 8, 0.5), Provenance::original, "t");
  AttackModel atk = default_attack(AttackPreset::f1_white);
  for (double thr : {0.0, 1.0, -0.1}) {
    atk.estimation_threshold = thr;
    EXPECT_THROW(copy_attack(x, atk, identity_acquisition(), 1), InvalidInput);
  }
}

TEST(Presets, DefaultOrderingHolds) {
  EXPECT_NO_THROW(validate_presets(default_attack(AttackPreset::f1_white),
                                   default_attack(AttackPreset::f1_gray),
                                   default_attack(AttackPreset::f2_white),
                                   default_attack(AttackPreset::f2_gray)));
  AttackModel f2 = default_attack(AttackPreset::f2_white);
  f2.reprint.dot_gain = 0.5;
  EXPECT_THROW(validate_presets(default_attack(AttackPreset::f1_white),
                                default_attack(AttackPreset::f1_gray), f2,
                                default_attack(AttackPreset::f2_gray)),
               InvalidInput);
  for (auto p : kAttackPresets) EXPECT_EQ(parse_attack_preset(to_string(p)), p);
}
