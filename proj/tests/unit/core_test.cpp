#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cdpauth/cdp_core.hpp"
#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

using namespace cdpauth;

namespace {

constexpr Rotation kRotations[] = {Rotation::r0, Rotation::r90, Rotation::r180, Rotation::r270};

Image ramp(std::size_t c, std::size_t h, std::size_t w) {
  Image im(c, h, w);
  double v = 0.0;
  for (auto& x : im.values()) x = std::fmod(v += 0.137, 1.0);
  return im;
}

}  // namespace

TEST(Rng, DeriveSeedSeparatesStreamsAndIndices) {
  EXPECT_EQ(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, BelowStaysInRange) {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Template, PaperGeometry) {
  const auto t = generate_template(7, 330, 5, 0.5);
  EXPECT_EQ(t.size(), 330u);
  EXPECT_EQ(t.symbols_per_side(), 66u);
  EXPECT_EQ(t.pixels().height(), 330u);
  EXPECT_EQ(t.pixels().width(), 330u);
}

TEST(Template, SingleSymbolIsConstant) {
  const auto t = generate_template(1, 4, 4, 0.5);
  const double first = t.pixels().values()[0];
  for (double v : t.pixels().values()) EXPECT_EQ(v, first);
}

TEST(Template, BlackFractionWithinBinomialBand) {
  const auto t = generate_template(3, 60, 4, 0.5);
  // 225 symbols: sigma = sqrt(0.25 / 225) = 1/30.
  EXPECT_NEAR(black_symbol_fraction(t), 0.5, 3.0 / 30.0);
}

TEST(Template, BlocksConstantAndBinaryForManySeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = generate_template(seed, 24, 3, 0.3);
    const auto& p = t.pixels();
    for (std::size_t y = 0; y < 24; ++y)
      for (std::size_t x = 0; x < 24; ++x) {
        const double v = p.at(0, y, x);
        ASSERT_TRUE(v == 0.0 || v == 1.0);
        ASSERT_EQ(v, p.at(0, y - y % 3, x - x % 3));
      }
  }
}

TEST(Template, PureFunctionOfArguments) {
  EXPECT_EQ(generate_template(11, 60, 4, 0.5), generate_template(11, 60, 4, 0.5));
  EXPECT_NE(generate_template(11, 60, 4, 0.5).pixels(), generate_template(12, 60, 4, 0.5).pixels());
}

TEST(Template, RejectsBadGeometryAndDegenerateFraction) {
  EXPECT_THROW(generate_template(1, 10, 4, 0.5), InvalidInput);
  EXPECT_THROW(generate_template(1, 8, 4, 0.0), InvalidInput);
  EXPECT_THROW(generate_template(1, 8, 4, 1.0), InvalidInput);
}

TEST(Template, ConstructorRejectsNonBinaryOrNonConstantBlocks) {
  Image im(1, 4, 4, 1.0);
  im.at(0, 0, 0) = 0.5;
  EXPECT_THROW(DigitalTemplate(im, 2, "x", 0), InvalidInput);
  im.at(0, 0, 0) = 0.0;
  EXPECT_THROW(DigitalTemplate(im, 2, "x", 0), InvalidInput);
}

TEST(Augment, FourQuarterTurnsAreIdentity) {
  const Image im = ramp(1, 5, 7);
  Image r = im;
  for (int i = 0; i < 4; ++i) r = rotate(r, Rotation::r90);
  EXPECT_EQ(r, im);
}

TEST(Augment, RotationIsCounterClockwise) {
  Image im(1, 2, 3);
  im.at(0, 0, 2) = 1.0;  // top-right
  const Image r = rotate(im, Rotation::r90);
  ASSERT_EQ(r.height(), 3u);
  ASSERT_EQ(r.width(), 2u);
  EXPECT_EQ(r.at(0, 0, 0), 1.0);  // moves to top-left
}

TEST(Augment, IdentityIsBitExact) {
  const CodeImage c(ramp(3, 4, 4), Provenance::original, "t");
  const CodeImage out = augment(c, Rotation::r0, 1.0);
  EXPECT_EQ(out, c);
}

TEST(Augment, GammaOnKnownValue) {
  Image im(1, 1, 1, 0.25);
  EXPECT_DOUBLE_EQ(augment(im, Rotation::r0, 0.5).at(0, 0, 0), 0.5);
}

TEST(Augment, StaysInUnitIntervalAndKeepsMetadata) {
  const CodeImage c(ramp(1, 6, 6), Provenance::f2_gray, "t9");
  for (auto rot : kRotations)
    for (double g : {0.1, 0.5, 1.0, 1.7, 5.0}) {
      const CodeImage out = augment(c, rot, g);
      EXPECT_TRUE(out.pixels().within_unit_interval());
      EXPECT_EQ(out.provenance(), Provenance::f2_gray);
      EXPECT_EQ(out.template_id(), "t9");
    }
}

TEST(Augment, RejectsNonPositiveGamma) {
  const Image im = ramp(1, 2, 2);
  EXPECT_THROW(augment(im, Rotation::r0, 0.0), InvalidInput);
  EXPECT_THROW(augment(im, Rotation::r0, -1.0), InvalidInput);
}

TEST(GammaGrid, InclusiveEndpoints) {
  const auto g = gamma_grid(0.4, 1.3, 0.2);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.4);
  EXPECT_NEAR(g.back(), 1.2, 1e-12);
  EXPECT_EQ(gamma_grid(0.5, 1.2, 0.1).size(), 8u);
}

TEST(Split, PaperSizes) {
  const auto s = split_dataset(300, {0.4, 0.1, 0.5}, 1);
  EXPECT_EQ(s.train_ids.size(), 120u);
  EXPECT_EQ(s.val_ids.size(), 30u);
  EXPECT_EQ(s.test_ids.size(), 150u);
}

TEST(Split, PartitionForManyInputs) {
  for (std::size_t n : {3u, 10u, 17u, 300u})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = split_dataset(n, {0.4, 0.1, 0.5}, seed);
      std::set<std::size_t> all;
      for (const auto* part : {&s.train_ids, &s.val_ids, &s.test_ids})
        for (auto i : *part) {
          EXPECT_LT(i, n);
          EXPECT_TRUE(all.insert(i).second) << "index " << i << " appears twice";
        }
      EXPECT_EQ(all.size(), n);
    }
}

TEST(Split, Deterministic) {
  EXPECT_EQ(split_dataset(10, {0.4, 0.1, 0.5}, 4), split_dataset(10, {0.4, 0.1, 0.5}, 4));
}

TEST(Split, RejectsBadFractionsAndTinyN) {
  EXPECT_THROW(split_dataset(10, {0.4, 0.1, 0.4}, 1), InvalidInput);
  EXPECT_THROW(split_dataset(10, {0.5, 0.0, 0.5}, 1), InvalidInput);
  EXPECT_THROW(split_dataset(2, {0.4, 0.1, 0.5}, 1), InvalidInput);
}

TEST(Labels, ProvenanceAndLabelAgree) {
  for (Label l : kAllLabels) {
    EXPECT_EQ(label_of(provenance_of(l)), l);
    EXPECT_EQ(parse_label(to_string(l)), l);
  }
  EXPECT_FALSE(label_of(Provenance::digital).has_value());
  EXPECT_THROW(make_probe(CodeImage(Image(1, 2, 2), Provenance::original, "t"), Label::f1_gray),
               InvalidInput);
}

TEST(CodeImage, RejectsOutOfRangeAndEmpty) {
  EXPECT_THROW(CodeImage(Image(1, 2, 2, 1.5), Provenance::original, "t"), InvalidInput);
  EXPECT_THROW(CodeImage(Image(), Provenance::original, "t"), InvalidInput);
}
