#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hrgc/augment.hpp"
#include "test_support.hpp"

namespace hrgc {
namespace {

PairedSample constant_sample(std::size_t n) {
  std::vector<double> ts;
  std::vector<ImuRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ts.push_back(static_cast<double>(i));
    rows.push_back(ImuRow{1, 2, 3, 4, 5, 6, 7});
  }
  return PairedSample(ImuGpsSequence(ts, rows, "flat"), std::vector<double>(n, 0.25));
}

PairedSample interleave(const PairedSample& even, const PairedSample& odd) {
  std::vector<double> ts, tgt;
  std::vector<ImuRow> rows;
  for (std::size_t i = 0; i < even.size() + odd.size(); ++i) {
    const PairedSample& src = (i % 2 == 0) ? even : odd;
    ts.push_back(src.input.timestamps()[i / 2]);
    rows.push_back(src.input.rows()[i / 2]);
    tgt.push_back(src.target[i / 2]);
  }
  return PairedSample(ImuGpsSequence(ts, rows), tgt);
}

std::vector<double> added_noise(const PairedSample& before, const PairedSample& after, NoiseTarget target) {
  std::vector<double> d;
  for (std::size_t i = 0; i < before.size(); ++i)
    d.push_back(target == NoiseTarget::Altitude
                    ? after.input.at(i, ImuChannel::Altitude) - before.input.at(i, ImuChannel::Altitude)
                    : after.target[i] - before.target[i]);
  return d;
}

double sample_std(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

TEST(NoiseAugment, ZeroRangeLeavesSeriesUnchanged) {
  auto s = constant_sample(64);
  for (auto target : {NoiseTarget::Altitude, NoiseTarget::Profile})
    for (const auto& out : noise_augment(s, 5, 0.04, 1, target)) {
      EXPECT_EQ(out.target, s.target);
      EXPECT_EQ(std::vector<ImuRow>(out.input.rows().begin(), out.input.rows().end()),
                std::vector<ImuRow>(s.input.rows().begin(), s.input.rows().end()));
    }
}

TEST(NoiseAugment, StdIsFractionOfRange) {
  // Range 10 m, fraction 0.04: std 0.4 m. The sample std of 2500 normal draws has a relative
  // spread of about 1/sqrt(2*2500) = 1.4%, so 15% is a wide bound.
  auto s = testing::ramp_sample(2500, 10.0);
  for (auto target : {NoiseTarget::Altitude, NoiseTarget::Profile}) {
    auto out = noise_augment(s, 3, 0.04, 123, target);
    for (const auto& o : out) {
      auto d = added_noise(s, o, target);
      EXPECT_NEAR(sample_std(d), 0.4, 0.4 * 0.15);
      double mean = 0;
      for (double x : d) mean += x;
      mean /= 2500.0;
      EXPECT_LE(std::abs(mean), 3.0 * 0.4 / std::sqrt(2500.0));
    }
  }
}

TEST(NoiseAugment, UntargetedChannelsAreExactCopies) {
  auto s = testing::toy_sample(5, 1, 200);
  for (const auto& o : noise_augment(s, 4, 0.04, 9, NoiseTarget::Altitude)) {
    EXPECT_EQ(o.target, s.target);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t c = 0; c < kImuChannels; ++c) {
        if (c == static_cast<std::size_t>(ImuChannel::Altitude)) continue;
        EXPECT_EQ(o.input.rows()[i][c], s.input.rows()[i][c]);
      }
  }
  for (const auto& o : noise_augment(s, 4, 0.04, 9, NoiseTarget::Profile))
    EXPECT_EQ(std::vector<ImuRow>(o.input.rows().begin(), o.input.rows().end()),
              std::vector<ImuRow>(s.input.rows().begin(), s.input.rows().end()));
}

TEST(NoiseAugment, DeterministicAndIndependentReplicates) {
  auto s = testing::toy_sample(5, 2, 100);
  auto a = noise_augment(s, 3, 0.04, 77, NoiseTarget::Profile);
  auto b = noise_augment(s, 3, 0.04, 77, NoiseTarget::Profile);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0].target, a[1].target);
  auto c = noise_augment(s, 3, 0.04, 78, NoiseTarget::Profile);
  EXPECT_NE(a[0].target, c[0].target);
}

TEST(NoiseAugment, RejectsBadArguments) {
  auto s = constant_sample(4);
  EXPECT_THROW(noise_augment(s, 0, 0.04, 1, NoiseTarget::Profile), ArgumentError);
  EXPECT_THROW(noise_augment(s, 1, -0.1, 1, NoiseTarget::Profile), ArgumentError);
}

TEST(OddEvenSplit, SplitsRowsAndTargets) {
  std::vector<ImuRow> rows;
  for (int i = 0; i < 4; ++i) rows.push_back(ImuRow{double(i), 0, 0, 0, 0, 0, 0});
  PairedSample s(ImuGpsSequence({0, 1, 2, 3}, rows, "x"), {10, 11, 12, 13});
  auto [even, odd] = odd_even_split(s);
  EXPECT_EQ(even.target, (std::vector<double>{10, 12}));
  EXPECT_EQ(odd.target, (std::vector<double>{11, 13}));
  EXPECT_EQ(even.input.rows()[1][0], 2.0);
  EXPECT_EQ(odd.input.rows()[0][0], 1.0);
}

TEST(OddEvenSplit, InterleaveReconstructsInput) {
  for (std::size_t n : {2u, 3u, 101u, 2500u}) {
    auto s = testing::toy_sample(8, n, n);
    auto [even, odd] = odd_even_split(s);
    if (n == 2500) {
      EXPECT_EQ(even.size(), 1250u);
      EXPECT_EQ(odd.size(), 1250u);
    }
    auto back = interleave(even, odd);
    EXPECT_EQ(back.target, s.target);
    EXPECT_EQ(std::vector<ImuRow>(back.input.rows().begin(), back.input.rows().end()),
              std::vector<ImuRow>(s.input.rows().begin(), s.input.rows().end()));
  }
}

TEST(OddEvenSplit, TooShortThrows) { EXPECT_THROW(odd_even_split(constant_sample(1)), ArgumentError); }

TEST(BuildDataset, CountsFollowConfig) {
  std::vector<PairedSample> originals{testing::toy_sample(1, 0, 16)};
  AugmentConfig cfg;
  cfg.noise_realizations_t1 = 1;
  cfg.noise_realizations_t2 = 1;
  EXPECT_EQ(build_dataset(originals, cfg).total(), 3u);
}

TEST(BuildDataset, PaperScaleCountsAndSplit) {
  std::vector<PairedSample> originals;
  for (std::uint64_t i = 0; i < 127; ++i) originals.push_back(testing::toy_sample(3, i, 16));
  auto split = build_dataset(originals, AugmentConfig{});
  EXPECT_EQ(split.total(), 10668u);
  EXPECT_EQ(split.train.size(), 7888u);
  EXPECT_EQ(split.test.size(), 1387u);
  EXPECT_EQ(split.validation.size(), 1393u);

  std::set<std::string> ids;
  for (const auto* part : {&split.train, &split.validation, &split.test})
    for (const auto& s : *part) ids.insert(s.crossing_id());
  EXPECT_EQ(ids.size(), 10668u);
}

TEST(BuildDataset, TechniqueOneCount) {
  std::vector<PairedSample> originals;
  for (std::uint64_t i = 0; i < 127; ++i) originals.push_back(testing::toy_sample(3, i, 8));
  auto all = augment_all(originals, AugmentConfig{});
  std::size_t t1 = 0;
  for (const auto& s : all) t1 += s.crossing_id().find("#t1-") != std::string::npos;
  EXPECT_EQ(t1, 5334u);
}

TEST(BuildDataset, SameSeedSameSplit) {
  std::vector<PairedSample> originals;
  for (std::uint64_t i = 0; i < 5; ++i) originals.push_back(testing::toy_sample(3, i, 12));
  AugmentConfig cfg;
  cfg.noise_realizations_t1 = 3;
  cfg.noise_realizations_t2 = 2;
  auto a = build_dataset(originals, cfg);
  auto b = build_dataset(originals, cfg);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  cfg.seed += 1;
  auto c = build_dataset(originals, cfg);
  EXPECT_NE(a.train, c.train);
}

TEST(BuildDataset, EmptyOriginalsThrow) {
  EXPECT_THROW(build_dataset(std::vector<PairedSample>{}, AugmentConfig{}), ArgumentError);
}

TEST(SplitSizes, PartitionsTotal) {
  for (std::size_t n : {1u, 2u, 3u, 10u, 99u, 10668u}) {
    auto s = split_sizes(n);
    EXPECT_EQ(s.train + s.test + s.validation, n);
  }
}

} // namespace
} // namespace hrgc
