#pragma once

// Dataset augmentation for paired IMU-GPS / profile sequences.
//
// Technique 1 adds Gaussian noise to the GPS altitude channel, t1 realizations per original.
// Technique 2 adds Gaussian noise to the ground-truth profile, t2 realizations per original,
// and splits every noisy sequence into its even- and odd-indexed halves.
// In both cases the noise std is `noise_fraction` times the range (max - min) of the perturbed
// series of that sequence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hrgc/error.hpp"
#include "hrgc/profile.hpp"
#include "hrgc/rng.hpp"

namespace hrgc {

enum class NoiseTarget { Altitude, Profile };

inline const char* to_string(NoiseTarget t) { return t == NoiseTarget::Altitude ? "altitude" : "profile"; }

struct AugmentConfig {
  double noise_fraction = 0.04;
  std::size_t noise_realizations_t1 = 42;
  std::size_t noise_realizations_t2 = 21;
  std::uint64_t seed = 2024;
  NoiseTarget technique1_target = NoiseTarget::Altitude;
  NoiseTarget technique2_target = NoiseTarget::Profile;

  void validate() const {
    if (!(noise_fraction >= 0.0) || !std::isfinite(noise_fraction))
      throw ArgumentError("augment: noise_fraction must be >= 0");
    if (noise_realizations_t1 < 1 || noise_realizations_t2 < 1)
      throw ArgumentError("augment: realization counts must be >= 1");
  }
};

/// Train/validation/test partition. Default proportions follow 7888/1387/1393 of 10668.
struct DatasetSplit {
  std::vector<PairedSample> train;
  std::vector<PairedSample> validation;
  std::vector<PairedSample> test;
  std::uint64_t split_seed = 0;

  std::size_t total() const noexcept { return train.size() + validation.size() + test.size(); }
};

namespace detail {

inline double series_range(std::span<const double> xs) {
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *hi - *lo;
}

inline std::vector<double> altitude_series(const ImuGpsSequence& seq) {
  std::vector<double> out(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) out[i] = seq.at(i, ImuChannel::Altitude);
  return out;
}

inline std::string tagged_id(const std::string& base, const std::string& tag) {
  return base.empty() ? tag : base + "#" + tag;
}

} // namespace detail

/// `n` noisy copies of `sample`. Replicate j draws from stream derive_seed(seed, j).
inline std::vector<PairedSample> noise_augment(const PairedSample& sample, std::size_t n, double fraction,
                                               std::uint64_t seed, NoiseTarget target,
                                               const std::string& tag = "noise") {
  if (n < 1) throw ArgumentError("noise_augment: n must be >= 1");
  if (!(fraction >= 0.0) || !std::isfinite(fraction)) throw ArgumentError("noise_augment: fraction must be >= 0");

  const std::vector<double> series =
      target == NoiseTarget::Altitude ? detail::altitude_series(sample.input) : sample.target;
  const double stddev = fraction * detail::series_range(series);

  std::vector<PairedSample> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    RandomStream rng(seed, j);
    std::vector<double> noisy = series;
    if (stddev > 0.0)
      for (double& v : noisy) v += rng.normal(0.0, stddev);

    std::string id = detail::tagged_id(sample.crossing_id(), tag + "-" + std::to_string(j));
    if (target == NoiseTarget::Altitude) {
      std::vector<ImuRow> rows(sample.input.rows().begin(), sample.input.rows().end());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i][static_cast<std::size_t>(ImuChannel::Altitude)] = noisy[i];
      std::vector<double> ts(sample.input.timestamps().begin(), sample.input.timestamps().end());
      out.emplace_back(ImuGpsSequence(std::move(ts), std::move(rows), std::move(id)), sample.target);
    } else {
      out.emplace_back(sample.input.with_id(std::move(id)), std::move(noisy));
    }
  }
  return out;
}

/// (even-indexed rows, odd-indexed rows), applied identically to input and target.
inline std::pair<PairedSample, PairedSample> odd_even_split(const PairedSample& sample) {
  if (sample.size() < 2) throw ArgumentError("odd_even_split: length must be >= 2");
  auto half = [&](std::size_t offset, const char* tag) {
    std::vector<double> ts;
    std::vector<ImuRow> rows;
    std::vector<double> tgt;
    for (std::size_t i = offset; i < sample.size(); i += 2) {
      ts.push_back(sample.input.timestamps()[i]);
      rows.push_back(sample.input.rows()[i]);
      tgt.push_back(sample.target[i]);
    }
    return PairedSample(ImuGpsSequence(std::move(ts), std::move(rows), detail::tagged_id(sample.crossing_id(), tag)),
                        std::move(tgt));
  };
  return {half(0, "even"), half(1, "odd")};
}

/// Split sizes for `total` samples in the 7888:1387:1393 (train:test:validation) proportion.
struct SplitSizes {
  std::size_t train, test, validation;
};

inline SplitSizes split_sizes(std::size_t total) {
  auto scaled = [&](double share) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(total) * share / 10668.0));
  };
  SplitSizes s{scaled(7888.0), scaled(1387.0), 0};
  if (s.train + s.test > total) s.test = total - s.train;
  s.validation = total - s.train - s.test;
  return s;
}

/// Shuffles `samples` with `seed` and partitions them.
inline DatasetSplit split_dataset(std::vector<PairedSample> samples, std::uint64_t seed) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng(seed, 0x5B117ULL);
  rng.shuffle(order.begin(), order.end());

  auto sizes = split_sizes(samples.size());
  DatasetSplit split;
  split.split_seed = seed;
  split.train.reserve(sizes.train);
  split.test.reserve(sizes.test);
  split.validation.reserve(sizes.validation);
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& s = samples[order[k]];
    if (k < sizes.train)
      split.train.push_back(std::move(s));
    else if (k < sizes.train + sizes.test)
      split.test.push_back(std::move(s));
    else
      split.validation.push_back(std::move(s));
  }
  return split;
}

/// All technique-1 and technique-2 samples in generation order (original-major).
inline std::vector<PairedSample> augment_all(std::span<const PairedSample> originals, const AugmentConfig& cfg) {
  cfg.validate();
  if (originals.empty()) throw ArgumentError("build_dataset: no original samples");
  std::vector<PairedSample> all;
  all.reserve(originals.size() * (cfg.noise_realizations_t1 + 2 * cfg.noise_realizations_t2));
  for (std::size_t i = 0; i < originals.size(); ++i) {
    const std::uint64_t id = static_cast<std::uint64_t>(i);
    for (auto& s : noise_augment(originals[i], cfg.noise_realizations_t1, cfg.noise_fraction,
                                 derive_seed(cfg.seed, (1ULL << 40) | id), cfg.technique1_target, "t1"))
      all.push_back(std::move(s));
    for (const auto& noisy : noise_augment(originals[i], cfg.noise_realizations_t2, cfg.noise_fraction,
                                           derive_seed(cfg.seed, (2ULL << 40) | id), cfg.technique2_target, "t2")) {
      auto [even, odd] = odd_even_split(noisy);
      all.push_back(std::move(even));
      all.push_back(std::move(odd));
    }
  }
  return all;
}

inline DatasetSplit build_dataset(std::span<const PairedSample> originals, const AugmentConfig& cfg) {
  return split_dataset(augment_all(originals, cfg), cfg.seed);
}

} // namespace hrgc
