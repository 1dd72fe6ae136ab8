#pragma once

// Training loop, evaluation, and finite-difference gradient verification for HybridModel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hrgc/augment.hpp"
#include "hrgc/neural/hybrid.hpp"
#include "hrgc/neural/metrics.hpp"

namespace hrgc::nn {

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  Normalization normalization; // filled from the training split by train()
  std::function<void(int epoch, double train_rmse, double val_rmse)> on_epoch;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("train: learning rate must be >= 0");
    if (epochs < 1) throw ArgumentError("train: epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("train: batch size must be >= 1");
  }
};

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct EpochRecord {
  int epoch = 0; // 0 is the untrained model
  double train_loss = 0.0;
  Metrics train;
  Metrics validation;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  HybridModel model; // best-validation checkpoint
  std::vector<EpochRecord> history; // history[0] is the initial model
  int best_epoch = 0;
  Normalization normalization;
};

/// RMSE/MAE pooled over every point of every sample.
inline Metrics evaluate(const HybridModel& m, std::span<const PairedSample> samples) {
  double sq = 0.0, ab = 0.0, n = 0.0;
  for (const auto& s : samples) {
    Mat y = hybrid_forward(m, to_matrix(s.input));
    for (std::size_t t = 0; t < s.size(); ++t) {
      const double e = y(static_cast<Eigen::Index>(t), 0) - s.target[t];
      sq += e * e;
      ab += std::abs(e);
      n += 1.0;
    }
  }
  if (n == 0.0) return {};
  return {std::sqrt(sq / n), ab / n};
}

class AdamState {
public:
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<ParamView>& p, const std::vector<ParamView>& g, const TrainConfig& cfg) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (Eigen::Index j = 0; j < p[i].size(); ++j, ++k) {
        const double gj = g[i].data[j];
        m_[k] = cfg.beta1 * m_[k] + (1.0 - cfg.beta1) * gj;
        v_[k] = cfg.beta2 * v_[k] + (1.0 - cfg.beta2) * gj * gj;
        p[i].data[j] -= cfg.learning_rate * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + cfg.adam_epsilon);
      }
  }

private:
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

/// Minimizes mean squared error over the training split. Inputs are normalized with training-set
/// channel statistics; targets stay in metres. Deterministic for a fixed seed. Returns the
/// checkpoint with the lowest validation RMSE (the initial model included).
inline TrainResult train(HybridModel model, const DatasetSplit& split, TrainConfig cfg) {
  cfg.validate();
  if (split.train.empty() || split.validation.empty()) throw ArgumentError("train: empty training or validation set");

  cfg.normalization = compute_normalization(split.train);
  model.norm = cfg.normalization;

  std::vector<Mat> xs;
  std::vector<Vec> ys;
  xs.reserve(split.train.size());
  ys.reserve(split.train.size());
  for (const auto& s : split.train) {
    xs.push_back(to_matrix(s.input));
    ys.push_back(to_vector(s.target));
  }

  TrainResult result;
  result.normalization = cfg.normalization;
  EpochRecord initial{0, std::numeric_limits<double>::quiet_NaN(), evaluate(model, split.train),
                      evaluate(model, split.validation)};
  initial.train_loss = initial.train.rmse * initial.train.rmse;
  result.history.push_back(initial);
  result.model = model;
  double best = initial.validation.rmse;

  HybridModel grad = model.zeros_like();
  auto p_views = params(model);
  auto g_views = params(grad);
  std::size_t n_params = 0;
  for (const auto& v : p_views) n_params += static_cast<std::size_t>(v.size());
  AdamState adam(n_params);

  std::vector<std::size_t> order(xs.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      for (auto& g : g_views)
        std::fill(g.data, g.data + g.size(), 0.0);
      for (std::size_t k = start; k < end; ++k) loss_sum += loss_and_gradient(model, xs[order[k]], ys[order[k]], &grad, w);
      if (!std::isfinite(loss_sum)) throw TrainingDivergedError(epoch);
      if (cfg.optimizer == Optimizer::Adam) {
        adam.step(p_views, g_views, cfg);
      } else {
        for (std::size_t i = 0; i < p_views.size(); ++i)
          for (Eigen::Index j = 0; j < p_views[i].size(); ++j) p_views[i].data[j] -= cfg.learning_rate * g_views[i].data[j];
      }
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), evaluate(model, split.train),
                    evaluate(model, split.validation)};
    if (!std::isfinite(rec.validation.rmse) || !std::isfinite(rec.train.rmse)) throw TrainingDivergedError(epoch);
    result.history.push_back(rec);
    if (rec.validation.rmse < best) {
      best = rec.validation.rmse;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (cfg.on_epoch) cfg.on_epoch(epoch, rec.train.rmse, rec.validation.rmse);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gradient verification

struct GradientCheckEntry {
  std::string name;
  Eigen::Index index;
  double analytic;
  double numeric;
  double relative_error;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::vector<GradientCheckEntry> entries;
};

struct GradientCheckOptions {
  std::size_t samples = 64;     // random parameter entries to check; 0 checks all of them
  std::uint64_t seed = 11;
  std::string name_prefix;      // restrict to parameters whose name starts with this
  // Denominator floor. Central differences on an O(1) loss cannot resolve gradients much below
  // 1e-10, so entries smaller than the floor are held to |a - n| < 1e-4 * floor instead.
  double denominator_floor = 1e-6;
};

/// Compares back-propagated gradients with central differences
/// (loss(theta + eps) - loss(theta - eps)) / (2 eps) on a random subset of parameter entries.
/// relative error = |a - n| / max(|a|, |n|, denominator_floor)
inline GradientCheckReport gradient_check(const HybridModel& model, const PairedSample& sample, double epsilon,
                                          const GradientCheckOptions& opts = {}) {
  if (!(epsilon > 0.0)) throw ArgumentError("gradient_check: epsilon must be > 0");
  const Mat x = to_matrix(sample.input);
  const Vec y = to_vector(sample.target);

  HybridModel grad = model.zeros_like();
  loss_and_gradient(model, x, y, &grad);

  HybridModel probe = model;
  auto p_views = params(probe);
  auto g_views = params(grad);

  struct Slot {
    std::size_t param;
    Eigen::Index index;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < p_views.size(); ++i) {
    if (p_views[i].name.rfind(opts.name_prefix, 0) != 0) continue;
    for (Eigen::Index j = 0; j < p_views[i].size(); ++j) slots.push_back({i, j});
  }
  if (opts.samples > 0 && opts.samples < slots.size()) {
    RandomStream rng(opts.seed, 0x6C4ECBULL);
    rng.shuffle(slots.begin(), slots.end());
    slots.resize(opts.samples);
  }

  GradientCheckReport report;
  for (const auto& s : slots) {
    double& theta = p_views[s.param].data[s.index];
    const double saved = theta;
    theta = saved + epsilon;
    const double up = loss_and_gradient(probe, x, y, nullptr);
    theta = saved - epsilon;
    const double down = loss_and_gradient(probe, x, y, nullptr);
    theta = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = g_views[s.param].data[s.index];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), opts.denominator_floor});
    report.max_relative_error = std::max(report.max_relative_error, rel);
    report.entries.push_back({p_views[s.param].name, s.index, analytic, numeric, rel});
  }
  return report;
}

} // namespace hrgc::nn
