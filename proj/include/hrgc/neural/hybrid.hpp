#pragma once

// Hybrid sequence-to-sequence profile model. A shared input embedding feeds two branches that
// run independently: an LSTM (with a per-timestep readout) and a transformer encoder (with
// sinusoidal positional encoding). Their (T x d) outputs are concatenated per timestep and an
// affine fusion head maps each (2d) row to one elevation.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hrgc/neural/kernels.hpp"
#include "hrgc/profile.hpp"
#include "hrgc/rng.hpp"

namespace hrgc::nn {

struct Architecture {
  int input_channels = static_cast<int>(kImuChannels);
  int d_model = 32;
  int lstm_hidden = 32;
  int num_heads = 4;
  int ff_width = 64;
  int num_blocks = 1;
  bool positional_encoding = true;

  void validate() const {
    if (input_channels < 1 || d_model < 2 || lstm_hidden < 1 || num_heads < 1 || ff_width < 1 || num_blocks < 0)
      throw ArgumentError("architecture: sizes must be positive");
    if (d_model % 2 != 0) throw ArgumentError("architecture: d_model must be even");
    if (d_model % num_heads != 0) throw ArgumentError("architecture: d_model must be a multiple of num_heads");
  }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Per-channel z-score applied to inputs before the embedding.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalization identity(int channels) {
    return {std::vector<double>(static_cast<std::size_t>(channels), 0.0),
            std::vector<double>(static_cast<std::size_t>(channels), 1.0)};
  }
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Channel statistics over every row of every sample; zero-variance channels get stddev 1.
inline Normalization compute_normalization(std::span<const PairedSample> samples) {
  Normalization n = Normalization::identity(static_cast<int>(kImuChannels));
  std::array<double, kImuChannels> sum{}, sq{};
  double count = 0;
  for (const auto& s : samples)
    for (const auto& row : s.input.rows()) {
      for (std::size_t c = 0; c < kImuChannels; ++c) sum[c] += row[c];
      count += 1;
    }
  if (count == 0) return n;
  for (std::size_t c = 0; c < kImuChannels; ++c) n.mean[c] = sum[c] / count;
  for (const auto& s : samples)
    for (const auto& row : s.input.rows())
      for (std::size_t c = 0; c < kImuChannels; ++c) sq[c] += (row[c] - n.mean[c]) * (row[c] - n.mean[c]);
  for (std::size_t c = 0; c < kImuChannels; ++c) {
    const double sd = std::sqrt(sq[c] / count);
    n.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

struct HybridModel {
  Architecture arch;
  Normalization norm;
  Mat W_embed; // channels x d
  RowVec b_embed;
  LstmCell lstm;
  Mat W_readout; // hidden x d
  RowVec b_readout;
  std::vector<TransformerBlock> blocks;
  Mat W_fusion; // 2d x 1
  RowVec b_fusion;

  HybridModel() = default;

  /// All parameters zero (layer-norm gains one); the shape template for gradients.
  explicit HybridModel(const Architecture& a) : arch(a), norm(Normalization::identity(a.input_channels)) {
    a.validate();
    W_embed = Mat::Zero(a.input_channels, a.d_model);
    b_embed = RowVec::Zero(a.d_model);
    lstm = LstmCell(a.d_model, a.lstm_hidden);
    W_readout = Mat::Zero(a.lstm_hidden, a.d_model);
    b_readout = RowVec::Zero(a.d_model);
    for (int b = 0; b < a.num_blocks; ++b) blocks.emplace_back(a.d_model, a.num_heads, a.ff_width);
    W_fusion = Mat::Zero(2 * a.d_model, 1);
    b_fusion = RowVec::Zero(1);
  }

  /// Same shapes, every parameter zero (including layer-norm gains).
  HybridModel zeros_like() const;
};

/// Mutable view of one parameter tensor, row-major logical shape (rows x cols).
struct ParamView {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const noexcept { return rows * cols; }
  // Eigen stores column-major; logical (r, c) lives at data[c * rows + r].
  double& at(Eigen::Index r, Eigen::Index c) const { return data[c * rows + r]; }
};

/// Every parameter in a fixed order. Two models with the same architecture yield matching lists.
inline std::vector<ParamView> params(HybridModel& m) {
  std::vector<ParamView> out;
  auto add = [&](std::string name, auto& p) { out.push_back({std::move(name), p.data(), p.rows(), p.cols()}); };
  add("embed.W", m.W_embed);
  add("embed.b", m.b_embed);
  add("lstm.W_f", m.lstm.W_f);
  add("lstm.W_i", m.lstm.W_i);
  add("lstm.W_c", m.lstm.W_c);
  add("lstm.W_o", m.lstm.W_o);
  add("lstm.b_f", m.lstm.b_f);
  add("lstm.b_i", m.lstm.b_i);
  add("lstm.b_c", m.lstm.b_c);
  add("lstm.b_o", m.lstm.b_o);
  add("lstm.readout.W", m.W_readout);
  add("lstm.readout.b", m.b_readout);
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    auto& blk = m.blocks[b];
    const std::string p = "transformer." + std::to_string(b) + ".";
    for (std::size_t h = 0; h < blk.W_q.size(); ++h) {
      const std::string hp = p + "head." + std::to_string(h) + ".";
      add(hp + "W_q", blk.W_q[h]);
      add(hp + "W_k", blk.W_k[h]);
      add(hp + "W_v", blk.W_v[h]);
    }
    add(p + "W_out", blk.W_out);
    add(p + "b_out", blk.b_out);
    add(p + "ff1.W", blk.W_ff1);
    add(p + "ff1.b", blk.b_ff1);
    add(p + "ff2.W", blk.W_ff2);
    add(p + "ff2.b", blk.b_ff2);
    add(p + "ln1.gain", blk.ln1_gain);
    add(p + "ln1.bias", blk.ln1_bias);
    add(p + "ln2.gain", blk.ln2_gain);
    add(p + "ln2.bias", blk.ln2_bias);
  }
  add("fusion.W", m.W_fusion);
  add("fusion.b", m.b_fusion);
  return out;
}

inline std::size_t parameter_count(const HybridModel& m) {
  std::size_t n = 0;
  for (const auto& p : params(const_cast<HybridModel&>(m))) n += static_cast<std::size_t>(p.size());
  return n;
}

inline HybridModel HybridModel::zeros_like() const {
  HybridModel z = *this;
  for (auto& p : params(z))
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data[k] = 0.0;
  return z;
}

/// Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from `seed`. Biases start at
/// zero except the LSTM forget bias (one); layer-norm gains start at one.
inline HybridModel init_model(const Architecture& arch, std::uint64_t seed) {
  HybridModel m(arch);
  RandomStream rng(seed, 0x1A17ULL);
  auto fill = [&](Mat& w, double fan_in) {
    const double a = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-a, a);
  };
  fill(m.W_embed, arch.input_channels);
  const double lstm_fan = arch.lstm_hidden + arch.d_model;
  for (Mat* w : {&m.lstm.W_f, &m.lstm.W_i, &m.lstm.W_c, &m.lstm.W_o}) fill(*w, lstm_fan);
  m.lstm.b_f.setOnes();
  fill(m.W_readout, arch.lstm_hidden);
  for (auto& blk : m.blocks) {
    for (auto* heads : {&blk.W_q, &blk.W_k, &blk.W_v})
      for (auto& w : *heads) fill(w, arch.d_model);
    fill(blk.W_out, arch.d_model);
    fill(blk.W_ff1, arch.d_model);
    fill(blk.W_ff2, arch.ff_width);
  }
  fill(m.W_fusion, 2.0 * arch.d_model);
  return m;
}

// ---------------------------------------------------------------------------

/// (T x channels) matrix of a sensor sequence.
inline Mat to_matrix(const ImuGpsSequence& seq) {
  Mat x(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(kImuChannels));
  for (std::size_t t = 0; t < seq.size(); ++t)
    for (std::size_t c = 0; c < kImuChannels; ++c)
      x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = seq.rows()[t][c];
  return x;
}

inline Vec to_vector(std::span<const double> v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct ForwardCache {
  Mat normalized;
  Mat embedded;
  LstmCache lstm;
  Mat lstm_hidden;
  Mat lstm_out;
  std::vector<BlockCache> blocks;
  Mat transformer_out;
  Mat fused; // T x 2d
};

/// (T x channels) raw input -> (T x 1) elevations. Deterministic.
inline Mat hybrid_forward(const HybridModel& m, const Mat& input, ForwardCache* cache = nullptr) {
  require_shape(input.cols() == m.arch.input_channels,
                "hybrid_forward: expected " + std::to_string(m.arch.input_channels) + " input channels, got " +
                    std::to_string(input.cols()));
  require_shape(input.rows() >= 1, "hybrid_forward: empty sequence");
  const Eigen::Index T = input.rows();
  const int d = m.arch.d_model;

  Mat xn(T, input.cols());
  for (Eigen::Index c = 0; c < input.cols(); ++c)
    xn.col(c) = (input.col(c).array() - m.norm.mean[static_cast<std::size_t>(c)]) / m.norm.stddev[static_cast<std::size_t>(c)];
  Mat e = (xn * m.W_embed).rowwise() + m.b_embed;

  Mat h = lstm_forward(m.lstm, e, cache ? &cache->lstm : nullptr);
  Mat l_out = (h * m.W_readout).rowwise() + m.b_readout;

  Mat z = e;
  if (m.arch.positional_encoding) z += positional_encoding(T, d);
  if (cache) cache->blocks.resize(m.blocks.size());
  for (std::size_t b = 0; b < m.blocks.size(); ++b) z = block_forward(m.blocks[b], z, cache ? &cache->blocks[b] : nullptr);

  Mat fused(T, 2 * d);
  fused.leftCols(d) = l_out;
  fused.rightCols(d) = z;
  Mat y = (fused * m.W_fusion).rowwise() + m.b_fusion;
  if (cache) {
    cache->normalized = std::move(xn);
    cache->embedded = std::move(e);
    cache->lstm_hidden = std::move(h);
    cache->lstm_out = std::move(l_out);
    cache->transformer_out = std::move(z);
    cache->fused = std::move(fused);
  }
  return y;
}

inline std::vector<double> predict(const HybridModel& m, const ImuGpsSequence& seq) {
  Mat y = hybrid_forward(m, to_matrix(seq));
  return std::vector<double>(y.data(), y.data() + y.size());
}

/// Predicted elevations laid out over the sequence's speed-integrated stations.
inline Profile predict_profile(const HybridModel& m, const ImuGpsSequence& seq) {
  return target_as_profile(PairedSample(seq, predict(m, seq)));
}

/// Mean squared error of one sequence; when `grad` is given, adds d(loss)/d(param) * weight to it.
inline double loss_and_gradient(const HybridModel& m, const Mat& input, const Vec& target, HybridModel* grad,
                                double weight = 1.0) {
  require_shape(target.size() == input.rows(), "loss: target length differs from input rows");
  ForwardCache cache;
  Mat y = hybrid_forward(m, input, grad ? &cache : nullptr);
  Vec diff = y.col(0) - target;
  const auto T = static_cast<double>(target.size());
  const double loss = diff.squaredNorm() / T;
  if (!grad) return loss;

  const int d = m.arch.d_model;
  Mat dy = (2.0 * weight / T) * diff;
  grad->W_fusion += cache.fused.transpose() * dy;
  grad->b_fusion(0) += dy.sum();
  Mat d_fused = dy * m.W_fusion.transpose();

  Mat dz = d_fused.rightCols(d);
  for (std::size_t b = m.blocks.size(); b-- > 0;) dz = block_backward(m.blocks[b], cache.blocks[b], dz, grad->blocks[b]);
  Mat d_embed = dz; // positional encoding is additive and parameter-free

  Mat d_lout = d_fused.leftCols(d);
  grad->W_readout += cache.lstm_hidden.transpose() * d_lout;
  grad->b_readout += d_lout.colwise().sum();
  Mat d_h = d_lout * m.W_readout.transpose();
  d_embed += lstm_backward(m.lstm, cache.lstm, d_h, grad->lstm);

  grad->W_embed += cache.normalized.transpose() * d_embed;
  grad->b_embed += d_embed.colwise().sum();
  return loss;
}

} // namespace hrgc::nn
