#pragma once

// Numerical kernels of the hybrid sequence model: LSTM cell, sinusoidal positional
// encoding, scaled dot-product self-attention, multi-head attention, layer normalization.
//
// Sequences are row-major in the time axis: a (T x d) matrix holds one timestep per row.
// Affine maps act on rows, Y = X * W + b, except the LSTM gate weights, which keep the
// (hidden x (hidden + input)) orientation acting on the column [h_prev; a].

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrgc/error.hpp"

namespace hrgc::nn {

using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;
using Vec = Eigen::VectorXd;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename Derived>
Mat sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

template <typename Derived>
Mat tanh(const Eigen::MatrixBase<Derived>& x) {
  return x.array().tanh().matrix();
}

/// Row-wise softmax, shifted by the row maximum.
inline Mat softmax_rows(const Mat& s) {
  Mat p(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    p.row(r) = (s.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// ---------------------------------------------------------------------------
// LSTM

struct LstmCell {
  int input_size = 0;
  int hidden_size = 0;
  Mat W_f, W_i, W_c, W_o; // hidden x (hidden + input), acting on [h_prev; a]
  RowVec b_f, b_i, b_c, b_o;

  LstmCell() = default;
  LstmCell(int input, int hidden)
      : input_size(input), hidden_size(hidden), W_f(Mat::Zero(hidden, hidden + input)),
        W_i(Mat::Zero(hidden, hidden + input)), W_c(Mat::Zero(hidden, hidden + input)),
        W_o(Mat::Zero(hidden, hidden + input)), b_f(RowVec::Zero(hidden)), b_i(RowVec::Zero(hidden)),
        b_c(RowVec::Zero(hidden)), b_o(RowVec::Zero(hidden)) {}

  void check() const {
    const auto cols = hidden_size + input_size;
    for (const Mat* w : {&W_f, &W_i, &W_c, &W_o})
      require_shape(w->rows() == hidden_size && w->cols() == cols, "lstm: gate weight shape mismatch");
    for (const RowVec* b : {&b_f, &b_i, &b_c, &b_o})
      require_shape(b->size() == hidden_size, "lstm: gate bias length mismatch");
  }
};

struct LstmStep {
  Vec forget, input, candidate, output; // gate activations
  Vec cell;                             // C_y
  Vec hidden;                           // h_y
};

/// One step of the cell:
///   f = sig(W_f [h;a] + b_f), i = sig(W_i [h;a] + b_i), C' = tanh(W_c [h;a] + b_c),
///   C = f*C_prev + i*C', O = sig(W_o [h;a] + b_o), h = O*tanh(C).
inline LstmStep lstm_step(const LstmCell& cell, const Vec& prev_hidden, const Vec& prev_cell, const Vec& input) {
  cell.check();
  require_shape(prev_hidden.size() == cell.hidden_size && prev_cell.size() == cell.hidden_size,
                "lstm_step: state length mismatch");
  require_shape(input.size() == cell.input_size, "lstm_step: input length mismatch");
  Vec z(cell.hidden_size + cell.input_size);
  z << prev_hidden, input;
  LstmStep s;
  s.forget = sigmoid(cell.W_f * z + cell.b_f.transpose());
  s.input = sigmoid(cell.W_i * z + cell.b_i.transpose());
  s.candidate = tanh(cell.W_c * z + cell.b_c.transpose());
  s.output = sigmoid(cell.W_o * z + cell.b_o.transpose());
  s.cell = s.forget.cwiseProduct(prev_cell) + s.input.cwiseProduct(s.candidate);
  s.hidden = s.output.cwiseProduct(tanh(s.cell));
  return s;
}

/// Per-timestep values kept for back-propagation through time.
struct LstmCache {
  Mat input;                               // T x in
  Mat f, i, cc, o, c, tanh_c, h, h_prev, c_prev; // T x hidden
};

/// Runs the cell over a (T x in) sequence from zero state, returning the (T x hidden) hidden states.
inline Mat lstm_forward(const LstmCell& cell, const Mat& x, LstmCache* cache = nullptr) {
  cell.check();
  require_shape(x.cols() == cell.input_size, "lstm: input width mismatch");
  const int H = cell.hidden_size;
  const Eigen::Index T = x.rows();
  // Stacked gates [f; i; c; o], split into the recurrent and input column blocks.
  Mat W(4 * H, H + cell.input_size);
  W << cell.W_f, cell.W_i, cell.W_c, cell.W_o;
  RowVec b(4 * H);
  b << cell.b_f, cell.b_i, cell.b_c, cell.b_o;
  const Mat Wh_t = W.leftCols(H).transpose();
  const Mat gx = (x * W.rightCols(cell.input_size).transpose()).rowwise() + b;

  Mat hs(T, H);
  RowVec h = RowVec::Zero(H), c = RowVec::Zero(H);
  if (cache) {
    cache->input = x;
    for (Mat* m : {&cache->f, &cache->i, &cache->cc, &cache->o, &cache->c, &cache->tanh_c, &cache->h, &cache->h_prev,
                   &cache->c_prev})
      m->resize(T, H);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    RowVec pre = gx.row(t) + h * Wh_t;
    RowVec f = pre.segment(0, H).unaryExpr([](double v) { return sigmoid(v); });
    RowVec i = pre.segment(H, H).unaryExpr([](double v) { return sigmoid(v); });
    RowVec cc = pre.segment(2 * H, H).array().tanh().matrix();
    RowVec o = pre.segment(3 * H, H).unaryExpr([](double v) { return sigmoid(v); });
    RowVec c_new = f.cwiseProduct(c) + i.cwiseProduct(cc);
    RowVec tc = c_new.array().tanh().matrix();
    RowVec h_new = o.cwiseProduct(tc);
    if (cache) {
      cache->f.row(t) = f;
      cache->i.row(t) = i;
      cache->cc.row(t) = cc;
      cache->o.row(t) = o;
      cache->c.row(t) = c_new;
      cache->tanh_c.row(t) = tc;
      cache->h_prev.row(t) = h;
      cache->c_prev.row(t) = c;
      cache->h.row(t) = h_new;
    }
    h = h_new;
    c = c_new;
    hs.row(t) = h;
  }
  return hs;
}

/// Back-propagation through time. Accumulates parameter gradients into `grad` and returns dL/dx.
inline Mat lstm_backward(const LstmCell& cell, const LstmCache& cache, const Mat& d_hidden, LstmCell& grad) {
  const int H = cell.hidden_size;
  const int In = cell.input_size;
  const Eigen::Index T = d_hidden.rows();
  Mat W(4 * H, H + In);
  W << cell.W_f, cell.W_i, cell.W_c, cell.W_o;
  const Mat Wh = W.leftCols(H);

  Mat d_pre(T, 4 * H);
  RowVec dh_next = RowVec::Zero(H), dc_next = RowVec::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    RowVec dh = d_hidden.row(t) + dh_next;
    auto o = cache.o.row(t).array();
    auto tc = cache.tanh_c.row(t).array();
    auto f = cache.f.row(t).array();
    auto i = cache.i.row(t).array();
    auto cc = cache.cc.row(t).array();
    RowVec d_o = (dh.array() * tc).matrix();
    RowVec dc = dc_next + (dh.array() * o * (1.0 - tc * tc)).matrix();
    RowVec d_f = (dc.array() * cache.c_prev.row(t).array()).matrix();
    RowVec d_i = (dc.array() * cc).matrix();
    RowVec d_cc = (dc.array() * i).matrix();
    d_pre.block(t, 0, 1, H) = (d_f.array() * f * (1.0 - f)).matrix();
    d_pre.block(t, H, 1, H) = (d_i.array() * i * (1.0 - i)).matrix();
    d_pre.block(t, 2 * H, 1, H) = (d_cc.array() * (1.0 - cc * cc)).matrix();
    d_pre.block(t, 3 * H, 1, H) = (d_o.array() * o * (1.0 - o)).matrix();
    dh_next = d_pre.row(t) * Wh;
    dc_next = (dc.array() * f).matrix();
  }
  Mat dW(4 * H, H + In);
  dW.leftCols(H) = d_pre.transpose() * cache.h_prev;
  dW.rightCols(In) = d_pre.transpose() * cache.input;
  RowVec db = d_pre.colwise().sum();
  grad.W_f += dW.middleRows(0, H);
  grad.W_i += dW.middleRows(H, H);
  grad.W_c += dW.middleRows(2 * H, H);
  grad.W_o += dW.middleRows(3 * H, H);
  grad.b_f += db.segment(0, H);
  grad.b_i += db.segment(H, H);
  grad.b_c += db.segment(2 * H, H);
  grad.b_o += db.segment(3 * H, H);
  return d_pre * W.rightCols(In);
}

// ---------------------------------------------------------------------------
// Positional encoding

/// PE(p, 2l) = sin(p / 10000^(2l/d)), PE(p, 2l+1) = cos(p / 10000^(2l/d)).
inline Mat positional_encoding(Eigen::Index length, Eigen::Index d) {
  if (d <= 0 || d % 2 != 0) throw ArgumentError("positional_encoding: d must be even and positive");
  if (length < 1) throw ArgumentError("positional_encoding: length must be >= 1");
  Mat pe(length, d);
  for (Eigen::Index l = 0; l < d / 2; ++l) {
    const double denom = std::pow(10000.0, static_cast<double>(2 * l) / static_cast<double>(d));
    for (Eigen::Index p = 0; p < length; ++p) {
      const double angle = static_cast<double>(p) / denom;
      pe(p, 2 * l) = std::sin(angle);
      pe(p, 2 * l + 1) = std::cos(angle);
    }
  }
  return pe;
}

// ---------------------------------------------------------------------------
// Attention

struct AttentionOutput {
  Mat output;  // T x d_v
  Mat weights; // T x T, rows sum to 1
  Mat q, k, v;
};

/// softmax(Q K^T / sqrt(d_k)) V with Q = X W_q, K = X W_k, V = X W_v.
inline AttentionOutput self_attention(const Mat& x, const Mat& w_q, const Mat& w_k, const Mat& w_v) {
  require_shape(w_q.rows() == x.cols() && w_k.rows() == x.cols() && w_v.rows() == x.cols(),
                "self_attention: projection rows must equal input width");
  require_shape(w_q.cols() == w_k.cols(), "self_attention: query and key widths differ");
  AttentionOutput a;
  a.q = x * w_q;
  a.k = x * w_k;
  a.v = x * w_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_k.cols()));
  a.weights = softmax_rows((a.q * a.k.transpose()) * scale);
  a.output = a.weights * a.v;
  return a;
}

struct TransformerBlock {
  int d = 0;
  int num_heads = 0;
  int d_k = 0;
  int ff_width = 0;
  std::vector<Mat> W_q, W_k, W_v; // per head, d x d_k
  Mat W_out;                      // d x d, applied to the concatenated heads
  RowVec b_out;
  Mat W_ff1; // d x ff
  RowVec b_ff1;
  Mat W_ff2; // ff x d
  RowVec b_ff2;
  RowVec ln1_gain, ln1_bias, ln2_gain, ln2_bias;

  TransformerBlock() = default;
  TransformerBlock(int model_dim, int heads, int ff)
      : d(model_dim), num_heads(heads), d_k(heads > 0 ? model_dim / heads : 0), ff_width(ff) {
    if (heads <= 0 || model_dim % heads != 0) throw ArgumentError("transformer: d must be a multiple of num_heads");
    for (int h = 0; h < heads; ++h) {
      W_q.push_back(Mat::Zero(d, d_k));
      W_k.push_back(Mat::Zero(d, d_k));
      W_v.push_back(Mat::Zero(d, d_k));
    }
    W_out = Mat::Zero(d, d);
    b_out = RowVec::Zero(d);
    W_ff1 = Mat::Zero(d, ff);
    b_ff1 = RowVec::Zero(ff);
    W_ff2 = Mat::Zero(ff, d);
    b_ff2 = RowVec::Zero(d);
    ln1_gain = RowVec::Ones(d);
    ln1_bias = RowVec::Zero(d);
    ln2_gain = RowVec::Ones(d);
    ln2_bias = RowVec::Zero(d);
  }

  void check() const {
    require_shape(d == num_heads * d_k, "transformer: d != num_heads * d_k");
    require_shape(static_cast<int>(W_q.size()) == num_heads && W_k.size() == W_q.size() && W_v.size() == W_q.size(),
                  "transformer: head count mismatch");
    for (int h = 0; h < num_heads; ++h)
      for (const Mat* w : {&W_q[h], &W_k[h], &W_v[h]})
        require_shape(w->rows() == d && w->cols() == d_k, "transformer: head projection shape mismatch");
    require_shape(W_out.rows() == d && W_out.cols() == d && b_out.size() == d, "transformer: output projection shape");
    require_shape(W_ff1.rows() == d && W_ff1.cols() == ff_width && b_ff1.size() == ff_width &&
                      W_ff2.rows() == ff_width && W_ff2.cols() == d && b_ff2.size() == d,
                  "transformer: feedforward shape");
  }
};

/// Heads concatenated along the feature axis, then the output projection.
inline Mat multi_head_attention(const Mat& x, const TransformerBlock& block,
                                std::vector<AttentionOutput>* heads = nullptr, Mat* concat = nullptr) {
  block.check();
  require_shape(x.cols() == block.d, "multi_head_attention: input width must equal d");
  Mat cat(x.rows(), block.d);
  for (int h = 0; h < block.num_heads; ++h) {
    AttentionOutput a = self_attention(x, block.W_q[h], block.W_k[h], block.W_v[h]);
    cat.middleCols(h * block.d_k, block.d_k) = a.output;
    if (heads) heads->push_back(std::move(a));
  }
  Mat out = (cat * block.W_out).rowwise() + block.b_out;
  if (concat) *concat = std::move(cat);
  return out;
}

// ---------------------------------------------------------------------------
// Layer normalization and feedforward nonlinearity

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Mat xhat;
  Vec inv_std;
};

inline Mat layer_norm(const Mat& x, const RowVec& gain, const RowVec& bias, LayerNormCache* cache = nullptr) {
  const auto d = static_cast<double>(x.cols());
  Vec mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Vec var = centered.array().square().rowwise().sum() / d;
  Vec inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
  Mat xhat = centered.array().colwise() * inv_std.array();
  Mat y = (xhat.array().rowwise() * gain.array()).matrix().rowwise() + bias;
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

inline Mat layer_norm_backward(const LayerNormCache& cache, const RowVec& gain, const Mat& dy, RowVec& d_gain,
                               RowVec& d_bias) {
  d_gain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  d_bias += dy.colwise().sum();
  Mat dxhat = dy.array().rowwise() * gain.array();
  Vec mean_dxhat = dxhat.rowwise().mean();
  Vec mean_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  Mat dx = dxhat.colwise() - mean_dxhat;
  dx -= (cache.xhat.array().colwise() * mean_dxhat_xhat.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

/// GELU, tanh form.
inline double gelu(double x) {
  constexpr double k = 0.7978845608028654; // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

inline double gelu_grad(double x) {
  constexpr double k = 0.7978845608028654;
  const double u = k * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * k * (1.0 + 3.0 * 0.044715 * x * x);
}

// ---------------------------------------------------------------------------
// Encoder block: y1 = LN(x + MHA(x)), y = LN(y1 + FF(y1)), FF(u) = gelu(u W1 + b1) W2 + b2.

struct BlockCache {
  Mat x;
  std::vector<AttentionOutput> heads;
  Mat concat;
  LayerNormCache ln1;
  Mat y1;
  Mat ff_pre; // y1 W1 + b1
  Mat ff_act;
  LayerNormCache ln2;
};

inline Mat block_forward(const TransformerBlock& blk, const Mat& x, BlockCache* cache = nullptr) {
  std::vector<AttentionOutput> heads;
  Mat concat;
  Mat attn = multi_head_attention(x, blk, cache ? &heads : nullptr, cache ? &concat : nullptr);
  LayerNormCache ln1;
  Mat y1 = layer_norm(x + attn, blk.ln1_gain, blk.ln1_bias, cache ? &ln1 : nullptr);
  Mat ff_pre = (y1 * blk.W_ff1).rowwise() + blk.b_ff1;
  Mat ff_act = ff_pre.unaryExpr([](double v) { return gelu(v); });
  Mat ff = (ff_act * blk.W_ff2).rowwise() + blk.b_ff2;
  LayerNormCache ln2;
  Mat y = layer_norm(y1 + ff, blk.ln2_gain, blk.ln2_bias, cache ? &ln2 : nullptr);
  if (cache) {
    cache->x = x;
    cache->heads = std::move(heads);
    cache->concat = std::move(concat);
    cache->ln1 = std::move(ln1);
    cache->y1 = std::move(y1);
    cache->ff_pre = std::move(ff_pre);
    cache->ff_act = std::move(ff_act);
    cache->ln2 = std::move(ln2);
  }
  return y;
}

/// Accumulates parameter gradients into `g` and returns dL/dx.
inline Mat block_backward(const TransformerBlock& blk, const BlockCache& cache, const Mat& dy, TransformerBlock& g) {
  // Second sublayer.
  Mat d_r2 = layer_norm_backward(cache.ln2, blk.ln2_gain, dy, g.ln2_gain, g.ln2_bias);
  g.W_ff2 += cache.ff_act.transpose() * d_r2;
  g.b_ff2 += d_r2.colwise().sum();
  Mat d_act = d_r2 * blk.W_ff2.transpose();
  Mat d_pre = d_act.array() * cache.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
  g.W_ff1 += cache.y1.transpose() * d_pre;
  g.b_ff1 += d_pre.colwise().sum();
  Mat d_y1 = d_r2 + d_pre * blk.W_ff1.transpose();

  // First sublayer.
  Mat d_r1 = layer_norm_backward(cache.ln1, blk.ln1_gain, d_y1, g.ln1_gain, g.ln1_bias);
  Mat dx = d_r1;
  g.W_out += cache.concat.transpose() * d_r1;
  g.b_out += d_r1.colwise().sum();
  Mat d_concat = d_r1 * blk.W_out.transpose();
  const double scale = 1.0 / std::sqrt(static_cast<double>(blk.d_k));
  for (int h = 0; h < blk.num_heads; ++h) {
    const AttentionOutput& a = cache.heads[static_cast<std::size_t>(h)];
    Mat d_o = d_concat.middleCols(h * blk.d_k, blk.d_k);
    Mat d_p = d_o * a.v.transpose();
    Mat d_v = a.weights.transpose() * d_o;
    Vec row_dot = (d_p.array() * a.weights.array()).rowwise().sum();
    Mat d_s = (a.weights.array() * (d_p.colwise() - row_dot).array()).matrix() * scale;
    Mat d_q = d_s * a.k;
    Mat d_k = d_s.transpose() * a.q;
    g.W_q[static_cast<std::size_t>(h)] += cache.x.transpose() * d_q;
    g.W_k[static_cast<std::size_t>(h)] += cache.x.transpose() * d_k;
    g.W_v[static_cast<std::size_t>(h)] += cache.x.transpose() * d_v;
    dx += d_q * blk.W_q[static_cast<std::size_t>(h)].transpose() + d_k * blk.W_k[static_cast<std::size_t>(h)].transpose() +
          d_v * blk.W_v[static_cast<std::size_t>(h)].transpose();
  }
  return dx;
}

} // namespace hrgc::nn
