#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hrgc/neural/kernels.hpp"
#include "hrgc/rng.hpp"

namespace hrgc::nn {
namespace {

Mat random_mat(RandomStream& rng, Eigen::Index r, Eigen::Index c, double sd = 0.5) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, sd);
  return m;
}

RowVec random_row(RandomStream& rng, Eigen::Index n, double sd = 0.5) { return random_mat(rng, 1, n, sd); }

LstmCell random_cell(RandomStream& rng, int in, int hidden) {
  LstmCell c(in, hidden);
  for (Mat* w : {&c.W_f, &c.W_i, &c.W_c, &c.W_o}) *w = random_mat(rng, hidden, hidden + in);
  for (RowVec* b : {&c.b_f, &c.b_i, &c.b_c, &c.b_o}) *b = random_row(rng, hidden);
  return c;
}

TransformerBlock random_block(RandomStream& rng, int d, int heads, int ff) {
  TransformerBlock b(d, heads, ff);
  for (int h = 0; h < heads; ++h) {
    b.W_q[h] = random_mat(rng, d, b.d_k);
    b.W_k[h] = random_mat(rng, d, b.d_k);
    b.W_v[h] = random_mat(rng, d, b.d_k);
  }
  b.W_out = random_mat(rng, d, d);
  b.b_out = random_row(rng, d);
  b.W_ff1 = random_mat(rng, d, ff);
  b.b_ff1 = random_row(rng, ff);
  b.W_ff2 = random_mat(rng, ff, d);
  b.b_ff2 = random_row(rng, d);
  b.ln1_gain = RowVec::Ones(d) + random_row(rng, d, 0.1);
  b.ln1_bias = random_row(rng, d, 0.1);
  b.ln2_gain = RowVec::Ones(d) + random_row(rng, d, 0.1);
  b.ln2_bias = random_row(rng, d, 0.1);
  return b;
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

// --- LSTM -----------------------------------------------------------------

TEST(LstmStep, ZeroParametersGiveHalfGatesAndZeroState) {
  LstmCell cell(3, 4);
  auto s = lstm_step(cell, Vec::Zero(4), Vec::Zero(4), Vec::Constant(3, 2.5));
  for (const Vec* g : {&s.forget, &s.input, &s.output})
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_EQ((*g)(k), 0.5);
  EXPECT_EQ(s.candidate, Vec::Zero(4));
  EXPECT_EQ(s.cell, Vec::Zero(4));
  EXPECT_EQ(s.hidden, Vec::Zero(4));
}

TEST(LstmStep, ClosedFormWithCarriedCell) {
  // C = 0.5 * 1 + 0.5 * tanh(0) = 0.5; h = 0.5 * tanh(0.5).
  LstmCell cell(2, 1);
  auto s = lstm_step(cell, Vec::Zero(1), Vec::Ones(1), Vec::Zero(2));
  EXPECT_DOUBLE_EQ(s.cell(0), 0.5);
  EXPECT_NEAR(s.hidden(0), 0.23105857863000487, 1e-15);

  // Candidate bias -1 from zero state: C = 0.5 tanh(-1).
  cell.b_c(0) = -1.0;
  auto t = lstm_step(cell, Vec::Zero(1), Vec::Zero(1), Vec::Zero(2));
  EXPECT_NEAR(t.cell(0), -0.3807970779778824, 1e-15);
  EXPECT_NEAR(t.hidden(0), 0.5 * std::tanh(-0.3807970779778824), 1e-15);
}

TEST(LstmStep, ShapeErrors) {
  LstmCell cell(2, 3);
  EXPECT_THROW(lstm_step(cell, Vec::Zero(3), Vec::Zero(3), Vec::Zero(5)), ShapeError);
  EXPECT_THROW(lstm_step(cell, Vec::Zero(2), Vec::Zero(3), Vec::Zero(2)), ShapeError);
  cell.W_f = Mat::Zero(2, 2);
  EXPECT_THROW(lstm_step(cell, Vec::Zero(3), Vec::Zero(3), Vec::Zero(2)), ShapeError);
}

TEST(LstmForward, MatchesRepeatedSteps) {
  RandomStream rng(1);
  LstmCell cell = random_cell(rng, 3, 5);
  Mat x = random_mat(rng, 9, 3, 1.0);
  Mat hs = lstm_forward(cell, x);
  Vec h = Vec::Zero(5), c = Vec::Zero(5);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    auto s = lstm_step(cell, h, c, x.row(t).transpose());
    h = s.hidden;
    c = s.cell;
    for (Eigen::Index k = 0; k < 5; ++k) EXPECT_NEAR(hs(t, k), h(k), 1e-14);
  }
}

TEST(LstmBackward, MatchesFiniteDifferences) {
  RandomStream rng(2);
  LstmCell cell = random_cell(rng, 3, 4);
  Mat x = random_mat(rng, 7, 3, 1.0);
  Mat r = random_mat(rng, 7, 4, 1.0);
  auto loss = [&](const LstmCell& c, const Mat& in) { return (lstm_forward(c, in).array() * r.array()).sum(); };

  LstmCache cache;
  lstm_forward(cell, x, &cache);
  LstmCell grad(3, 4);
  Mat dx = lstm_backward(cell, cache, r, grad);

  const double eps = 1e-5; // balances O(eps^2) truncation against round-off
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      Mat up = x, down = x;
      up(t, k) += eps;
      down(t, k) -= eps;
      EXPECT_LT(rel_err(dx(t, k), (loss(cell, up) - loss(cell, down)) / (2 * eps)), 1e-6);
    }
  Mat LstmCell::*weights[] = {&LstmCell::W_f, &LstmCell::W_i, &LstmCell::W_c, &LstmCell::W_o};
  for (auto w : weights)
    for (Eigen::Index i = 0; i < (cell.*w).size(); ++i) {
      LstmCell up = cell, down = cell;
      (up.*w).data()[i] += eps;
      (down.*w).data()[i] -= eps;
      EXPECT_LT(rel_err((grad.*w).data()[i], (loss(up, x) - loss(down, x)) / (2 * eps)), 1e-6);
    }
  RowVec LstmCell::*biases[] = {&LstmCell::b_f, &LstmCell::b_i, &LstmCell::b_c, &LstmCell::b_o};
  for (auto b : biases)
    for (Eigen::Index i = 0; i < (cell.*b).size(); ++i) {
      LstmCell up = cell, down = cell;
      (up.*b)(i) += eps;
      (down.*b)(i) -= eps;
      EXPECT_LT(rel_err((grad.*b)(i), (loss(up, x) - loss(down, x)) / (2 * eps)), 1e-6);
    }
}

// --- Positional encoding ---------------------------------------------------

TEST(PositionalEncoding, KnownValues) {
  Mat pe = positional_encoding(3, 4);
  EXPECT_EQ(pe(0, 0), 0.0);
  EXPECT_EQ(pe(0, 1), 1.0);
  EXPECT_NEAR(pe(1, 0), 0.8414709848078965, 1e-15);
  EXPECT_NEAR(pe(1, 1), std::cos(1.0), 1e-15);
  EXPECT_NEAR(pe(2, 2), std::sin(2.0 / 100.0), 1e-15);
  EXPECT_NEAR(pe(2, 3), std::cos(2.0 / 100.0), 1e-15);
}

TEST(PositionalEncoding, PointwiseAgainstExtendedPrecision) {
  const Eigen::Index T = 2500, d = 32;
  Mat pe = positional_encoding(T, d);
  double worst = 0.0;
  for (Eigen::Index p = 0; p < T; ++p)
    for (Eigen::Index l = 0; l < d / 2; ++l) {
      const long double angle = static_cast<long double>(p) / std::pow(10000.0L, 2.0L * l / d);
      worst = std::max(worst, std::abs(pe(p, 2 * l) - static_cast<double>(std::sin(angle))));
      worst = std::max(worst, std::abs(pe(p, 2 * l + 1) - static_cast<double>(std::cos(angle))));
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(PositionalEncoding, RejectsOddWidth) {
  EXPECT_THROW(positional_encoding(4, 3), ArgumentError);
  EXPECT_THROW(positional_encoding(0, 4), ArgumentError);
}

// --- Attention ---------------------------------------------------------------

TEST(Attention, RowsAreProbabilityDistributions) {
  RandomStream rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index T = 1 + static_cast<Eigen::Index>(rng.below(40));
    Mat x = random_mat(rng, T, 8, 2.0);
    auto a = self_attention(x, random_mat(rng, 8, 4, 2.0), random_mat(rng, 8, 4, 2.0), random_mat(rng, 8, 4));
    for (Eigen::Index i = 0; i < T; ++i) {
      EXPECT_NEAR(a.weights.row(i).sum(), 1.0, 1e-6);
      EXPECT_GE(a.weights.row(i).minCoeff(), 0.0);
    }
  }
}

TEST(Attention, ZeroQueriesAverageValues) {
  RandomStream rng(4);
  Mat x = random_mat(rng, 6, 4);
  Mat wv = random_mat(rng, 4, 2);
  auto a = self_attention(x, Mat::Zero(4, 2), random_mat(rng, 4, 2), wv);
  Mat v = x * wv;
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(a.output(i, k), v.col(k).mean(), 1e-14);
}

TEST(Attention, ScaledByKeyWidth) {
  // Two one-hot tokens with identity projections and d_k = 2: scores are {1, 0} / sqrt(2).
  Mat x = Mat::Identity(2, 2);
  auto a = self_attention(x, Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2));
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(a.weights(0, 0), std::exp(s) / (std::exp(s) + 1.0), 1e-15);
  EXPECT_NEAR(a.weights(1, 0), 1.0 / (1.0 + std::exp(s)), 1e-15);
  EXPECT_NEAR(a.output(0, 0), a.weights(0, 0), 1e-15);
}

TEST(Attention, PermutationEquivariant) {
  RandomStream rng(5);
  const Eigen::Index T = 12;
  Mat x = random_mat(rng, T, 8);
  TransformerBlock blk = random_block(rng, 8, 2, 16);
  std::vector<int> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  Mat px(T, 8);
  for (Eigen::Index i = 0; i < T; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  Mat y = block_forward(blk, x), py = block_forward(blk, px);
  for (Eigen::Index i = 0; i < T; ++i)
    for (Eigen::Index k = 0; k < 8; ++k) EXPECT_NEAR(py(i, k), y(perm[static_cast<std::size_t>(i)], k), 1e-12);
}

TEST(Attention, SingleHeadEqualsSelfAttention) {
  RandomStream rng(6);
  TransformerBlock blk = random_block(rng, 6, 1, 4);
  blk.W_out = Mat::Identity(6, 6);
  blk.b_out = RowVec::Zero(6);
  Mat x = random_mat(rng, 5, 6);
  Mat mha = multi_head_attention(x, blk);
  Mat single = self_attention(x, blk.W_q[0], blk.W_k[0], blk.W_v[0]).output;
  EXPECT_LT((mha - single).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Attention, ShapeErrors) {
  EXPECT_THROW(TransformerBlock(6, 4, 8), ArgumentError);
  TransformerBlock blk(8, 2, 4);
  EXPECT_THROW(multi_head_attention(Mat::Zero(3, 6), blk), ShapeError);
  EXPECT_THROW(self_attention(Mat::Zero(3, 4), Mat::Zero(4, 2), Mat::Zero(4, 3), Mat::Zero(4, 2)), ShapeError);
}

// --- Layer norm, GELU, encoder block ----------------------------------------

TEST(LayerNorm, ZeroMeanUnitVariance) {
  RandomStream rng(7);
  Mat x = random_mat(rng, 4, 10, 3.0);
  Mat y = layer_norm(x, RowVec::Ones(10), RowVec::Zero(10));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(y.row(i).mean(), 0.0, 1e-12);
    const double var = (y.row(i).array() - y.row(i).mean()).square().mean();
    const double xv = (x.row(i).array() - x.row(i).mean()).square().mean();
    EXPECT_NEAR(var, xv / (xv + kLayerNormEps), 1e-12);
  }
}

TEST(Gelu, KnownValuesAndDerivative) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(10.0), 10.0, 1e-12);
  EXPECT_NEAR(gelu(-10.0), 0.0, 1e-12);
  for (double x = -4; x <= 4; x += 0.37)
    EXPECT_NEAR(gelu_grad(x), (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6, 1e-8);
}

TEST(Block, BackwardMatchesFiniteDifferences) {
  RandomStream rng(8);
  TransformerBlock blk = random_block(rng, 8, 2, 12);
  Mat x = random_mat(rng, 5, 8, 1.0);
  Mat r = random_mat(rng, 5, 8, 1.0);
  auto loss = [&](const TransformerBlock& b, const Mat& in) { return (block_forward(b, in).array() * r.array()).sum(); };
  BlockCache cache;
  block_forward(blk, x, &cache);
  TransformerBlock g(8, 2, 12);
  g.ln1_gain.setZero();
  g.ln2_gain.setZero();
  Mat dx = block_backward(blk, cache, r, g);

  const double eps = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Mat up = x, down = x;
    up.data()[i] += eps;
    down.data()[i] -= eps;
    worst = std::max(worst, rel_err(dx.data()[i], (loss(blk, up) - loss(blk, down)) / (2 * eps)));
  }
  auto check = [&](auto member, auto grad_member) {
    for (Eigen::Index i = 0; i < (blk.*member).size(); ++i) {
      TransformerBlock up = blk, down = blk;
      (up.*member).data()[i] += eps;
      (down.*member).data()[i] -= eps;
      worst = std::max(worst, rel_err((g.*grad_member).data()[i], (loss(up, x) - loss(down, x)) / (2 * eps)));
    }
  };
  check(&TransformerBlock::W_out, &TransformerBlock::W_out);
  check(&TransformerBlock::W_ff1, &TransformerBlock::W_ff1);
  check(&TransformerBlock::W_ff2, &TransformerBlock::W_ff2);
  check(&TransformerBlock::b_out, &TransformerBlock::b_out);
  check(&TransformerBlock::b_ff1, &TransformerBlock::b_ff1);
  check(&TransformerBlock::ln1_gain, &TransformerBlock::ln1_gain);
  check(&TransformerBlock::ln2_bias, &TransformerBlock::ln2_bias);
  for (int h = 0; h < 2; ++h)
    for (Eigen::Index i = 0; i < blk.W_q[h].size(); ++i)
      for (auto proj : {&TransformerBlock::W_q, &TransformerBlock::W_k, &TransformerBlock::W_v}) {
        TransformerBlock up = blk, down = blk;
        (up.*proj)[h].data()[i] += eps;
        (down.*proj)[h].data()[i] -= eps;
        worst = std::max(worst, rel_err((g.*proj)[h].data()[i], (loss(up, x) - loss(down, x)) / (2 * eps)));
      }
  EXPECT_LT(worst, 1e-5);
}

} // namespace
} // namespace hrgc::nn
