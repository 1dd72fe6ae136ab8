#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "hrgc/error.hpp"

namespace hrgc::nn {

namespace detail {
inline void check_lengths(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw ShapeError("metric: prediction length " + std::to_string(pred.size()) + " differs from truth length " +
                     std::to_string(truth.size()));
  if (pred.empty()) throw ShapeError("metric: empty sequences");
}
} // namespace detail

/// sqrt(mean((pred - truth)^2))
inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  detail::check_lengths(pred, truth);
  double acc = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) acc += (pred[j] - truth[j]) * (pred[j] - truth[j]);
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

/// mean(|pred - truth|)
inline double mae(std::span<const double> pred, std::span<const double> truth) {
  detail::check_lengths(pred, truth);
  double acc = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) acc += std::abs(pred[j] - truth[j]);
  return acc / static_cast<double>(pred.size());
}

} // namespace hrgc::nn
