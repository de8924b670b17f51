#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "recomb/error.hpp"

namespace recomb {

/// Dense square matrix acting on row vectors (measures): (mu P)(y) = sum_x mu(x) P(x, y).
class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  explicit StochasticMatrix(std::size_t size) : size_(size), entries_(size * size, 0.0) {}
  StochasticMatrix(std::size_t size, std::vector<double> entries) : size_(size), entries_(std::move(entries)) {
    if (entries_.size() != size * size) throw ValidationError("matrix entry count does not match its size");
  }

  static StochasticMatrix identity(std::size_t size) {
    StochasticMatrix m(size);
    for (std::size_t i = 0; i < size; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t size() const { return size_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * size_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return entries_[r * size_ + c]; }

  std::vector<double> left_multiply(std::span<const double> mu) const {
    if (mu.size() != size_) throw ValidationError("vector size does not match the matrix");
    std::vector<double> out(size_, 0.0);
    for (std::size_t r = 0; r < size_; ++r) {
      if (mu[r] == 0.0) continue;
      for (std::size_t c = 0; c < size_; ++c) out[c] += mu[r] * entries_[r * size_ + c];
    }
    return out;
  }

  /// Largest |row sum - 1|, or +inf if any entry lies outside [0, 1].
  double stochasticity_defect() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < size_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < size_; ++c) {
        const double v = entries_[r * size_ + c];
        if (!(v >= 0.0 && v <= 1.0)) return INFINITY;
        s += v;
      }
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

 private:
  std::size_t size_ = 0;
  std::vector<double> entries_;
};

}  // namespace recomb
