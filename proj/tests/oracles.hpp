#pragma once

// Brute-force reference computations used only by the tests. They work on
// explicit digit vectors and never call the library's index arithmetic.

#include <cmath>
#include <vector>

#include "recomb/mutation_model.hpp"
#include "recomb/recombination_model.hpp"

namespace oracle {

using Digits = std::vector<int>;

inline std::size_t power(std::size_t k, int n) {
  std::size_t p = 1;
  for (int i = 0; i < n; ++i) p *= k;
  return p;
}

inline Digits to_digits(std::size_t x, std::size_t k, int n) {
  Digits d(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    d[static_cast<std::size_t>(i)] = static_cast<int>(x % k);
    x /= k;
  }
  return d;
}

inline std::size_t from_digits(const Digits& d, std::size_t k) {
  std::size_t x = 0;
  for (int v : d) x = x * k + static_cast<std::size_t>(v);
  return x;
}

inline Digits restrict(const Digits& x, const std::vector<int>& positions) {
  Digits out;
  for (int p : positions) out.push_back(x[static_cast<std::size_t>(p)]);
  return out;
}

/// phi evaluated from its definition on explicit substrings.
inline double phi(const recomb::SimilaritySpec& spec, const Digits& a, const Digits& b, std::size_t k) {
  using Kind = recomb::SimilaritySpec::Kind;
  if (spec.kind() == Kind::constant) return spec.parameter();
  if (spec.kind() == Kind::exponential_decay) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return std::exp(-spec.parameter() * d);
  }
  const recomb::Space sub(k, static_cast<int>(a.size()));
  return spec(from_digits(a, k), from_digits(b, k), sub);
}

/// Mutation sum of the kinetic equation, term by term.
inline std::vector<double> mutation_rhs(const std::vector<double>& mu, const recomb::MutationModel& model) {
  const auto k = model.space().k();
  const int n = model.space().length();
  std::vector<double> out(mu.size(), 0.0);
  for (std::size_t xi = 0; xi < mu.size(); ++xi) {
    const auto x = to_digits(xi, k, n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (std::size_t yi = 0; yi < k; ++yi) {
        if (static_cast<int>(yi) == x[static_cast<std::size_t>(i)]) continue;
        auto z = x;
        z[static_cast<std::size_t>(i)] = static_cast<int>(yi);
        const auto xi_letter = static_cast<std::size_t>(x[static_cast<std::size_t>(i)]);
        s += model.site(i)(yi, xi_letter) * mu[from_digits(z, k)] - model.site(i)(xi_letter, yi) * mu[xi];
      }
    }
    out[xi] = s;
  }
  return out;
}

/// Marginal probability that the substring on `positions` equals `target`.
inline double marginal(const std::vector<double>& mu, const std::vector<int>& positions, const Digits& target,
                       std::size_t k, int n) {
  double s = 0.0;
  for (std::size_t z = 0; z < mu.size(); ++z)
    if (restrict(to_digits(z, k, n), positions) == target) s += mu[z];
  return s;
}

/// Recombination sum of the kinetic equation, evaluated literally: for every
/// genome, every family member and every candidate substring y_I.
inline std::vector<double> recombination_rhs(const std::vector<double>& mu, const recomb::RecombinationModel& rec) {
  const auto k = rec.space().k();
  const int n = rec.space().length();
  std::vector<double> out(mu.size(), 0.0);
  for (std::size_t xi = 0; xi < mu.size(); ++xi) {
    const auto x = to_digits(xi, k, n);
    double s = 0.0;
    for (const auto& member : rec.family()) {
      const auto positions = member.mask.positions();
      const int m = static_cast<int>(positions.size());
      if (m == 0) continue;
      const auto x_sub = restrict(x, positions);
      const double mu_x_sub = marginal(mu, positions, x_sub, k, n);
      double term = 0.0;
      for (std::size_t yi = 0; yi < power(k, m); ++yi) {
        const auto y_sub = to_digits(yi, k, m);
        auto spliced = x;
        for (int j = 0; j < m; ++j) spliced[static_cast<std::size_t>(positions[static_cast<std::size_t>(j)])] =
            y_sub[static_cast<std::size_t>(j)];
        term += phi(rec.similarity(), y_sub, x_sub, k) * mu_x_sub * mu[from_digits(spliced, k)] -
                phi(rec.similarity(), x_sub, y_sub, k) * marginal(mu, positions, y_sub, k, n) * mu[xi];
      }
      s += rec.kappa() * member.weight * term;
    }
    out[xi] = s;
  }
  return out;
}

inline std::vector<double> total_rhs(const std::vector<double>& mu, const recomb::MutationModel& mut,
                                     const recomb::RecombinationModel& rec) {
  auto a = mutation_rhs(mu, mut);
  const auto b = recombination_rhs(mu, rec);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
  return w;
}

}  // namespace oracle
