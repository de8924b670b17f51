#pragma once

// Seedable, splittable random streams and generators for seeded random
// model instances (used by audits, tests and the CLI).

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "recomb/mutation_model.hpp"
#include "recomb/recombination_model.hpp"
#include "recomb/state_space.hpp"
#include "recomb/stochastic_matrix.hpp"

namespace recomb {

/// 64-bit Mersenne Twister with library-defined conversions to doubles, so a
/// seed reproduces the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(mix(seed, stream)) {}

  /// Independent child stream `index` of a seed.
  static Rng stream(std::uint64_t seed, std::uint64_t index) { return Rng(seed, index + 1); }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) { return -std::log(uniform_open_low()) / rate; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return v % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

/// Every off-diagonal intensity uniform in [lo, hi] (hence strongly connected).
inline SiteRateMatrix random_rate_matrix(std::size_t k, Rng& rng, double lo = 0.1, double hi = 2.0) {
  std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (a != b) rows[a][b] = rng.uniform(lo, hi);
  return SiteRateMatrix::from_off_diagonal(rows);
}

inline MutationModel random_mutation_model(const Space& space, Rng& rng, double lo = 0.1, double hi = 2.0) {
  std::vector<SiteRateMatrix> sites;
  for (int i = 0; i < space.length(); ++i) sites.push_back(random_rate_matrix(space.k(), rng, lo, hi));
  return MutationModel(space, std::move(sites));
}

/// Flat-Dirichlet sample: strictly positive with probability one.
inline Distribution random_distribution(const Space& space, Rng& rng) {
  std::vector<double> w(space.size());
  for (double& v : w) v = -std::log(rng.uniform_open_low()) + 1e-300;
  return Distribution::from_weights(space, std::move(w));
}

/// Metropolis chain on `size` states reversible with respect to a random
/// positive law. Returns the matrix and that law.
inline std::pair<StochasticMatrix, Distribution> random_reversible_chain(std::size_t size, Rng& rng) {
  const auto pi = random_distribution(Space(size, 1), rng);
  std::vector<double> sym(size * size, 0.0);
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t b = a + 1; b < size; ++b) sym[a * size + b] = sym[b * size + a] = rng.uniform();
  StochasticMatrix p(size);
  for (std::size_t a = 0; a < size; ++a) {
    double moved = 0.0;
    for (std::size_t b = 0; b < size; ++b) {
      if (a == b) continue;
      p(a, b) = sym[a * size + b] * std::min(1.0, pi[b] / pi[a]) / static_cast<double>(size);
      moved += p(a, b);
    }
    p(a, a) = 1.0 - moved;
  }
  return {std::move(p), pi};
}

inline SubsetMask random_nonempty_mask(int n, Rng& rng) {
  const auto bits = 1 + rng.below((std::uint64_t{1} << n) - 1);
  return SubsetMask(bits, n);
}

/// Symmetric similarity table with entries uniform in [0, 1] on substrings of
/// every length 1..max_length.
inline SimilaritySpec random_symmetric_table(std::size_t k, int max_length, Rng& rng) {
  std::vector<SimilaritySpec::Entry> entries;
  for (int m = 1; m <= max_length; ++m) {
    const Space sub(k, m);
    for (std::size_t a = 0; a < sub.size(); ++a) {
      for (std::size_t b = a; b < sub.size(); ++b) {
        const double v = rng.uniform();
        entries.push_back({m, a, b, v});
        if (b != a) entries.push_back({m, b, a, v});
      }
    }
  }
  return SimilaritySpec::table(entries);
}

}  // namespace recomb
