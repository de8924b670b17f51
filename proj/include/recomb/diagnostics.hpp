#pragma once

// Population-structure summaries: the law of the Hamming distance between two
// genomes, its exact prediction under the product stationary law, and the
// total-variation gap between the two.

#include <cmath>
#include <vector>

#include "recomb/error.hpp"
#include "recomb/finite_population.hpp"
#include "recomb/mutation_model.hpp"
#include "recomb/state_space.hpp"

namespace recomb {

/// Probabilities of Hamming distance d = 0..n.
using Histogram = std::vector<double>;

/// Law of d_H(X, Y) for X, Y independent draws from mu (exact double sum).
inline Histogram hamming_histogram(const Distribution& mu) {
  const auto& space = mu.space();
  Histogram h(static_cast<std::size_t>(space.length()) + 1, 0.0);
  for (GenomeIndex x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    for (GenomeIndex y = 0; y < mu.size(); ++y)
      h[static_cast<std::size_t>(hamming_distance(x, y, space))] += mu[x] * mu[y];
  }
  return h;
}

/// Distance law over all unordered pairs of distinct individuals.
inline Histogram hamming_histogram(const PopulationState& state) {
  if (state.size() < 2) throw ValidationError("a distance histogram needs at least two individuals");
  const auto& space = state.space();
  Histogram h(static_cast<std::size_t>(space.length()) + 1, 0.0);
  const auto& c = state.counts();
  for (GenomeIndex x = 0; x < c.size(); ++x) {
    if (c[x] == 0) continue;
    const auto cx = static_cast<double>(c[x]);
    h[0] += cx * (cx - 1.0) / 2.0;
    for (GenomeIndex y = x + 1; y < c.size(); ++y)
      if (c[y] != 0) h[static_cast<std::size_t>(hamming_distance(x, y, space))] += cx * static_cast<double>(c[y]);
  }
  const auto n = static_cast<double>(state.size());
  const double pairs = n * (n - 1.0) / 2.0;
  for (double& v : h) v /= pairs;
  return h;
}

/// Average of per-sample population histograms.
inline Histogram mean_hamming_histogram(const std::vector<PopulationState>& samples) {
  if (samples.empty()) throw PreconditionError("no samples to summarize");
  Histogram acc;
  for (const auto& s : samples) {
    const auto h = hamming_histogram(s);
    if (acc.empty()) acc.assign(h.size(), 0.0);
    for (std::size_t d = 0; d < h.size(); ++d) acc[d] += h[d];
  }
  for (double& v : acc) v /= static_cast<double>(samples.size());
  return acc;
}

/// Poisson-binomial law of the number of mismatching sites under q_Lambda,
/// where site i mismatches with probability 1 - sum_a q_i(a)^2.
inline Histogram product_law_hamming_prediction(const MutationModel& mut) {
  Histogram h{1.0};
  for (const auto& law : mut.site_laws()) {
    double match = 0.0;
    for (double p : law.probs()) match += p * p;
    Histogram next(h.size() + 1, 0.0);
    for (std::size_t d = 0; d < h.size(); ++d) {
      next[d] += h[d] * match;
      next[d + 1] += h[d] * (1.0 - match);
    }
    h = std::move(next);
  }
  return h;
}

/// Total variation between two distance histograms; 0 means indistinguishable
/// from the structureless product law at this summary.
inline double structure_score(const Histogram& observed, const Histogram& predicted) {
  if (observed.size() != predicted.size()) throw ValidationError("histograms have different supports");
  double s = 0.0;
  for (std::size_t d = 0; d < observed.size(); ++d) s += std::abs(observed[d] - predicted[d]);
  return std::min(1.0, 0.5 * s);
}

}  // namespace recomb
