#pragma once

// Per-site continuous-time mutation chains and the linear part of the kinetic
// equation.

#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "recomb/error.hpp"
#include "recomb/state_space.hpp"

namespace recomb {

/// Infinitesimal matrix of a single-site chain: entry (a, b), a != b, is the
/// intensity of a -> b; diagonal entries make rows sum to zero.
class SiteRateMatrix {
 public:
  SiteRateMatrix() = default;

  /// Full k x k matrix, row-major, stored as given (validate() checks it).
  SiteRateMatrix(std::size_t k, std::vector<double> entries) : k_(k), entries_(std::move(entries)) {
    if (k < 2) throw ValidationError("rate matrix must be at least 2x2");
    if (entries_.size() != k * k)
      throw ValidationError("rate matrix needs " + std::to_string(k * k) + " entries");
  }

  /// Builds the matrix from its off-diagonal part; the diagonal of `rows` is
  /// ignored and replaced by minus the row sum.
  static SiteRateMatrix from_off_diagonal(const std::vector<std::vector<double>>& rows) {
    const auto k = rows.size();
    std::vector<double> entries(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      if (rows[a].size() != k) throw ValidationError("rate matrix is not square");
      double out = 0.0;
      for (std::size_t b = 0; b < k; ++b) {
        if (a == b) continue;
        entries[a * k + b] = rows[a][b];
        out += rows[a][b];
      }
      entries[a * k + a] = -out;
    }
    return SiteRateMatrix(k, std::move(entries));
  }

  /// Every off-diagonal intensity equal to `rate`.
  static SiteRateMatrix symmetric(std::size_t k, double rate) {
    std::vector<std::vector<double>> rows(k, std::vector<double>(k, rate));
    return from_off_diagonal(rows);
  }

  std::size_t k() const { return k_; }
  double operator()(std::size_t a, std::size_t b) const { return entries_[a * k_ + b]; }
  std::span<const double> entries() const { return entries_; }

  /// Total exit intensity of state a.
  double exit_rate(std::size_t a) const { return -entries_[a * k_ + a]; }

 private:
  std::size_t k_ = 0;
  std::vector<double> entries_;
};

struct ValidationReport {
  bool ok = true;
  std::optional<int> site;
  std::string message;
};

namespace detail {

inline bool reaches_all(const SiteRateMatrix& m, bool forward) {
  const auto k = m.k();
  std::vector<bool> seen(k, false);
  std::queue<std::size_t> todo;
  seen[0] = true;
  todo.push(0);
  while (!todo.empty()) {
    const auto a = todo.front();
    todo.pop();
    for (std::size_t b = 0; b < k; ++b) {
      const double r = forward ? m(a, b) : m(b, a);
      if (b != a && r > 0.0 && !seen[b]) {
        seen[b] = true;
        todo.push(b);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

inline ValidationReport check_site(const SiteRateMatrix& m) {
  const auto k = m.k();
  for (std::size_t a = 0; a < k; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      const double r = m(a, b);
      if (!std::isfinite(r)) return {false, std::nullopt, "non-finite rate"};
      if (a != b && r < 0.0) return {false, std::nullopt, "negative off-diagonal rate"};
      row += r;
    }
    if (std::abs(row) > 1e-12)
      return {false, std::nullopt, "row " + std::to_string(a) + " sums to " + std::to_string(row)};
  }
  // Strongly connected iff state 0 reaches everything and is reached from everything.
  if (!reaches_all(m, true) || !reaches_all(m, false))
    return {false, std::nullopt, "rate graph is not strongly connected"};
  return {};
}

}  // namespace detail

/// Checks row sums, non-negativity and strong connectivity of every site.
inline ValidationReport validate(std::span<const SiteRateMatrix> sites, std::size_t k, int n) {
  if (sites.size() != static_cast<std::size_t>(n))
    return {false, std::nullopt,
            "expected " + std::to_string(n) + " site matrices, got " + std::to_string(sites.size())};
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].k() != k) return {false, static_cast<int>(i), "site matrix has the wrong alphabet size"};
    auto report = detail::check_site(sites[i]);
    if (!report.ok) {
      report.site = static_cast<int>(i);
      report.message = "site " + std::to_string(i) + ": " + report.message;
      return report;
    }
  }
  return {};
}

/// Stationary law q of a connected chain: the probability vector with qA = 0.
///
/// Solves A^T q = 0 with the last equation replaced by sum(q) = 1, using
/// partially pivoted elimination plus one refinement step.
inline Distribution site_stationary(const SiteRateMatrix& alpha) {
  const auto k = alpha.k();
  double scale = 0.0;
  for (double r : alpha.entries()) scale = std::max(scale, std::abs(r));
  if (scale == 0.0) throw NumericError("rate matrix is identically zero");

  // System rows: equation j is sum_a q_a alpha(a, j) = 0, normalized by scale.
  std::vector<double> sys(k * k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t a = 0; a < k; ++a)
      sys[j * k + a] = (j + 1 == k) ? 1.0 : alpha(a, j) / scale;
  std::vector<double> rhs(k, 0.0);
  rhs[k - 1] = 1.0;

  const auto solve = [k](std::vector<double> m, std::vector<double> b) {
    for (std::size_t col = 0; col < k; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < k; ++r)
        if (std::abs(m[r * k + col]) > std::abs(m[piv * k + col])) piv = r;
      if (std::abs(m[piv * k + col]) < 1e-300) throw NumericError("singular stationary system");
      if (piv != col) {
        for (std::size_t c = 0; c < k; ++c) std::swap(m[piv * k + c], m[col * k + c]);
        std::swap(b[piv], b[col]);
      }
      for (std::size_t r = col + 1; r < k; ++r) {
        const double f = m[r * k + col] / m[col * k + col];
        if (f == 0.0) continue;
        for (std::size_t c = col; c < k; ++c) m[r * k + c] -= f * m[col * k + c];
        b[r] -= f * b[col];
      }
    }
    std::vector<double> x(k);
    for (std::size_t r = k; r-- > 0;) {
      double s = b[r];
      for (std::size_t c = r + 1; c < k; ++c) s -= m[r * k + c] * x[c];
      x[r] = s / m[r * k + r];
    }
    return x;
  };

  auto q = solve(sys, rhs);
  std::vector<double> resid(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) s += sys[j * k + a] * q[a];
    resid[j] = rhs[j] - s;
  }
  const auto corr = solve(sys, resid);
  for (std::size_t a = 0; a < k; ++a) q[a] += corr[a];

  for (double v : q)
    if (!(v > 0.0)) throw NumericError("stationary law is not strictly positive");
  double sum = 0.0;
  for (double v : q) sum += v;
  for (double& v : q) v /= sum;

  double worst = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) s += q[a] * alpha(a, j);
    worst = std::max(worst, std::abs(s));
  }
  if (worst > 1e-12 * std::max(1.0, scale))
    throw NumericError("stationary residual " + std::to_string(worst) + " too large");
  return Distribution(Space(k, 1), std::move(q));
}

/// Independent mutation chains at every position, with their stationary laws
/// and the product law q_Lambda computed at construction.
class MutationModel {
 public:
  MutationModel(const Space& space, std::vector<SiteRateMatrix> sites)
      : space_(space), sites_(std::move(sites)) {
    const auto report = validate(sites_, space_.k(), space_.length());
    if (!report.ok) throw ValidationError("invalid mutation model: " + report.message);
    site_laws_.reserve(sites_.size());
    for (const auto& s : sites_) site_laws_.push_back(site_stationary(s));
    q_ = product_measure(space_, site_laws_);
    exit_rates_.assign(space_.size(), 0.0);
    for (GenomeIndex x = 0; x < space_.size(); ++x)
      for (int pos = 0; pos < space_.length(); ++pos)
        exit_rates_[x] += site(pos).exit_rate(static_cast<std::size_t>(space_.digit(x, pos)));
  }

  /// The same chain at every position.
  static MutationModel replicated(const Space& space, const SiteRateMatrix& alpha) {
    return MutationModel(space, std::vector<SiteRateMatrix>(static_cast<std::size_t>(space.length()), alpha));
  }

  const Space& space() const { return space_; }
  const SiteRateMatrix& site(int pos) const { return sites_[static_cast<std::size_t>(pos)]; }
  const std::vector<SiteRateMatrix>& sites() const { return sites_; }
  const Distribution& site_law(int pos) const { return site_laws_[static_cast<std::size_t>(pos)]; }
  const std::vector<Distribution>& site_laws() const { return site_laws_; }
  const Distribution& q_lambda() const { return q_; }

  /// Total mutation intensity out of genome x.
  double exit_rate(GenomeIndex x) const { return exit_rates_[x]; }

 private:
  Space space_;
  std::vector<SiteRateMatrix> sites_;
  std::vector<Distribution> site_laws_;
  Distribution q_;
  std::vector<double> exit_rates_;
};

inline ValidationReport validate(const MutationModel& model) {
  return validate(model.sites(), model.space().k(), model.space().length());
}

inline const Distribution& q_lambda(const MutationModel& model) { return model.q_lambda(); }

/// Mutation part of the kinetic equation, accumulated into `out`.
namespace detail {

template <class Real>
void add_mutation_flow(const Real* mu, const MutationModel& model, Real* out) {
  const auto& space = model.space();
  const auto k = space.k();
  for (GenomeIndex x = 0; x < space.size(); ++x) {
    const Real p = mu[x];
    if (p == 0) continue;
    for (int pos = 0; pos < space.length(); ++pos) {
      const auto& alpha = model.site(pos);
      const auto a = static_cast<std::size_t>(space.digit(x, pos));
      const auto stride = space.stride(pos);
      const auto base = x - a * stride;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const Real flow = static_cast<Real>(alpha(a, b)) * p;
        out[base + b * stride] += flow;
        out[x] -= flow;
      }
    }
  }
}

}  // namespace detail

inline void add_mutation_rhs(std::span<const double> mu, const MutationModel& model, std::span<double> out) {
  detail::add_mutation_flow(mu.data(), model, out.data());
}

inline Table mutation_rhs(const Distribution& mu, const MutationModel& model) {
  if (!(mu.space() == model.space())) throw ValidationError("distribution and model live on different spaces");
  Table out(mu.size(), 0.0);
  add_mutation_rhs(mu.probs(), model, out);
  return out;
}

}  // namespace recomb
