#pragma once

// Deterministic mean-field kinetics: the full right-hand side, a fixed-step
// RK4 integrator with Lyapunov monitoring, and numerical checks of the
// entropy inequalities behind convergence to q_Lambda.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recomb/error.hpp"
#include "recomb/mutation_model.hpp"
#include "recomb/recombination_model.hpp"
#include "recomb/state_space.hpp"
#include "recomb/stochastic_matrix.hpp"

namespace recomb {

/// kappa switches to `kappa` from time `start` on (piecewise constant).
struct KappaStep {
  double start = 0.0;
  double kappa = 0.0;
};

struct IntegratorConfig {
  double dt = 1e-3;
  double t_max = 10.0;
  std::size_t record_every = 1;
  double fixed_point_eps = 1e-10;
  double renorm_tol = kNormTolerance;
  bool keep_snapshots = false;
  std::vector<KappaStep> kappa_schedule;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("integrator dt must be positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("integrator t_max must be positive");
    if (!(fixed_point_eps > 0.0)) throw ValidationError("fixed_point_eps must be positive");
    if (record_every == 0) throw ValidationError("record_every must be at least 1");
    if (!(renorm_tol > 0.0)) throw ValidationError("renorm_tol must be positive");
    for (std::size_t i = 0; i < kappa_schedule.size(); ++i) {
      if (!(kappa_schedule[i].kappa >= 0.0)) throw ValidationError("scheduled kappa must be >= 0");
      if (i > 0 && !(kappa_schedule[i].start > kappa_schedule[i - 1].start))
        throw ValidationError("kappa schedule times must be increasing");
    }
  }

  double kappa_at(double t, double base) const {
    double kappa = base;
    for (const auto& s : kappa_schedule)
      if (s.start <= t) kappa = s.kappa;
    return kappa;
  }
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> h_values;
  std::vector<double> d_values;
  std::vector<double> l1_to_q;
  std::vector<Distribution> snapshots;
  bool converged = false;
  double convergence_time = std::numeric_limits<double>::quiet_NaN();
  std::size_t steps = 0;
  Distribution final_state;
};

inline void add_total_rhs(std::span<const double> mu, const MutationModel& mut, const RecombinationModel& rec,
                          std::span<double> out) {
  add_mutation_rhs(mu, mut, out);
  add_recombination_rhs(mu, rec, out);
}

/// Mutation plus recombination right-hand side of the kinetic equation.
inline Table total_rhs(const Distribution& mu, const MutationModel& mut, const RecombinationModel& rec) {
  if (!(mu.space() == mut.space()) || !(mu.space() == rec.space()))
    throw ValidationError("distribution and models live on different spaces");
  Table out(mu.size(), 0.0);
  add_total_rhs(mu.probs(), mut, rec, out);
  return out;
}

namespace detail {

inline double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

/// Clamps round-off negativity and restores unit mass after a step.
inline void project_to_simplex(std::vector<double>& mu, double renorm_tol, double t) {
  double sum = 0.0;
  for (double& p : mu) {
    if (!std::isfinite(p)) throw NumericError("non-finite state at t = " + std::to_string(t));
    if (p < 0.0) {
      if (p < -1e-13)
        throw NumericError("integration unstable at t = " + std::to_string(t) + " (entry " + std::to_string(p) +
                           "); reduce dt");
      p = 0.0;
    }
    sum += p;
  }
  const double drift = std::abs(sum - 1.0);
  if (drift > kNormHardLimit)
    throw NumericError("mass drifted to " + std::to_string(sum) + " at t = " + std::to_string(t) + "; reduce dt");
  if (drift > renorm_tol)
    for (double& p : mu) p /= sum;
}

/// RK4 driver shared by the public entry points; `mut` may be null and `q` is
/// the reference law for D and the l1 column.
inline TrajectoryRecord integrate_flow(const Distribution& mu0, const MutationModel* mut, const RecombinationModel& rec,
                                       const IntegratorConfig& cfg, const Distribution& q) {
  cfg.validate();
  if (!(mu0.space() == rec.space()) || (mut && !(mu0.space() == mut->space())))
    throw ValidationError("initial law and models live on different spaces");

  const auto n_states = mu0.size();
  const auto total_steps = static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
  TrajectoryRecord traj;

  std::vector<double> mu(mu0.probs().begin(), mu0.probs().end());
  std::vector<double> k1(n_states), k2(n_states), k3(n_states), k4(n_states), stage(n_states);

  double kappa = cfg.kappa_at(0.0, rec.kappa());
  RecombinationModel active = rec.with_kappa(kappa);

  const auto record = [&](double t) {
    Distribution d(mu0.space(), mu);
    traj.times.push_back(t);
    traj.h_values.push_back(neg_entropy(d));
    traj.d_values.push_back(relative_entropy(d, q));
    traj.l1_to_q.push_back(l1_distance(d, q));
    if (cfg.keep_snapshots) traj.snapshots.push_back(d);
  };

  const auto eval = [&](std::span<const double> x, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (mut) add_mutation_rhs(x, *mut, out);
    add_recombination_rhs(x, active, out);
  };

  std::size_t step = 0;
  for (;; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    const double kappa_now = cfg.kappa_at(t, rec.kappa());
    if (kappa_now != kappa) {
      kappa = kappa_now;
      active = rec.with_kappa(kappa);
    }
    eval(mu, k1);
    const bool at_fixed_point = detail::l1_norm(k1) < cfg.fixed_point_eps;
    const bool last = step == total_steps;
    if (step % cfg.record_every == 0 || at_fixed_point || last) record(t);
    if (at_fixed_point) {
      traj.converged = true;
      traj.convergence_time = t;
      break;
    }
    if (last) break;

    const double h = cfg.dt;
    for (std::size_t x = 0; x < n_states; ++x) stage[x] = mu[x] + 0.5 * h * k1[x];
    eval(stage, k2);
    for (std::size_t x = 0; x < n_states; ++x) stage[x] = mu[x] + 0.5 * h * k2[x];
    eval(stage, k3);
    for (std::size_t x = 0; x < n_states; ++x) stage[x] = mu[x] + h * k3[x];
    eval(stage, k4);
    for (std::size_t x = 0; x < n_states; ++x)
      mu[x] += h / 6.0 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]);
    detail::project_to_simplex(mu, cfg.renorm_tol, t + h);
  }
  traj.steps = step;
  traj.final_state = Distribution(mu0.space(), mu);
  return traj;
}

}  // namespace detail

/// Classical fixed-step RK4 integration of the kinetic equation from mu0.
///
/// Stops early once ||rhs||_1 < fixed_point_eps. H, D(.|q) and the l1 distance
/// to q are recorded at t = 0, every `record_every` steps and at the last step.
inline TrajectoryRecord integrate(const Distribution& mu0, const MutationModel& mut, const RecombinationModel& rec,
                                  const IntegratorConfig& cfg) {
  return detail::integrate_flow(mu0, &mut, rec, cfg, mut.q_lambda());
}

/// Pure recombination flow. Site marginals are conserved, so D and the l1
/// column are taken against the product of mu0's site marginals.
inline TrajectoryRecord integrate_recombination(const Distribution& mu0, const RecombinationModel& rec,
                                                const IntegratorConfig& cfg) {
  const auto& space = mu0.space();
  std::vector<Distribution> sites;
  for (int i = 0; i < space.length(); ++i) sites.push_back(marginalize(mu0, SubsetMask::from_positions({i}, space.length())));
  return detail::integrate_flow(mu0, nullptr, rec, cfg, product_measure(space, sites));
}

namespace detail {

/// r ln r - r + 1 >= 0, accurate near r = 1.
inline double bregman_kernel(double r) {
  const double u = r - 1.0;
  if (std::abs(u) < 1e-2) {
    double term = u * u;
    double s = 0.0;
    double sign = 1.0;
    for (int j = 2; j <= 10; ++j) {
      s += sign * term / (j * (j - 1.0));
      term *= u;
      sign = -sign;
    }
    return s;
  }
  if (r == 0.0) return 1.0;
  return r * std::log(r) - r + 1.0;
}

}  // namespace detail

/// Closed-form dD(p|q)/dt under the pure mutation flow:
/// -sum_{x,y} (g ln g - g + 1) q_x a(x,y) f_y with f = p/q and g = f_x / f_y.
inline double relative_entropy_rate_mutation(const Distribution& p, const MutationModel& mut) {
  if (!(p.space() == mut.space())) throw ValidationError("distribution and model live on different spaces");
  const auto& space = mut.space();
  const auto& q = mut.q_lambda();
  double sum = 0.0;
  for (GenomeIndex x = 0; x < space.size(); ++x) {
    const double fx = p[x] / q[x];
    for (int pos = 0; pos < space.length(); ++pos) {
      const auto& alpha = mut.site(pos);
      const auto a = static_cast<std::size_t>(space.digit(x, pos));
      for (std::size_t b = 0; b < space.k(); ++b) {
        if (b == a) continue;
        const auto y = space.with_digit(x, pos, static_cast<int>(b));
        const double fy = p[y] / q[y];
        const double w = q[x] * alpha(a, b);
        if (fy == 0.0) {
          if (fx > 0.0 && w > 0.0) return -std::numeric_limits<double>::infinity();
          continue;
        }
        sum += w * fy * detail::bregman_kernel(fx / fy);
      }
    }
  }
  return -sum;
}

/// dD/dt by a centered difference of D along the kappa = 0 flow: two RK4
/// steps of size h from p, with the rate belonging to the midpoint state.
///
/// The flow and the difference D(end) - D(start) are computed in long double,
/// term by term, so round-off stays far below the truncation error. With h = 0
/// the step is chosen so that no entry of p moves by more than 1e-5 of its
/// value, capped at 1e-5.
inline std::pair<double, Distribution> centered_entropy_rate(const Distribution& p, const MutationModel& mut,
                                                             double h = 0.0) {
  using Real = long double;
  const auto n_states = p.size();
  if (h == 0.0) {
    const auto drift = mutation_rhs(p, mut);
    double fastest = 0.0;
    for (GenomeIndex x = 0; x < n_states; ++x)
      if (p[x] > 0.0) fastest = std::max(fastest, std::abs(drift[x]) / p[x]);
    h = fastest > 0.0 ? std::min(1e-5, 1e-5 / fastest) : 1e-5;
  }
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");

  const auto rk4_step = [&](const std::vector<Real>& from) {
    std::vector<Real> k1(n_states, 0), k2(n_states, 0), k3(n_states, 0), k4(n_states, 0), stage(n_states);
    const Real step = h;
    detail::add_mutation_flow(from.data(), mut, k1.data());
    for (std::size_t x = 0; x < n_states; ++x) stage[x] = from[x] + step / 2 * k1[x];
    detail::add_mutation_flow(stage.data(), mut, k2.data());
    for (std::size_t x = 0; x < n_states; ++x) stage[x] = from[x] + step / 2 * k2[x];
    detail::add_mutation_flow(stage.data(), mut, k3.data());
    for (std::size_t x = 0; x < n_states; ++x) stage[x] = from[x] + step * k3[x];
    detail::add_mutation_flow(stage.data(), mut, k4.data());
    std::vector<Real> to(n_states);
    for (std::size_t x = 0; x < n_states; ++x) to[x] = from[x] + step / 6 * (k1[x] + 2 * k2[x] + 2 * k3[x] + k4[x]);
    return to;
  };

  const std::vector<Real> a(p.probs().begin(), p.probs().end());
  const auto mid = rk4_step(a);
  const auto b = rk4_step(mid);
  const auto& q = mut.q_lambda();
  Real delta = 0;
  for (GenomeIndex x = 0; x < n_states; ++x) {
    const Real qx = q[x];
    if (a[x] > 0 && b[x] > 0)
      delta += (b[x] - a[x]) * std::log(a[x] / qx) + b[x] * std::log1p((b[x] - a[x]) / a[x]);
    else if (b[x] > 0)
      delta += b[x] * std::log(b[x] / qx);
    else if (a[x] > 0)
      delta -= a[x] * std::log(a[x] / qx);
  }
  std::vector<double> mid_state(mid.begin(), mid.end());
  return {static_cast<double>(delta / (2 * static_cast<Real>(h))),
          Distribution::from_weights(p.space(), std::move(mid_state))};
}

struct ContractionReport {
  double lhs = 0.0;    // D(mu P | mu_hat)
  double rhs = 0.0;    // D(mu | mu_hat)
  double slack = 0.0;  // rhs - lhs
  bool pass = false;
};

inline constexpr double kInequalitySlack = 1e-12;
inline constexpr double kEqualityTolerance = 1e-10;

namespace detail {

inline double divergence(std::span<const double> mu, std::span<const double> ref) {
  double d = 0.0;
  for (std::size_t x = 0; x < mu.size(); ++x)
    if (mu[x] > 0.0) d += mu[x] * std::log(mu[x] / ref[x]);
  return d;
}

inline double neg_entropy(std::span<const double> mu) {
  double h = 0.0;
  for (double p : mu)
    if (p > 0.0) h += p * std::log(p);
  return h;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace detail

/// Contraction of relative entropy under a stochastic matrix with invariant
/// law mu_hat: D(mu P | mu_hat) <= D(mu | mu_hat).
inline ContractionReport verify_lemma1(const StochasticMatrix& p, const Distribution& mu_hat, const Distribution& mu) {
  if (p.size() != mu_hat.size() || p.size() != mu.size())
    throw ValidationError("matrix and distributions have different sizes");
  if (p.stochasticity_defect() > 1e-12) throw PreconditionError("matrix is not row-stochastic");
  for (double v : mu_hat.probs())
    if (!(v > 0.0)) throw PreconditionError("invariant law must be strictly positive");
  const auto moved_hat = p.left_multiply(mu_hat.probs());
  if (detail::max_abs_diff(moved_hat, mu_hat.probs()) > 1e-10)
    throw PreconditionError("mu_hat is not invariant under the matrix");

  const auto moved = p.left_multiply(mu.probs());
  ContractionReport r;
  r.lhs = detail::divergence(moved, mu_hat.probs());
  r.rhs = detail::divergence(mu.probs(), mu_hat.probs());
  r.slack = r.rhs - r.lhs;
  r.pass = r.slack >= -kInequalitySlack;
  return r;
}

struct EntropyChainReport {
  // sum ln(mu_hat) (mu P) against sum ln(mu_hat) mu: must be equal.
  double cross_after = 0.0;
  double cross_before = 0.0;
  double cross_residual = 0.0;
  // H(mu P) <= H(mu).
  double h_after = 0.0;
  double h_before = 0.0;
  double h_slack = 0.0;
  // Largest change of the I- and complement marginals under P.
  double marginal_residual = 0.0;
  // max |mu_hat P - mu_hat|.
  double invariance_residual = 0.0;
  std::optional<ContractionReport> contraction;
  bool pass = false;
};

/// mu_hat(x) = mu_{rest}(x_rest) * mu_I(x_I).
inline Distribution split_product(const Distribution& mu, const SubsetIndexer& ix) {
  const auto mu_i = marginalize(mu, ix);
  const auto mu_c = marginalize(mu, SubsetIndexer(mu.space(), ix.mask().complement()));
  std::vector<double> hat(mu.size());
  for (GenomeIndex x = 0; x < mu.size(); ++x) hat[x] = mu_c[ix.comp_index(x)] * mu_i[ix.sub_index(x)];
  return Distribution(mu.space(), std::move(hat));
}

/// max |mu_hat P - mu_hat| for the I-kernel; non-zero only for asymmetric phi.
inline double invariance_violation(const Distribution& mu, const SubsetMask& mask, const RecombinationModel& rec,
                                   double dt) {
  const SubsetIndexer ix(mu.space(), mask);
  const auto p = transition_matrix(mu, mask, rec, dt);
  const auto hat = split_product(mu, ix);
  return detail::max_abs_diff(p.left_multiply(hat.probs()), hat.probs());
}

/// Checks the entropy chain of one I-recombination step: the cross term with
/// ln mu_hat is conserved, H does not increase and both marginals are kept.
inline EntropyChainReport verify_entropy_chain(const Distribution& mu, const SubsetMask& mask,
                                               const RecombinationModel& rec, double dt) {
  if (!rec.similarity().symmetric() || rec.similarity().allow_asymmetric())
    throw PreconditionError("entropy checks require a symmetric similarity without the allow-asymmetric flag");
  const SubsetIndexer ix(mu.space(), mask);
  const auto p = transition_matrix(mu, mask, rec, dt);
  const auto hat = split_product(mu, ix);
  const auto moved = p.left_multiply(mu.probs());

  EntropyChainReport r;
  for (GenomeIndex x = 0; x < mu.size(); ++x) {
    if (hat[x] <= 0.0) continue;
    const double l = std::log(hat[x]);
    r.cross_after += l * moved[x];
    r.cross_before += l * mu[x];
  }
  r.cross_residual = std::abs(r.cross_after - r.cross_before);
  r.h_after = detail::neg_entropy(moved);
  r.h_before = neg_entropy(mu);
  r.h_slack = r.h_before - r.h_after;

  const Distribution moved_law(mu.space(), moved);
  const SubsetIndexer cx(mu.space(), mask.complement());
  r.marginal_residual =
      std::max(detail::max_abs_diff(marginalize(moved_law, ix).probs(), marginalize(mu, ix).probs()),
               detail::max_abs_diff(marginalize(moved_law, cx).probs(), marginalize(mu, cx).probs()));
  r.invariance_residual = detail::max_abs_diff(p.left_multiply(hat.probs()), hat.probs());

  const bool hat_positive = std::all_of(hat.probs().begin(), hat.probs().end(), [](double v) { return v > 0.0; });
  if (hat_positive) r.contraction = verify_lemma1(p, hat, mu);

  r.pass = r.cross_residual < kEqualityTolerance && r.h_slack >= -kInequalitySlack &&
           r.marginal_residual < 1e-12 && r.invariance_residual < kEqualityTolerance &&
           (!r.contraction || r.contraction->pass);
  return r;
}

struct MonotonicityReport {
  bool pass = true;
  double max_increase = 0.0;
  std::size_t worst_step = 0;  // index of the record where the largest increase ends
};

inline constexpr double kMonotonicityBudget = 1e-10;

/// D along the trajectory must be non-increasing up to `budget` per record.
inline MonotonicityReport lyapunov_monotonicity_audit(const TrajectoryRecord& traj,
                                                      double budget = kMonotonicityBudget) {
  if (traj.d_values.size() < 2) throw PreconditionError("monotonicity audit needs at least two records");
  MonotonicityReport r;
  for (std::size_t i = 1; i < traj.d_values.size(); ++i) {
    const double inc = traj.d_values[i] - traj.d_values[i - 1];
    if (inc > r.max_increase) {
      r.max_increase = inc;
      r.worst_step = i;
    }
  }
  r.pass = r.max_increase < budget;
  return r;
}

}  // namespace recomb
