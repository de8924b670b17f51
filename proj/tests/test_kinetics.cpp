#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "recomb/kinetics.hpp"
#include "recomb/random.hpp"

using namespace recomb;

namespace {

RecombinationModel interval_model(const Space& space, double kappa, double lambda = 1.0) {
  return RecombinationModel(space, kappa, interval_family(space.length(), 1, space.length()),
                            SimilaritySpec::exponential(lambda));
}

}  // namespace

TEST(TotalRhs, VanishesAtQLambda) {
  Rng rng(12);
  const Space space(2, 3);
  const auto mut = random_mutation_model(space, rng);
  const auto rec = interval_model(space, 2.0);
  for (double v : total_rhs(mut.q_lambda(), mut, rec)) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(TotalRhs, KappaZeroEqualsMutationPart) {
  Rng rng(13);
  const Space space(3, 2);
  const auto mut = random_mutation_model(space, rng);
  const auto rec = interval_model(space, 0.0);
  const auto mu = random_distribution(space, rng);
  EXPECT_EQ(total_rhs(mu, mut, rec), mutation_rhs(mu, mut));
}

TEST(TotalRhs, MatchesLiteralOracle) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Space space(2 + rng.below(2), 1 + static_cast<int>(rng.below(3)));
    const auto mut = random_mutation_model(space, rng);
    const RecombinationModel rec(space, rng.uniform(0.1, 2.0), all_subsets_family(space.length()),
                                 SimilaritySpec::exponential(rng.uniform(0.0, 2.0)));
    const auto mu = random_distribution(space, rng);
    const auto rhs = total_rhs(mu, mut, rec);
    const auto ref = oracle::total_rhs({mu.probs().begin(), mu.probs().end()}, mut, rec);
    EXPECT_LT(oracle::max_abs_diff(rhs, ref), 1e-12);
    double s = 0.0;
    for (double v : rhs) s += v;
    EXPECT_LT(std::abs(s), 1e-12);
  }
}

TEST(Integrate, StartsConvergedAtQLambda) {
  Rng rng(15);
  const Space space(2, 3);
  const auto mut = random_mutation_model(space, rng);
  const auto traj = integrate(mut.q_lambda(), mut, interval_model(space, 1.0), IntegratorConfig{});
  EXPECT_TRUE(traj.converged);
  EXPECT_EQ(traj.convergence_time, 0.0);
  ASSERT_EQ(traj.d_values.size(), 1u);
  EXPECT_LT(traj.d_values[0], 1e-15);
}

TEST(Integrate, TwoStateClosedForm) {
  const Space space(2, 1);
  const auto mut = MutationModel::replicated(space, SiteRateMatrix::symmetric(2, 1.0));
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.record_every = 100;
  cfg.fixed_point_eps = 1e-300;
  const auto traj = integrate(Distribution(space, {1.0, 0.0}), mut, interval_model(space, 0.0), cfg);
  const double expected = 0.5 * (1.0 + std::exp(-2.0));
  EXPECT_NEAR(traj.final_state[0], expected, 1e-9);
  EXPECT_NEAR(traj.final_state[1], 1.0 - expected, 1e-9);
  EXPECT_NEAR(traj.final_state[0], 0.5676676, 1e-7);
  EXPECT_EQ(traj.times.back(), 1.0);
  EXPECT_EQ(traj.times.size(), 11u);
}

TEST(Integrate, ConvergesWithDecreasingRelativeEntropy) {
  Rng rng(16);
  const Space space(2, 3);
  const auto mut = random_mutation_model(space, rng);
  const auto rec = interval_model(space, 1.0);
  const auto mu0 = random_distribution(space, rng);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 50.0;
  cfg.record_every = 100;
  const auto traj = integrate(mu0, mut, rec, cfg);
  EXPECT_LT(traj.l1_to_q.back(), 1e-8);
  for (std::size_t i = 1; i < traj.d_values.size(); ++i) {
    if (traj.d_values[i - 1] < 1e-14) break;
    EXPECT_LT(traj.d_values[i], traj.d_values[i - 1]);
  }
  EXPECT_TRUE(lyapunov_monotonicity_audit(traj).pass);

  // Halving dt moves the state at a fixed time by far less than the tolerance.
  cfg.t_max = 5.0;
  cfg.fixed_point_eps = 1e-300;
  const auto coarse = integrate(mu0, mut, rec, cfg);
  cfg.dt = 5e-4;
  const auto fine = integrate(mu0, mut, rec, cfg);
  EXPECT_LT(l1_distance(coarse.final_state, fine.final_state), 1e-8);
}

TEST(Integrate, FixedPointIsUniqueAcrossInitialLaws) {
  Rng rng(18);
  const Space space(3, 2);
  const auto mut = random_mutation_model(space, rng);
  const RecombinationModel rec(space, 3.0, all_subsets_family(2), SimilaritySpec::exponential(0.5));
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_max = 200.0;
  cfg.record_every = 1000;
  std::vector<Distribution> ends;
  for (int i = 0; i < 10; ++i) {
    const auto traj = integrate(random_distribution(space, rng), mut, rec, cfg);
    ASSERT_TRUE(traj.converged);
    ends.push_back(traj.final_state);
  }
  for (const auto& e : ends) {
    EXPECT_LT(l1_distance(e, mut.q_lambda()), 1e-6);
    EXPECT_LT(l1_distance(e, ends.front()), 1e-6);
  }
}

TEST(Integrate, KappaScheduleSwitchesIntensity) {
  Rng rng(19);
  const Space space(2, 2);
  const auto mut = random_mutation_model(space, rng);
  const auto rec = interval_model(space, 0.0);
  const auto mu0 = random_distribution(space, rng);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.fixed_point_eps = 1e-300;
  const auto plain = integrate(mu0, mut, rec, cfg);
  cfg.kappa_schedule = {{0.5, 5.0}};
  const auto switched = integrate(mu0, mut, rec, cfg);
  EXPECT_EQ(plain.d_values[400], switched.d_values[400]);
  EXPECT_GT(l1_distance(plain.final_state, switched.final_state), 1e-4);
  cfg.kappa_schedule = {{0.5, 1.0}, {0.2, 1.0}};
  EXPECT_THROW(integrate(mu0, mut, rec, cfg), ValidationError);
}

TEST(Integrate, PureRecombinationKeepsSiteMarginalsAndReachesTheirProduct) {
  Rng rng(61);
  const Space space(2, 3);
  const auto rec = interval_model(space, 1.0);
  const auto mu0 = random_distribution(space, rng);
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_max = 60.0;
  cfg.record_every = 10;
  const auto traj = integrate_recombination(mu0, rec, cfg);
  for (int i = 0; i < 3; ++i) {
    const auto mask = SubsetMask::from_positions({i}, 3);
    EXPECT_LT(l1_distance(marginalize(traj.final_state, mask), marginalize(mu0, mask)), 1e-12);
  }
  EXPECT_LT(traj.l1_to_q.back(), 1e-8);
  EXPECT_TRUE(lyapunov_monotonicity_audit(traj).pass);
}

TEST(Integrate, RejectsUnstableStep) {
  const Space space(2, 1);
  const auto mut = MutationModel::replicated(space, SiteRateMatrix::symmetric(2, 100.0));
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.t_max = 5.0;
  EXPECT_THROW(integrate(Distribution(space, {1.0, 0.0}), mut, interval_model(space, 0.0), cfg), NumericError);
  cfg.dt = -1.0;
  EXPECT_THROW(integrate(Distribution(space, {1.0, 0.0}), mut, interval_model(space, 0.0), cfg), ValidationError);
}

TEST(RelativeEntropyRate, ZeroAtStationaryLaw) {
  Rng rng(20);
  const auto mut = random_mutation_model(Space(3, 2), rng);
  EXPECT_LT(std::abs(relative_entropy_rate_mutation(mut.q_lambda(), mut)), 1e-15);
}

TEST(RelativeEntropyRate, TwoStateMatchesFiniteDifference) {
  const Space space(2, 1);
  const auto mut = MutationModel::replicated(space, SiteRateMatrix::symmetric(2, 1.0));
  const Distribution p(space, {0.75, 0.25});
  EXPECT_LT(relative_entropy_rate_mutation(p, mut), 0.0);
  const auto [fd, mid] = centered_entropy_rate(p, mut);
  const double closed = relative_entropy_rate_mutation(mid, mut);
  EXPECT_LT(std::abs(closed - fd) / std::abs(fd), 1e-6);
  // For this chain dD/dt = -(p0 - p1) ln(p0 / p1).
  EXPECT_NEAR(relative_entropy_rate_mutation(p, mut), -0.5 * std::log(3.0), 1e-14);
}

TEST(RelativeEntropyRate, NegativeAwayFromStationarity) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Space space(2 + rng.below(2), 1 + static_cast<int>(rng.below(3)));
    const auto mut = random_mutation_model(space, rng);
    // Mix toward q to probe small deviations as well.
    const auto raw = random_distribution(space, rng);
    const double eps = std::pow(10.0, -rng.uniform(0.0, 5.0));
    std::vector<double> mix(space.size());
    for (std::size_t x = 0; x < mix.size(); ++x) mix[x] = (1 - eps) * mut.q_lambda()[x] + eps * raw[x];
    const Distribution p(space, mix);
    const double rate = relative_entropy_rate_mutation(p, mut);
    EXPECT_LE(rate, 0.0);
    if (l1_distance(p, mut.q_lambda()) > 1e-6) {
      EXPECT_LT(rate, -1e-15);
    }
  }
}

TEST(RelativeEntropyRate, InfiniteDescentFromBoundary) {
  const Space space(2, 1);
  const auto mut = MutationModel::replicated(space, SiteRateMatrix::symmetric(2, 1.0));
  EXPECT_EQ(relative_entropy_rate_mutation(Distribution(space, {1.0, 0.0}), mut),
            -std::numeric_limits<double>::infinity());
}

TEST(RelativeEntropyContraction, EqualityCases) {
  Rng rng(3);
  auto [p, pi] = random_reversible_chain(8, rng);
  const auto at_hat = verify_lemma1(p, pi, pi);
  EXPECT_TRUE(at_hat.pass);
  EXPECT_NEAR(at_hat.lhs, 0.0, 1e-15);
  EXPECT_NEAR(at_hat.rhs, 0.0, 1e-15);
  const auto mu = random_distribution(Space(8, 1), rng);
  const auto id = verify_lemma1(StochasticMatrix::identity(8), pi, mu);
  EXPECT_EQ(id.lhs, id.rhs);
}

TEST(RelativeEntropyContraction, StrictContractionForReversibleChain) {
  Rng rng(3);
  auto [p, pi] = random_reversible_chain(8, rng);
  const auto r = verify_lemma1(p, pi, random_distribution(Space(8, 1), rng));
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.slack, 0.0);
}

TEST(RelativeEntropyContraction, Preconditions) {
  Rng rng(4);
  auto [p, pi] = random_reversible_chain(4, rng);
  const auto other = random_distribution(Space(4, 1), rng);
  EXPECT_THROW(verify_lemma1(p, other, other), PreconditionError);
  StochasticMatrix broken(4);
  EXPECT_THROW(verify_lemma1(broken, pi, pi), PreconditionError);
}

TEST(EntropyChain, ProductOverSplitIsInvariant) {
  Rng rng(22);
  const Space space(2, 3);
  const auto mask = SubsetMask::from_positions({0, 1}, 3);
  const auto a = random_distribution(Space(2, 2), rng);
  const auto b = random_distribution(Space(2, 1), rng);
  std::vector<double> mu(8);
  for (GenomeIndex x = 0; x < 8; ++x) mu[x] = a[x >> 1] * b[x & 1];
  const RecombinationModel rec(space, 1.0, interval_family(3, 1, 3), SimilaritySpec::exponential(1.0));
  const auto r = verify_entropy_chain(Distribution(space, mu), mask, rec, 0.05);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.h_slack, 0.0, 1e-15);
}

TEST(EntropyChain, ZeroSimilarityIsIdentity) {
  Rng rng(23);
  const Space space(2, 3);
  const RecombinationModel rec(space, 1.0, interval_family(3, 1, 3), SimilaritySpec::constant(0.0));
  const auto r = verify_entropy_chain(random_distribution(space, rng), SubsetMask(0b101, 3), rec, 0.05);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.h_slack, 0.0);
  EXPECT_EQ(r.cross_residual, 0.0);
}

TEST(EntropyChain, SeededExampleHasPositiveSlack) {
  Rng rng(5);
  const Space space(2, 3);
  const RecombinationModel rec(space, 1.0, interval_family(3, 1, 3), SimilaritySpec::exponential(1.0));
  // Mask {0,1}: bits for positions 0 and 1.
  const auto r = verify_entropy_chain(random_distribution(space, rng), SubsetMask::from_positions({0, 1}, 3), rec, 0.05);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.cross_residual, 1e-12);
  EXPECT_GT(r.h_slack, 0.0);
  ASSERT_TRUE(r.contraction.has_value());
  EXPECT_GT(r.contraction->slack, 0.0);
}

TEST(MonotonicityAudit, ConstantAndMutationOnlyTrajectories) {
  Rng rng(24);
  const Space space(2, 2);
  const auto mut = random_mutation_model(space, rng);
  TrajectoryRecord flat;
  flat.d_values = {0.0, 0.0, 0.0};
  const auto r = lyapunov_monotonicity_audit(flat);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_increase, 0.0);

  IntegratorConfig cfg;
  cfg.t_max = 20.0;
  cfg.record_every = 10;
  const auto traj = integrate(random_distribution(space, rng), mut, interval_model(space, 0.0), cfg);
  EXPECT_TRUE(lyapunov_monotonicity_audit(traj).pass);

  TrajectoryRecord bump;
  bump.d_values = {1.0, 0.5, 0.6, 0.1};
  const auto b = lyapunov_monotonicity_audit(bump);
  EXPECT_FALSE(b.pass);
  EXPECT_EQ(b.worst_step, 2u);
  EXPECT_NEAR(b.max_increase, 0.1, 1e-15);
  TrajectoryRecord single;
  single.d_values = {1.0};
  EXPECT_THROW(lyapunov_monotonicity_audit(single), PreconditionError);
}
