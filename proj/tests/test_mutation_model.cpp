#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "recomb/mutation_model.hpp"
#include "recomb/random.hpp"

using namespace recomb;

namespace {

// Null space of A^T by full-pivot LU, normalized to a probability vector.
std::vector<double> null_space_stationary(const SiteRateMatrix& alpha) {
  const auto k = static_cast<Eigen::Index>(alpha.k());
  Eigen::MatrixXd at(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) at(b, a) = alpha(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(at);
  lu.setThreshold(1e-10);
  const Eigen::VectorXd v = lu.kernel().col(0);
  const double s = v.sum();
  std::vector<double> out(static_cast<std::size_t>(k));
  for (Eigen::Index a = 0; a < k; ++a) out[static_cast<std::size_t>(a)] = v(a) / s;
  return out;
}

}  // namespace

TEST(MutationValidate, Examples) {
  const auto sym = SiteRateMatrix::symmetric(2, 1.0);
  EXPECT_TRUE(validate(std::vector{sym}, 2, 1).ok);

  const auto one_way = SiteRateMatrix::from_off_diagonal({{0, 1}, {0, 0}});
  const auto r = validate(std::vector{sym, one_way}, 2, 2);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.site.has_value());
  EXPECT_EQ(*r.site, 1);

  const SiteRateMatrix bad_rows(2, {-1.0, 1.0, 1.0, -1.0 + 1e-3});
  EXPECT_FALSE(validate(std::vector{bad_rows}, 2, 1).ok);

  const SiteRateMatrix negative(2, {1.0, -1.0, 1.0, -1.0});
  EXPECT_FALSE(validate(std::vector{negative}, 2, 1).ok);

  EXPECT_FALSE(validate(std::vector{sym}, 2, 2).ok);  // wrong site count
  EXPECT_THROW(MutationModel(Space(2, 1), std::vector{one_way}), ValidationError);
}

TEST(MutationValidate, ConnectivityNeedsBothDirections) {
  // 0 -> 1 -> 2 -> 0 cycle is strongly connected; dropping 2 -> 0 is not.
  const auto cycle = SiteRateMatrix::from_off_diagonal({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  EXPECT_TRUE(validate(std::vector{cycle}, 3, 1).ok);
  const auto chain = SiteRateMatrix::from_off_diagonal({{0, 1, 0}, {0, 0, 1}, {0, 0, 0}});
  EXPECT_FALSE(validate(std::vector{chain}, 3, 1).ok);
  // Tiny but positive rates still connect.
  const auto weak = SiteRateMatrix::from_off_diagonal({{0, 1e-300}, {1, 0}});
  EXPECT_TRUE(validate(std::vector{weak}, 2, 1).ok);
}

TEST(SiteStationary, Examples) {
  for (double c : {0.1, 1.0, 7.5}) {
    const auto q = site_stationary(SiteRateMatrix::symmetric(2, c));
    EXPECT_NEAR(q[0], 0.5, 1e-15);
    EXPECT_NEAR(q[1], 0.5, 1e-15);
  }
  const auto q = site_stationary(SiteRateMatrix::from_off_diagonal({{0, 2}, {1, 0}}));
  EXPECT_NEAR(q[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(q[1], 2.0 / 3, 1e-15);
}

TEST(SiteStationary, MatchesNullSpaceOracle) {
  Rng rng(42);
  const auto alpha = random_rate_matrix(4, rng);
  const auto q = site_stationary(alpha);
  const auto ref = null_space_stationary(alpha);
  for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(q[a], ref[a], 1e-10);
}

TEST(SiteStationary, PositiveWithSmallResidualOnRandomChains) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(7);
    // Sparse random chains: keep a cycle so the graph stays connected.
    std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
    for (std::size_t a = 0; a < k; ++a) {
      rows[a][(a + 1) % k] = rng.uniform(0.01, 3.0);
      for (std::size_t b = 0; b < k; ++b)
        if (b != a && rng.uniform() < 0.3) rows[a][b] = rng.uniform(0.0, 3.0);
    }
    const auto alpha = SiteRateMatrix::from_off_diagonal(rows);
    const auto q = site_stationary(alpha);
    const auto ref = null_space_stationary(alpha);
    for (std::size_t b = 0; b < k; ++b) {
      EXPECT_GT(q[b], 0.0);
      EXPECT_NEAR(q[b], ref[b], 1e-10);
      double s = 0.0;
      for (std::size_t a = 0; a < k; ++a) s += q[a] * alpha(a, b);
      EXPECT_LT(std::abs(s), 1e-12);
    }
  }
}

TEST(QLambda, Examples) {
  const auto uni = MutationModel::replicated(Space(3, 2), SiteRateMatrix::symmetric(3, 0.7));
  for (double p : q_lambda(uni).probs()) EXPECT_NEAR(p, 1.0 / 9, 1e-15);

  const MutationModel m(Space(2, 2), {SiteRateMatrix::from_off_diagonal({{0, 2}, {1, 0}}),
                                      SiteRateMatrix::symmetric(2, 1.0)});
  const double expected[] = {1.0 / 6, 1.0 / 6, 1.0 / 3, 1.0 / 3};
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(m.q_lambda()[x], expected[x], 1e-15);
}

TEST(QLambda, IsStationaryForRandomModel) {
  Rng rng(7);
  const auto model = random_mutation_model(Space(3, 3), rng);
  for (double v : mutation_rhs(model.q_lambda(), model)) EXPECT_LT(std::abs(v), 1e-12);
  for (double p : model.q_lambda().probs()) EXPECT_GT(p, 0.0);
}

TEST(MutationRhs, SingleSiteExample) {
  const auto model = MutationModel::replicated(Space(2, 1), SiteRateMatrix::symmetric(2, 1.0));
  const auto rhs = mutation_rhs(Distribution(Space(2, 1), {1.0, 0.0}), model);
  EXPECT_DOUBLE_EQ(rhs[0], -1.0);
  EXPECT_DOUBLE_EQ(rhs[1], 1.0);
}

TEST(MutationRhs, MatchesTermByTermOracle) {
  Rng rng(11);
  const Space space(2, 2);
  const auto model = random_mutation_model(space, rng);
  const auto mu = random_distribution(space, rng);
  const auto rhs = mutation_rhs(mu, model);
  const auto ref = oracle::mutation_rhs({mu.probs().begin(), mu.probs().end()}, model);
  EXPECT_LT(oracle::max_abs_diff(rhs, ref), 1e-12);
}

TEST(MutationRhs, ConservationAndLinearity) {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const Space space(2 + rng.below(2), 1 + static_cast<int>(rng.below(3)));
    const auto model = random_mutation_model(space, rng);
    const auto mu = random_distribution(space, rng);
    const auto nu = random_distribution(space, rng);
    const double a = rng.uniform();
    std::vector<double> mix(space.size());
    for (std::size_t x = 0; x < mix.size(); ++x) mix[x] = a * mu[x] + (1 - a) * nu[x];
    const auto r_mu = mutation_rhs(mu, model);
    const auto r_nu = mutation_rhs(nu, model);
    const auto r_mix = mutation_rhs(Distribution(space, mix), model);
    double total = 0.0;
    for (std::size_t x = 0; x < mix.size(); ++x) {
      total += r_mu[x];
      EXPECT_NEAR(r_mix[x], a * r_mu[x] + (1 - a) * r_nu[x], 1e-12);
    }
    EXPECT_LT(std::abs(total), 1e-12);
    const auto oracle_rhs = oracle::mutation_rhs(mix, model);
    EXPECT_LT(oracle::max_abs_diff(r_mix, oracle_rhs), 1e-12);
  }
}
