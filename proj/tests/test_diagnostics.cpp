#include <gtest/gtest.h>

#include <cmath>

#include "recomb/diagnostics.hpp"
#include "recomb/random.hpp"

using namespace recomb;

namespace {

void expect_histogram(const Histogram& got, const Histogram& want, double tol = 1e-15) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t d = 0; d < want.size(); ++d) EXPECT_NEAR(got[d], want[d], tol) << "d=" << d;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

TEST(HammingHistogram, PointMassHasNoSpread) {
  const Space space(3, 3);
  expect_histogram(hamming_histogram(Distribution::point_mass(space, 17)), {1, 0, 0, 0});
}

TEST(HammingHistogram, SmallLaws) {
  const Space space(2, 2);
  expect_histogram(hamming_histogram(Distribution::uniform(space)), {0.25, 0.5, 0.25});
  expect_histogram(hamming_histogram(Distribution(space, {0.5, 0, 0, 0.5})), {0.5, 0, 0.5});
  expect_histogram(hamming_histogram(Distribution(Space(2, 1), {1.0 / 3, 2.0 / 3})), {5.0 / 9, 4.0 / 9}, 1e-15);
}

TEST(HammingHistogram, UniformIsBinomial) {
  const Space space(2, 4);
  Histogram want;
  for (int d = 0; d <= 4; ++d) want.push_back(binomial(4, d) / 16.0);
  expect_histogram(hamming_histogram(Distribution::uniform(space)), want);
}

TEST(HammingHistogram, ProductLawMatchesPrediction) {
  Rng rng(50);
  for (auto [k, n] : {std::pair{2, 1}, {2, 5}, {3, 3}, {4, 4}, {2, 12}, {4, 6}, {3, 7}}) {
    const Space space(static_cast<std::size_t>(k), n);
    const auto mut = random_mutation_model(space, rng);
    const auto h = hamming_histogram(mut.q_lambda());
    const auto pred = product_law_hamming_prediction(mut);
    ASSERT_EQ(h.size(), pred.size());
    for (std::size_t d = 0; d < h.size(); ++d) EXPECT_NEAR(h[d], pred[d], 1e-12) << k << "^" << n << " d=" << d;
    EXPECT_LT(structure_score(h, pred), 1e-12);
  }
}

TEST(HammingHistogram, PopulationUsesDistinctPairs) {
  const AlphabetSpec ab(2, 2);
  const PopulationState s(ab.space(), {2, 0, 0, 2});
  // 6 pairs: AA-AA, BB-BB at distance 0 and four AA-BB at distance 2.
  expect_histogram(hamming_histogram(s), {2.0 / 6, 0.0, 4.0 / 6});
  EXPECT_THROW(hamming_histogram(PopulationState::monomorphic(ab.space(), 0, 1)), ValidationError);
  expect_histogram(mean_hamming_histogram({s, PopulationState::monomorphic(ab.space(), 1, 3)}),
                   {(2.0 / 6 + 1.0) / 2, 0.0, 2.0 / 6});
}

TEST(StructureScore, Properties) {
  const Histogram a{0.5, 0.25, 0.25};
  const Histogram b{0.2, 0.3, 0.5};
  EXPECT_DOUBLE_EQ(structure_score(a, b), structure_score(b, a));
  EXPECT_NEAR(structure_score(a, b), 0.3, 1e-15);
  EXPECT_EQ(structure_score(a, a), 0.0);
  EXPECT_EQ(structure_score({1, 0, 0}, {0, 0, 1}), 1.0);
  EXPECT_THROW(structure_score(a, {1.0}), ValidationError);
  Rng rng(51);
  for (int t = 0; t < 100; ++t) {
    const Space s(4, 1);
    const auto p = random_distribution(s, rng).probs();
    const auto q = random_distribution(s, rng).probs();
    const double v = structure_score(Histogram(p.begin(), p.end()), Histogram(q.begin(), q.end()));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
