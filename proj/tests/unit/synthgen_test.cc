#include "sharecause/synthgen.h"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "sharecause/propensity.h"
#include "test_support.h"

namespace sharecause {
namespace {

using testing::Gen;

WorldConfig tiny_config(std::size_t users, std::size_t items) {
  WorldConfig c;
  c.num_users = users;
  c.num_items = items;
  return c;
}

double chi_square_critical(double df, double alpha) {
  return boost::math::quantile(boost::math::chi_squared(df), 1.0 - alpha);
}

TEST(GenerateWorldTest, ZeroExponentGivesEqualExposure) {
  auto c = tiny_config(2, 2);
  c.popularity_exponent = 1e-300;
  const auto w = generate_world(c, 3);
  EXPECT_DOUBLE_EQ(w.theta(0, 0), w.theta(0, 1));
  EXPECT_DOUBLE_EQ(w.theta(1, 0), w.theta(1, 1));
}

TEST(GenerateWorldTest, SameSeedSameWorld) {
  const auto c = tiny_config(40, 30);
  const auto a = generate_world(c, 7);
  const auto b = generate_world(c, 7);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.attributes, b.attributes);
  EXPECT_EQ(a.follower_counts, b.follower_counts);
  EXPECT_EQ(a.content, b.content);
  EXPECT_EQ(a.item_labels, b.item_labels);
  const auto other = generate_world(c, 8);
  EXPECT_NE(a.gamma, other.gamma);
}

TEST(GenerateWorldTest, ExposureFollowsPowerLawInRank) {
  auto c = tiny_config(50, 200);
  c.popularity_exponent = 1.0;
  const auto w = generate_world(c, 5);
  std::vector<double> means(w.num_items);
  for (std::size_t i = 0; i < w.num_items; ++i) means[i] = w.theta.col(i).mean();
  std::sort(means.rbegin(), means.rend());
  double mx = 0, my = 0;
  const double n = static_cast<double>(means.size());
  for (std::size_t r = 0; r < means.size(); ++r) {
    mx += std::log(r + 1.0) / n;
    my += std::log(means[r]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t r = 0; r < means.size(); ++r) {
    const double dx = std::log(r + 1.0) - mx;
    sxy += dx * (std::log(means[r]) - my);
    sxx += dx * dx;
  }
  EXPECT_NEAR(sxy / sxx, -1.0, 0.15);
}

TEST(GenerateWorldTest, InvariantsHold) {
  const auto w = generate_world(tiny_config(60, 40), 9);
  EXPECT_NO_THROW(w.validate());
  EXPECT_GT(w.theta.minCoeff(), 0.0);
  EXPECT_LE(w.theta.maxCoeff(), 1.0);
  EXPECT_GE(w.gamma.minCoeff(), 0.0);
  EXPECT_LE(w.gamma.maxCoeff(), 1.0);
  EXPECT_EQ(w.attribute_names, attribute_schema());
  EXPECT_EQ(static_cast<std::size_t>(w.attributes.rows()), w.num_users);
}

TEST(GenerateWorldTest, RejectsInvalidConfig) {
  EXPECT_THROW(generate_world(tiny_config(1, 5), 0), ConfigError);
  EXPECT_THROW(generate_world(tiny_config(5, 1), 0), ConfigError);
  auto c = tiny_config(5, 5);
  c.popularity_exponent = -1.0;
  EXPECT_THROW(generate_world(c, 0), ConfigError);
}

TEST(SampleInteractionsTest, DegenerateProbabilities) {
  RowMatrix theta(2, 2), gamma(2, 2);
  theta << 1.0, 1.0, 1.0, 1.0;
  gamma << 1.0, 0.0, 1.0, 0.0;
  const auto w = SyntheticWorld::from_tables(theta, gamma);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto y = sample_interactions(w, seed);
    EXPECT_TRUE(y.contains(0, 0));
    EXPECT_TRUE(y.contains(1, 0));
    EXPECT_FALSE(y.contains(0, 1));
    EXPECT_FALSE(y.contains(1, 1));
  }
}

TEST(SampleInteractionsTest, ShareRateIsThetaTimesGamma) {
  RowMatrix theta = RowMatrix::Constant(100, 100, 0.5);
  RowMatrix gamma = RowMatrix::Constant(100, 100, 0.5);
  const auto y = sample_interactions(SyntheticWorld::from_tables(theta, gamma), 17);
  EXPECT_NEAR(static_cast<double>(y.num_positives()) / 10000.0, 0.25, 0.02);
}

TEST(UniformTestTest, FullExposureAndCertainInterestAppears) {
  RowMatrix theta = RowMatrix::Constant(1, 2, 0.1);
  RowMatrix gamma(1, 2);
  gamma << 1.0, 0.0;
  const auto w = SyntheticWorld::from_tables(theta, gamma);
  InteractionSet training(w.users(), w.items());
  const auto t = make_uniform_test(w, {{0, 0}, {0, 1}}, training, 1.0, 4);
  EXPECT_TRUE(t.test.contains(0, 0));
  EXPECT_FALSE(t.test.contains(0, 1));
}

TEST(UniformTestTest, ExposureCountsUniformAcrossItems) {
  const std::size_t users = 100, items = 100;
  Gen g(21);
  RowMatrix theta(users, items), gamma(users, items);
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    // Training exposure is heavily skewed; the test must ignore it.
    theta.data()[k] = std::pow(g.uniform(0.01, 1.0), 4.0);
    gamma.data()[k] = g.uniform();
  }
  const auto w = SyntheticWorld::from_tables(theta, gamma);
  std::vector<Pair> holdout;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t i = 0; i < items; ++i)
      holdout.push_back({static_cast<int>(u), static_cast<int>(i)});
  InteractionSet training(w.users(), w.items());
  const auto t = make_uniform_test(w, holdout, training, 0.5, 99);
  std::vector<double> counts(t.exposed_per_item.begin(), t.exposed_per_item.end());
  EXPECT_LT(testing::chi_square_uniform(counts),
            chi_square_critical(items - 1.0, 0.01));
}

TEST(UniformTestTest, RejectsOverlapWithTraining) {
  Gen g(22);
  const auto w = testing::small_world(g, 2, 3);
  InteractionSet training(w.users(), w.items());
  training.add(1, 2);
  EXPECT_THROW(make_uniform_test(w, {{1, 2}}, training, 1.0, 0), ValidationError);
}

TEST(IdealLossOracleTest, SingleTripletArithmetic) {
  RowMatrix theta = RowMatrix::Constant(1, 2, 0.5);
  RowMatrix gamma(1, 2);
  gamma << 1.0, 0.0;
  const auto w = SyntheticWorld::from_tables(theta, gamma);
  const auto model = FactorModel::zeros(Backbone::kMf, 1, 2, 2);
  Triplet t;
  t.pos = 0;
  t.neg = 1;
  EXPECT_NEAR(ideal_loss_oracle(w, model, {t}), 0.693147, 1e-6);
}

TEST(IdealLossOracleTest, ZeroInterestGivesZero) {
  RowMatrix theta = RowMatrix::Constant(2, 3, 0.5);
  RowMatrix gamma = RowMatrix::Zero(2, 3);
  const auto w = SyntheticWorld::from_tables(theta, gamma);
  const auto model = FactorModel::gaussian(Backbone::kMf, 2, 3, 2, 1.0, 1);
  EXPECT_EQ(ideal_loss_oracle(w, model, all_triplets(2, 3)), 0.0);
}

TEST(IdealLossOracleTest, MatchesTermByTermSum) {
  Gen g(23);
  const auto w = testing::small_world(g, 3, 3);
  const auto model = FactorModel::gaussian(Backbone::kMf, 3, 3, 4, 1.0, g.seed());
  std::vector<Triplet> triplets;
  for (int k = 0; k < 5; ++k) {
    Triplet t;
    t.user = g.integer(0, 2);
    t.pos = g.integer(0, 2);
    do t.neg = g.integer(0, 2); while (t.neg == t.pos);
    triplets.push_back(t);
  }
  double sum = 0.0;
  for (const auto& t : triplets) {
    const double s = testing::oracle_score(model, t.user, t.pos) -
                     testing::oracle_score(model, t.user, t.neg);
    sum += w.gamma(t.user, t.pos) * (1.0 - w.gamma(t.user, t.neg)) *
           testing::oracle_local_loss(s);
  }
  EXPECT_NEAR(ideal_loss_oracle(w, model, triplets), sum / 5.0, 1e-14);
}

TEST(IdealLossOracleTest, OutOfRangeTripletRejected) {
  Gen g(24);
  const auto w = testing::small_world(g, 2, 2);
  const auto model = FactorModel::zeros(Backbone::kMf, 2, 2, 2);
  Triplet t;
  t.user = 5;
  EXPECT_THROW(ideal_loss_oracle(w, model, {t}), ValidationError);
}

// Exact expectation of the weighted loss by summing over outcome matrices,
// written independently of the library's enumeration.
double brute_force_expectation(const SyntheticWorld& w, const FactorModel& m,
                               const RowMatrix& theta_hat,
                               const std::vector<Triplet>& triplets) {
  const std::size_t cells = w.num_users * w.num_items;
  double expectation = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << cells); ++mask) {
    auto y = [&](int u, int i) {
      return static_cast<double>(mask >> (u * w.num_items + i) & 1);
    };
    double prob = 1.0;
    for (std::size_t u = 0; u < w.num_users; ++u)
      for (std::size_t i = 0; i < w.num_items; ++i) {
        const double p = w.theta(u, i) * w.gamma(u, i);
        prob *= y(u, i) ? p : 1.0 - p;
      }
    double loss = 0.0;
    for (const auto& t : triplets) {
      const double s = testing::oracle_score(m, t.user, t.pos) -
                       testing::oracle_score(m, t.user, t.neg);
      loss += y(t.user, t.pos) / theta_hat(t.user, t.pos) *
              (1.0 - y(t.user, t.neg) / theta_hat(t.user, t.neg)) *
              testing::oracle_local_loss(s);
    }
    expectation += prob * loss / static_cast<double>(triplets.size());
  }
  return expectation;
}

TEST(ExpectedUnbiasedLossTest, OneUserTwoItemsExample) {
  RowMatrix theta = RowMatrix::Constant(1, 2, 0.5);
  RowMatrix gamma(1, 2);
  gamma << 1.0, 0.0;
  const auto w = SyntheticWorld::from_tables(theta, gamma);
  const auto model = FactorModel::zeros(Backbone::kMf, 1, 2, 2);
  Triplet t;
  t.pos = 0;
  t.neg = 1;
  const double e = expected_unbiased_loss(w, model, true_propensity(w), {t},
                                          ExpectationMode::enumerate());
  EXPECT_NEAR(e, 0.693147, 1e-6);
  EXPECT_NEAR(e, ideal_loss_oracle(w, model, {t}), 1e-12);
}

// Property: for random enumerable worlds, both backbones and random scores,
// the exact expectation with true propensities equals the ideal loss.
TEST(ExpectedUnbiasedLossTest, EnumerationEqualsIdealLossProperty) {
  Gen g(25);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t users = g.integer(1, 3);
    const std::size_t items = g.integer(2, static_cast<int>(12 / users));
    const auto w = testing::small_world(g, users, items);
    const auto backbone = trial % 2 ? Backbone::kNeural : Backbone::kMf;
    const auto model = FactorModel::gaussian(backbone, users, items, 3, 1.0, g.seed());
    const auto triplets = all_triplets(users, items);
    const double exact = expected_unbiased_loss(w, model, true_propensity(w), triplets,
                                                ExpectationMode::enumerate());
    EXPECT_NEAR(exact, ideal_loss_oracle(w, model, triplets), 1e-12);
    EXPECT_NEAR(exact, brute_force_expectation(w, model, w.theta, triplets), 1e-12);
  }
}

TEST(ExpectedUnbiasedLossTest, MisspecifiedPropensityIsBiased) {
  Gen g(26);
  const auto w = testing::small_world(g, 2, 3, 0.2);
  const auto model = FactorModel::gaussian(Backbone::kMf, 2, 3, 3, 1.0, 5);
  const auto triplets = all_triplets(2, 3);
  const auto half = PropensityTable::per_pair(w.theta / 2.0, 1.0, 1e-6);
  const double biased = expected_unbiased_loss(w, model, half, triplets,
                                               ExpectationMode::enumerate());
  EXPECT_NEAR(biased, brute_force_expectation(w, model, w.theta / 2.0, triplets), 1e-12);
  EXPECT_GT(std::abs(biased - ideal_loss_oracle(w, model, triplets)), 1e-3);
}

TEST(ExpectedUnbiasedLossTest, EnumerationCapEnforced) {
  Gen g(27);
  const auto w = testing::small_world(g, 2, 7);
  const auto model = FactorModel::zeros(Backbone::kMf, 2, 7, 2);
  EXPECT_THROW(expected_unbiased_loss(w, model, true_propensity(w), all_triplets(2, 7),
                                      ExpectationMode::enumerate()),
               ValidationError);
  EXPECT_NO_THROW(expected_unbiased_loss(w, model, true_propensity(w), all_triplets(2, 7),
                                         ExpectationMode::monte_carlo(50, 1)));
}

TEST(ExpectedUnbiasedLossTest, MonteCarloApproachesExactValue) {
  Gen g(28);
  const auto w = testing::small_world(g, 2, 3, 0.3);
  const auto model = FactorModel::gaussian(Backbone::kMf, 2, 3, 3, 1.0, 6);
  const auto triplets = all_triplets(2, 3);
  const auto theta = true_propensity(w);
  const double exact =
      expected_unbiased_loss(w, model, theta, triplets, ExpectationMode::enumerate());
  const double mc = expected_unbiased_loss(w, model, theta, triplets,
                                           ExpectationMode::monte_carlo(200000, 3));
  EXPECT_NEAR(mc, exact, 0.02 * std::abs(exact) + 1e-3);
}

TEST(VerifyUnbiasednessTest, SmallSuitePasses) {
  const auto check = verify_unbiasedness(10, 4, {250, 1000, 4000}, 40);
  EXPECT_EQ(check.worlds, 10u);
  EXPECT_TRUE(check.enumeration_passed());
  EXPECT_TRUE(check.monte_carlo_passed()) << check.mc_slope;
  ASSERT_EQ(check.mc_rmse.size(), 3u);
  EXPECT_GT(check.mc_rmse[0], check.mc_rmse[2]);
}

TEST(PlantedConfounderTest, MarginalAssociationHasWrongSign) {
  PlantedConfounderConfig c;
  c.num_users = 4000;
  const auto d = generate_planted_confounder(c, 31);
  const Vector a = d.attributes.col(d.confounded_attribute);
  const double ma = a.mean(), my = d.outcome.mean();
  const double cov = ((a.array() - ma) * (d.outcome.array() - my)).mean();
  EXPECT_GT(d.true_beta[d.confounded_attribute], 0.0);
  EXPECT_LT(cov, 0.0);
}

TEST(WorldExportTest, RoundTripPreservesTables) {
  testing::TempDir dir("world");
  const auto w = generate_world(tiny_config(12, 9), 41);
  export_world(w, dir.path());
  for (const char* f : {"theta.csv", "gamma.csv", "attributes.csv", "followers.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto back = import_world(dir.path());
  EXPECT_EQ(back.theta, w.theta);
  EXPECT_EQ(back.gamma, w.gamma);
  EXPECT_EQ(back.attributes, w.attributes);
  EXPECT_EQ(back.follower_counts, w.follower_counts);
  EXPECT_EQ(back.item_labels, w.item_labels);
  EXPECT_EQ(back.content, w.content);
}

}  // namespace
}  // namespace sharecause
