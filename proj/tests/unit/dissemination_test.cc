#include "sharecause/dissemination.h"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <sstream>

#include "sharecause/synthgen.h"
#include "test_support.h"

namespace sharecause {
namespace {

using testing::Gen;

// Random batch with mixed outcomes so that some IPS weights go negative and
// the clamp has something to do.
TripletBatch random_batch(Gen& g, std::size_t users, std::size_t items,
                          std::size_t n) {
  TripletBatch b;
  for (std::size_t k = 0; k < n; ++k) {
    Triplet t;
    t.user = g.integer(0, static_cast<int>(users) - 1);
    t.pos = g.integer(0, static_cast<int>(items) - 1);
    do t.neg = g.integer(0, static_cast<int>(items) - 1); while (t.neg == t.pos);
    t.y_pos = 1.0;
    t.y_neg = g.coin(0.3) ? 1.0 : 0.0;
    t.theta_pos = g.uniform(0.1, 1.0);
    t.theta_neg = g.uniform(0.1, 1.0);
    b.triplets.push_back(t);
  }
  return b;
}

// Relative error per block between the analytic gradient and central
// differences with step h.
void expect_gradients_match(const FactorModel& model, const TripletBatch& batch,
                            double lambda, bool clamp, RegularizationScope scope) {
  ModelParameters analytic = gradients(model, batch, lambda, clamp, scope);
  FactorModel probe = model;
  ModelParameters numeric = model.params().zeros_like();
  const double h = 1e-5;
  ModelParameters::zip_blocks(
      probe.mutable_params(), numeric,
      [&](const char* name, Eigen::Map<Vector> param, Eigen::Map<Vector> out) {
        for (Eigen::Index k = 0; k < param.size(); ++k) {
          const double keep = param[k];
          param[k] = keep + h;
          const double up = batch_objective(probe, batch, lambda, clamp, scope);
          param[k] = keep - h;
          const double down = batch_objective(probe, batch, lambda, clamp, scope);
          param[k] = keep;
          out[k] = (up - down) / (2 * h);
        }
        (void)name;
      });
  ModelParameters::zip_blocks(
      analytic, numeric,
      [&](const char* name, Eigen::Map<Vector> a, Eigen::Map<Vector> n) {
        if (a.size() == 0) return;
        // out_b cancels in score differences, so its gradient is exactly zero
        // and the floor keeps finite-difference roundoff from dominating.
        const double scale = std::max({a.norm(), n.norm(), 1e-6});
        EXPECT_LT((a - n).norm() / scale, 1e-4) << name;
      });
}

TEST(ScoreTest, MfDotProduct) {
  auto m = FactorModel::zeros(Backbone::kMf, 1, 2, 2);
  m.mutable_params().user_emb << 1, 2;
  m.mutable_params().item_emb << 3, -1, 0, 0;
  EXPECT_DOUBLE_EQ(score(m, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(score(m, 0, 1), 0.0);
}

TEST(ScoreTest, NeuralMatchesHandRolledForwardPass) {
  Gen g(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = FactorModel::gaussian(Backbone::kNeural, 4, 5, 3, 0.7, g.seed());
    EXPECT_EQ(m.hidden(), m.dims());
    for (int u = 0; u < 4; ++u) {
      const Vector all = score_all(m, u);
      for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(score(m, u, i), testing::oracle_score(m, u, i), 1e-13);
        EXPECT_NEAR(all[i], testing::oracle_score(m, u, i), 1e-13);
      }
    }
  }
}

TEST(ScoreTest, RejectsOutOfRangeIndices) {
  const auto m = FactorModel::zeros(Backbone::kMf, 2, 2, 2);
  EXPECT_THROW(score(m, 2, 0), ValidationError);
  EXPECT_THROW(score(m, 0, -1), ValidationError);
}

TEST(ScoreTest, DifferenceIsAntisymmetric) {
  Gen g(42);
  const auto m = FactorModel::gaussian(Backbone::kNeural, 3, 4, 3, 1.0, 2);
  for (int k = 0; k < 20; ++k) {
    const int u = g.integer(0, 2), i = g.integer(0, 3), j = g.integer(0, 3);
    EXPECT_EQ(score(m, u, i) - score(m, u, j), -(score(m, u, j) - score(m, u, i)));
  }
}

TEST(LocalLossTest, ClosedForms) {
  EXPECT_NEAR(local_loss(0.0), 0.693147, 1e-6);
  EXPECT_NEAR(local_loss(std::log(3.0)), 0.287682, 1e-6);
  EXPECT_NEAR(local_loss(1e6), 0.0, 1e-12);
  EXPECT_NEAR(local_loss(-1e6), 1e6, 1e-6);
  EXPECT_TRUE(std::isfinite(local_loss(-1e300)));
}

TEST(WeightedTripletTermTest, WorkedExamples) {
  EXPECT_NEAR(weighted_triplet_term(1, 0.5, 0, 1.0, 0.0, false), 1.386294, 1e-6);
  EXPECT_EQ(weighted_triplet_term(1, 0.5, 1, 0.25, 0.0, true), 0.0);
  EXPECT_NEAR(weighted_triplet_term(1, 0.5, 1, 0.25, 0.0, false), -6.0 * std::log(2.0),
              1e-12);
  EXPECT_EQ(weighted_triplet_term(0, 0.5, 0, 0.5, 3.0, false), 0.0);
  EXPECT_EQ(weighted_triplet_term(0, 0.5, 1, 0.5, 3.0, true), 0.0);
}

TEST(BatchObjectiveTest, SingleTripletExample) {
  const auto m = FactorModel::zeros(Backbone::kMf, 1, 2, 2);
  TripletBatch b;
  Triplet t;
  t.pos = 0;
  t.neg = 1;
  t.theta_pos = 0.5;
  b.triplets.push_back(t);
  EXPECT_NEAR(batch_objective(m, b, 0.0, true), 1.386294, 1e-6);
  EXPECT_NEAR(batch_objective(m, b, 1.0, true), 1.386294, 1e-6);
}

TEST(BatchObjectiveTest, MatchesTermByTermAccumulation) {
  Gen g(43);
  for (auto backbone : {Backbone::kMf, Backbone::kNeural}) {
    const auto m = FactorModel::gaussian(backbone, 4, 6, 3, 0.8, g.seed());
    const auto b = random_batch(g, 4, 6, 5);
    for (bool clamp : {false, true}) {
      double sum = 0.0;
      for (const auto& t : b.triplets) {
        const double s = testing::oracle_score(m, t.user, t.pos) -
                         testing::oracle_score(m, t.user, t.neg);
        double term = t.y_pos / t.theta_pos * (1.0 - t.y_neg / t.theta_neg) *
                      testing::oracle_local_loss(s);
        if (clamp) term = std::max(term, 0.0);
        sum += term;
      }
      const auto& p = m.params();
      const double full = p.user_emb.squaredNorm() + p.item_emb.squaredNorm();
      double used = 0.0;
      for (const auto& t : b.triplets) {
        used += p.user_emb.row(t.user).squaredNorm() +
                p.item_emb.row(t.pos).squaredNorm() + p.item_emb.row(t.neg).squaredNorm();
      }
      EXPECT_NEAR(batch_objective(m, b, 0.3, clamp, RegularizationScope::kFull),
                  sum / 5.0 + 0.3 * full, 1e-12);
      EXPECT_NEAR(batch_objective(m, b, 0.3, clamp, RegularizationScope::kBatch),
                  sum / 5.0 + 0.3 * used / 5.0, 1e-12);
    }
  }
}

// Property: clamped objective is nonnegative and never below the unclamped
// one; with unit propensities and y_neg = 0 the clamp changes nothing.
TEST(BatchObjectiveTest, ClampDominanceProperty) {
  Gen g(44);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = FactorModel::gaussian(Backbone::kMf, 3, 5, 2, 1.0, g.seed());
    auto b = random_batch(g, 3, 5, 8);
    const double clamped = batch_objective(m, b, 0.0, true);
    EXPECT_GE(clamped, 0.0);
    EXPECT_GE(clamped, batch_objective(m, b, 0.0, false) - 1e-15);
    for (auto& t : b.triplets) {
      t.y_neg = 0.0;
      t.theta_pos = t.theta_neg = 1.0;
    }
    EXPECT_EQ(batch_objective(m, b, 0.0, true), batch_objective(m, b, 0.0, false));
  }
}

TEST(BatchObjectiveTest, UnitPropensityIsPlainBpr) {
  Gen g(45);
  const auto m = FactorModel::gaussian(Backbone::kMf, 5, 7, 3, 1.0, 9);
  auto b = random_batch(g, 5, 7, 20);
  double bpr = 0.0;
  for (auto& t : b.triplets) {
    t.y_neg = 0.0;
    t.theta_pos = t.theta_neg = 1.0;
    bpr += -std::log(1.0 / (1.0 + std::exp(-(testing::oracle_score(m, t.user, t.pos) -
                                               testing::oracle_score(m, t.user, t.neg)))));
  }
  EXPECT_NEAR(batch_objective(m, b, 0.0, true), bpr / 20.0, 1e-12);
}

TEST(BatchObjectiveTest, ZeroModelRegularizerIsZero) {
  Gen g(46);
  const auto m = FactorModel::zeros(Backbone::kMf, 2, 3, 2);
  const auto b = random_batch(g, 2, 3, 4);
  EXPECT_EQ(batch_objective(m, b, 1.0, false), batch_objective(m, b, 0.0, false));
}

TEST(BatchObjectiveTest, EmptyBatchRejected) {
  const auto m = FactorModel::zeros(Backbone::kMf, 2, 3, 2);
  EXPECT_THROW(batch_objective(m, TripletBatch{}, 0.0, true), ValidationError);
  EXPECT_THROW(gradients(m, TripletBatch{}, 0.0, true), ValidationError);
}

TEST(GradientTest, FiniteDifferenceAgreement) {
  Gen g(47);
  for (auto backbone : {Backbone::kMf, Backbone::kNeural}) {
    for (bool clamp : {false, true}) {
      for (auto scope : {RegularizationScope::kFull, RegularizationScope::kBatch}) {
        for (int trial = 0; trial < 3; ++trial) {
          const auto m = FactorModel::gaussian(backbone, 4, 6, 3, 0.7, g.seed());
          const auto b = random_batch(g, 4, 6, 6);
          expect_gradients_match(m, b, 0.05, clamp, scope);
        }
      }
    }
  }
}

TEST(GradientTest, FullyClampedBatchHasZeroGradient) {
  Gen g(48);
  const auto m = FactorModel::gaussian(Backbone::kNeural, 3, 4, 2, 1.0, 3);
  auto b = random_batch(g, 3, 4, 5);
  for (auto& t : b.triplets) {
    t.y_neg = 1.0;
    t.theta_neg = 0.25;  // weight (1/theta_pos)(1 - 4) < 0
  }
  const auto grad = gradients(m, b, 0.0, true);
  auto z = grad;
  ModelParameters::zip_blocks(z, z, [](const char*, Eigen::Map<Vector> a, Eigen::Map<Vector>) {
    EXPECT_EQ(a.squaredNorm(), 0.0);
  });
}

TEST(GradientTest, RegularizerOnUnitParameters) {
  auto m = FactorModel::zeros(Backbone::kMf, 2, 3, 2);
  m.mutable_params().user_emb.setOnes();
  m.mutable_params().item_emb.setOnes();
  TripletBatch b;
  Triplet t;
  t.y_pos = 0.0;  // data term vanishes
  t.neg = 1;
  b.triplets.push_back(t);
  const auto grad = gradients(m, b, 0.25, false, RegularizationScope::kFull);
  EXPECT_TRUE((grad.user_emb.array() == 0.5).all());
  EXPECT_TRUE((grad.item_emb.array() == 0.5).all());
}

TEST(SampleTripletsTest, PostconditionsHold) {
  Gen g(49);
  const auto s = testing::random_interactions(g, 20, 10, 0.3);
  const auto b = sample_triplets(s, 2000, 5);
  ASSERT_EQ(b.triplets.size(), 2000u);
  for (const auto& t : b.triplets) {
    EXPECT_TRUE(s.contains(t.user, t.pos));
    EXPECT_FALSE(s.contains(t.user, t.neg));
    EXPECT_NE(t.pos, t.neg);
  }
}

TEST(SampleTripletsTest, NegativesUniform) {
  // One user, one positive, ten candidate negatives.
  InteractionSet s(IndexMap::numbered("u", 1), IndexMap::numbered("n", 11));
  s.add(0, 0);
  const auto b = sample_triplets(s, 100000, 6);
  std::vector<double> counts(10, 0.0);
  for (const auto& t : b.triplets) counts[t.neg - 1] += 1.0;
  const double critical =
      boost::math::quantile(boost::math::chi_squared(9.0), 0.99);
  EXPECT_LT(testing::chi_square_uniform(counts), critical);
}

TEST(SampleTripletsTest, Errors) {
  InteractionSet empty(IndexMap::numbered("u", 2), IndexMap::numbered("n", 2));
  EXPECT_THROW(sample_triplets(empty, 5, 0), ValidationError);
  InteractionSet full(IndexMap::numbered("u", 1), IndexMap::numbered("n", 2));
  full.add(0, 0);
  full.add(0, 1);
  EXPECT_THROW(sample_triplets(full, 5, 0), ValidationError);
  // A saturated user is skipped when others remain.
  InteractionSet mixed(IndexMap::numbered("u", 2), IndexMap::numbered("n", 2));
  mixed.add(0, 0);
  mixed.add(0, 1);
  mixed.add(1, 0);
  for (const auto& t : sample_triplets(mixed, 50, 1).triplets) EXPECT_EQ(t.user, 1);
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 64;
  c.embedding_dim = 8;
  c.seed = 123;
  return c;
}

TEST(TrainTest, SameSeedBitwiseIdentical) {
  Gen g(50);
  const auto s = testing::random_interactions(g, 30, 15, 0.2);
  for (auto backbone : {Backbone::kMf, Backbone::kNeural}) {
    const auto a = train(backbone, s, {}, small_config());
    const auto b = train(backbone, s, {}, small_config());
    EXPECT_EQ(a.model.params().user_emb, b.model.params().user_emb);
    EXPECT_EQ(a.model.params().item_emb, b.model.params().item_emb);
    EXPECT_EQ(a.model.params().hidden_w, b.model.params().hidden_w);
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  }
}

TEST(TrainTest, UnitPropensityTableReproducesBaselineTrajectory) {
  Gen g(51);
  const auto s = testing::random_interactions(g, 30, 15, 0.2);
  const auto ones = PropensityTable::per_item(std::vector<double>(15, 1.0), 0.5, 1e-3);
  for (auto backbone : {Backbone::kMf, Backbone::kNeural}) {
    const auto base = train(backbone, s, {}, small_config());
    const auto weighted = train(backbone, s, ones, small_config());
    EXPECT_EQ(base.epoch_loss, weighted.epoch_loss);
    EXPECT_EQ(base.model.params().user_emb, weighted.model.params().user_emb);
  }
}

TEST(TrainTest, LossDecreasesOnStrongSignal) {
  WorldConfig wc;
  wc.num_users = 200;
  wc.num_items = 60;
  wc.popularity_exponent = 0.3;
  const auto w = generate_world(wc, 8);
  const auto y = sample_interactions(w, 9);
  auto c = TrainConfig::defaults_for(Backbone::kMf);
  c.epochs = 50;
  c.embedding_dim = 16;
  c.seed = 4;
  const auto r = train(Backbone::kMf, y, {}, c);
  ASSERT_EQ(r.epoch_loss.size(), 50u);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(TrainTest, ZeroLearningRateLeavesInitialization) {
  Gen g(52);
  const auto s = testing::random_interactions(g, 10, 8, 0.3);
  auto c = small_config();
  c.learning_rate = 0.0;
  const auto r = train(Backbone::kNeural, s, {}, c);
  const auto init = FactorModel::gaussian(Backbone::kNeural, 10, 8, 8, c.init_stddev,
                                          mix_seed(c.seed, 0x1717));
  EXPECT_EQ(r.model.params().user_emb, init.params().user_emb);
  EXPECT_EQ(r.model.params().hidden_w, init.params().hidden_w);
}

TEST(TrainTest, DivergenceReportsEpoch) {
  Gen g(53);
  const auto s = testing::random_interactions(g, 10, 8, 0.3);
  auto c = small_config();
  c.learning_rate = 1e200;
  c.init_stddev = 1e100;
  try {
    train(Backbone::kMf, s, {}, c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(TrainTest, InvalidConfigRejected) {
  Gen g(54);
  const auto s = testing::random_interactions(g, 5, 4, 0.3);
  auto c = small_config();
  c.dropout_keep = 0.0;
  EXPECT_THROW(train(Backbone::kMf, s, {}, c), ConfigError);
  const auto wrong = PropensityTable::per_item({1.0, 1.0}, 0.5, 1e-3);
  EXPECT_THROW(train(Backbone::kMf, s, wrong, small_config()), ValidationError);
}

TEST(ModelIoTest, SaveLoadRoundTrip) {
  for (auto backbone : {Backbone::kMf, Backbone::kNeural}) {
    const auto m = FactorModel::gaussian(backbone, 3, 4, 5, 1.0, 77);
    std::stringstream ss;
    save_model(ss, m, IndexMap::numbered("u", 3), IndexMap::numbered("n", 4));
    const auto back = load_model(ss);
    EXPECT_EQ(back.model.backbone(), backbone);
    EXPECT_EQ(back.model.params().user_emb, m.params().user_emb);
    EXPECT_EQ(back.model.params().item_emb, m.params().item_emb);
    EXPECT_EQ(back.model.params().hidden_w, m.params().hidden_w);
    EXPECT_EQ(back.model.params().out_w, m.params().out_w);
    EXPECT_EQ(back.users, IndexMap::numbered("u", 3));
  }
}

TEST(ModelIoTest, TruncatedInputRejected) {
  const auto m = FactorModel::gaussian(Backbone::kMf, 3, 4, 5, 1.0, 78);
  std::stringstream ss;
  save_model(ss, m, IndexMap::numbered("u", 3), IndexMap::numbered("n", 4));
  const std::string text = ss.str();
  std::stringstream cut(text.substr(0, text.size() / 2));
  EXPECT_ANY_THROW(load_model(cut));
}

TEST(ModelIoTest, LossTraceFormat) {
  std::stringstream ss;
  save_loss_trace(ss, {0.5, 0.25});
  EXPECT_EQ(ss.str(), "epoch,mean_loss\n0,0.5\n1,0.25\n");
}

}  // namespace
}  // namespace sharecause
