#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sharecause/common.h"
#include "sharecause/dissemination.h"
#include "sharecause/interactions.h"
#include "sharecause/propensity.h"

namespace sharecause {

// Generation parameters for a synthetic dissemination world.
//
// Exposure factorizes as theta_ui = pop_i * act_u with
//   pop_i = max_item_exposure * rank_i^(-popularity_exponent)
//   act_u = ((F_u + 1) / (max F + 1))^user_activity_exponent
// and interest is gamma_ui = sigmoid(interest_scale * <P_u, Q_i> / sqrt(r)
//   + interest_bias + [i is fake] * (beta . z_u)),
// where P, Q are rank-r planted factors and z_u the standardized attributes.
struct WorldConfig {
  std::size_t num_users = 2000;
  std::size_t num_items = 300;
  int latent_rank = 4;
  double popularity_exponent = 1.0;
  double max_item_exposure = 1.0;
  double user_activity_exponent = 0.0;
  double interest_scale = 3.0;
  double interest_bias = -1.0;
  double fake_fraction = 0.5;
  double follower_log_mean = 5.0;
  double follower_log_sd = 1.5;
  std::size_t content_dims = 8;
  double content_noise = 0.25;

  void validate() const;
};

// Ground truth for one synthetic world; the verification oracle.
struct SyntheticWorld {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  RowMatrix gamma;  // interest probabilities, [0, 1]
  RowMatrix theta;  // exposure probabilities, (0, 1]
  std::vector<std::int64_t> follower_counts;
  RowMatrix attributes;  // raw attribute values, one row per user
  std::vector<std::string> attribute_names;
  Vector true_beta;  // planted effect of standardized attributes on fake interest
  double popularity_exponent = 1.0;
  std::vector<NewsLabel> item_labels;
  RowMatrix content;  // per-item content features

  IndexMap users() const;
  IndexMap items() const;
  // Throws ValidationError when an invariant is broken.
  void validate() const;

  // Minimal world with only exposure and interest; other fields get neutral
  // defaults (all items fake, zero attributes).
  static SyntheticWorld from_tables(RowMatrix theta, RowMatrix gamma);
};

// The nine profile attributes in canonical column order.
const std::vector<std::string>& attribute_schema();

SyntheticWorld generate_world(const WorldConfig& config, std::uint64_t seed);

// Y_ui = exposed * interested with independent Bernoulli(theta_ui) and
// Bernoulli(gamma_ui) draws, so P(Y_ui = 1) = theta_ui * gamma_ui.
InteractionSet sample_interactions(const SyntheticWorld& world,
                                   std::uint64_t seed);

struct UniformTest {
  InteractionSet test;
  // Exposure events per item among the held-out pairs.
  std::vector<int> exposed_per_item;
};

// Re-draws every held-out pair under one constant exposure probability.
// Held-out pairs that are training positives are rejected.
UniformTest make_uniform_test(const SyntheticWorld& world,
                              const std::vector<Pair>& holdout,
                              const InteractionSet& training,
                              double exposure, std::uint64_t seed);

// (1/|D|) sum gamma_ui (1 - gamma_uj) local_loss(S_uij) with the true gamma.
double ideal_loss_oracle(const SyntheticWorld& world, const FactorModel& model,
                         const std::vector<Triplet>& triplets);

// Every (u, i, j) with i != j.
std::vector<Triplet> all_triplets(std::size_t num_users, std::size_t num_items);

struct ExpectationMode {
  enum class Kind { kEnumerate, kMonteCarlo };
  Kind kind = Kind::kEnumerate;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static ExpectationMode enumerate() { return {}; }
  static ExpectationMode monte_carlo(std::size_t n, std::uint64_t seed) {
    return {Kind::kMonteCarlo, n, seed};
  }
};

inline constexpr std::size_t kMaxEnumerableCells = 12;

// Expectation over interaction outcomes of the propensity-weighted loss
// (unclamped) on a fixed triplet list. Enumeration is exact and limited to
// worlds of at most kMaxEnumerableCells user-item cells.
double expected_unbiased_loss(const SyntheticWorld& world,
                              const FactorModel& model,
                              const PropensityTable& theta_hat,
                              const std::vector<Triplet>& triplets,
                              const ExpectationMode& mode);

// Randomized check that the propensity-weighted loss is unbiased when the
// true exposure is used. Worlds have at most kMaxEnumerableCells cells.
struct UnbiasednessCheck {
  std::size_t worlds = 0;
  // max |E[weighted loss] - ideal loss| under exact enumeration
  double max_abs_error = 0.0;
  // Monte-Carlo root-mean-square error at each sample size, over repeats.
  std::vector<std::size_t> mc_samples;
  std::vector<double> mc_rmse;
  // Least-squares slope of log(rmse) on log(n); -0.5 for 1/sqrt(n) decay.
  double mc_slope = 0.0;

  bool enumeration_passed(double tolerance = 1e-10) const {
    return max_abs_error < tolerance;
  }
  bool monte_carlo_passed() const {
    return mc_slope > -0.75 && mc_slope < -0.25;
  }
  std::string to_json() const;
};

UnbiasednessCheck verify_unbiasedness(
    std::size_t num_worlds, std::uint64_t seed,
    const std::vector<std::size_t>& mc_samples = {1000, 4000, 16000},
    std::size_t mc_repeats = 100);

// Per-pair propensity table holding the world's true exposure.
PropensityTable true_propensity(const SyntheticWorld& world);

// Regression-level world with a known confounder Z. Attribute 0 is driven by
// Z and Z also lowers the outcome, so the marginal association of attribute 0
// has the opposite sign of its planted effect.
struct PlantedConfounderConfig {
  std::size_t num_users = 500;
  std::size_t confounder_dims = 2;
  std::size_t extra_attributes = 2;
  double true_effect = 0.5;
  double confounding = -2.0;
  double attribute_noise = 0.5;
  double outcome_noise = 0.5;
  // Proxy U = Z R + proxy_noise * eps for a random rotation R, mimicking a
  // learned embedding that is identified up to rotation.
  double proxy_noise = 0.1;
};

struct PlantedConfounderData {
  RowMatrix attributes;
  std::vector<std::string> attribute_names;
  RowMatrix confounder_proxy;
  Vector outcome;
  Vector true_beta;
  std::size_t confounded_attribute = 0;
};

PlantedConfounderData generate_planted_confounder(
    const PlantedConfounderConfig& config, std::uint64_t seed);

// Directory layout: theta.csv, gamma.csv (user_id then one column per news
// id), attributes.csv (user_id then attribute_schema()), followers.csv
// (user_id,followers_count), items.csv (news_id,label), content.csv
// (news_id,c0..), meta.csv (key,value).
void export_world(const SyntheticWorld& world, const std::filesystem::path& dir);
SyntheticWorld import_world(const std::filesystem::path& dir);

}  // namespace sharecause
