#include "sharecause/synthgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "json.hpp"
#include "sharecause/csv.h"

namespace sharecause {
namespace {

// Planted effects (per standardized attribute) on the fake-news interest
// logit, in attribute_schema() order.
const std::vector<double>& default_attribute_effects() {
  static const std::vector<double> effects = {-0.4, -0.4, -0.5, -0.3, 0.0,
                                              0.0,  0.0,  0.0,  0.0};
  return effects;
}

void check_triplets(const SyntheticWorld& world, const FactorModel& model,
                    const std::vector<Triplet>& triplets) {
  if (triplets.empty()) throw ValidationError("empty triplet list");
  if (model.num_users() != world.num_users ||
      model.num_items() != world.num_items) {
    throw ValidationError("model dimensions do not match the world");
  }
  for (const auto& t : triplets) {
    if (t.user < 0 || static_cast<std::size_t>(t.user) >= world.num_users ||
        t.pos < 0 || static_cast<std::size_t>(t.pos) >= world.num_items ||
        t.neg < 0 || static_cast<std::size_t>(t.neg) >= world.num_items) {
      throw ValidationError("triplet index out of range");
    }
  }
}

std::vector<double> triplet_losses(const FactorModel& model,
                                   const std::vector<Triplet>& triplets) {
  std::vector<double> out(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    out[k] = local_loss(score(model, t.user, t.pos) - score(model, t.user, t.neg));
  }
  return out;
}

// Weighted loss for one realized outcome matrix given as a cell predicate.
template <typename Outcome>
double unbiased_loss_for(const SyntheticWorld& world,
                         const PropensityTable& theta_hat,
                         const std::vector<Triplet>& triplets,
                         const std::vector<double>& losses, Outcome&& y) {
  CompensatedSum sum;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    const double y_pos = y(t.user * world.num_items + t.pos);
    const double y_neg = y(t.user * world.num_items + t.neg);
    if (y_pos == 0.0) continue;
    sum.add((y_pos / theta_hat.at(t.user, t.pos)) *
            (1.0 - y_neg / theta_hat.at(t.user, t.neg)) * losses[k]);
  }
  return sum.value() / static_cast<double>(triplets.size());
}

void write_matrix_csv(const std::filesystem::path& path, const RowMatrix& m,
                      const IndexMap& rows, const std::string& row_key,
                      const std::vector<std::string>& col_names) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  std::vector<std::string> header{row_key};
  header.insert(header.end(), col_names.begin(), col_names.end());
  write_csv_row(out, header);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<std::string> cells{rows.id(r)};
    for (Eigen::Index c = 0; c < m.cols(); ++c) cells.push_back(format_exact(m(r, c)));
    write_csv_row(out, cells);
  }
}

RowMatrix read_matrix_csv(const CsvTable& t, std::size_t expect_rows) {
  if (t.rows.size() != expect_rows) {
    throw ValidationError(t.source + ": expected " + std::to_string(expect_rows) +
                          " rows, found " + std::to_string(t.rows.size()));
  }
  RowMatrix m(t.rows.size(), t.header.size() - 1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      m(r, c - 1) = parse_double_cell(t, r, c);
    }
  }
  return m;
}

std::vector<std::string> first_column(const CsvTable& t) {
  std::vector<std::string> ids;
  for (const auto& row : t.rows) ids.push_back(row.at(0));
  return ids;
}

}  // namespace

const std::vector<std::string>& attribute_schema() {
  static const std::vector<std::string> names = {
      "verified",        "org",           "status_count",
      "friends_count",   "followers_count", "favorites_count",
      "gender",          "age",           "register_time"};
  return names;
}

void WorldConfig::validate() const {
  if (num_users < 2 || num_items < 2) {
    throw ConfigError("world needs at least 2 users and 2 items");
  }
  if (!(popularity_exponent > 0.0) || !std::isfinite(popularity_exponent)) {
    throw ConfigError("popularity_exponent must be positive");
  }
  if (!(max_item_exposure > 0.0 && max_item_exposure <= 1.0)) {
    throw ConfigError("max_item_exposure must lie in (0, 1]");
  }
  if (!(user_activity_exponent >= 0.0)) {
    throw ConfigError("user_activity_exponent must be nonnegative");
  }
  if (latent_rank < 1) throw ConfigError("latent_rank must be positive");
  if (!(fake_fraction >= 0.0 && fake_fraction <= 1.0)) {
    throw ConfigError("fake_fraction must lie in [0, 1]");
  }
  if (content_dims < 1) throw ConfigError("content_dims must be positive");
}

IndexMap SyntheticWorld::users() const { return IndexMap::numbered("u", num_users); }
IndexMap SyntheticWorld::items() const { return IndexMap::numbered("n", num_items); }

void SyntheticWorld::validate() const {
  if (static_cast<std::size_t>(theta.rows()) != num_users ||
      static_cast<std::size_t>(theta.cols()) != num_items ||
      gamma.rows() != theta.rows() || gamma.cols() != theta.cols()) {
    throw ValidationError("world tables do not match its dimensions");
  }
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double t = theta.data()[k], g = gamma.data()[k];
    if (!(t > 0.0 && t <= 1.0)) {
      throw ValidationError("exposure probability outside (0, 1]");
    }
    if (!(g >= 0.0 && g <= 1.0)) {
      throw ValidationError("interest probability outside [0, 1]");
    }
  }
  if (!item_labels.empty() && item_labels.size() != num_items) {
    throw ValidationError("item label count mismatch");
  }
  if (!follower_counts.empty() && follower_counts.size() != num_users) {
    throw ValidationError("follower count mismatch");
  }
}

SyntheticWorld SyntheticWorld::from_tables(RowMatrix theta, RowMatrix gamma) {
  SyntheticWorld w;
  w.num_users = theta.rows();
  w.num_items = theta.cols();
  w.theta = std::move(theta);
  w.gamma = std::move(gamma);
  w.follower_counts.assign(w.num_users, 0);
  w.attribute_names = attribute_schema();
  w.attributes = RowMatrix::Zero(w.num_users, w.attribute_names.size());
  w.true_beta = Vector::Zero(w.attribute_names.size());
  w.item_labels.assign(w.num_items, NewsLabel::kFake);
  w.content = RowMatrix::Zero(w.num_items, 1);
  w.validate();
  return w;
}

SyntheticWorld generate_world(const WorldConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t nu = config.num_users, ni = config.num_items;
  const int r = config.latent_rank;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  RowMatrix user_f(nu, r), item_f(ni, r);
  for (Eigen::Index k = 0; k < user_f.size(); ++k) user_f.data()[k] = normal(rng);
  for (Eigen::Index k = 0; k < item_f.size(); ++k) item_f.data()[k] = normal(rng);

  std::vector<std::size_t> rank_order(ni);
  std::iota(rank_order.begin(), rank_order.end(), 0);
  std::shuffle(rank_order.begin(), rank_order.end(), rng);
  std::vector<double> popularity(ni);
  for (std::size_t pos = 0; pos < ni; ++pos) {
    popularity[rank_order[pos]] =
        config.max_item_exposure *
        std::pow(static_cast<double>(pos + 1), -config.popularity_exponent);
  }

  SyntheticWorld w;
  w.num_users = nu;
  w.num_items = ni;
  w.popularity_exponent = config.popularity_exponent;
  w.item_labels.resize(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    w.item_labels[i] =
        unif(rng) < config.fake_fraction ? NewsLabel::kFake : NewsLabel::kTrue;
  }

  // Profile attributes; several load on the planted user factors, which makes
  // the factors a confounder of attributes and fake-news interest.
  auto latent = [&](std::size_t u, int k) { return user_f(u, k % r); };
  w.attribute_names = attribute_schema();
  w.attributes.resize(nu, w.attribute_names.size());
  w.follower_counts.resize(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    const double followers = std::floor(std::exp(
        config.follower_log_mean + 0.5 * latent(u, 2) +
        config.follower_log_sd * normal(rng)));
    w.follower_counts[u] = static_cast<std::int64_t>(followers);
    w.attributes(u, 0) = unif(rng) < sigmoid(-2.0 + 0.8 * latent(u, 0)) ? 1 : 0;
    w.attributes(u, 1) = unif(rng) < sigmoid(-2.5 + 0.8 * latent(u, 1)) ? 1 : 0;
    w.attributes(u, 2) =
        std::floor(std::exp(6.0 + 0.5 * latent(u, 0) + normal(rng)));
    w.attributes(u, 3) =
        std::floor(std::exp(5.0 + 0.4 * latent(u, 1) + normal(rng)));
    w.attributes(u, 4) = static_cast<double>(w.follower_counts[u]);
    w.attributes(u, 5) = std::floor(std::exp(5.0 + normal(rng)));
    w.attributes(u, 6) = unif(rng) < 0.5 ? 1 : 0;
    w.attributes(u, 7) = std::round(std::clamp(35.0 + 12.0 * normal(rng), 18.0, 80.0));
    w.attributes(u, 8) = std::floor(14000.0 + 5000.0 * unif(rng));
  }
  const auto& effects = default_attribute_effects();
  w.true_beta = Eigen::Map<const Vector>(effects.data(), effects.size());

  Vector fake_shift = Vector::Zero(nu);
  for (Eigen::Index c = 0; c < w.attributes.cols(); ++c) {
    const double mean = w.attributes.col(c).mean();
    const double sd = std::sqrt(
        (w.attributes.col(c).array() - mean).square().sum() / std::max<double>(1, nu - 1));
    if (sd == 0.0) continue;
    fake_shift += w.true_beta[c] * ((w.attributes.col(c).array() - mean) / sd).matrix();
  }

  const double inv_sqrt_rank = 1.0 / std::sqrt(static_cast<double>(r));
  w.gamma.resize(nu, ni);
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t i = 0; i < ni; ++i) {
      double logit = config.interest_scale * inv_sqrt_rank *
                         user_f.row(u).dot(item_f.row(i)) +
                     config.interest_bias;
      if (w.item_labels[i] == NewsLabel::kFake) logit += fake_shift[u];
      w.gamma(u, i) = sigmoid(logit);
    }
  }

  const double max_followers = static_cast<double>(
      *std::max_element(w.follower_counts.begin(), w.follower_counts.end()));
  w.theta.resize(nu, ni);
  for (std::size_t u = 0; u < nu; ++u) {
    const double activity =
        config.user_activity_exponent == 0.0
            ? 1.0
            : std::pow((w.follower_counts[u] + 1.0) / (max_followers + 1.0),
                       config.user_activity_exponent);
    for (std::size_t i = 0; i < ni; ++i) w.theta(u, i) = popularity[i] * activity;
  }

  // Content: a noisy log-popularity signal, the item factors, then noise.
  w.content.resize(ni, config.content_dims);
  std::vector<double> log_pop(ni);
  for (std::size_t i = 0; i < ni; ++i) log_pop[i] = std::log(popularity[i]);
  const double lp_mean = std::accumulate(log_pop.begin(), log_pop.end(), 0.0) / ni;
  double lp_var = 0.0;
  for (double v : log_pop) lp_var += (v - lp_mean) * (v - lp_mean);
  const double lp_sd = std::sqrt(lp_var / ni);
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t k = 0; k < config.content_dims; ++k) {
      double base = 0.0;
      if (k == 0) {
        base = lp_sd > 0.0 ? (log_pop[i] - lp_mean) / lp_sd : 0.0;
      } else if (k <= static_cast<std::size_t>(r)) {
        base = item_f(i, k - 1);
      }
      w.content(i, k) = base + config.content_noise * normal(rng);
    }
  }
  w.validate();
  return w;
}

InteractionSet sample_interactions(const SyntheticWorld& world,
                                   std::uint64_t seed) {
  world.validate();
  InteractionSet out(world.users(), world.items());
  out.set_item_labels(world.item_labels);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t u = 0; u < world.num_users; ++u) {
    for (std::size_t i = 0; i < world.num_items; ++i) {
      const bool exposed = unif(rng) < world.theta(u, i);
      const bool interested = unif(rng) < world.gamma(u, i);
      if (exposed && interested) out.add(static_cast<int>(u), static_cast<int>(i));
    }
  }
  return out;
}

UniformTest make_uniform_test(const SyntheticWorld& world,
                              const std::vector<Pair>& holdout,
                              const InteractionSet& training, double exposure,
                              std::uint64_t seed) {
  world.validate();
  if (!(exposure > 0.0 && exposure <= 1.0)) {
    throw ConfigError("test exposure must lie in (0, 1]");
  }
  if (training.num_users() != world.num_users ||
      training.num_items() != world.num_items) {
    throw ValidationError("training set does not match the world");
  }
  UniformTest out{training.empty_like(), std::vector<int>(world.num_items, 0)};
  for (const Pair& p : holdout) {
    if (training.contains(p.user, p.item)) {
      throw ValidationError("held-out pair (" + std::to_string(p.user) + ", " +
                            std::to_string(p.item) +
                            ") is a training positive");
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const Pair& p : holdout) {
    const bool exposed = unif(rng) < exposure;
    const bool interested = unif(rng) < world.gamma(p.user, p.item);
    if (exposed) ++out.exposed_per_item[p.item];
    if (exposed && interested) out.test.add(p.user, p.item);
  }
  return out;
}

double ideal_loss_oracle(const SyntheticWorld& world, const FactorModel& model,
                         const std::vector<Triplet>& triplets) {
  check_triplets(world, model, triplets);
  const auto losses = triplet_losses(model, triplets);
  CompensatedSum sum;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    sum.add(world.gamma(t.user, t.pos) * (1.0 - world.gamma(t.user, t.neg)) *
            losses[k]);
  }
  return sum.value() / static_cast<double>(triplets.size());
}

std::vector<Triplet> all_triplets(std::size_t num_users, std::size_t num_items) {
  std::vector<Triplet> out;
  for (std::size_t u = 0; u < num_users; ++u) {
    for (std::size_t i = 0; i < num_items; ++i) {
      for (std::size_t j = 0; j < num_items; ++j) {
        if (i == j) continue;
        Triplet t;
        t.user = static_cast<int>(u);
        t.pos = static_cast<int>(i);
        t.neg = static_cast<int>(j);
        out.push_back(t);
      }
    }
  }
  return out;
}

double expected_unbiased_loss(const SyntheticWorld& world,
                              const FactorModel& model,
                              const PropensityTable& theta_hat,
                              const std::vector<Triplet>& triplets,
                              const ExpectationMode& mode) {
  world.validate();
  check_triplets(world, model, triplets);
  const auto losses = triplet_losses(model, triplets);
  const std::size_t cells = world.num_users * world.num_items;

  if (mode.kind == ExpectationMode::Kind::kEnumerate) {
    if (cells > kMaxEnumerableCells) {
      throw ValidationError("enumeration limited to " +
                            std::to_string(kMaxEnumerableCells) +
                            " cells, world has " + std::to_string(cells));
    }
    std::vector<double> p(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      p[c] = world.theta.data()[c] * world.gamma.data()[c];
    }
    CompensatedSum expectation;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
      double prob = 1.0;
      for (std::size_t c = 0; c < cells; ++c) {
        prob *= (mask >> c & 1) ? p[c] : 1.0 - p[c];
      }
      if (prob == 0.0) continue;
      const double value = unbiased_loss_for(
          world, theta_hat, triplets, losses,
          [mask](std::size_t c) { return static_cast<double>(mask >> c & 1); });
      expectation.add(prob * value);
    }
    return expectation.value();
  }

  if (mode.samples == 0) throw ConfigError("monte_carlo needs n >= 1");
  std::mt19937_64 rng(mode.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> y(cells);
  CompensatedSum mean;
  for (std::size_t s = 0; s < mode.samples; ++s) {
    for (std::size_t c = 0; c < cells; ++c) {
      const bool exposed = unif(rng) < world.theta.data()[c];
      const bool interested = unif(rng) < world.gamma.data()[c];
      y[c] = exposed && interested ? 1.0 : 0.0;
    }
    mean.add(unbiased_loss_for(world, theta_hat, triplets, losses,
                               [&y](std::size_t c) { return y[c]; }));
  }
  return mean.value() / static_cast<double>(mode.samples);
}

std::string UnbiasednessCheck::to_json() const {
  nlohmann::ordered_json j;
  j["worlds"] = worlds;
  j["max_abs_error"] = max_abs_error;
  j["enumeration_passed"] = enumeration_passed();
  j["mc_samples"] = mc_samples;
  j["mc_rmse"] = mc_rmse;
  j["mc_slope"] = mc_slope;
  j["monte_carlo_passed"] = monte_carlo_passed();
  return j.dump(2);
}

UnbiasednessCheck verify_unbiasedness(std::size_t num_worlds, std::uint64_t seed,
                                      const std::vector<std::size_t>& mc_samples,
                                      std::size_t mc_repeats) {
  if (num_worlds == 0) throw ConfigError("need at least one world");
  if (mc_samples.size() < 2 || mc_repeats == 0) {
    throw ConfigError("Monte-Carlo check needs two sample sizes and one repeat");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_world = [&](std::size_t users, std::size_t items) {
    RowMatrix theta(users, items), gamma(users, items);
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      theta.data()[k] = 0.05 + 0.95 * unif(rng);
      gamma.data()[k] = unif(rng);
    }
    return SyntheticWorld::from_tables(std::move(theta), std::move(gamma));
  };

  UnbiasednessCheck out;
  out.worlds = num_worlds;
  for (std::size_t w = 0; w < num_worlds; ++w) {
    // 1-3 users and 2-4 items keep every world at <= 12 cells.
    const std::size_t users = 1 + rng() % 3;
    const std::size_t items = 2 + rng() % 3;
    const SyntheticWorld world = random_world(users, items);
    const Backbone backbone = w % 2 ? Backbone::kNeural : Backbone::kMf;
    const FactorModel model = FactorModel::gaussian(backbone, users, items, 3, 1.0, rng());
    const auto triplets = all_triplets(users, items);
    const double ideal = ideal_loss_oracle(world, model, triplets);
    const double expected = expected_unbiased_loss(
        world, model, true_propensity(world), triplets, ExpectationMode::enumerate());
    out.max_abs_error = std::max(out.max_abs_error, std::abs(expected - ideal));
  }

  const SyntheticWorld world = random_world(3, 4);
  const FactorModel model = FactorModel::gaussian(Backbone::kMf, 3, 4, 3, 1.0, rng());
  const auto triplets = all_triplets(3, 4);
  const auto theta_hat = true_propensity(world);
  const double ideal = ideal_loss_oracle(world, model, triplets);
  std::vector<double> log_n, log_rmse;
  for (std::size_t n : mc_samples) {
    CompensatedSum sq;
    for (std::size_t r = 0; r < mc_repeats; ++r) {
      const double est = expected_unbiased_loss(
          world, model, theta_hat, triplets, ExpectationMode::monte_carlo(n, rng()));
      sq.add((est - ideal) * (est - ideal));
    }
    const double rmse = std::sqrt(sq.value() / static_cast<double>(mc_repeats));
    out.mc_samples.push_back(n);
    out.mc_rmse.push_back(rmse);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_rmse.push_back(std::log(rmse));
  }
  const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / log_n.size();
  const double my = std::accumulate(log_rmse.begin(), log_rmse.end(), 0.0) / log_rmse.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < log_n.size(); ++k) {
    sxy += (log_n[k] - mx) * (log_rmse[k] - my);
    sxx += (log_n[k] - mx) * (log_n[k] - mx);
  }
  out.mc_slope = sxy / sxx;
  return out;
}

PropensityTable true_propensity(const SyntheticWorld& world) {
  world.validate();
  const double floor = std::min(kDefaultPropensityFloor, world.theta.minCoeff());
  return PropensityTable::per_pair(world.theta, 1.0, floor);
}

PlantedConfounderData generate_planted_confounder(
    const PlantedConfounderConfig& config, std::uint64_t seed) {
  const std::size_t n = config.num_users, k = config.confounder_dims;
  const std::size_t m = 1 + config.extra_attributes;
  if (n < m + k + 2 || k < 1) {
    throw ConfigError("planted confounder world too small");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  RowMatrix z(n, k);
  for (Eigen::Index c = 0; c < z.size(); ++c) z.data()[c] = normal(rng);

  PlantedConfounderData d;
  d.attributes.resize(n, m);
  d.attribute_names.push_back("confounded");
  for (std::size_t a = 1; a < m; ++a) d.attribute_names.push_back("x" + std::to_string(a));
  d.true_beta = Vector::Zero(m);
  d.true_beta[0] = config.true_effect;
  for (std::size_t a = 1; a < m; ++a) d.true_beta[a] = 0.25 * static_cast<double>(a);
  d.outcome.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    d.attributes(u, 0) = z(u, 0) + config.attribute_noise * normal(rng);
    for (std::size_t a = 1; a < m; ++a) d.attributes(u, a) = normal(rng);
    d.outcome[u] = d.attributes.row(u).dot(d.true_beta) +
                   config.confounding * z(u, 0) +
                   config.outcome_noise * normal(rng);
  }

  RowMatrix g(k, k);
  for (Eigen::Index c = 0; c < g.size(); ++c) g.data()[c] = normal(rng);
  const Eigen::MatrixXd rotation = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  d.confounder_proxy = z * rotation;
  for (Eigen::Index c = 0; c < d.confounder_proxy.size(); ++c) {
    d.confounder_proxy.data()[c] += config.proxy_noise * normal(rng);
  }
  return d;
}

void export_world(const SyntheticWorld& world, const std::filesystem::path& dir) {
  world.validate();
  std::filesystem::create_directories(dir);
  const IndexMap users = world.users(), items = world.items();
  write_matrix_csv(dir / "theta.csv", world.theta, users, "user_id", items.ids());
  write_matrix_csv(dir / "gamma.csv", world.gamma, users, "user_id", items.ids());
  write_matrix_csv(dir / "attributes.csv", world.attributes, users, "user_id",
                   world.attribute_names);
  {
    std::ofstream out(dir / "followers.csv");
    write_csv_row(out, {"user_id", "followers_count"});
    for (std::size_t u = 0; u < world.num_users; ++u) {
      write_csv_row(out, {users.id(u), std::to_string(world.follower_counts[u])});
    }
  }
  {
    std::ofstream out(dir / "items.csv");
    write_csv_row(out, {"news_id", "label"});
    for (std::size_t i = 0; i < world.num_items; ++i) {
      write_csv_row(out, {items.id(i), to_string(world.item_labels[i])});
    }
  }
  std::vector<std::string> content_cols;
  for (Eigen::Index k = 0; k < world.content.cols(); ++k) {
    content_cols.push_back("c" + std::to_string(k));
  }
  write_matrix_csv(dir / "content.csv", world.content, items, "news_id",
                   content_cols);
  std::ofstream meta(dir / "meta.csv");
  write_csv_row(meta, {"key", "value"});
  write_csv_row(meta, {"popularity_exponent", format_exact(world.popularity_exponent)});
  for (std::size_t a = 0; a < world.attribute_names.size(); ++a) {
    write_csv_row(meta, {"true_beta." + world.attribute_names[a],
                         format_exact(world.true_beta[a])});
  }
}

SyntheticWorld import_world(const std::filesystem::path& dir) {
  const CsvTable theta = read_csv_file(dir / "theta.csv");
  const CsvTable gamma = read_csv_file(dir / "gamma.csv");
  const CsvTable attrs = read_csv_file(dir / "attributes.csv");
  const CsvTable followers = read_csv_file(dir / "followers.csv");
  const CsvTable items = read_csv_file(dir / "items.csv");
  const CsvTable content = read_csv_file(dir / "content.csv");
  const CsvTable meta = read_csv_file(dir / "meta.csv");

  SyntheticWorld w;
  w.num_users = theta.rows.size();
  w.num_items = theta.header.size() - 1;
  if (first_column(theta) != IndexMap::numbered("u", w.num_users).ids()) {
    throw ValidationError(theta.source + ": unexpected user ids");
  }
  w.theta = read_matrix_csv(theta, w.num_users);
  w.gamma = read_matrix_csv(gamma, w.num_users);
  w.attributes = read_matrix_csv(attrs, w.num_users);
  w.attribute_names.assign(attrs.header.begin() + 1, attrs.header.end());
  followers.require_columns({"user_id", "followers_count"});
  if (followers.rows.size() != w.num_users) {
    throw ValidationError(followers.source + ": row count mismatch");
  }
  for (std::size_t u = 0; u < w.num_users; ++u) {
    w.follower_counts.push_back(parse_int_cell(followers, u, 1));
  }
  items.require_columns({"news_id", "label"});
  if (items.rows.size() != w.num_items) {
    throw ValidationError(items.source + ": row count mismatch");
  }
  for (const auto& row : items.rows) w.item_labels.push_back(parse_news_label(row[1]));
  w.content = read_matrix_csv(content, w.num_items);
  std::map<std::string, double> kv;
  for (std::size_t r = 0; r < meta.rows.size(); ++r) {
    kv[meta.rows[r][0]] = parse_double_cell(meta, r, 1);
  }
  w.popularity_exponent = kv.count("popularity_exponent") ? kv["popularity_exponent"] : 1.0;
  w.true_beta = Vector::Zero(w.attribute_names.size());
  for (std::size_t a = 0; a < w.attribute_names.size(); ++a) {
    auto it = kv.find("true_beta." + w.attribute_names[a]);
    if (it != kv.end()) w.true_beta[a] = it->second;
  }
  w.validate();
  return w;
}

}  // namespace sharecause
