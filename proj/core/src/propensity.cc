#include "sharecause/propensity.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace sharecause {
namespace {

void check_eta_floor(double eta, double floor) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ConfigError("eta must lie in (0, 1], got " + format_exact(eta));
  }
  if (!(floor > 0.0 && floor <= 1.0)) {
    throw ConfigError("propensity floor must lie in (0, 1], got " +
                      format_exact(floor));
  }
}

double clamp_value(double v, double floor) {
  if (!std::isfinite(v) || v > 1.0 || v < 0.0) {
    throw ValidationError("propensity value " + format_exact(v) +
                          " outside [0, 1]");
  }
  return std::max(v, floor);
}

PropensityTable from_weighted_counts(const std::vector<double>& counts,
                                     double eta, double floor) {
  const double max_count = *std::max_element(counts.begin(), counts.end());
  if (!(max_count > 0.0)) {
    throw NumericError("all weighted share counts are zero");
  }
  std::vector<double> values(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    values[i] = std::pow(counts[i] / max_count, eta);
  }
  return PropensityTable::per_item(std::move(values), eta, floor);
}

}  // namespace

PropensityTable PropensityTable::per_item(std::vector<double> values,
                                          double eta, double floor) {
  check_eta_floor(eta, floor);
  PropensityTable t;
  t.kind_ = PropensityKind::kPerItem;
  t.eta_ = eta;
  t.floor_ = floor;
  for (double& v : values) v = clamp_value(v, floor);
  t.item_values_ = std::move(values);
  return t;
}

PropensityTable PropensityTable::per_pair(RowMatrix values, double eta,
                                          double floor) {
  check_eta_floor(eta, floor);
  PropensityTable t;
  t.kind_ = PropensityKind::kPerPair;
  t.eta_ = eta;
  t.floor_ = floor;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    values.data()[k] = clamp_value(values.data()[k], floor);
  }
  t.pair_values_ = std::move(values);
  return t;
}

std::size_t PropensityTable::num_items() const {
  return kind_ == PropensityKind::kPerItem
             ? item_values_.size()
             : static_cast<std::size_t>(pair_values_.cols());
}

std::size_t PropensityTable::num_users() const {
  return kind_ == PropensityKind::kPerItem
             ? 0
             : static_cast<std::size_t>(pair_values_.rows());
}

double PropensityTable::at(int user, int item) const {
  if (item < 0 || static_cast<std::size_t>(item) >= num_items()) {
    throw ValidationError("item " + std::to_string(item) +
                          " unknown to propensity table");
  }
  if (kind_ == PropensityKind::kPerItem) return item_values_[item];
  if (user < 0 || user >= pair_values_.rows()) {
    throw ValidationError("user " + std::to_string(user) +
                          " unknown to propensity table");
  }
  return pair_values_(user, item);
}

std::vector<double> PropensityTable::all_values() const {
  if (kind_ == PropensityKind::kPerItem) return item_values_;
  return {pair_values_.data(), pair_values_.data() + pair_values_.size()};
}

PropensityTable news_propensity(const InteractionSet& interactions, double eta,
                                double floor) {
  check_eta_floor(eta, floor);
  if (interactions.num_positives() == 0) {
    throw ValidationError("news propensity needs at least one interaction");
  }
  const auto counts = interactions.item_counts();
  return from_weighted_counts({counts.begin(), counts.end()}, eta, floor);
}

PropensityTable user_news_propensity(
    const InteractionSet& interactions,
    const std::vector<std::optional<double>>& followers, double eta,
    double floor) {
  check_eta_floor(eta, floor);
  if (interactions.num_positives() == 0) {
    throw ValidationError("user-news propensity needs at least one interaction");
  }
  if (followers.size() != interactions.num_users()) {
    throw ValidationError("follower table covers " +
                          std::to_string(followers.size()) + " users, expected " +
                          std::to_string(interactions.num_users()));
  }
  std::vector<double> weighted(interactions.num_items(), 0.0);
  for (std::size_t u = 0; u < interactions.num_users(); ++u) {
    const auto& items = interactions.items_of(static_cast<int>(u));
    if (items.empty()) continue;
    if (!followers[u]) {
      throw ValidationError("missing follower count for user '" +
                            interactions.users().id(u) + "'");
    }
    const double f = *followers[u];
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw ValidationError("invalid follower count for user '" +
                            interactions.users().id(u) + "'");
    }
    for (int i : items) weighted[i] += f;
  }
  return from_weighted_counts(weighted, eta, floor);
}

NeuralPropensityModel::NeuralPropensityModel(Vector weight, double bias,
                                             NeuralPropensityMode mode,
                                             double floor)
    : weight_(std::move(weight)), bias_(bias), mode_(mode), floor_(floor) {
  check_eta_floor(kDefaultEta, floor);
}

double NeuralPropensityModel::logit(std::span<const double> features) const {
  if (features.size() != dims()) {
    throw ValidationError("content feature length " +
                          std::to_string(features.size()) + " != model dims " +
                          std::to_string(dims()));
  }
  double z = bias_;
  for (std::size_t k = 0; k < features.size(); ++k) z += weight_[k] * features[k];
  return z;
}

double NeuralPropensityModel::raw(std::span<const double> features) const {
  return sigmoid(logit(features));
}

double NeuralPropensityModel::clamped(std::span<const double> features) const {
  return std::clamp(raw(features), floor_, 1.0);
}

void NeuralPropensityModel::set_parameters(const Vector& weight, double bias) {
  if (weight.size() != weight_.size()) {
    throw ValidationError("propensity weight dimension mismatch");
  }
  weight_ = weight;
  bias_ = bias;
}

PropensityTable NeuralPropensityModel::to_table(const RowMatrix& features) const {
  std::vector<double> values(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    values[i] = clamped({features.row(i).data(), dims()});
  }
  return PropensityTable::per_item(std::move(values), kDefaultEta, floor_);
}

RowMatrix to_feature_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("no content feature rows");
  const std::size_t dims = rows.front().size();
  RowMatrix m(rows.size(), dims);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dims) {
      throw ValidationError("content feature row " + std::to_string(i) +
                            " has " + std::to_string(rows[i].size()) +
                            " dims, expected " + std::to_string(dims));
    }
    for (std::size_t k = 0; k < dims; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

NeuralPropensityModel fit_neural_propensity(
    const std::vector<std::vector<double>>& content_features,
    const InteractionSet& interactions, NeuralPropensityMode mode,
    const NeuralPropensityParams& params) {
  const RowMatrix x = to_feature_matrix(content_features);
  if (static_cast<std::size_t>(x.rows()) != interactions.num_items()) {
    throw ValidationError("content features cover " + std::to_string(x.rows()) +
                          " items, interactions have " +
                          std::to_string(interactions.num_items()));
  }
  if (params.iterations < 0 || !(params.learning_rate >= 0.0)) {
    throw ConfigError("invalid neural propensity hyperparameters");
  }
  const auto targets_table =
      news_propensity(interactions, params.eta, params.floor);
  const Eigen::Map<const Vector> targets(targets_table.item_values().data(),
                                         x.rows());

  // Full-batch gradient descent on mean squared error between sigmoid(Xw+b)
  // and the popularity targets.
  const double n = static_cast<double>(x.rows());
  Vector w = Vector::Zero(x.cols());
  double b = 0.0;
  for (int it = 0; it < params.iterations; ++it) {
    const Vector z = (x * w).array() + b;
    const Vector p = z.unaryExpr([](double v) { return sigmoid(v); });
    const Vector dz =
        (2.0 / n) * ((p - targets).array() * p.array() * (1.0 - p.array())).matrix();
    w -= params.learning_rate * (x.transpose() * dz);
    b -= params.learning_rate * dz.sum();
  }
  return NeuralPropensityModel(std::move(w), b, mode, params.floor);
}

double score_propensity(const PropensityTable& table, int user, int item) {
  return table.at(user, item);
}

double score_propensity(const NeuralPropensityModel& model,
                        std::span<const double> features) {
  return model.clamped(features);
}

double score_propensity(const NeuralPropensityModel& model,
                        const RowMatrix& item_features, int item) {
  if (item < 0 || item >= item_features.rows()) {
    throw ValidationError("no content features for item " +
                          std::to_string(item));
  }
  return model.clamped({item_features.row(item).data(), model.dims()});
}

PositivityReport positivity_report(const PropensityTable& table,
                                   double warn_fraction) {
  const auto values = table.all_values();
  PositivityReport r;
  if (values.empty()) return r;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  r.min = *lo;
  r.max = *hi;
  const auto at_floor = std::count_if(values.begin(), values.end(), [&](double v) {
    return v <= table.floor();
  });
  r.fraction_at_floor = static_cast<double>(at_floor) / values.size();
  r.floor_warning = r.fraction_at_floor > warn_fraction;
  return r;
}

}  // namespace sharecause
