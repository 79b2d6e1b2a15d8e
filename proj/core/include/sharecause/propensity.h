#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sharecause/common.h"
#include "sharecause/interactions.h"

namespace sharecause {

inline constexpr double kDefaultEta = 0.5;
inline constexpr double kDefaultPropensityFloor = 1e-3;

enum class PropensityKind { kPerItem, kPerPair };

// Estimated exposure probabilities. Every stored value lies in [floor, 1].
class PropensityTable {
 public:
  // Values below `floor` are raised to it; values above 1 or non-finite are
  // rejected.
  static PropensityTable per_item(std::vector<double> values, double eta,
                                  double floor);
  static PropensityTable per_pair(RowMatrix values, double eta, double floor);

  PropensityKind kind() const { return kind_; }
  double eta() const { return eta_; }
  double floor() const { return floor_; }
  std::size_t num_items() const;
  // Zero for per-item tables.
  std::size_t num_users() const;

  // Per-item tables ignore `user`.
  double at(int user, int item) const;

  const std::vector<double>& item_values() const { return item_values_; }
  const RowMatrix& pair_values() const { return pair_values_; }
  std::vector<double> all_values() const;

 private:
  PropensityTable() = default;

  PropensityKind kind_ = PropensityKind::kPerItem;
  std::vector<double> item_values_;
  RowMatrix pair_values_;
  double eta_ = kDefaultEta;
  double floor_ = kDefaultPropensityFloor;
};

// theta_i = (count_i / max_j count_j)^eta, clamped below by `floor`.
PropensityTable news_propensity(const InteractionSet& interactions,
                                double eta = kDefaultEta,
                                double floor = kDefaultPropensityFloor);

// Follower-weighted variant: counts become sum_u Y_ui * F_u. `followers` is
// indexed by user row; an empty slot for a user who shared anything is an
// error.
PropensityTable user_news_propensity(
    const InteractionSet& interactions,
    const std::vector<std::optional<double>>& followers,
    double eta = kDefaultEta, double floor = kDefaultPropensityFloor);

enum class NeuralPropensityMode { kPretrainToPopularity, kJoint };

struct NeuralPropensityParams {
  double learning_rate = 2.0;
  int iterations = 5000;
  double eta = kDefaultEta;
  double floor = kDefaultPropensityFloor;
};

// theta_i = sigmoid(w . c_i + b) over per-item content features c_i.
class NeuralPropensityModel {
 public:
  NeuralPropensityModel(Vector weight, double bias, NeuralPropensityMode mode,
                        double floor = kDefaultPropensityFloor);

  std::size_t dims() const { return static_cast<std::size_t>(weight_.size()); }
  double logit(std::span<const double> features) const;
  // Strictly inside (0, 1).
  double raw(std::span<const double> features) const;
  // Clamped to [floor, 1]; this is the value used inside the loss.
  double clamped(std::span<const double> features) const;

  const Vector& weight() const { return weight_; }
  double bias() const { return bias_; }
  NeuralPropensityMode mode() const { return mode_; }
  double floor() const { return floor_; }

  // Used by joint training.
  void set_parameters(const Vector& weight, double bias);

  // Evaluates every item row of `features`.
  PropensityTable to_table(const RowMatrix& features) const;

 private:
  Vector weight_;
  double bias_;
  NeuralPropensityMode mode_;
  double floor_;
};

// Rows of `content_features` must share one length and match the item count.
// Both modes start from the popularity pretraining fit; kJoint marks the model
// for further updates inside the dissemination trainer.
NeuralPropensityModel fit_neural_propensity(
    const std::vector<std::vector<double>>& content_features,
    const InteractionSet& interactions, NeuralPropensityMode mode,
    const NeuralPropensityParams& params = {});

RowMatrix to_feature_matrix(const std::vector<std::vector<double>>& rows);

double score_propensity(const PropensityTable& table, int user, int item);
double score_propensity(const NeuralPropensityModel& model,
                        std::span<const double> features);
// Errors when `item` has no feature row.
double score_propensity(const NeuralPropensityModel& model,
                        const RowMatrix& item_features, int item);

struct PositivityReport {
  double min = 0.0;
  double max = 0.0;
  double fraction_at_floor = 0.0;
  bool floor_warning = false;
};

// Warns when strictly more than `warn_fraction` of entries sit at the floor.
PositivityReport positivity_report(const PropensityTable& table,
                                   double warn_fraction = 0.25);

}  // namespace sharecause
