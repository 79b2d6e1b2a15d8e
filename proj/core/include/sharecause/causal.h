#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sharecause/common.h"
#include "sharecause/interactions.h"

namespace sharecause {

// Per-user profile attributes, rows aligned with `user_ids`.
struct AttributeTable {
  std::vector<std::string> user_ids;
  std::vector<std::string> names;
  RowMatrix values;
  // Filled by standardize(); empty until then.
  Vector means;
  Vector sds;

  static bool is_binary_column(const std::string& name);

  // Checks shape, finiteness and {0,1} binary columns.
  void validate() const;
  // Computes means/sds; constant columns get sd = 1.
  void standardize();
  // Values with the stored standardization applied.
  RowMatrix standardized_values() const;
  // Rows reordered (and possibly subset) by user id.
  AttributeTable select_users(const std::vector<std::string>& ids) const;
};

struct Susceptibility {
  double value = 0.0;
  // True for value 0, which falls outside the stated (0, 1] range.
  bool below_stated_range = false;
};

// n_fake / (n_fake + n_true); nullopt when the user shared nothing.
std::optional<Susceptibility> susceptibility(std::size_t n_fake,
                                             std::size_t n_true);

// Per-user susceptibility from a labelled interaction set.
std::vector<std::optional<Susceptibility>> susceptibility_by_user(
    const InteractionSet& interactions);

struct FitOptions {
  bool intercept = true;
  double confidence = 0.95;
};

// Ordinary least-squares fit of B = beta . a + gamma_conf . U (+ c).
// Predictor order: attributes, confounder dims (u0, u1, ...), intercept.
struct CausalFit {
  std::vector<std::string> predictor_names;
  std::size_t n_attributes = 0;
  std::size_t n_confounder = 0;
  bool has_intercept = false;
  Vector coef;
  Vector standard_errors;
  Vector ci_low;
  Vector ci_high;
  Vector p_values;
  std::size_t n_obs = 0;
  double r_squared = 0.0;
  double rss = 0.0;
  double critical_value = 0.0;

  Vector beta() const { return coef.head(n_attributes); }
  Vector gamma_conf() const { return coef.segment(n_attributes, n_confounder); }
  std::optional<double> intercept() const;

  // {"n_obs", "r_squared", "predictors": [{name, coef, se, ci_low, ci_high, p}]}
  std::string to_json() const;
};

// Throws ValidationError when n_obs <= predictors or the design is rank
// deficient (the message names the dependent columns).
CausalFit fit_outcome_model(const RowMatrix& attributes,
                            const std::vector<std::string>& attribute_names,
                            const RowMatrix* confounder, const Vector& outcome,
                            const FitOptions& options = {});

double predict_susceptibility(const CausalFit& fit,
                              std::span<const double> attributes,
                              std::span<const double> confounder);

struct RegressionMetrics {
  double mse = 0.0;
  double mae = 0.0;
};

RegressionMetrics regression_metrics(std::span<const double> predictions,
                                     std::span<const double> truth);

struct EffectRow {
  std::string attribute;
  std::string variant;
  double coef = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  int sign = 0;
  bool significant = false;
  // coef minus the first variant's coef for the same attribute.
  double diff_from_reference = 0.0;
};

struct EffectComparison {
  std::vector<EffectRow> rows;
  double alpha = 0.05;

  // One row per (attribute, variant).
  std::string to_csv() const;
};

EffectComparison compare_effect_estimates(
    const std::vector<std::pair<std::string, CausalFit>>& fits,
    double alpha = 0.05);

}  // namespace sharecause
