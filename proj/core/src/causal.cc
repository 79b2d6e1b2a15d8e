#include "sharecause/causal.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "sharecause/csv.h"

namespace sharecause {

bool AttributeTable::is_binary_column(const std::string& name) {
  return name == "verified" || name == "org" || name == "gender";
}

void AttributeTable::validate() const {
  if (values.rows() != static_cast<Eigen::Index>(user_ids.size()) ||
      values.cols() != static_cast<Eigen::Index>(names.size())) {
    throw ValidationError("attribute table shape mismatch");
  }
  if (!values.allFinite()) throw ValidationError("attribute table has missing values");
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (!is_binary_column(names[c])) continue;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      const double v = values(r, c);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("binary attribute '" + names[c] + "' for user '" +
                              user_ids[r] + "' is " + format_exact(v));
      }
    }
  }
}

void AttributeTable::standardize() {
  const Eigen::Index n = values.rows();
  means = Vector::Zero(values.cols());
  sds = Vector::Ones(values.cols());
  if (n == 0) return;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    means[c] = values.col(c).mean();
    const double var = n > 1
        ? (values.col(c).array() - means[c]).square().sum() / (n - 1)
        : 0.0;
    sds[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

RowMatrix AttributeTable::standardized_values() const {
  if (means.size() != values.cols()) {
    throw ValidationError("attribute table has not been standardized");
  }
  RowMatrix out = values;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c) = (out.col(c).array() - means[c]) / sds[c];
  }
  return out;
}

AttributeTable AttributeTable::select_users(
    const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (std::size_t r = 0; r < user_ids.size(); ++r) row_of.emplace(user_ids[r], r);
  AttributeTable out;
  out.names = names;
  out.means = means;
  out.sds = sds;
  out.values.resize(ids.size(), values.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto it = row_of.find(ids[k]);
    if (it == row_of.end()) {
      throw ValidationError("no attributes for user '" + ids[k] + "'");
    }
    out.values.row(k) = values.row(it->second);
    out.user_ids.push_back(ids[k]);
  }
  return out;
}

std::optional<Susceptibility> susceptibility(std::size_t n_fake,
                                             std::size_t n_true) {
  if (n_fake + n_true == 0) return std::nullopt;
  Susceptibility s;
  s.value = static_cast<double>(n_fake) / static_cast<double>(n_fake + n_true);
  s.below_stated_range = n_fake == 0;
  return s;
}

std::vector<std::optional<Susceptibility>> susceptibility_by_user(
    const InteractionSet& interactions) {
  const auto& labels = interactions.item_labels();
  if (labels.size() != interactions.num_items()) {
    throw ValidationError("susceptibility needs fake/true labels for every item");
  }
  std::vector<std::optional<Susceptibility>> out(interactions.num_users());
  for (std::size_t u = 0; u < interactions.num_users(); ++u) {
    std::size_t fake = 0, real = 0;
    for (int i : interactions.items_of(static_cast<int>(u))) {
      (labels[i] == NewsLabel::kFake ? fake : real) += 1;
    }
    out[u] = susceptibility(fake, real);
  }
  return out;
}

std::optional<double> CausalFit::intercept() const {
  if (!has_intercept) return std::nullopt;
  return coef[coef.size() - 1];
}

std::string CausalFit::to_json() const {
  nlohmann::ordered_json j;
  j["n_obs"] = n_obs;
  j["r_squared"] = r_squared;
  j["rss"] = rss;
  nlohmann::ordered_json preds = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < coef.size(); ++k) {
    nlohmann::ordered_json p;
    p["name"] = predictor_names[k];
    p["coef"] = coef[k];
    p["se"] = standard_errors[k];
    p["ci_low"] = ci_low[k];
    p["ci_high"] = ci_high[k];
    p["p"] = p_values[k];
    preds.push_back(std::move(p));
  }
  j["predictors"] = std::move(preds);
  return j.dump(2);
}

CausalFit fit_outcome_model(const RowMatrix& attributes,
                            const std::vector<std::string>& attribute_names,
                            const RowMatrix* confounder, const Vector& outcome,
                            const FitOptions& options) {
  const Eigen::Index n = attributes.rows();
  if (attributes.cols() != static_cast<Eigen::Index>(attribute_names.size())) {
    throw ValidationError("attribute names do not match attribute columns");
  }
  if (outcome.size() != n || (confounder && confounder->rows() != n)) {
    throw ValidationError("design blocks have different row counts");
  }
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw ConfigError("confidence level must lie in (0, 1)");
  }

  CausalFit fit;
  fit.n_attributes = attributes.cols();
  fit.n_confounder = confounder ? confounder->cols() : 0;
  fit.has_intercept = options.intercept;
  fit.predictor_names = attribute_names;
  for (std::size_t k = 0; k < fit.n_confounder; ++k) {
    fit.predictor_names.push_back("u" + std::to_string(k));
  }
  if (options.intercept) fit.predictor_names.push_back("intercept");
  const Eigen::Index p = static_cast<Eigen::Index>(fit.predictor_names.size());
  if (p == 0) throw ValidationError("no predictors");
  if (n <= p) {
    throw ValidationError("need more observations (" + std::to_string(n) +
                          ") than predictors (" + std::to_string(p) + ")");
  }

  Eigen::MatrixXd x(n, p);
  x.leftCols(fit.n_attributes) = attributes;
  if (confounder) x.middleCols(fit.n_attributes, fit.n_confounder) = *confounder;
  if (options.intercept) x.col(p - 1).setOnes();
  if (!x.allFinite() || !outcome.allFinite()) {
    throw ValidationError("design or outcome has non-finite values");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!cols.empty()) cols += ", ";
      cols += fit.predictor_names[perm[k]];
    }
    throw ValidationError("design matrix is rank deficient; collinear columns: " +
                          cols);
  }
  fit.coef = qr.solve(outcome);
  const Vector resid = outcome - x * fit.coef;
  fit.rss = resid.squaredNorm();
  fit.n_obs = static_cast<std::size_t>(n);
  const double tss = options.intercept
                         ? (outcome.array() - outcome.mean()).square().sum()
                         : outcome.squaredNorm();
  fit.r_squared = tss > 0.0 ? 1.0 - fit.rss / tss : 1.0;

  // (X'X)^{-1} = P R^{-1} R^{-T} P^T from the pivoted QR factor.
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd unscaled = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation().indices();
  Vector cov_diag(p);
  for (Eigen::Index k = 0; k < p; ++k) cov_diag[perm[k]] = unscaled(k, k);

  const double df = static_cast<double>(n - p);
  const double sigma2 = fit.rss / df;
  boost::math::students_t dist(df);
  fit.critical_value =
      boost::math::quantile(dist, 0.5 + options.confidence / 2.0);
  fit.standard_errors = (sigma2 * cov_diag.array()).sqrt();
  fit.ci_low.resize(p);
  fit.ci_high.resize(p);
  fit.p_values.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double se = fit.standard_errors[k];
    fit.ci_low[k] = fit.coef[k] - fit.critical_value * se;
    fit.ci_high[k] = fit.coef[k] + fit.critical_value * se;
    if (se > 0.0) {
      const double t = std::abs(fit.coef[k] / se);
      fit.p_values[k] = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
    } else {
      fit.p_values[k] = fit.coef[k] == 0.0 ? 1.0 : 0.0;
    }
  }
  return fit;
}

double predict_susceptibility(const CausalFit& fit,
                              std::span<const double> attributes,
                              std::span<const double> confounder) {
  if (attributes.size() != fit.n_attributes ||
      confounder.size() != fit.n_confounder) {
    throw ValidationError("prediction inputs do not match the fitted model");
  }
  double out = fit.has_intercept ? *fit.intercept() : 0.0;
  for (std::size_t k = 0; k < attributes.size(); ++k) out += fit.coef[k] * attributes[k];
  for (std::size_t k = 0; k < confounder.size(); ++k) {
    out += fit.coef[fit.n_attributes + k] * confounder[k];
  }
  return out;
}

RegressionMetrics regression_metrics(std::span<const double> predictions,
                                     std::span<const double> truth) {
  if (predictions.size() != truth.size()) {
    throw ValidationError("prediction and truth lengths differ");
  }
  if (truth.empty()) throw ValidationError("no observations");
  CompensatedSum sq, ab;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double r = predictions[k] - truth[k];
    sq.add(r * r);
    ab.add(std::abs(r));
  }
  const double n = static_cast<double>(truth.size());
  return {sq.value() / n, ab.value() / n};
}

EffectComparison compare_effect_estimates(
    const std::vector<std::pair<std::string, CausalFit>>& fits, double alpha) {
  if (fits.empty()) throw ValidationError("no fits to compare");
  const CausalFit& ref = fits.front().second;
  const std::vector<std::string> schema(
      ref.predictor_names.begin(), ref.predictor_names.begin() + ref.n_attributes);
  EffectComparison out;
  out.alpha = alpha;
  for (const auto& [variant, fit] : fits) {
    const std::vector<std::string> names(
        fit.predictor_names.begin(), fit.predictor_names.begin() + fit.n_attributes);
    if (names != schema) {
      throw ValidationError("fit '" + variant +
                            "' uses a different attribute schema");
    }
  }
  for (std::size_t a = 0; a < schema.size(); ++a) {
    for (const auto& [variant, fit] : fits) {
      EffectRow row;
      row.attribute = schema[a];
      row.variant = variant;
      row.coef = fit.coef[a];
      row.se = fit.standard_errors[a];
      row.ci_low = fit.ci_low[a];
      row.ci_high = fit.ci_high[a];
      row.p_value = fit.p_values[a];
      row.sign = (row.coef > 0.0) - (row.coef < 0.0);
      row.significant = row.p_value < alpha;
      row.diff_from_reference = fit.coef[a] - ref.coef[a];
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::string EffectComparison::to_csv() const {
  std::ostringstream out;
  write_csv_row(out, {"attribute", "variant", "coef", "se", "ci_low", "ci_high",
                      "p", "sign", "significant", "diff_from_reference"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.attribute, r.variant, format_exact(r.coef),
                        format_exact(r.se), format_exact(r.ci_low),
                        format_exact(r.ci_high), format_exact(r.p_value),
                        std::to_string(r.sign), r.significant ? "1" : "0",
                        format_exact(r.diff_from_reference)});
  }
  return out.str();
}

}  // namespace sharecause
