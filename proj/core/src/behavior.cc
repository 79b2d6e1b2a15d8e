#include "sharecause/behavior.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sharecause/csv.h"

namespace sharecause {
namespace {

RowMatrix pairwise_distances(const RowMatrix& points) {
  const Eigen::Index n = points.rows();
  RowMatrix d(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    d(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      d(a, b) = d(b, a) = (points.row(a) - points.row(b)).norm();
    }
  }
  return d;
}

EmbeddingSample subsample(const EmbeddingSample& s, std::size_t n,
                          std::mt19937_64& rng) {
  if (s.size() <= n) return s;
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  EmbeddingSample out;
  out.cohort = s.cohort;
  out.rows.resize(n, s.rows.cols());
  for (std::size_t k = 0; k < n; ++k) {
    out.user_ids.push_back(s.user_ids[idx[k]]);
    out.rows.row(k) = s.rows.row(idx[k]);
  }
  return out;
}

CohortStats cohort_stats(const EmbeddingSample& s,
                         const std::optional<DbscanParams>& params) {
  CohortStats st;
  st.n = s.size();
  st.params = params ? *params : default_dbscan_params(s.rows);
  const auto labels = dbscan(s.rows, st.params.eps, st.params.min_pts);
  const int max_label = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
  st.clusters = static_cast<std::size_t>(max_label + 1);
  st.noise_fraction =
      static_cast<double>(std::count(labels.begin(), labels.end(), kNoise)) /
      static_cast<double>(std::max<std::size_t>(1, labels.size()));
  if (st.clusters >= 2) st.silhouette = silhouette(s.rows, labels);
  st.projection = project_2d(s.rows);
  return st;
}

nlohmann::ordered_json stats_json(const CohortStats& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["clusters"] = s.clusters;
  j["noise_fraction"] = s.noise_fraction;
  j["silhouette"] = s.silhouette ? nlohmann::ordered_json(*s.silhouette)
                                 : nlohmann::ordered_json(nullptr);
  j["eps"] = s.params.eps;
  j["min_pts"] = s.params.min_pts;
  j["explained_variance"] = {s.projection.explained_variance[0],
                             s.projection.explained_variance[1]};
  j["total_variance"] = s.projection.total_variance;
  return j;
}

}  // namespace

const char* to_string(Cohort cohort) {
  return cohort == Cohort::kFakeOnly ? "fake_only" : "true_only";
}

std::pair<EmbeddingSample, EmbeddingSample> balance_cohorts(
    const EmbeddingSample& fake_users, const EmbeddingSample& true_users,
    std::uint64_t seed) {
  if (fake_users.size() == 0 || true_users.size() == 0) {
    throw ValidationError("cannot balance an empty cohort");
  }
  if (static_cast<Eigen::Index>(fake_users.size()) != fake_users.rows.rows() ||
      static_cast<Eigen::Index>(true_users.size()) != true_users.rows.rows()) {
    throw ValidationError("cohort ids and embedding rows differ in length");
  }
  const std::size_t n = std::min(fake_users.size(), true_users.size());
  std::mt19937_64 rng(seed);
  auto fake = subsample(fake_users, n, rng);
  auto real = subsample(true_users, n, rng);
  return {std::move(fake), std::move(real)};
}

std::vector<int> dbscan(const RowMatrix& points, double eps,
                        std::size_t min_pts) {
  if (!(eps > 0.0)) throw ConfigError("dbscan eps must be positive");
  if (min_pts < 1) throw ConfigError("dbscan min_pts must be at least 1");
  const Eigen::Index n = points.rows();
  const RowMatrix dist = pairwise_distances(points);
  std::vector<std::vector<int>> neighbours(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (dist(a, b) <= eps) neighbours[a].push_back(static_cast<int>(b));
    }
  }
  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int cluster = 0;
  for (Eigen::Index p = 0; p < n; ++p) {
    if (labels[p] != kUnvisited) continue;
    if (neighbours[p].size() < min_pts) {
      labels[p] = kNoise;
      continue;
    }
    labels[p] = cluster;
    std::deque<int> frontier(neighbours[p].begin(), neighbours[p].end());
    while (!frontier.empty()) {
      const int q = frontier.front();
      frontier.pop_front();
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      if (neighbours[q].size() >= min_pts) {
        frontier.insert(frontier.end(), neighbours[q].begin(), neighbours[q].end());
      }
    }
    ++cluster;
  }
  return labels;
}

double silhouette(const RowMatrix& points, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
    throw ValidationError("label count does not match point count");
  }
  int num_clusters = 0;
  for (int l : labels) num_clusters = std::max(num_clusters, l + 1);
  std::vector<std::size_t> sizes(num_clusters, 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[l];
  }
  const auto nonempty =
      std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (nonempty < 2) {
    throw ValidationError("silhouette needs at least two non-noise clusters");
  }
  CompensatedSum total;
  std::size_t counted = 0;
  std::vector<double> dist_sum(num_clusters);
  for (std::size_t a = 0; a < labels.size(); ++a) {
    if (labels[a] < 0) continue;
    ++counted;
    if (sizes[labels[a]] == 1) continue;  // singleton: s = 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t b = 0; b < labels.size(); ++b) {
      if (b == a || labels[b] < 0) continue;
      dist_sum[labels[b]] += (points.row(a) - points.row(b)).norm();
    }
    const double within = dist_sum[labels[a]] / (sizes[labels[a]] - 1);
    double nearest = std::numeric_limits<double>::infinity();
    for (int c = 0; c < num_clusters; ++c) {
      if (c == labels[a] || sizes[c] == 0) continue;
      nearest = std::min(nearest, dist_sum[c] / sizes[c]);
    }
    const double denom = std::max(within, nearest);
    total.add(denom > 0.0 ? (nearest - within) / denom : 0.0);
  }
  return total.value() / static_cast<double>(counted);
}

DbscanParams default_dbscan_params(const RowMatrix& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw ValidationError("need at least two points");
  const RowMatrix dist = pairwise_distances(points);
  const Eigen::Index kth = std::min<Eigen::Index>(4, n - 1);
  std::vector<double> knn(n);
  std::vector<double> row(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) row[b] = dist(a, b);
    // row includes the zero self-distance at rank 0.
    std::nth_element(row.begin(), row.begin() + kth, row.end());
    knn[a] = row[kth];
  }
  std::sort(knn.begin(), knn.end());
  const double median = n % 2 ? knn[n / 2] : 0.5 * (knn[n / 2 - 1] + knn[n / 2]);
  DbscanParams p;
  p.eps = median > 0.0 ? median : 1e-12;
  p.min_pts = std::clamp<std::size_t>(2 * points.cols(), 4, 20);
  return p;
}

Projection project_2d(const RowMatrix& points) {
  const Eigen::Index n = points.rows(), d = points.cols();
  if (n < 2 || d < 2) throw ValidationError("projection needs >= 2 points and >= 2 dims");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centred = points.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n - 1);
  if (cov.trace() <= 0.0) throw ValidationError("all points are identical");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  // Eigenvalues come back ascending.
  Eigen::MatrixXd basis(d, 2);
  Projection out;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    basis.col(c) = v;
    out.explained_variance[c] = std::max(0.0, eig.eigenvalues()[d - 1 - c]);
  }
  out.total_variance = cov.trace();
  out.coords = centred * basis;
  return out;
}

BehaviorReport compare_behaviors(const EmbeddingSample& fake,
                                 const EmbeddingSample& true_,
                                 const std::optional<DbscanParams>& params) {
  if (fake.size() != true_.size()) {
    throw ValidationError("cohorts must be balanced before comparison");
  }
  BehaviorReport r;
  r.fake = cohort_stats(fake, params);
  r.true_ = cohort_stats(true_, params);
  r.fake_ids = fake.user_ids;
  r.true_ids = true_.user_ids;
  return r;
}

std::string BehaviorReport::to_json() const {
  nlohmann::ordered_json j;
  j["fake_only"] = stats_json(fake);
  j["true_only"] = stats_json(true_);
  return j.dump(2);
}

std::string BehaviorReport::projection_csv() const {
  std::ostringstream out;
  write_csv_row(out, {"user_id", "x", "y", "cohort"});
  auto emit = [&](const CohortStats& s, const std::vector<std::string>& ids,
                  Cohort c) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      write_csv_row(out, {ids[k], format_exact(s.projection.coords(k, 0)),
                          format_exact(s.projection.coords(k, 1)), to_string(c)});
    }
  };
  emit(fake, fake_ids, Cohort::kFakeOnly);
  emit(true_, true_ids, Cohort::kTrueOnly);
  return out.str();
}

}  // namespace sharecause
