#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sharecause/common.h"

namespace sharecause {

enum class Cohort { kFakeOnly, kTrueOnly };

const char* to_string(Cohort cohort);

// Embeddings for one cohort of users, rows aligned with `user_ids`.
struct EmbeddingSample {
  std::vector<std::string> user_ids;
  RowMatrix rows;
  Cohort cohort = Cohort::kFakeOnly;

  std::size_t size() const { return user_ids.size(); }
};

// Downsamples the larger cohort without replacement to the smaller size.
// Selected rows keep their original relative order.
std::pair<EmbeddingSample, EmbeddingSample> balance_cohorts(
    const EmbeddingSample& fake_users, const EmbeddingSample& true_users,
    std::uint64_t seed);

inline constexpr int kNoise = -1;

// Density-based clustering with Euclidean distance. A point is core when at
// least `min_pts` points (itself included) lie within `eps`. Clusters are
// numbered 0.. in order of their first core point.
std::vector<int> dbscan(const RowMatrix& points, double eps, std::size_t min_pts);

// Mean silhouette over non-noise points. Throws when fewer than two clusters
// remain; a singleton cluster contributes 0 for its point.
double silhouette(const RowMatrix& points, const std::vector<int>& labels);

struct DbscanParams {
  double eps = 0.0;
  std::size_t min_pts = 0;
};

// eps = median distance to the 4th nearest neighbour, min_pts = 2 d clamped
// to [4, 20].
DbscanParams default_dbscan_params(const RowMatrix& points);

struct Projection {
  RowMatrix coords;                    // n x 2
  double explained_variance[2] = {0, 0};
  double total_variance = 0.0;
};

// Top-2 principal components of the mean-centred points. Each component's
// largest-magnitude loading is made positive.
Projection project_2d(const RowMatrix& points);

struct CohortStats {
  std::size_t n = 0;
  std::size_t clusters = 0;
  double noise_fraction = 0.0;
  std::optional<double> silhouette;  // absent with fewer than two clusters
  DbscanParams params;
  Projection projection;
};

struct BehaviorReport {
  CohortStats fake;
  CohortStats true_;
  std::vector<std::string> fake_ids;
  std::vector<std::string> true_ids;

  std::string to_json() const;
  // user_id,x,y,cohort
  std::string projection_csv() const;
};

// Unset params fall back to default_dbscan_params per cohort.
BehaviorReport compare_behaviors(const EmbeddingSample& fake,
                                 const EmbeddingSample& true_,
                                 const std::optional<DbscanParams>& params = {});

}  // namespace sharecause
