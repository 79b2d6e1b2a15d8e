#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sharecause/behavior.h"
#include "sharecause/causal.h"
#include "sharecause/config.h"
#include "sharecause/eval_rank.h"

namespace sharecause {

// Regression variant label used in causal reports for a training variant.
std::string causal_label(Variant v);

struct VariantTraining {
  TrainResult result;
  // The propensities the loss used; empty for the baseline.
  std::optional<PropensityTable> table;
};

// Estimates the variant's propensities on `train_set` and trains on it.
// `followers` is indexed by user row, `content` by item row (neural only).
VariantTraining train_variant(Variant variant, const ExperimentConfig& config,
                              const InteractionSet& train_set,
                              const std::vector<std::optional<double>>& followers,
                              const RowMatrix& content, std::uint64_t seed);

// Attribute rows aligned with `users`; users missing from `table` get zero
// rows and a false `present` flag.
struct AlignedAttributes {
  AttributeTable table;
  std::vector<bool> present;
};

AlignedAttributes align_attributes(const AttributeTable& table,
                                   const IndexMap& users);

// followers_count per user row; empty for users without attributes.
std::vector<std::optional<double>> followers_from(const AlignedAttributes& attributes);

struct CausalAnalysis {
  std::vector<std::pair<std::string, CausalFit>> fits;  // "LR" first
  EffectComparison comparison;
  std::vector<std::pair<std::string, RegressionMetrics>> prediction;
  std::size_t n_users = 0;
  std::size_t zero_fake_users = 0;

  // causal_<label>.json, effects.csv, causal_prediction.csv,
  // causal_summary.json
  void write(const std::filesystem::path& dir) const;
};

// Outcome models over users with at least one share and attributes:
// attributes only ("LR") and attributes plus each named embedding matrix
// (rows indexed by user row). Prediction metrics come from a seeded user
// split at config.causal_train_fraction.
CausalAnalysis analyze_causal(
    const ExperimentConfig& config, const InteractionSet& labelled,
    const AlignedAttributes& attributes,
    const std::vector<std::pair<std::string, const RowMatrix*>>& embeddings,
    std::uint64_t seed);

// Users whose observed shares are all fake (rows of `fake_embeddings`) vs
// all true (rows of `true_embeddings`), balanced and compared.
BehaviorReport compare_sharing_behavior(const ExperimentConfig& config,
                                        const InteractionSet& labelled,
                                        const RowMatrix& fake_embeddings,
                                        const RowMatrix& true_embeddings,
                                        std::uint64_t seed);

struct RepetitionResult {
  int index = 0;
  std::uint64_t seed = 0;
  std::map<std::string, MetricsReport> metrics;          // by variant
  std::map<std::string, RegressionMetrics> prediction;   // by causal label
  std::optional<BehaviorReport> behavior;
};

struct MetricSummary {
  std::vector<std::size_t> ks;
  std::vector<double> recall_mean, recall_sd;
  std::vector<double> ndcg_mean, ndcg_sd;
};

struct PipelineReport {
  std::vector<RepetitionResult> repetitions;
  std::map<std::string, MetricSummary> aggregate;  // by variant

  // Per-repetition rows plus the aggregate table.
  std::string to_json() const;
};

// Progress messages; ignored when empty.
using Logger = std::function<void(const std::string&)>;

// Runs every enabled stage for each repetition and writes artifacts under
// config.output_dir:
//   config.txt, report.json, summary.csv, manifest.json,
//   rep_<r>/{train,test}.csv, propensity_<variant>.csv, loss_<variant>.csv,
//   metrics_<variant>.json, causal_<label>.json, effects.csv,
//   causal_prediction.csv, behavior.json, projection.csv.
// A failing stage rethrows with the stage name prefixed after writing a
// manifest whose status is "failed".
PipelineReport run_pipeline(const ExperimentConfig& config,
                            const Logger& log = {});

// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_sd(const std::vector<double>& xs);

// Fixed key order JSON object listing each artifact under `dir` with its
// FNV-1a digest; used for the manifest and for determinism checks.
std::string digest_listing(const std::filesystem::path& dir,
                           const std::vector<std::string>& skip = {});

}  // namespace sharecause
