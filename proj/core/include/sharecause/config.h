#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sharecause/dissemination.h"
#include "sharecause/eval_rank.h"
#include "sharecause/io.h"
#include "sharecause/synthgen.h"

namespace sharecause {

enum class DataSource { kSynthetic, kFiles };

// Which news items the dissemination model is trained on.
enum class Corpus { kFake, kAll };

// The training variants a pipeline run can compare.
enum class Variant { kBaseline, kNews, kUserNews, kNeural };

const char* to_string(Variant v);
Variant parse_variant(const std::string& text);

// Flat key=value experiment settings. One setting per line, `#` starts a
// comment, unknown keys are rejected. Run `sharecause_cli pipeline
// --print-config` for the full key list with defaults.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int repetitions = 5;
  std::filesystem::path output_dir = "out";

  DataSource source = DataSource::kSynthetic;
  Corpus corpus = Corpus::kFake;
  std::filesystem::path interactions_path;
  std::filesystem::path news_path;
  std::filesystem::path attributes_path;

  WorldConfig world;

  SplitMode split_mode = SplitMode::kUniformExposureSynthetic;
  double split_ratio = 0.8;
  double test_exposure = 1.0;

  Backbone backbone = Backbone::kMf;
  std::vector<Variant> variants = {Variant::kBaseline, Variant::kNews,
                                   Variant::kUserNews, Variant::kNeural};

  double propensity_eta = kDefaultEta;
  double propensity_floor = kDefaultPropensityFloor;
  NeuralPropensityMode neural_mode = NeuralPropensityMode::kPretrainToPopularity;
  std::size_t text_feature_dims = 64;
  double neural_learning_rate = 2.0;
  int neural_iterations = 5000;

  // Unset learning rate / lambda fall back to the backbone's defaults.
  std::optional<double> learning_rate;
  std::optional<double> l2_lambda;
  int epochs = 500;
  int batch_size = 1024;
  int embedding_dim = 64;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double dropout_keep = 0.9;
  double init_stddev = 0.01;
  bool clamp_nonnegative = true;
  RegularizationScope regularization = RegularizationScope::kBatch;

  std::vector<std::size_t> eval_ks = {5, 10, 20};
  CandidatePolicy candidates = CandidatePolicy::kExcludeTrainingPositives;

  bool causal_enabled = true;
  bool causal_intercept = true;
  double causal_confidence = 0.95;
  double causal_alpha = 0.05;
  double causal_train_fraction = 0.8;

  bool behavior_enabled = true;
  Variant behavior_variant = Variant::kNews;
  double behavior_eps = 0.0;       // 0 selects the median 4-NN heuristic
  std::size_t behavior_min_pts = 0;  // 0 selects 2 d clamped to [4, 20]

  bool save_models = false;

  // Throws ConfigError naming the key (and line, for parse) on failure.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  static ExperimentConfig parse(std::istream& in, const std::string& source);
  static ExperimentConfig load(const std::filesystem::path& path);
  // Every key in canonical order; parse(to_text()) reproduces the config.
  std::string to_text() const;

  // Range checks plus existence of every input path.
  void validate() const;

  TrainConfig train_config(std::uint64_t train_seed) const;
};

}  // namespace sharecause
