#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sharecause/causal.h"
#include "sharecause/common.h"
#include "sharecause/interactions.h"
#include "sharecause/propensity.h"
#include "sharecause/synthgen.h"

namespace sharecause {

// Collects non-fatal loader diagnostics.
using Warnings = std::vector<std::string>;

// Reads a user_id,news_id CSV. When `users`/`items` are given, ids are
// resolved against them and unknown ids are errors; otherwise rows are
// assigned in order of first appearance. Duplicate pairs are kept once and
// reported through `warnings`.
InteractionSet load_interactions(const std::filesystem::path& path,
                                 const IndexMap* users = nullptr,
                                 const IndexMap* items = nullptr,
                                 Warnings* warnings = nullptr);
void write_interactions(const std::filesystem::path& path,
                        const InteractionSet& interactions);

// One id per line under a single header column (`user_id` or `news_id`),
// in row order.
void write_index_map(const std::filesystem::path& path, const IndexMap& map,
                     const std::string& column);
IndexMap load_index_map(const std::filesystem::path& path,
                        const std::string& column);

struct NewsTable {
  IndexMap ids;
  std::vector<NewsLabel> labels;
  // Empty when the file has no text column.
  std::vector<std::string> texts;
  // Empty unless features were attached.
  RowMatrix features;
};

// news_id,label[,text]
NewsTable load_news(const std::filesystem::path& path);
void write_news(const std::filesystem::path& path, const NewsTable& news);

// Header must be user_id followed by attribute_schema() in order.
AttributeTable load_user_attributes(const std::filesystem::path& path);
void write_user_attributes(const std::filesystem::path& path,
                           const AttributeTable& table);

// Signed hashed term frequencies over lower-cased alphanumeric tokens
// (bytes >= 0x80 count as token characters), 64-bit FNV-1a per token,
// L2-normalized. Empty texts map to the zero vector with a warning.
RowMatrix featurize_content(const std::vector<std::string>& texts,
                            std::size_t dims, Warnings* warnings = nullptr);

enum class SplitMode { kRandom, kUniformExposureSynthetic };

SplitMode parse_split_mode(const std::string& text);
const char* to_string(SplitMode mode);

struct TrainTestSplit {
  InteractionSet train;
  InteractionSet test;
  // Uniform mode only: exposure events per item among held-out cells.
  std::vector<int> exposed_per_item;
};

struct SplitOptions {
  double ratio = 0.8;
  SplitMode mode = SplitMode::kRandom;
  std::uint64_t seed = 0;
  // Uniform mode only.
  const SyntheticWorld* world = nullptr;
  double test_exposure = 1.0;
};

// Random mode: a seeded shuffle of positives, round(ratio * n) of them go to
// training. Uniform mode: each user's cells are partitioned ratio / 1 - ratio;
// training keeps the observed positives on training cells and every held-out
// cell is re-drawn by make_uniform_test under constant exposure.
TrainTestSplit split_train_test(const InteractionSet& interactions,
                                const SplitOptions& options);

// item_id,theta for per-item tables, user_id,item_id,theta for per-pair ones.
void write_propensity(const std::filesystem::path& path,
                      const PropensityTable& table, const IndexMap& users,
                      const IndexMap& items);
PropensityTable load_propensity(const std::filesystem::path& path,
                                const IndexMap& users, const IndexMap& items,
                                double floor = kDefaultPropensityFloor);

// Writes `text` exactly; parent directories are created.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// 64-bit FNV-1a of a file's bytes, as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace sharecause
