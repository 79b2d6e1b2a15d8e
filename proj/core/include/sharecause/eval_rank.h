#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sharecause/dissemination.h"
#include "sharecause/interactions.h"

namespace sharecause {

// One user's candidates in descending score order (ties: ascending item row)
// with binary relevance aligned to that order.
struct RankedList {
  int user = 0;
  std::vector<int> items;
  std::vector<int> relevance;

  std::size_t num_relevant() const;
};

// Sorts `candidates` by score; `relevant` must be sorted.
RankedList make_ranked_list(int user, const std::vector<int>& candidates,
                            const Vector& scores,
                            const std::vector<int>& relevant);

// Both metrics return nullopt for a user with no relevant item; such users
// are excluded from means rather than counted as 0.
std::optional<double> recall_at_k(const RankedList& ranked, std::size_t k);
std::optional<double> ndcg_at_k(const RankedList& ranked, std::size_t k);

// sum_{i=1..k} (2^{rel_i} - 1) / log2(i + 1)
double dcg_at_k(const std::vector<int>& relevance, std::size_t k);

enum class CandidatePolicy { kAllItems, kExcludeTrainingPositives };

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::vector<double> recall;
  std::vector<double> ndcg;
  std::size_t n_users = 0;

  // {"k": [...], "recall": [...], "ndcg": [...], "n_users": n}
  std::string to_json() const;
};

// Per-K mean metrics over test users with at least one relevant item.
MetricsReport evaluate(const FactorModel& model, const InteractionSet& training,
                       const InteractionSet& test, CandidatePolicy policy,
                       const std::vector<std::size_t>& ks);

}  // namespace sharecause
