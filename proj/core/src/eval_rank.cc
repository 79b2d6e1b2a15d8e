#include "sharecause/eval_rank.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace sharecause {

std::size_t RankedList::num_relevant() const {
  return static_cast<std::size_t>(
      std::count(relevance.begin(), relevance.end(), 1));
}

RankedList make_ranked_list(int user, const std::vector<int>& candidates,
                            const Vector& scores,
                            const std::vector<int>& relevant) {
  RankedList r;
  r.user = user;
  r.items = candidates;
  std::sort(r.items.begin(), r.items.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  r.relevance.reserve(r.items.size());
  for (int i : r.items) {
    r.relevance.push_back(
        std::binary_search(relevant.begin(), relevant.end(), i) ? 1 : 0);
  }
  return r;
}

double dcg_at_k(const std::vector<int>& relevance, std::size_t k) {
  double dcg = 0.0;
  const std::size_t n = std::min(k, relevance.size());
  for (std::size_t pos = 0; pos < n; ++pos) {
    dcg += (std::exp2(relevance[pos]) - 1.0) / std::log2(pos + 2.0);
  }
  return dcg;
}

std::optional<double> recall_at_k(const RankedList& ranked, std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
  const std::size_t total = ranked.num_relevant();
  if (total == 0) return std::nullopt;
  const std::size_t n = std::min(k, ranked.relevance.size());
  const auto hits = std::count(ranked.relevance.begin(),
                               ranked.relevance.begin() + n, 1);
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<double> ndcg_at_k(const RankedList& ranked, std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
  const std::size_t total = ranked.num_relevant();
  if (total == 0) return std::nullopt;
  std::vector<int> ideal(ranked.relevance);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_at_k(ideal, k);
  return dcg_at_k(ranked.relevance, k) / idcg;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = ks;
  j["recall"] = recall;
  j["ndcg"] = ndcg;
  j["n_users"] = n_users;
  return j.dump(2);
}

MetricsReport evaluate(const FactorModel& model, const InteractionSet& training,
                       const InteractionSet& test, CandidatePolicy policy,
                       const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw ValidationError("no K values requested");
  for (std::size_t k : ks) {
    if (k == 0) throw ValidationError("k must be at least 1");
  }
  if (test.num_users() != model.num_users() ||
      test.num_items() != model.num_items() ||
      training.num_users() != model.num_users() ||
      training.num_items() != model.num_items()) {
    throw ValidationError("model, training and test index spaces differ");
  }

  MetricsReport report;
  report.ks = ks;
  std::vector<CompensatedSum> recall_sum(ks.size()), ndcg_sum(ks.size());
  std::vector<int> candidates;
  for (std::size_t u = 0; u < test.num_users(); ++u) {
    const int user = static_cast<int>(u);
    const auto& relevant = test.items_of(user);
    if (relevant.empty()) continue;
    const auto& seen = training.items_of(user);
    candidates.clear();
    for (std::size_t i = 0; i < model.num_items(); ++i) {
      const int item = static_cast<int>(i);
      if (policy == CandidatePolicy::kExcludeTrainingPositives &&
          std::binary_search(seen.begin(), seen.end(), item)) {
        continue;
      }
      candidates.push_back(item);
    }
    const RankedList ranked =
        make_ranked_list(user, candidates, score_all(model, user), relevant);
    if (ranked.num_relevant() == 0) continue;
    ++report.n_users;
    for (std::size_t k = 0; k < ks.size(); ++k) {
      recall_sum[k].add(*recall_at_k(ranked, ks[k]));
      ndcg_sum[k].add(*ndcg_at_k(ranked, ks[k]));
    }
  }
  for (std::size_t k = 0; k < ks.size(); ++k) {
    const double n = static_cast<double>(report.n_users);
    report.recall.push_back(report.n_users ? recall_sum[k].value() / n : 0.0);
    report.ndcg.push_back(report.n_users ? ndcg_sum[k].value() / n : 0.0);
  }
  return report;
}

}  // namespace sharecause
