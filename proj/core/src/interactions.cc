#include "sharecause/interactions.h"

#include <algorithm>

#include "sharecause/common.h"

namespace sharecause {

const char* to_string(NewsLabel label) {
  return label == NewsLabel::kFake ? "fake" : "true";
}

NewsLabel parse_news_label(const std::string& text) {
  if (text == "fake" || text == "1") return NewsLabel::kFake;
  if (text == "true" || text == "real" || text == "0") return NewsLabel::kTrue;
  throw ValidationError("unknown news label '" + text + "'");
}

IndexMap::IndexMap(std::vector<std::string> ids) {
  for (auto& id : ids) {
    if (rows_.count(id)) throw ValidationError("duplicate id '" + id + "'");
    rows_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
  }
}

IndexMap IndexMap::numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t k = 0; k < n; ++k) ids.push_back(prefix + std::to_string(k));
  return IndexMap(std::move(ids));
}

long IndexMap::find(const std::string& id) const {
  auto it = rows_.find(id);
  return it == rows_.end() ? -1 : static_cast<long>(it->second);
}

std::size_t IndexMap::intern(const std::string& id) {
  auto [it, inserted] = rows_.emplace(id, ids_.size());
  if (inserted) ids_.push_back(id);
  return it->second;
}

InteractionSet::InteractionSet(IndexMap users, IndexMap items)
    : users_(std::move(users)),
      items_(std::move(items)),
      by_user_(users_.size()) {}

void InteractionSet::check_range(int user, int item) const {
  if (user < 0 || static_cast<std::size_t>(user) >= num_users() || item < 0 ||
      static_cast<std::size_t>(item) >= num_items()) {
    throw ValidationError("interaction (" + std::to_string(user) + ", " +
                          std::to_string(item) + ") out of range");
  }
}

bool InteractionSet::add(int user, int item) {
  check_range(user, item);
  auto& row = by_user_[user];
  auto it = std::lower_bound(row.begin(), row.end(), item);
  if (it != row.end() && *it == item) return false;
  row.insert(it, item);
  ++num_positives_;
  return true;
}

bool InteractionSet::contains(int user, int item) const {
  check_range(user, item);
  const auto& row = by_user_[user];
  return std::binary_search(row.begin(), row.end(), item);
}

std::vector<Pair> InteractionSet::pairs() const {
  std::vector<Pair> out;
  out.reserve(num_positives_);
  for (std::size_t u = 0; u < by_user_.size(); ++u) {
    for (int i : by_user_[u]) out.push_back({static_cast<int>(u), i});
  }
  return out;
}

std::vector<int> InteractionSet::item_counts() const {
  std::vector<int> counts(num_items(), 0);
  for (const auto& row : by_user_) {
    for (int i : row) ++counts[i];
  }
  return counts;
}

void InteractionSet::set_item_labels(std::vector<NewsLabel> labels) {
  if (!labels.empty() && labels.size() != num_items()) {
    throw ValidationError("item label count does not match item count");
  }
  labels_ = std::move(labels);
}

InteractionSet InteractionSet::empty_like() const {
  InteractionSet out(users_, items_);
  out.labels_ = labels_;
  return out;
}

InteractionSet InteractionSet::restrict_to_label(NewsLabel label) const {
  if (labels_.empty()) throw ValidationError("interaction set has no labels");
  std::vector<int> new_row(num_items(), -1);
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < num_items(); ++i) {
    if (labels_[i] == label) {
      new_row[i] = static_cast<int>(kept.size());
      kept.push_back(items_.id(i));
    }
  }
  InteractionSet out(users_, IndexMap(std::move(kept)));
  out.labels_.assign(out.num_items(), label);
  for (std::size_t u = 0; u < by_user_.size(); ++u) {
    for (int i : by_user_[u]) {
      if (new_row[i] >= 0) out.add(static_cast<int>(u), new_row[i]);
    }
  }
  return out;
}

}  // namespace sharecause
