#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sharecause {

enum class NewsLabel { kFake, kTrue };

const char* to_string(NewsLabel label);
NewsLabel parse_news_label(const std::string& text);

// Stable string-id <-> row mapping for one axis (users or news items).
class IndexMap {
 public:
  IndexMap() = default;
  explicit IndexMap(std::vector<std::string> ids);

  // Numbered ids "<prefix>0", "<prefix>1", ...
  static IndexMap numbered(const std::string& prefix, std::size_t n);

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  const std::vector<std::string>& ids() const { return ids_; }

  // Returns -1 when unknown.
  long find(const std::string& id) const;
  // Appends the id if new; returns its row either way.
  std::size_t intern(const std::string& id);

  bool operator==(const IndexMap& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> rows_;
};

struct Pair {
  int user;
  int item;
  auto operator<=>(const Pair&) const = default;
};

// Sparse binary user x news share matrix. Absent pairs are zeros.
class InteractionSet {
 public:
  InteractionSet() = default;
  InteractionSet(IndexMap users, IndexMap items);

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }
  std::size_t num_positives() const { return num_positives_; }

  const IndexMap& users() const { return users_; }
  const IndexMap& items() const { return items_; }

  // Returns false (and leaves the set unchanged) for a duplicate pair.
  bool add(int user, int item);
  bool contains(int user, int item) const;

  // Sorted item rows the user has shared.
  const std::vector<int>& items_of(int user) const { return by_user_.at(user); }

  // All positives in (user, item) order.
  std::vector<Pair> pairs() const;
  std::vector<int> item_counts() const;

  // Per-item labels; empty when unknown.
  const std::vector<NewsLabel>& item_labels() const { return labels_; }
  void set_item_labels(std::vector<NewsLabel> labels);

  // Same users and items, no positives.
  InteractionSet empty_like() const;

  // Keeps only the items whose label matches; items are re-indexed in their
  // original order, users are kept as-is.
  InteractionSet restrict_to_label(NewsLabel label) const;

 private:
  void check_range(int user, int item) const;

  IndexMap users_;
  IndexMap items_;
  std::vector<std::vector<int>> by_user_;
  std::vector<NewsLabel> labels_;
  std::size_t num_positives_ = 0;
};

}  // namespace sharecause
