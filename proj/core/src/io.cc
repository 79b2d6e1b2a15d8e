#include "sharecause/io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include "sharecause/csv.h"

namespace sharecause {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::string location(const CsvTable& t, std::size_t row) {
  return t.source + ":" + std::to_string(t.line_numbers[row]);
}

const std::string& nonempty_cell(const CsvTable& t, std::size_t row,
                                 std::size_t col) {
  const std::string& cell = t.rows[row][col];
  if (cell.empty()) {
    throw ValidationError(location(t, row) + ": empty " + t.header[col]);
  }
  return cell;
}

std::size_t resolve(const IndexMap* fixed, IndexMap& growing,
                    const std::string& id, const CsvTable& t, std::size_t row,
                    const char* what) {
  if (!fixed) return growing.intern(id);
  const long r = fixed->find(id);
  if (r < 0) {
    throw ValidationError(location(t, row) + ": unknown " + what + " '" + id + "'");
  }
  return static_cast<std::size_t>(r);
}

bool is_token_byte(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

InteractionSet load_interactions(const std::filesystem::path& path,
                                 const IndexMap* users, const IndexMap* items,
                                 Warnings* warnings) {
  const CsvTable t = read_csv_file(path);
  t.require_columns({"user_id", "news_id"});
  if (t.rows.empty()) throw ValidationError(t.source + ": no interactions");
  const std::size_t uc = t.column("user_id"), ic = t.column("news_id");

  IndexMap user_rows, item_rows;
  std::vector<std::pair<std::size_t, std::size_t>> raw;
  raw.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto u = resolve(users, user_rows, nonempty_cell(t, r, uc), t, r, "user");
    const auto i = resolve(items, item_rows, nonempty_cell(t, r, ic), t, r, "news");
    raw.emplace_back(u, i);
  }
  InteractionSet out(users ? *users : user_rows, items ? *items : item_rows);
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (!out.add(static_cast<int>(raw[r].first), static_cast<int>(raw[r].second))) {
      if (warnings) {
        warnings->push_back(location(t, r) + ": duplicate pair (" +
                            t.rows[r][uc] + ", " + t.rows[r][ic] + ") kept once");
      }
    }
  }
  return out;
}

void write_interactions(const std::filesystem::path& path,
                        const InteractionSet& interactions) {
  auto out = open_for_write(path);
  write_csv_row(out, {"user_id", "news_id"});
  for (const Pair& p : interactions.pairs()) {
    write_csv_row(out, {interactions.users().id(p.user), interactions.items().id(p.item)});
  }
}

void write_index_map(const std::filesystem::path& path, const IndexMap& map,
                     const std::string& column) {
  auto out = open_for_write(path);
  write_csv_row(out, {column});
  for (const auto& id : map.ids()) write_csv_row(out, {id});
}

IndexMap load_index_map(const std::filesystem::path& path,
                        const std::string& column) {
  const CsvTable t = read_csv_file(path);
  const std::size_t c = t.column(column);
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) ids.push_back(nonempty_cell(t, r, c));
  return IndexMap(std::move(ids));
}

NewsTable load_news(const std::filesystem::path& path) {
  const CsvTable t = read_csv_file(path);
  t.require_columns({"news_id", "label"});
  const std::size_t idc = t.column("news_id"), lc = t.column("label");
  const bool has_text =
      std::find(t.header.begin(), t.header.end(), "text") != t.header.end();
  NewsTable news;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(nonempty_cell(t, r, idc));
    try {
      news.labels.push_back(parse_news_label(nonempty_cell(t, r, lc)));
    } catch (const ValidationError& e) {
      throw ValidationError(location(t, r) + ": " + e.what());
    }
    if (has_text) news.texts.push_back(t.rows[r][t.column("text")]);
  }
  try {
    news.ids = IndexMap(std::move(ids));
  } catch (const ValidationError& e) {
    throw ValidationError(t.source + ": " + e.what());
  }
  return news;
}

void write_news(const std::filesystem::path& path, const NewsTable& news) {
  auto out = open_for_write(path);
  const bool has_text = !news.texts.empty();
  std::vector<std::string> header{"news_id", "label"};
  if (has_text) header.push_back("text");
  write_csv_row(out, header);
  for (std::size_t r = 0; r < news.ids.size(); ++r) {
    std::vector<std::string> cells{news.ids.id(r), to_string(news.labels[r])};
    if (has_text) cells.push_back(news.texts[r]);
    write_csv_row(out, cells);
  }
}

AttributeTable load_user_attributes(const std::filesystem::path& path) {
  const CsvTable t = read_csv_file(path);
  std::vector<std::string> expected{"user_id"};
  const auto& schema = attribute_schema();
  expected.insert(expected.end(), schema.begin(), schema.end());
  t.require_columns(expected);
  if (t.header.size() != expected.size()) {
    for (const auto& h : t.header) {
      if (std::find(expected.begin(), expected.end(), h) == expected.end()) {
        throw ValidationError(t.source + ": unexpected column '" + h + "'");
      }
    }
  }
  AttributeTable table;
  table.names = schema;
  table.values.resize(t.rows.size(), schema.size());
  std::vector<std::size_t> cols;
  for (const auto& name : schema) cols.push_back(t.column(name));
  const std::size_t idc = t.column("user_id");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    table.user_ids.push_back(nonempty_cell(t, r, idc));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      table.values(r, c) = parse_double_cell(t, r, cols[c]);
    }
  }
  try {
    IndexMap unique(table.user_ids);
    table.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(t.source + ": " + e.what());
  }
  return table;
}

void write_user_attributes(const std::filesystem::path& path,
                           const AttributeTable& table) {
  table.validate();
  auto out = open_for_write(path);
  std::vector<std::string> header{"user_id"};
  header.insert(header.end(), table.names.begin(), table.names.end());
  write_csv_row(out, header);
  for (std::size_t r = 0; r < table.user_ids.size(); ++r) {
    std::vector<std::string> cells{table.user_ids[r]};
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      cells.push_back(format_exact(table.values(r, c)));
    }
    write_csv_row(out, cells);
  }
}

RowMatrix featurize_content(const std::vector<std::string>& texts,
                            std::size_t dims, Warnings* warnings) {
  if (dims < 2) throw ConfigError("content feature dims must be at least 2");
  RowMatrix out = RowMatrix::Zero(texts.size(), dims);
  std::string token;
  for (std::size_t r = 0; r < texts.size(); ++r) {
    auto flush = [&] {
      if (token.empty()) return;
      const std::uint64_t h = fnv1a(token);
      out(r, h % dims) += (h >> 63) ? -1.0 : 1.0;
      token.clear();
    };
    for (unsigned char c : texts[r]) {
      if (is_token_byte(c)) {
        token.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
      } else {
        flush();
      }
    }
    flush();
    const double norm = out.row(r).norm();
    if (norm > 0.0) {
      out.row(r) /= norm;
    } else if (warnings) {
      warnings->push_back("item " + std::to_string(r) +
                          ": empty text, using the zero feature vector");
    }
  }
  return out;
}

SplitMode parse_split_mode(const std::string& text) {
  if (text == "random") return SplitMode::kRandom;
  if (text == "uniform_exposure_synthetic" || text == "uniform") {
    return SplitMode::kUniformExposureSynthetic;
  }
  throw ConfigError("unknown split mode '" + text + "'");
}

const char* to_string(SplitMode mode) {
  return mode == SplitMode::kRandom ? "random" : "uniform_exposure_synthetic";
}

TrainTestSplit split_train_test(const InteractionSet& interactions,
                                const SplitOptions& options) {
  if (!(options.ratio > 0.0 && options.ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1)");
  }
  std::mt19937_64 rng(options.seed);
  TrainTestSplit out{interactions.empty_like(), interactions.empty_like(), {}};

  if (options.mode == SplitMode::kRandom) {
    std::vector<Pair> pairs = interactions.pairs();
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(options.ratio * static_cast<double>(pairs.size())));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      (k < n_train ? out.train : out.test).add(pairs[k].user, pairs[k].item);
    }
    return out;
  }

  if (!options.world) {
    throw ConfigError("uniform_exposure_synthetic split needs a synthetic world");
  }
  const SyntheticWorld& world = *options.world;
  if (interactions.num_users() != world.num_users ||
      interactions.num_items() != world.num_items) {
    throw ValidationError("interactions do not match the synthetic world");
  }
  const std::size_t n_items = world.num_items;
  const auto n_train_cells = static_cast<std::size_t>(
      std::llround(options.ratio * static_cast<double>(n_items)));
  std::vector<int> cells(n_items);
  std::vector<Pair> holdout;
  for (std::size_t u = 0; u < world.num_users; ++u) {
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    const int user = static_cast<int>(u);
    for (std::size_t k = 0; k < n_items; ++k) {
      if (k < n_train_cells) {
        if (interactions.contains(user, cells[k])) out.train.add(user, cells[k]);
      } else {
        holdout.push_back({user, cells[k]});
      }
    }
  }
  std::sort(holdout.begin(), holdout.end());
  UniformTest uniform = make_uniform_test(world, holdout, out.train,
                                          options.test_exposure,
                                          mix_seed(options.seed, 0x7e57));
  out.test = std::move(uniform.test);
  out.test.set_item_labels(interactions.item_labels());
  out.exposed_per_item = std::move(uniform.exposed_per_item);
  return out;
}

void write_propensity(const std::filesystem::path& path,
                      const PropensityTable& table, const IndexMap& users,
                      const IndexMap& items) {
  if (table.num_items() != items.size()) {
    throw ValidationError("propensity table and item ids differ in size");
  }
  auto out = open_for_write(path);
  if (table.kind() == PropensityKind::kPerItem) {
    write_csv_row(out, {"item_id", "theta"});
    for (std::size_t i = 0; i < items.size(); ++i) {
      write_csv_row(out, {items.id(i), format_exact(table.item_values()[i])});
    }
    return;
  }
  if (table.num_users() != users.size()) {
    throw ValidationError("propensity table and user ids differ in size");
  }
  write_csv_row(out, {"user_id", "item_id", "theta"});
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      write_csv_row(out, {users.id(u), items.id(i),
                          format_exact(table.pair_values()(u, i))});
    }
  }
}

PropensityTable load_propensity(const std::filesystem::path& path,
                                const IndexMap& users, const IndexMap& items,
                                double floor) {
  const CsvTable t = read_csv_file(path);
  const bool per_pair =
      std::find(t.header.begin(), t.header.end(), "user_id") != t.header.end();
  const std::size_t ic = t.column("item_id"), vc = t.column("theta");
  auto item_row = [&](std::size_t r) {
    const long i = items.find(t.rows[r][ic]);
    if (i < 0) {
      throw ValidationError(location(t, r) + ": unknown item '" + t.rows[r][ic] + "'");
    }
    return static_cast<std::size_t>(i);
  };
  if (!per_pair) {
    std::vector<double> values(items.size(), std::nan(""));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      values[item_row(r)] = parse_double_cell(t, r, vc);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i])) {
        throw ValidationError(t.source + ": no theta for item '" + items.id(i) + "'");
      }
    }
    return PropensityTable::per_item(std::move(values), kDefaultEta, floor);
  }
  const std::size_t uc = t.column("user_id");
  RowMatrix values = RowMatrix::Constant(users.size(), items.size(), std::nan(""));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long u = users.find(t.rows[r][uc]);
    if (u < 0) {
      throw ValidationError(location(t, r) + ": unknown user '" + t.rows[r][uc] + "'");
    }
    values(u, item_row(r)) = parse_double_cell(t, r, vc);
  }
  if (values.array().isNaN().any()) {
    throw ValidationError(t.source + ": per-pair table is incomplete");
  }
  return PropensityTable::per_pair(std::move(values), kDefaultEta, floor);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw NumericError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string file_digest(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(read_text_file(path))));
  return buf;
}

}  // namespace sharecause
