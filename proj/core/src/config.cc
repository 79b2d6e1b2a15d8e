#include "sharecause/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace sharecause {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError("'" + key + "': cannot parse '" + value + "' as a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ",";
    out += p;
  }
  return out;
}

std::string fmt(double x) { return format_exact(x); }
std::string fmt(bool b) { return b ? "true" : "false"; }

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SC_DOUBLE(NAME, FIELD)                                               \
  Key{NAME,                                                                  \
      [](ExperimentConfig& c, const std::string& v) {                        \
        c.FIELD = parse_number<double>(NAME, v);                             \
      },                                                                     \
      [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.FIELD)); }}
#define SC_INT(NAME, FIELD, TYPE)                                            \
  Key{NAME,                                                                  \
      [](ExperimentConfig& c, const std::string& v) {                        \
        c.FIELD = parse_number<TYPE>(NAME, v);                               \
      },                                                                     \
      [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }}
#define SC_BOOL(NAME, FIELD)                                                 \
  Key{NAME,                                                                  \
      [](ExperimentConfig& c, const std::string& v) {                        \
        c.FIELD = parse_bool(NAME, v);                                       \
      },                                                                     \
      [](const ExperimentConfig& c) { return fmt(c.FIELD); }}
#define SC_PATH(NAME, FIELD)                                                 \
  Key{NAME,                                                                  \
      [](ExperimentConfig& c, const std::string& v) { c.FIELD = v; },        \
      [](const ExperimentConfig& c) { return c.FIELD.string(); }}

std::optional<double> parse_optional_double(const std::string& key,
                                            const std::string& value) {
  if (value.empty() || value == "auto") return std::nullopt;
  return parse_number<double>(key, value);
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt(*v) : "auto";
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      SC_INT("seed", seed, std::uint64_t),
      SC_INT("repetitions", repetitions, int),
      SC_PATH("output_dir", output_dir),
      Key{"source",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "synthetic") c.source = DataSource::kSynthetic;
            else if (v == "files") c.source = DataSource::kFiles;
            else throw ConfigError("'source': expected synthetic or files, got '" + v + "'");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.source == DataSource::kSynthetic ? "synthetic" : "files");
          }},
      Key{"corpus",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "fake") c.corpus = Corpus::kFake;
            else if (v == "all") c.corpus = Corpus::kAll;
            else throw ConfigError("'corpus': expected fake or all, got '" + v + "'");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.corpus == Corpus::kFake ? "fake" : "all");
          }},
      SC_PATH("interactions_path", interactions_path),
      SC_PATH("news_path", news_path),
      SC_PATH("attributes_path", attributes_path),
      SC_INT("world.num_users", world.num_users, std::size_t),
      SC_INT("world.num_items", world.num_items, std::size_t),
      SC_INT("world.latent_rank", world.latent_rank, int),
      SC_DOUBLE("world.popularity_exponent", world.popularity_exponent),
      SC_DOUBLE("world.max_item_exposure", world.max_item_exposure),
      SC_DOUBLE("world.user_activity_exponent", world.user_activity_exponent),
      SC_DOUBLE("world.interest_scale", world.interest_scale),
      SC_DOUBLE("world.interest_bias", world.interest_bias),
      SC_DOUBLE("world.fake_fraction", world.fake_fraction),
      SC_DOUBLE("world.follower_log_mean", world.follower_log_mean),
      SC_DOUBLE("world.follower_log_sd", world.follower_log_sd),
      SC_INT("world.content_dims", world.content_dims, std::size_t),
      SC_DOUBLE("world.content_noise", world.content_noise),
      Key{"split.mode",
          [](ExperimentConfig& c, const std::string& v) { c.split_mode = parse_split_mode(v); },
          [](const ExperimentConfig& c) { return std::string(to_string(c.split_mode)); }},
      SC_DOUBLE("split.ratio", split_ratio),
      SC_DOUBLE("split.test_exposure", test_exposure),
      Key{"backbone",
          [](ExperimentConfig& c, const std::string& v) {
            try {
              c.backbone = parse_backbone(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(std::string("'backbone': ") + e.what());
            }
          },
          [](const ExperimentConfig& c) { return std::string(to_string(c.backbone)); }},
      Key{"variants",
          [](ExperimentConfig& c, const std::string& v) {
            c.variants.clear();
            for (const auto& name : split_list(v)) c.variants.push_back(parse_variant(name));
          },
          [](const ExperimentConfig& c) {
            std::vector<std::string> names;
            for (Variant v : c.variants) names.emplace_back(to_string(v));
            return join(names);
          }},
      SC_DOUBLE("propensity.eta", propensity_eta),
      SC_DOUBLE("propensity.floor", propensity_floor),
      Key{"propensity.neural_mode",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "pretrain") c.neural_mode = NeuralPropensityMode::kPretrainToPopularity;
            else if (v == "joint") c.neural_mode = NeuralPropensityMode::kJoint;
            else throw ConfigError("'propensity.neural_mode': expected pretrain or joint, got '" + v + "'");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.neural_mode == NeuralPropensityMode::kJoint ? "joint" : "pretrain");
          }},
      SC_INT("propensity.text_feature_dims", text_feature_dims, std::size_t),
      SC_DOUBLE("propensity.neural_learning_rate", neural_learning_rate),
      SC_INT("propensity.neural_iterations", neural_iterations, int),
      Key{"train.learning_rate",
          [](ExperimentConfig& c, const std::string& v) {
            c.learning_rate = parse_optional_double("train.learning_rate", v);
          },
          [](const ExperimentConfig& c) { return fmt_optional(c.learning_rate); }},
      Key{"train.l2_lambda",
          [](ExperimentConfig& c, const std::string& v) {
            c.l2_lambda = parse_optional_double("train.l2_lambda", v);
          },
          [](const ExperimentConfig& c) { return fmt_optional(c.l2_lambda); }},
      SC_INT("train.epochs", epochs, int),
      SC_INT("train.batch_size", batch_size, int),
      SC_INT("train.embedding_dim", embedding_dim, int),
      SC_DOUBLE("train.rmsprop_decay", rmsprop_decay),
      SC_DOUBLE("train.rmsprop_epsilon", rmsprop_epsilon),
      SC_DOUBLE("train.dropout_keep", dropout_keep),
      SC_DOUBLE("train.init_stddev", init_stddev),
      SC_BOOL("train.clamp_nonnegative", clamp_nonnegative),
      Key{"train.regularization",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "batch") c.regularization = RegularizationScope::kBatch;
            else if (v == "full") c.regularization = RegularizationScope::kFull;
            else throw ConfigError("'train.regularization': expected batch or full, got '" + v + "'");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.regularization == RegularizationScope::kFull ? "full" : "batch");
          }},
      Key{"eval.ks",
          [](ExperimentConfig& c, const std::string& v) {
            c.eval_ks.clear();
            for (const auto& k : split_list(v)) {
              c.eval_ks.push_back(parse_number<std::size_t>("eval.ks", k));
            }
          },
          [](const ExperimentConfig& c) {
            std::vector<std::string> parts;
            for (auto k : c.eval_ks) parts.push_back(std::to_string(k));
            return join(parts);
          }},
      Key{"eval.candidates",
          [](ExperimentConfig& c, const std::string& v) {
            if (v == "exclude_training") c.candidates = CandidatePolicy::kExcludeTrainingPositives;
            else if (v == "all") c.candidates = CandidatePolicy::kAllItems;
            else throw ConfigError("'eval.candidates': expected exclude_training or all, got '" + v + "'");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.candidates == CandidatePolicy::kAllItems ? "all" : "exclude_training");
          }},
      SC_BOOL("causal.enabled", causal_enabled),
      SC_BOOL("causal.intercept", causal_intercept),
      SC_DOUBLE("causal.confidence", causal_confidence),
      SC_DOUBLE("causal.alpha", causal_alpha),
      SC_DOUBLE("causal.train_fraction", causal_train_fraction),
      SC_BOOL("behavior.enabled", behavior_enabled),
      Key{"behavior.variant",
          [](ExperimentConfig& c, const std::string& v) { c.behavior_variant = parse_variant(v); },
          [](const ExperimentConfig& c) { return std::string(to_string(c.behavior_variant)); }},
      SC_DOUBLE("behavior.eps", behavior_eps),
      SC_INT("behavior.min_pts", behavior_min_pts, std::size_t),
      SC_BOOL("save_models", save_models),
  };
  return table;
}

#undef SC_DOUBLE
#undef SC_INT
#undef SC_BOOL
#undef SC_PATH

const Key& find_key(const std::string& name) {
  const auto& table = key_table();
  auto it = std::find_if(table.begin(), table.end(),
                         [&](const Key& k) { return k.name == name; });
  if (it == table.end()) throw ConfigError("unknown config key '" + name + "'");
  return *it;
}

void require_file(const std::filesystem::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string("'") + key + "' is required");
  if (!std::filesystem::is_regular_file(p)) {
    throw ConfigError(std::string("'") + key + "': no such file " + p.string());
  }
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kNews: return "news";
    case Variant::kUserNews: return "user_news";
    case Variant::kNeural: return "neural";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  if (text == "baseline") return Variant::kBaseline;
  if (text == "news") return Variant::kNews;
  if (text == "user_news") return Variant::kUserNews;
  if (text == "neural") return Variant::kNeural;
  throw ConfigError("unknown variant '" + text +
                    "' (expected baseline, news, user_news or neural)");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  find_key(key).set(*this, value);
}

std::string ExperimentConfig::get(const std::string& key) const {
  return find_key(key).get(*this);
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return names;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in,
                                         const std::string& source) {
  ExperimentConfig config;
  std::vector<std::string> seen;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key=value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    seen.push_back(key);
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse(in, path.string());
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& k : key_table()) out += k.name + " = " + k.get(*this) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw ConfigError("'repetitions' must be at least 1");
  if (output_dir.empty()) throw ConfigError("'output_dir' is required");
  if (variants.empty()) throw ConfigError("'variants' must list at least one variant");
  if (eval_ks.empty()) throw ConfigError("'eval.ks' must list at least one K");
  for (auto k : eval_ks) {
    if (k == 0) throw ConfigError("'eval.ks' values must be at least 1");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ConfigError("'split.ratio' must lie in (0, 1)");
  }
  if (!(test_exposure > 0.0 && test_exposure <= 1.0)) {
    throw ConfigError("'split.test_exposure' must lie in (0, 1]");
  }
  if (!(propensity_eta > 0.0)) throw ConfigError("'propensity.eta' must be positive");
  if (!(propensity_floor > 0.0 && propensity_floor <= 1.0)) {
    throw ConfigError("'propensity.floor' must lie in (0, 1]");
  }
  if (text_feature_dims < 2) {
    throw ConfigError("'propensity.text_feature_dims' must be at least 2");
  }
  if (neural_iterations < 0 || !(neural_learning_rate > 0.0)) {
    throw ConfigError("neural propensity settings out of range");
  }
  if (!(causal_confidence > 0.0 && causal_confidence < 1.0)) {
    throw ConfigError("'causal.confidence' must lie in (0, 1)");
  }
  if (!(causal_alpha > 0.0 && causal_alpha < 1.0)) {
    throw ConfigError("'causal.alpha' must lie in (0, 1)");
  }
  if (!(causal_train_fraction > 0.0 && causal_train_fraction < 1.0)) {
    throw ConfigError("'causal.train_fraction' must lie in (0, 1)");
  }
  if (behavior_eps < 0.0) throw ConfigError("'behavior.eps' must be non-negative");
  try {
    train_config(0).validate();
    if (source == DataSource::kSynthetic) world.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (source == DataSource::kFiles) {
    require_file(interactions_path, "interactions_path");
    require_file(news_path, "news_path");
    if (causal_enabled) require_file(attributes_path, "attributes_path");
    if (split_mode == SplitMode::kUniformExposureSynthetic) {
      throw ConfigError(
          "'split.mode' uniform_exposure_synthetic needs source = synthetic");
    }
  }
  if (std::filesystem::exists(output_dir) &&
      !std::filesystem::is_directory(output_dir)) {
    throw ConfigError("'output_dir' exists and is not a directory");
  }
}

TrainConfig ExperimentConfig::train_config(std::uint64_t train_seed) const {
  TrainConfig t = TrainConfig::defaults_for(backbone);
  if (learning_rate) t.learning_rate = *learning_rate;
  if (l2_lambda) t.l2_lambda = *l2_lambda;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.embedding_dim = embedding_dim;
  t.rmsprop_decay = rmsprop_decay;
  t.rmsprop_epsilon = rmsprop_epsilon;
  t.dropout_keep = dropout_keep;
  t.init_stddev = init_stddev;
  t.clamp_nonnegative = clamp_nonnegative;
  t.regularization = regularization;
  t.seed = train_seed;
  return t;
}

}  // namespace sharecause
