// Command-line front end: one subcommand per pipeline stage plus `pipeline`
// for the full experiment. Exit status 0 on success, 1 on configuration or
// validation errors, 2 on numeric or other runtime failures.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sharecause/behavior.h"
#include "sharecause/causal.h"
#include "sharecause/config.h"
#include "sharecause/csv.h"
#include "sharecause/dissemination.h"
#include "sharecause/eval_rank.h"
#include "sharecause/io.h"
#include "sharecause/pipeline.h"
#include "sharecause/propensity.h"
#include "sharecause/synthgen.h"

namespace fs = std::filesystem;
using namespace sharecause;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool quiet = false;
  std::vector<std::string> overrides;  // key=value
};

class Console {
 public:
  explicit Console(const GlobalOptions& g) : quiet_(g.quiet) {}
  void info(const std::string& m) const {
    if (!quiet_) std::cerr << m << "\n";
  }
  void warn(const Warnings& w) const {
    for (const auto& m : w) std::cerr << "warning: " << m << "\n";
  }

 private:
  bool quiet_;
};

ExperimentConfig resolve_config(const GlobalOptions& g) {
  ExperimentConfig c =
      g.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) c.seed = *g.seed;
  c.output_dir = g.out;
  return c;
}

LoadedModel read_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read model " + path.string());
  return load_model(in);
}

// News ids and labels; items of interaction files are resolved against it.
NewsTable read_news(const std::string& path) { return load_news(path); }

std::vector<std::optional<double>> followers_for(const std::string& attributes_path,
                                                 const IndexMap& users) {
  if (attributes_path.empty()) return std::vector<std::optional<double>>(users.size());
  return followers_from(align_attributes(load_user_attributes(attributes_path), users));
}

RowMatrix content_for(const std::string& content_path, const NewsTable* news,
                      const IndexMap& items, std::size_t dims, Warnings* warnings) {
  if (!content_path.empty()) {
    const CsvTable t = read_csv_file(content_path);
    const std::size_t idc = t.column("news_id");
    RowMatrix m(items.size(), t.header.size() - 1);
    std::vector<bool> seen(items.size(), false);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const long i = items.find(t.rows[r][idc]);
      if (i < 0) continue;
      seen[i] = true;
      std::size_t out_col = 0;
      for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c == idc) continue;
        m(i, out_col++) = parse_double_cell(t, r, c);
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) throw ValidationError(content_path + ": no features for '" + items.id(i) + "'");
    }
    return m;
  }
  if (news && !news->texts.empty()) {
    std::vector<std::string> texts(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const long r = news->ids.find(items.id(i));
      if (r < 0) throw ValidationError("no news row for item '" + items.id(i) + "'");
      texts[i] = news->texts[r];
    }
    return featurize_content(texts, dims, warnings);
  }
  return {};
}

int cmd_generate(const GlobalOptions& g, const Console& con) {
  const ExperimentConfig c = resolve_config(g);
  c.world.validate();
  const fs::path out = c.output_dir;
  con.info("generating world with seed " + std::to_string(c.seed));
  const SyntheticWorld world = generate_world(c.world, mix_seed(c.seed, 1));
  const InteractionSet observed = sample_interactions(world, mix_seed(c.seed, 2));
  export_world(world, out / "world");

  NewsTable news;
  news.ids = world.items();
  news.labels = world.item_labels;
  write_news(out / "news.csv", news);
  AttributeTable attrs;
  attrs.user_ids = world.users().ids();
  attrs.names = world.attribute_names;
  attrs.values = world.attributes;
  write_user_attributes(out / "attributes.csv", attrs);
  write_index_map(out / "users.csv", world.users(), "user_id");
  write_index_map(out / "items.csv", world.items(), "news_id");
  write_interactions(out / "interactions.csv", observed);

  SplitOptions opts;
  opts.ratio = c.split_ratio;
  opts.mode = c.split_mode;
  opts.seed = mix_seed(c.seed, 3);
  opts.world = &world;
  opts.test_exposure = c.test_exposure;
  const TrainTestSplit split = split_train_test(observed, opts);
  write_interactions(out / "train.csv", split.train);
  write_interactions(out / "test.csv", split.test);
  if (!split.exposed_per_item.empty()) {
    std::ostringstream ex;
    write_csv_row(ex, {"news_id", "exposed"});
    for (std::size_t i = 0; i < world.num_items; ++i) {
      write_csv_row(ex, {world.items().id(i), std::to_string(split.exposed_per_item[i])});
    }
    write_text_file(out / "exposure.csv", ex.str());
  }
  con.info("wrote " + std::to_string(observed.num_positives()) + " observed, " +
           std::to_string(split.train.num_positives()) + " train and " +
           std::to_string(split.test.num_positives()) + " test positives to " +
           out.string());
  return 0;
}

struct DataArgs {
  std::string interactions;
  std::string users;
  std::string news;
  std::string attributes;
  std::string content;
};

InteractionSet read_interactions(const DataArgs& a, const NewsTable* news,
                                 const Console& con, const IndexMap* users_override = nullptr) {
  std::optional<IndexMap> users;
  if (users_override) users = *users_override;
  else if (!a.users.empty()) users = load_index_map(a.users, "user_id");
  Warnings w;
  auto set = load_interactions(a.interactions, users ? &*users : nullptr,
                               news ? &news->ids : nullptr, &w);
  con.warn(w);
  if (news) set.set_item_labels(news->labels);
  return set;
}

int cmd_propensity(const GlobalOptions& g, const Console& con, const DataArgs& a,
                   const std::string& kind_text) {
  const ExperimentConfig c = resolve_config(g);
  const Variant kind = parse_variant(kind_text);
  if (kind == Variant::kBaseline) throw ConfigError("--kind must be news, user_news or neural");
  std::optional<NewsTable> news;
  if (!a.news.empty()) news = read_news(a.news);
  const InteractionSet set = read_interactions(a, news ? &*news : nullptr, con);

  std::optional<PropensityTable> table;
  if (kind == Variant::kNews) {
    table = news_propensity(set, c.propensity_eta, c.propensity_floor);
  } else if (kind == Variant::kUserNews) {
    if (a.attributes.empty()) throw ConfigError("user_news propensity needs --attributes");
    table = user_news_propensity(set, followers_for(a.attributes, set.users()),
                                 c.propensity_eta, c.propensity_floor);
  } else {
    Warnings w;
    const RowMatrix content =
        content_for(a.content, news ? &*news : nullptr, set.items(), c.text_feature_dims, &w);
    con.warn(w);
    if (content.rows() == 0) throw ConfigError("neural propensity needs --content or --news with text");
    NeuralPropensityParams p;
    p.learning_rate = c.neural_learning_rate;
    p.iterations = c.neural_iterations;
    p.eta = c.propensity_eta;
    p.floor = c.propensity_floor;
    std::vector<std::vector<double>> rows(content.rows());
    for (Eigen::Index r = 0; r < content.rows(); ++r) {
      rows[r].assign(content.row(r).data(), content.row(r).data() + content.cols());
    }
    table = fit_neural_propensity(rows, set, NeuralPropensityMode::kPretrainToPopularity, p)
                .to_table(content);
  }
  const fs::path out = c.output_dir;
  write_propensity(out / "propensity.csv", *table, set.users(), set.items());
  const PositivityReport pr = positivity_report(*table);
  nlohmann::ordered_json j;
  j["min"] = pr.min;
  j["max"] = pr.max;
  j["fraction_at_floor"] = pr.fraction_at_floor;
  j["floor_warning"] = pr.floor_warning;
  write_text_file(out / "positivity.json", j.dump(2) + "\n");
  if (pr.floor_warning) {
    con.warn({"more than 25% of propensities sit at the floor; weights may be unstable"});
  }
  return 0;
}

int cmd_train(const GlobalOptions& g, const Console& con, const DataArgs& a,
              const std::string& propensity_path) {
  const ExperimentConfig c = resolve_config(g);
  std::optional<NewsTable> news;
  if (!a.news.empty()) news = read_news(a.news);
  const InteractionSet set = read_interactions(a, news ? &*news : nullptr, con);
  PropensitySource source;
  if (!propensity_path.empty()) {
    source = load_propensity(propensity_path, set.users(), set.items(), c.propensity_floor);
  }
  const TrainConfig tc = c.train_config(mix_seed(c.seed, 4));
  con.info("training " + std::string(to_string(c.backbone)) + " on " +
           std::to_string(set.num_positives()) + " positives for " +
           std::to_string(tc.epochs) + " epochs");
  const TrainResult r = train(c.backbone, set, source, tc);
  const fs::path out = c.output_dir;
  std::ostringstream model, loss;
  save_model(model, r.model, set.users(), set.items());
  save_loss_trace(loss, r.epoch_loss);
  write_text_file(out / "model.txt", model.str());
  write_text_file(out / "loss.csv", loss.str());
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const Console& con, const std::string& model_path,
                 const std::string& train_path, const std::string& test_path) {
  const ExperimentConfig c = resolve_config(g);
  const LoadedModel m = read_model(model_path);
  Warnings w;
  const InteractionSet tr = load_interactions(train_path, &m.users, &m.items, &w);
  const InteractionSet te = load_interactions(test_path, &m.users, &m.items, &w);
  con.warn(w);
  const MetricsReport r = evaluate(m.model, tr, te, c.candidates, c.eval_ks);
  write_text_file(fs::path(c.output_dir) / "metrics.json", r.to_json() + "\n");
  if (!g.quiet) std::cout << r.to_json() << "\n";
  return 0;
}

// NAME=PATH pairs.
std::vector<std::pair<std::string, std::string>> named_paths(
    const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("expected NAME=PATH, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

int cmd_causal(const GlobalOptions& g, const Console& con, const DataArgs& a,
               const std::vector<std::string>& model_specs) {
  const ExperimentConfig c = resolve_config(g);
  if (a.news.empty() || a.attributes.empty()) {
    throw ConfigError("causal needs --news and --attributes");
  }
  const NewsTable news = read_news(a.news);
  std::vector<std::pair<std::string, LoadedModel>> models;
  for (const auto& [name, path] : named_paths(model_specs)) {
    models.emplace_back(name, read_model(path));
  }
  std::optional<IndexMap> users;
  if (!models.empty()) users = models.front().second.users;
  const InteractionSet set = read_interactions(a, &news, con, users ? &*users : nullptr);
  for (const auto& [name, m] : models) {
    if (!(m.users == set.users())) {
      throw ValidationError("model '" + name + "' was trained on a different user set");
    }
  }
  const AlignedAttributes attrs =
      align_attributes(load_user_attributes(a.attributes), set.users());
  std::vector<std::pair<std::string, const RowMatrix*>> emb;
  for (const auto& [name, m] : models) emb.emplace_back(name, &m.model.user_embeddings());
  const CausalAnalysis analysis = analyze_causal(c, set, attrs, emb, mix_seed(c.seed, 5));
  analysis.write(c.output_dir);
  con.info("fitted " + std::to_string(analysis.fits.size()) + " outcome models on " +
           std::to_string(analysis.n_users) + " users");
  return 0;
}

int cmd_behavior(const GlobalOptions& g, const Console& con, const DataArgs& a,
                 const std::string& fake_model, const std::string& true_model) {
  const ExperimentConfig c = resolve_config(g);
  if (a.news.empty()) throw ConfigError("behavior needs --news");
  const NewsTable news = read_news(a.news);
  const LoadedModel fm = read_model(fake_model);
  const LoadedModel tm = read_model(true_model);
  if (!(fm.users == tm.users)) throw ValidationError("the two models have different user sets");
  const InteractionSet set = read_interactions(a, &news, con, &fm.users);
  const BehaviorReport r = compare_sharing_behavior(
      c, set, fm.model.user_embeddings(), tm.model.user_embeddings(), mix_seed(c.seed, 6));
  const fs::path out = c.output_dir;
  write_text_file(out / "behavior.json", r.to_json() + "\n");
  write_text_file(out / "projection.csv", r.projection_csv());
  return 0;
}

int cmd_verify(const GlobalOptions& g, const Console& con, std::size_t worlds) {
  const ExperimentConfig c = resolve_config(g);
  const UnbiasednessCheck check = verify_unbiasedness(worlds, c.seed);
  write_text_file(fs::path(c.output_dir) / "unbiasedness.json", check.to_json() + "\n");
  con.info("max enumeration error " + format_exact(check.max_abs_error) +
           ", Monte-Carlo slope " + format_exact(check.mc_slope));
  if (!check.enumeration_passed() || !check.monte_carlo_passed()) {
    std::cerr << "unbiasedness check failed\n";
    return 2;
  }
  return 0;
}

int cmd_pipeline(const GlobalOptions& g, const Console& con, bool print_config) {
  const ExperimentConfig c = resolve_config(g);
  if (print_config) {
    std::cout << c.to_text();
    return 0;
  }
  run_pipeline(c, [&](const std::string& m) { con.info(m); });
  con.info("results in " + c.output_dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propensity-weighted news-sharing embeddings and causal attribute analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "key=value experiment config file");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--set", g.overrides, "override one config key, KEY=VALUE");
  app.add_flag("--quiet", g.quiet, "suppress progress messages");

  DataArgs data;
  auto add_data = [&](CLI::App* sub, bool need_interactions) {
    auto* opt = sub->add_option("--interactions", data.interactions, "user_id,news_id CSV");
    if (need_interactions) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--users", data.users, "user_id index file fixing user rows")
        ->check(CLI::ExistingFile);
    sub->add_option("--news", data.news, "news_id,label[,text] CSV fixing item rows")
        ->check(CLI::ExistingFile);
    sub->add_option("--attributes", data.attributes, "user attribute CSV")
        ->check(CLI::ExistingFile);
  };

  auto* gen = app.add_subcommand("generate", "synthetic world, observed shares and splits");

  auto* prop = app.add_subcommand("propensity", "propensity table from interactions");
  std::string kind = "news";
  add_data(prop, true);
  prop->add_option("--kind", kind, "news, user_news or neural")->capture_default_str();
  prop->add_option("--content", data.content, "news_id,c0,c1,... feature CSV")
      ->check(CLI::ExistingFile);

  auto* tr = app.add_subcommand("train", "train a dissemination model");
  std::string propensity_path;
  add_data(tr, true);
  tr->add_option("--propensity", propensity_path, "propensity CSV; omit for the baseline")
      ->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("evaluate", "ranking metrics on a test set");
  std::string model_path, train_path, test_path;
  ev->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--train", train_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--test", test_path)->required()->check(CLI::ExistingFile);

  auto* ca = app.add_subcommand("causal", "outcome models with embedding confounders");
  std::vector<std::string> model_specs;
  add_data(ca, true);
  ca->add_option("--model", model_specs, "NAME=PATH, repeatable (e.g. LR-U=model.txt)");

  auto* be = app.add_subcommand("behavior", "fake-only vs true-only sharing behavior");
  std::string fake_model, true_model;
  add_data(be, true);
  be->add_option("--fake-model", fake_model)->required()->check(CLI::ExistingFile);
  be->add_option("--true-model", true_model)->required()->check(CLI::ExistingFile);

  auto* vu = app.add_subcommand("verify-unbiasedness", "enumeration and Monte-Carlo checks");
  std::size_t worlds = 50;
  vu->add_option("--worlds", worlds)->capture_default_str();

  auto* pl = app.add_subcommand("pipeline", "full experiment from a config");
  bool print_config = false;
  pl->add_flag("--print-config", print_config, "print the resolved config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const Console con(g);
  try {
    if (*gen) return cmd_generate(g, con);
    if (*prop) return cmd_propensity(g, con, data, kind);
    if (*tr) return cmd_train(g, con, data, propensity_path);
    if (*ev) return cmd_evaluate(g, con, model_path, train_path, test_path);
    if (*ca) return cmd_causal(g, con, data, model_specs);
    if (*be) return cmd_behavior(g, con, data, fake_model, true_model);
    if (*vu) return cmd_verify(g, con, worlds);
    if (*pl) return cmd_pipeline(g, con, print_config);
  } catch (const std::invalid_argument& e) {  // ConfigError, ValidationError
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
