#include "sharecause/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sharecause/csv.h"
#include "sharecause/io.h"

namespace sharecause {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Seed streams derived from each repetition seed.
enum Stream : std::uint64_t {
  kWorldStream = 1,
  kSampleStream,
  kSplitStream,
  kTrainStream,
  kCausalStream,
  kBehaviorStream,
};

// Everything a repetition needs that does not depend on its seed when the
// data comes from files.
struct Dataset {
  InteractionSet interactions;  // all observed positives, labelled
  std::optional<SyntheticWorld> world;
  std::vector<std::optional<double>> followers;  // by user row
  AlignedAttributes attributes;
  RowMatrix content;  // per-item features, may be empty
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("stage '" + stage + "': " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("stage '" + stage + "': " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage '" + stage + "': " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + stage + "': " + e.what());
  }
}

std::vector<std::vector<double>> matrix_rows(const RowMatrix& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows[r].assign(m.row(r).data(), m.row(r).data() + m.cols());
  }
  return rows;
}

RowMatrix select_rows(const RowMatrix& m, const std::vector<int>& rows) {
  RowMatrix out(rows.size(), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(k) = m.row(rows[k]);
  return out;
}

// Item rows kept by a corpus restriction, in original order.
std::vector<int> corpus_items(const InteractionSet& s, std::optional<NewsLabel> label) {
  std::vector<int> out;
  for (std::size_t i = 0; i < s.num_items(); ++i) {
    if (!label || s.item_labels()[i] == *label) out.push_back(static_cast<int>(i));
  }
  return out;
}

InteractionSet restrict(const InteractionSet& s, std::optional<NewsLabel> label) {
  return label ? s.restrict_to_label(*label) : s;
}

Dataset load_dataset(const ExperimentConfig& config, std::uint64_t rep_seed) {
  Dataset d;
  if (config.source == DataSource::kSynthetic) {
    d.world = generate_world(config.world, mix_seed(rep_seed, kWorldStream));
    d.interactions = sample_interactions(*d.world, mix_seed(rep_seed, kSampleStream));
    for (auto f : d.world->follower_counts) d.followers.emplace_back(static_cast<double>(f));
    d.attributes.table.user_ids = d.world->users().ids();
    d.attributes.table.names = d.world->attribute_names;
    d.attributes.table.values = d.world->attributes;
    d.attributes.present.assign(d.world->num_users, true);
    d.content = d.world->content;
    return d;
  }

  NewsTable news = load_news(config.news_path);
  Warnings warnings;
  d.interactions = load_interactions(config.interactions_path, nullptr, &news.ids, &warnings);
  d.interactions.set_item_labels(news.labels);
  if (!news.texts.empty()) {
    d.content = featurize_content(news.texts, config.text_feature_dims, &warnings);
  }
  d.followers.assign(d.interactions.num_users(), std::nullopt);
  if (!config.attributes_path.empty()) {
    d.attributes = align_attributes(load_user_attributes(config.attributes_path),
                                    d.interactions.users());
    d.followers = followers_from(d.attributes);
  } else {
    d.attributes.present.assign(d.interactions.num_users(), false);
  }
  return d;
}

std::string to_csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) write_csv_row(out, r);
  return out.str();
}

RepetitionResult run_repetition(const ExperimentConfig& config, int index,
                                std::uint64_t seed, const std::optional<Dataset>& shared,
                                const fs::path& dir, const Logger& log) {
  RepetitionResult rep;
  rep.index = index;
  rep.seed = seed;
  auto say = [&](const std::string& m) {
    if (log) log("rep " + std::to_string(index) + ": " + m);
  };

  const Dataset data = shared ? *shared : run_stage("generate", [&] {
    say("generating synthetic world");
    return load_dataset(config, seed);
  });

  const std::optional<NewsLabel> corpus =
      config.corpus == Corpus::kFake ? std::optional(NewsLabel::kFake) : std::nullopt;
  const auto split = run_stage("split", [&] {
    SplitOptions opts;
    opts.ratio = config.split_ratio;
    opts.mode = config.split_mode;
    opts.seed = mix_seed(seed, kSplitStream);
    opts.world = data.world ? &*data.world : nullptr;
    opts.test_exposure = config.test_exposure;
    auto s = split_train_test(data.interactions, opts);
    s.train.set_item_labels(data.interactions.item_labels());
    s.test.set_item_labels(data.interactions.item_labels());
    write_interactions(dir / "train.csv", s.train);
    write_interactions(dir / "test.csv", s.test);
    return s;
  });
  const InteractionSet train_set = restrict(split.train, corpus);
  const InteractionSet test_set = restrict(split.test, corpus);
  const auto items = corpus_items(data.interactions, corpus);
  const RowMatrix content =
      data.content.rows() ? select_rows(data.content, items) : RowMatrix();

  std::vector<std::pair<Variant, FactorModel>> models;
  for (Variant v : config.variants) {
    const std::string name = to_string(v);
    say("training " + name);
    auto trained = run_stage("train " + name, [&] {
      return train_variant(v, config, train_set, data.followers, content,
                           mix_seed(seed, kTrainStream));
    });
    run_stage("train", [&] {
      if (trained.table) {
        write_propensity(dir / ("propensity_" + name + ".csv"), *trained.table,
                         train_set.users(), train_set.items());
      }
      std::ostringstream loss;
      save_loss_trace(loss, trained.result.epoch_loss);
      write_text_file(dir / ("loss_" + name + ".csv"), loss.str());
      if (config.save_models) {
        std::ostringstream model;
        save_model(model, trained.result.model, train_set.users(), train_set.items());
        write_text_file(dir / ("model_" + name + ".txt"), model.str());
      }
    });
    rep.metrics[name] = run_stage("evaluate", [&] {
      auto m = evaluate(trained.result.model, train_set, test_set, config.candidates,
                        config.eval_ks);
      write_text_file(dir / ("metrics_" + name + ".json"), m.to_json() + "\n");
      return m;
    });
    models.emplace_back(v, std::move(trained.result.model));
  }

  if (config.causal_enabled) {
    say("fitting outcome models");
    rep.prediction = run_stage("causal", [&] {
      std::vector<std::pair<std::string, const RowMatrix*>> refs;
      for (const auto& [v, m] : models) refs.emplace_back(causal_label(v), &m.user_embeddings());
      const auto analysis = analyze_causal(config, data.interactions, data.attributes, refs,
                                           mix_seed(seed, kCausalStream));
      analysis.write(dir);
      return std::map<std::string, RegressionMetrics>(analysis.prediction.begin(),
                                                      analysis.prediction.end());
    });
  }
  if (config.behavior_enabled) {
    say("comparing sharing behavior");
    rep.behavior = run_stage("behavior", [&] {
      const std::uint64_t bseed = mix_seed(seed, kBehaviorStream);
      auto embeddings = [&](NewsLabel label, std::uint64_t s) {
        const InteractionSet subset = split.train.restrict_to_label(label);
        const auto rows = corpus_items(split.train, label);
        const RowMatrix c = data.content.rows() ? select_rows(data.content, rows) : RowMatrix();
        return train_variant(config.behavior_variant, config, subset, data.followers, c, s)
            .result.model.user_embeddings();
      };
      const RowMatrix fake = embeddings(NewsLabel::kFake, mix_seed(bseed, 1));
      const RowMatrix real = embeddings(NewsLabel::kTrue, mix_seed(bseed, 2));
      auto report = compare_sharing_behavior(config, data.interactions, fake, real,
                                             mix_seed(bseed, 3));
      write_text_file(dir / "behavior.json", report.to_json() + "\n");
      write_text_file(dir / "projection.csv", report.projection_csv());
      return report;
    });
  }
  return rep;
}

void write_manifest(const ExperimentConfig& config, const fs::path& out,
                    const std::vector<std::uint64_t>& seeds,
                    const std::string& status, const std::string& error) {
  Json m;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  m["master_seed"] = config.seed;
  m["repetition_seeds"] = seeds;
  Json inputs = Json::object();
  for (const auto* p : {&config.interactions_path, &config.news_path, &config.attributes_path}) {
    if (config.source == DataSource::kFiles && !p->empty() && fs::is_regular_file(*p)) {
      inputs[p->string()] = file_digest(*p);
    }
  }
  m["inputs"] = inputs;
  m["artifacts"] = Json::parse(digest_listing(out, {"manifest.json"}));
  write_text_file(out / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

std::string causal_label(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "LR-Basic";
    case Variant::kNews: return "LR-N";
    case Variant::kUserNews: return "LR-U";
    case Variant::kNeural: return "LR-Neu";
  }
  return "LR-?";
}

VariantTraining train_variant(Variant variant, const ExperimentConfig& config,
                              const InteractionSet& train_set,
                              const std::vector<std::optional<double>>& followers,
                              const RowMatrix& content, std::uint64_t seed) {
  PropensitySource source;
  VariantTraining out;
  switch (variant) {
    case Variant::kBaseline:
      break;
    case Variant::kNews:
      out.table = news_propensity(train_set, config.propensity_eta, config.propensity_floor);
      source = *out.table;
      break;
    case Variant::kUserNews:
      out.table = user_news_propensity(train_set, followers, config.propensity_eta,
                                       config.propensity_floor);
      source = *out.table;
      break;
    case Variant::kNeural: {
      if (content.rows() == 0) {
        throw ValidationError("neural propensity needs per-item content features");
      }
      NeuralPropensityParams params;
      params.learning_rate = config.neural_learning_rate;
      params.iterations = config.neural_iterations;
      params.eta = config.propensity_eta;
      params.floor = config.propensity_floor;
      auto model = fit_neural_propensity(matrix_rows(content), train_set,
                                         config.neural_mode, params);
      out.table = model.to_table(content);
      source = NeuralPropensitySource{std::move(model), content};
      break;
    }
  }
  out.result = train(config.backbone, train_set, source, config.train_config(seed));
  if (out.result.propensity_model) {
    out.table = out.result.propensity_model->to_table(content);
  }
  return out;
}

AlignedAttributes align_attributes(const AttributeTable& table,
                                   const IndexMap& users) {
  AlignedAttributes out;
  out.table.names = table.names;
  out.table.user_ids = users.ids();
  out.table.values = RowMatrix::Zero(users.size(), table.names.size());
  out.present.assign(users.size(), false);
  for (std::size_t r = 0; r < table.user_ids.size(); ++r) {
    const long u = users.find(table.user_ids[r]);
    if (u < 0) continue;
    out.table.values.row(u) = table.values.row(r);
    out.present[u] = true;
  }
  return out;
}

std::vector<std::optional<double>> followers_from(const AlignedAttributes& attributes) {
  const auto& names = attributes.table.names;
  const auto it = std::find(names.begin(), names.end(), "followers_count");
  if (it == names.end()) throw ValidationError("attributes have no followers_count column");
  const auto col = it - names.begin();
  std::vector<std::optional<double>> out(attributes.present.size());
  for (std::size_t u = 0; u < out.size(); ++u) {
    if (attributes.present[u]) out[u] = attributes.table.values(u, col);
  }
  return out;
}

void CausalAnalysis::write(const fs::path& dir) const {
  for (const auto& [label, fit] : fits) {
    write_text_file(dir / ("causal_" + label + ".json"), fit.to_json() + "\n");
  }
  write_text_file(dir / "effects.csv", comparison.to_csv());
  std::vector<std::vector<std::string>> rows{{"model", "mse", "mae"}};
  for (const auto& [label, m] : prediction) {
    rows.push_back({label, format_exact(m.mse), format_exact(m.mae)});
  }
  write_text_file(dir / "causal_prediction.csv", to_csv_text(rows));
  Json summary;
  summary["n_users"] = n_users;
  summary["zero_fake_users"] = zero_fake_users;
  write_text_file(dir / "causal_summary.json", summary.dump(2) + "\n");
}

CausalAnalysis analyze_causal(
    const ExperimentConfig& config, const InteractionSet& labelled,
    const AlignedAttributes& attributes,
    const std::vector<std::pair<std::string, const RowMatrix*>>& embeddings,
    std::uint64_t seed) {
  if (attributes.present.size() != labelled.num_users()) {
    throw ValidationError("attributes are not aligned with the interaction users");
  }
  for (const auto& [label, emb] : embeddings) {
    if (static_cast<std::size_t>(emb->rows()) != labelled.num_users()) {
      throw ValidationError("embeddings '" + label + "' do not cover every user");
    }
  }
  CausalAnalysis out;
  const auto susc = susceptibility_by_user(labelled);
  std::vector<int> users;
  for (std::size_t u = 0; u < susc.size(); ++u) {
    if (!susc[u] || !attributes.present[u]) continue;
    users.push_back(static_cast<int>(u));
    out.zero_fake_users += susc[u]->below_stated_range;
  }
  const std::size_t n = users.size();
  out.n_users = n;
  AttributeTable attrs;
  attrs.names = attributes.table.names;
  attrs.values = select_rows(attributes.table.values, users);
  for (int u : users) attrs.user_ids.push_back(attributes.table.user_ids[u]);
  attrs.validate();
  attrs.standardize();
  const RowMatrix a = attrs.standardized_values();
  Vector outcome(n);
  for (std::size_t k = 0; k < n; ++k) outcome[k] = susc[users[k]]->value;

  FitOptions options;
  options.intercept = config.causal_intercept;
  options.confidence = config.causal_confidence;

  std::vector<std::pair<std::string, std::optional<RowMatrix>>> designs;
  designs.emplace_back("LR", std::nullopt);
  for (const auto& [label, emb] : embeddings) {
    designs.emplace_back(label, select_rows(*emb, users));
  }
  for (const auto& [label, conf] : designs) {
    out.fits.emplace_back(label, fit_outcome_model(a, attrs.names, conf ? &*conf : nullptr,
                                                   outcome, options));
  }
  out.comparison = compare_effect_estimates(out.fits, config.causal_alpha);

  // Held-out prediction on a seeded user split.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(config.causal_train_fraction * static_cast<double>(n)));
  std::vector<int> tr(order.begin(), order.begin() + n_train);
  std::vector<int> te(order.begin() + n_train, order.end());
  std::sort(tr.begin(), tr.end());
  std::sort(te.begin(), te.end());
  if (te.empty()) throw ValidationError("causal held-out split has no users");
  Vector y_tr(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) y_tr[k] = outcome[tr[k]];
  std::vector<double> truth;
  for (int k : te) truth.push_back(outcome[k]);

  for (const auto& [label, conf] : designs) {
    const RowMatrix a_tr = select_rows(a, tr);
    std::optional<RowMatrix> c_tr;
    if (conf) c_tr = select_rows(*conf, tr);
    const CausalFit fit = fit_outcome_model(a_tr, attrs.names, c_tr ? &*c_tr : nullptr,
                                            y_tr, options);
    std::vector<double> pred;
    for (int k : te) {
      std::vector<double> av(a.row(k).data(), a.row(k).data() + a.cols());
      std::vector<double> cv;
      if (conf) cv.assign(conf->row(k).data(), conf->row(k).data() + conf->cols());
      pred.push_back(predict_susceptibility(fit, av, cv));
    }
    out.prediction.emplace_back(label, regression_metrics(pred, truth));
  }
  return out;
}

BehaviorReport compare_sharing_behavior(const ExperimentConfig& config,
                                        const InteractionSet& labelled,
                                        const RowMatrix& fake_embeddings,
                                        const RowMatrix& true_embeddings,
                                        std::uint64_t seed) {
  const auto& labels = labelled.item_labels();
  if (labels.size() != labelled.num_items()) {
    throw ValidationError("behavior comparison needs fake/true labels for every item");
  }
  EmbeddingSample fake, real;
  fake.cohort = Cohort::kFakeOnly;
  real.cohort = Cohort::kTrueOnly;
  std::vector<int> fake_rows, true_rows;
  for (std::size_t u = 0; u < labelled.num_users(); ++u) {
    const auto& items = labelled.items_of(static_cast<int>(u));
    if (items.empty()) continue;
    const auto fakes = std::count_if(items.begin(), items.end(), [&](int i) {
      return labels[i] == NewsLabel::kFake;
    });
    if (fakes == static_cast<long>(items.size())) fake_rows.push_back(static_cast<int>(u));
    if (fakes == 0) true_rows.push_back(static_cast<int>(u));
  }
  if (fake_rows.empty() || true_rows.empty()) {
    throw ValidationError("behavior comparison needs both fake-only and true-only users");
  }
  fake.rows = select_rows(fake_embeddings, fake_rows);
  real.rows = select_rows(true_embeddings, true_rows);
  for (int u : fake_rows) fake.user_ids.push_back(labelled.users().id(u));
  for (int u : true_rows) real.user_ids.push_back(labelled.users().id(u));
  const auto [bf, bt] = balance_cohorts(fake, real, seed);

  std::optional<DbscanParams> params;
  if (config.behavior_eps > 0.0) {
    params = DbscanParams{config.behavior_eps,
                          config.behavior_min_pts
                              ? config.behavior_min_pts
                              : default_dbscan_params(bf.rows).min_pts};
  }
  return compare_behaviors(bf, bt, params);
}

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) throw ValidationError("mean of an empty list");
  const double n = static_cast<double>(xs.size());
  const double mean = compensated_sum(xs) / n;
  if (xs.size() == 1) return {mean, 0.0};
  CompensatedSum ss;
  for (double x : xs) ss.add((x - mean) * (x - mean));
  return {mean, std::sqrt(ss.value() / (n - 1.0))};
}

std::string digest_listing(const fs::path& dir, const std::vector<std::string>& skip) {
  std::vector<std::string> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string rel = fs::relative(e.path(), dir).generic_string();
      if (std::find(skip.begin(), skip.end(), rel) == skip.end()) files.push_back(rel);
    }
  }
  std::sort(files.begin(), files.end());
  Json j = Json::object();
  for (const auto& f : files) j[f] = file_digest(dir / f);
  return j.dump(2);
}

std::string PipelineReport::to_json() const {
  Json j;
  Json reps = Json::array();
  for (const auto& r : repetitions) {
    Json row;
    row["repetition"] = r.index;
    row["seed"] = r.seed;
    Json metrics = Json::object();
    for (const auto& [name, m] : r.metrics) metrics[name] = Json::parse(m.to_json());
    row["metrics"] = metrics;
    if (!r.prediction.empty()) {
      Json pred = Json::object();
      for (const auto& [label, m] : r.prediction) pred[label] = {{"mse", m.mse}, {"mae", m.mae}};
      row["susceptibility_prediction"] = pred;
    }
    if (r.behavior) row["behavior"] = Json::parse(r.behavior->to_json());
    reps.push_back(std::move(row));
  }
  j["repetitions"] = std::move(reps);
  Json agg = Json::object();
  for (const auto& [name, s] : aggregate) {
    agg[name] = {{"k", s.ks},
                 {"recall_mean", s.recall_mean}, {"recall_sd", s.recall_sd},
                 {"ndcg_mean", s.ndcg_mean}, {"ndcg_sd", s.ndcg_sd}};
  }
  j["aggregate"] = std::move(agg);
  return j.dump(2);
}

PipelineReport run_pipeline(const ExperimentConfig& config, const Logger& log) {
  run_stage("config", [&] { config.validate(); });
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_text_file(out / "config.txt", config.to_text());

  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < config.repetitions; ++r) {
    seeds.push_back(mix_seed(config.seed, static_cast<std::uint64_t>(r)));
  }

  PipelineReport report;
  try {
    std::optional<Dataset> shared;
    if (config.source == DataSource::kFiles) {
      shared = run_stage("ingest", [&] { return load_dataset(config, config.seed); });
    }
    // Repetitions run one after another; each writes only to its own
    // directory so they could be spread over threads without coordination.
    for (int r = 0; r < config.repetitions; ++r) {
      const fs::path dir = out / ("rep_" + std::to_string(r));
      fs::create_directories(dir);
      report.repetitions.push_back(run_repetition(config, r, seeds[r], shared, dir, log));
    }

    run_stage("report", [&] {
      for (Variant v : config.variants) {
        const std::string name = to_string(v);
        MetricSummary s;
        s.ks = config.eval_ks;
        for (std::size_t k = 0; k < s.ks.size(); ++k) {
          std::vector<double> rec, nd;
          for (const auto& rep : report.repetitions) {
            rec.push_back(rep.metrics.at(name).recall[k]);
            nd.push_back(rep.metrics.at(name).ndcg[k]);
          }
          const auto [rm, rs] = mean_sd(rec);
          const auto [nm, ns] = mean_sd(nd);
          s.recall_mean.push_back(rm);
          s.recall_sd.push_back(rs);
          s.ndcg_mean.push_back(nm);
          s.ndcg_sd.push_back(ns);
        }
        report.aggregate[name] = std::move(s);
      }
      std::vector<std::vector<std::string>> rows{
          {"variant", "k", "recall_mean", "recall_sd", "ndcg_mean", "ndcg_sd"}};
      for (Variant v : config.variants) {
        const auto& s = report.aggregate.at(to_string(v));
        for (std::size_t k = 0; k < s.ks.size(); ++k) {
          rows.push_back({to_string(v), std::to_string(s.ks[k]),
                          format_exact(s.recall_mean[k]), format_exact(s.recall_sd[k]),
                          format_exact(s.ndcg_mean[k]), format_exact(s.ndcg_sd[k])});
        }
      }
      write_text_file(out / "summary.csv", to_csv_text(rows));
      write_text_file(out / "report.json", report.to_json() + "\n");
    });
  } catch (const std::exception& e) {
    write_manifest(config, out, seeds, "failed", e.what());
    throw;
  }
  write_manifest(config, out, seeds, "complete", "");
  return report;
}

}  // namespace sharecause
