#include "sharecause/dissemination.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace sharecause {
namespace {

void check_indices(const FactorModel& model, int user, int item) {
  if (user < 0 || static_cast<std::size_t>(user) >= model.num_users()) {
    throw ValidationError("user index " + std::to_string(user) +
                          " out of range");
  }
  if (item < 0 || static_cast<std::size_t>(item) >= model.num_items()) {
    throw ValidationError("item index " + std::to_string(item) +
                          " out of range");
  }
}

// Scratch buffers for one neural forward/backward pass.
struct NeuralPass {
  Vector input;   // [U_u, V_i]
  Vector pre;     // W x + b
  Vector scale;   // dropout multiplier per hidden unit (0 or 1/keep)
  Vector act;     // relu(pre) * scale
  Vector d_pre;
  Vector d_input;

  explicit NeuralPass(std::size_t d, std::size_t h)
      : input(2 * d), pre(h), scale(Vector::Ones(h)), act(h), d_pre(h),
        d_input(2 * d) {}
};

double neural_forward(const ModelParameters& p, int user, int item,
                      NeuralPass& pass) {
  const Eigen::Index d = p.user_emb.cols();
  pass.input.head(d) = p.user_emb.row(user).transpose();
  pass.input.tail(d) = p.item_emb.row(item).transpose();
  pass.pre.noalias() = p.hidden_w * pass.input;
  pass.pre += p.hidden_b;
  pass.act = pass.pre.cwiseMax(0.0).cwiseProduct(pass.scale);
  return p.out_w.dot(pass.act) + p.out_b[0];
}

// Adds ds * d(score)/d(params) into `grad`, using the activations left in
// `pass` by neural_forward.
void neural_backward(const ModelParameters& p, int user, int item, double ds,
                     NeuralPass& pass, ModelParameters& grad) {
  const Eigen::Index d = p.user_emb.cols();
  grad.out_w += ds * pass.act;
  grad.out_b[0] += ds;
  for (Eigen::Index k = 0; k < pass.pre.size(); ++k) {
    pass.d_pre[k] = pass.pre[k] > 0.0 ? ds * p.out_w[k] * pass.scale[k] : 0.0;
  }
  grad.hidden_w.noalias() += pass.d_pre * pass.input.transpose();
  grad.hidden_b += pass.d_pre;
  pass.d_input.noalias() = p.hidden_w.transpose() * pass.d_pre;
  grad.user_emb.row(user) += pass.d_input.head(d).transpose();
  grad.item_emb.row(item) += pass.d_input.tail(d).transpose();
}

void draw_dropout(NeuralPass& pass, double keep, std::mt19937_64* rng) {
  if (rng == nullptr || keep >= 1.0) {
    pass.scale.setOnes();
    return;
  }
  std::bernoulli_distribution coin(keep);
  for (Eigen::Index k = 0; k < pass.scale.size(); ++k) {
    pass.scale[k] = coin(*rng) ? 1.0 / keep : 0.0;
  }
}

// Computes the mean weighted triplet loss and, when `grad` is set, adds its
// gradient. d_theta_pos/neg, when set, receive dLoss/dtheta per triplet.
double accumulate_batch(const FactorModel& model, const TripletBatch& batch,
                        bool clamp, ModelParameters* grad,
                        std::mt19937_64* dropout_rng, double keep,
                        std::vector<double>* d_theta_pos,
                        std::vector<double>* d_theta_neg) {
  const auto& p = model.params();
  const double n = static_cast<double>(batch.triplets.size());
  const bool neural = model.backbone() == Backbone::kNeural;
  NeuralPass pos_pass(model.dims(), model.hidden());
  NeuralPass neg_pass(model.dims(), model.hidden());
  if (d_theta_pos) d_theta_pos->assign(batch.triplets.size(), 0.0);
  if (d_theta_neg) d_theta_neg->assign(batch.triplets.size(), 0.0);

  CompensatedSum total;
  for (std::size_t t = 0; t < batch.triplets.size(); ++t) {
    const Triplet& tr = batch.triplets[t];
    check_indices(model, tr.user, tr.pos);
    check_indices(model, tr.user, tr.neg);
    double s_pos, s_neg;
    if (neural) {
      draw_dropout(pos_pass, keep, dropout_rng);
      draw_dropout(neg_pass, keep, dropout_rng);
      s_pos = neural_forward(p, tr.user, tr.pos, pos_pass);
      s_neg = neural_forward(p, tr.user, tr.neg, neg_pass);
    } else {
      s_pos = p.user_emb.row(tr.user).dot(p.item_emb.row(tr.pos));
      s_neg = p.user_emb.row(tr.user).dot(p.item_emb.row(tr.neg));
    }
    const double s = s_pos - s_neg;
    const double weight = tr.ips_weight();
    const double ell = local_loss(s);
    const double term = weight * ell;
    if (clamp && term < 0.0) continue;  // max{., 0}: no loss, no gradient
    total.add(term);

    if (d_theta_pos) {
      (*d_theta_pos)[t] = -(tr.y_pos / (tr.theta_pos * tr.theta_pos)) *
                          (1.0 - tr.y_neg / tr.theta_neg) * ell / n;
    }
    if (d_theta_neg) {
      (*d_theta_neg)[t] = (tr.y_pos / tr.theta_pos) *
                          (tr.y_neg / (tr.theta_neg * tr.theta_neg)) * ell / n;
    }
    if (grad == nullptr || weight == 0.0) continue;
    // d ell / d s = -sigmoid(-s)
    const double ds = -weight * sigmoid(-s) / n;
    if (neural) {
      neural_backward(p, tr.user, tr.pos, ds, pos_pass, *grad);
      neural_backward(p, tr.user, tr.neg, -ds, neg_pass, *grad);
    } else {
      grad->user_emb.row(tr.user) +=
          ds * (p.item_emb.row(tr.pos) - p.item_emb.row(tr.neg));
      grad->item_emb.row(tr.pos) += ds * p.user_emb.row(tr.user);
      grad->item_emb.row(tr.neg) -= ds * p.user_emb.row(tr.user);
    }
  }
  return total.value() / n;
}

double regularizer(const FactorModel& model, const TripletBatch& batch,
                   RegularizationScope scope) {
  const auto& p = model.params();
  if (scope == RegularizationScope::kFull) {
    return p.user_emb.squaredNorm() + p.item_emb.squaredNorm();
  }
  CompensatedSum sum;
  for (const Triplet& t : batch.triplets) {
    sum.add(p.user_emb.row(t.user).squaredNorm() +
            p.item_emb.row(t.pos).squaredNorm() +
            p.item_emb.row(t.neg).squaredNorm());
  }
  return sum.value() / static_cast<double>(batch.triplets.size());
}

void add_regularizer_gradient(const FactorModel& model, double lambda,
                              const TripletBatch& batch,
                              RegularizationScope scope, ModelParameters& grad) {
  if (lambda == 0.0) return;
  const auto& p = model.params();
  if (scope == RegularizationScope::kFull) {
    grad.user_emb += 2.0 * lambda * p.user_emb;
    grad.item_emb += 2.0 * lambda * p.item_emb;
    return;
  }
  const double c = 2.0 * lambda / static_cast<double>(batch.triplets.size());
  for (const Triplet& t : batch.triplets) {
    grad.user_emb.row(t.user) += c * p.user_emb.row(t.user);
    grad.item_emb.row(t.pos) += c * p.item_emb.row(t.pos);
    grad.item_emb.row(t.neg) += c * p.item_emb.row(t.neg);
  }
}

}  // namespace

const char* to_string(Backbone backbone) {
  return backbone == Backbone::kMf ? "mf" : "neural";
}

Backbone parse_backbone(const std::string& text) {
  if (text == "mf" || text == "bprmf") return Backbone::kMf;
  if (text == "neural" || text == "ncf") return Backbone::kNeural;
  throw ConfigError("unknown backbone '" + text + "'");
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z;
  z.user_emb = RowMatrix::Zero(user_emb.rows(), user_emb.cols());
  z.item_emb = RowMatrix::Zero(item_emb.rows(), item_emb.cols());
  z.hidden_w = RowMatrix::Zero(hidden_w.rows(), hidden_w.cols());
  z.hidden_b = Vector::Zero(hidden_b.size());
  z.out_w = Vector::Zero(out_w.size());
  z.out_b = Vector::Zero(out_b.size());
  return z;
}

bool ModelParameters::all_finite() const {
  return user_emb.allFinite() && item_emb.allFinite() && hidden_w.allFinite() &&
         hidden_b.allFinite() && out_w.allFinite() && out_b.allFinite();
}

FactorModel FactorModel::zeros(Backbone backbone, std::size_t num_users,
                               std::size_t num_items, std::size_t dims) {
  if (num_users == 0 || num_items == 0 || dims == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  FactorModel m;
  m.backbone_ = backbone;
  auto& p = m.params_;
  p.user_emb = RowMatrix::Zero(num_users, dims);
  p.item_emb = RowMatrix::Zero(num_items, dims);
  p.out_b = Vector::Zero(backbone == Backbone::kNeural ? 1 : 0);
  if (backbone == Backbone::kNeural) {
    p.hidden_w = RowMatrix::Zero(dims, 2 * dims);
    p.hidden_b = Vector::Zero(dims);
    p.out_w = Vector::Zero(dims);
  } else {
    p.hidden_w = RowMatrix(0, 0);
    p.hidden_b = Vector(0);
    p.out_w = Vector(0);
  }
  return m;
}

FactorModel FactorModel::gaussian(Backbone backbone, std::size_t num_users,
                                  std::size_t num_items, std::size_t dims,
                                  double stddev, std::uint64_t seed) {
  FactorModel m = zeros(backbone, num_users, num_items, dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  auto fill = [&](auto& block) {
    for (Eigen::Index k = 0; k < block.size(); ++k) block.data()[k] = normal(rng);
  };
  fill(m.params_.user_emb);
  fill(m.params_.item_emb);
  fill(m.params_.hidden_w);
  fill(m.params_.out_w);
  return m;
}

double score(const FactorModel& model, int user, int item) {
  check_indices(model, user, item);
  const auto& p = model.params();
  if (model.backbone() == Backbone::kMf) {
    return p.user_emb.row(user).dot(p.item_emb.row(item));
  }
  NeuralPass pass(model.dims(), model.hidden());
  return neural_forward(p, user, item, pass);
}

Vector score_all(const FactorModel& model, int user) {
  check_indices(model, user, 0);
  const auto& p = model.params();
  if (model.backbone() == Backbone::kMf) {
    return p.item_emb * p.user_emb.row(user).transpose();
  }
  Vector out(model.num_items());
  NeuralPass pass(model.dims(), model.hidden());
  for (std::size_t i = 0; i < model.num_items(); ++i) {
    out[i] = neural_forward(p, user, static_cast<int>(i), pass);
  }
  return out;
}

double local_loss(double s_uij) { return log1p_exp_neg(s_uij); }

double weighted_triplet_term(double y_ui, double theta_ui, double y_uj,
                             double theta_uj, double s_uij, bool clamp) {
  if (!(theta_ui > 0.0) || !(theta_uj > 0.0)) {
    throw ValidationError("propensities must be positive");
  }
  const double term =
      (y_ui / theta_ui) * (1.0 - y_uj / theta_uj) * local_loss(s_uij);
  return clamp ? std::max(term, 0.0) : term;
}

double Triplet::ips_weight() const {
  if (!(theta_pos > 0.0) || !(theta_neg > 0.0)) {
    throw ValidationError("propensities must be positive");
  }
  return (y_pos / theta_pos) * (1.0 - y_neg / theta_neg);
}

double batch_objective(const FactorModel& model, const TripletBatch& batch,
                       double lambda, bool clamp, RegularizationScope scope) {
  if (batch.triplets.empty()) throw ValidationError("empty triplet batch");
  return accumulate_batch(model, batch, clamp, nullptr, nullptr, 1.0, nullptr,
                          nullptr) +
         lambda * regularizer(model, batch, scope);
}

ModelParameters gradients(const FactorModel& model, const TripletBatch& batch,
                          double lambda, bool clamp, RegularizationScope scope) {
  if (batch.triplets.empty()) throw ValidationError("empty triplet batch");
  ModelParameters grad = model.params().zeros_like();
  accumulate_batch(model, batch, clamp, &grad, nullptr, 1.0, nullptr, nullptr);
  add_regularizer_gradient(model, lambda, batch, scope, grad);
  return grad;
}

namespace {

class NegativeSampler {
 public:
  explicit NegativeSampler(const InteractionSet& interactions)
      : interactions_(interactions),
        pick_(0, static_cast<int>(interactions.num_items()) - 1) {}

  bool saturated(int user) const {
    return interactions_.items_of(user).size() >= interactions_.num_items();
  }

  // Rejection sampling is exactly uniform over the user's unshared items.
  int draw(int user, std::mt19937_64& rng) {
    const auto& row = interactions_.items_of(user);
    for (;;) {
      const int j = pick_(rng);
      if (!std::binary_search(row.begin(), row.end(), j)) return j;
    }
  }

 private:
  const InteractionSet& interactions_;
  std::uniform_int_distribution<int> pick_;
};

}  // namespace

TripletBatch sample_triplets(const InteractionSet& interactions, std::size_t n,
                             std::uint64_t seed) {
  if (interactions.num_positives() == 0) {
    throw ValidationError("cannot sample triplets without positives");
  }
  NegativeSampler negatives(interactions);
  std::vector<Pair> usable;
  for (const Pair& pr : interactions.pairs()) {
    if (!negatives.saturated(pr.user)) usable.push_back(pr);
  }
  if (usable.empty()) {
    throw ValidationError("every user has shared every item; no negatives");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
  TripletBatch batch;
  batch.triplets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Pair& pr = usable[pick(rng)];
    Triplet t;
    t.user = pr.user;
    t.pos = pr.item;
    t.neg = negatives.draw(pr.user, rng);
    batch.triplets.push_back(t);
  }
  return batch;
}

TrainConfig TrainConfig::defaults_for(Backbone backbone) {
  TrainConfig c;
  if (backbone == Backbone::kNeural) {
    c.learning_rate = 1e-2;
    c.l2_lambda = 1e-3;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be nonnegative");
  }
  if (!(l2_lambda >= 0.0)) throw ConfigError("l2_lambda must be nonnegative");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
    throw ConfigError("rmsprop_decay must lie in (0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) {
    throw ConfigError("rmsprop_epsilon must be positive");
  }
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    throw ConfigError("dropout_keep must lie in (0, 1]");
  }
  if (!(init_stddev > 0.0)) throw ConfigError("init_stddev must be positive");
}

TrainResult train(Backbone backbone, const InteractionSet& interactions,
                  const PropensitySource& propensity,
                  const TrainConfig& config) {
  config.validate();
  if (interactions.num_positives() == 0) {
    throw ValidationError("training set has no positive interactions");
  }

  const auto* table = std::get_if<PropensityTable>(&propensity);
  const auto* neural_src = std::get_if<NeuralPropensitySource>(&propensity);
  if (table && table->num_items() != interactions.num_items()) {
    throw ValidationError("propensity table covers " +
                          std::to_string(table->num_items()) +
                          " items, interactions have " +
                          std::to_string(interactions.num_items()));
  }
  if (table && table->kind() == PropensityKind::kPerPair &&
      table->num_users() != interactions.num_users()) {
    throw ValidationError("per-pair propensity table user count mismatch");
  }
  std::optional<NeuralPropensityModel> prop_model;
  if (neural_src) {
    if (static_cast<std::size_t>(neural_src->item_features.rows()) !=
            interactions.num_items() ||
        static_cast<std::size_t>(neural_src->item_features.cols()) !=
            neural_src->model.dims()) {
      throw ValidationError("content features do not match the item set");
    }
    prop_model = neural_src->model;
  }
  const bool joint =
      prop_model && prop_model->mode() == NeuralPropensityMode::kJoint;

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.model = FactorModel::gaussian(
      backbone, interactions.num_users(), interactions.num_items(),
      static_cast<std::size_t>(config.embedding_dim), config.init_stddev,
      mix_seed(config.seed, 0x1717));
  FactorModel& model = result.model;

  NegativeSampler negatives(interactions);
  std::vector<Pair> positives;
  for (const Pair& pr : interactions.pairs()) {
    if (!negatives.saturated(pr.user)) positives.push_back(pr);
  }
  if (positives.empty()) {
    throw ValidationError("every user has shared every item; no negatives");
  }

  ModelParameters sq_avg = model.params().zeros_like();
  Vector prop_w_avg;
  double prop_b_avg = 0.0;
  if (joint) prop_w_avg = Vector::Zero(prop_model->dims());

  auto theta_of = [&](int user, int item) -> double {
    if (table) return table->at(user, item);
    if (prop_model) {
      return prop_model->clamped(
          {neural_src->item_features.row(item).data(), prop_model->dims()});
    }
    return 1.0;
  };

  auto rmsprop = [&](Eigen::Map<Vector> param, Eigen::Map<Vector> avg,
                     const Eigen::Ref<const Vector>& g) {
    avg = config.rmsprop_decay * avg +
          (1.0 - config.rmsprop_decay) * g.cwiseProduct(g);
    param.array() -= config.learning_rate * g.array() /
                     (avg.array() + config.rmsprop_epsilon).sqrt();
  };

  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  TripletBatch batch;
  std::vector<double> d_theta_pos, d_theta_neg;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(positives.begin(), positives.end(), rng);
    CompensatedSum epoch_sum;
    int batches = 0;
    for (std::size_t start = 0; start < positives.size(); start += bs) {
      const std::size_t stop = std::min(positives.size(), start + bs);
      batch.triplets.clear();
      for (std::size_t k = start; k < stop; ++k) {
        Triplet t;
        t.user = positives[k].user;
        t.pos = positives[k].item;
        t.neg = negatives.draw(t.user, rng);
        t.theta_pos = theta_of(t.user, t.pos);
        t.theta_neg = theta_of(t.user, t.neg);
        batch.triplets.push_back(t);
      }

      ModelParameters grad = model.params().zeros_like();
      const double data_loss = accumulate_batch(
          model, batch, config.clamp_nonnegative, &grad, &rng,
          config.dropout_keep, joint ? &d_theta_pos : nullptr,
          joint ? &d_theta_neg : nullptr);
      const double loss =
          data_loss +
          config.l2_lambda * regularizer(model, batch, config.regularization);
      if (!std::isfinite(loss) || !grad.all_finite()) {
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch));
      }
      add_regularizer_gradient(model, config.l2_lambda, batch,
                               config.regularization, grad);
      {
        auto& p = model.mutable_params();
        auto flat = [](auto& m) { return Eigen::Map<Vector>(m.data(), m.size()); };
        rmsprop(flat(p.user_emb), flat(sq_avg.user_emb), flat(grad.user_emb));
        rmsprop(flat(p.item_emb), flat(sq_avg.item_emb), flat(grad.item_emb));
        rmsprop(flat(p.hidden_w), flat(sq_avg.hidden_w), flat(grad.hidden_w));
        rmsprop(flat(p.hidden_b), flat(sq_avg.hidden_b), flat(grad.hidden_b));
        rmsprop(flat(p.out_w), flat(sq_avg.out_w), flat(grad.out_w));
        rmsprop(flat(p.out_b), flat(sq_avg.out_b), flat(grad.out_b));
      }

      if (joint) {
        // theta = clamp(sigmoid(w . c + b)); the clamp has zero slope.
        Vector gw = Vector::Zero(prop_model->dims());
        double gb = 0.0;
        auto push = [&](int item, double d_theta) {
          if (d_theta == 0.0) return;
          const std::span<const double> c(
              neural_src->item_features.row(item).data(), prop_model->dims());
          const double raw = prop_model->raw(c);
          if (raw <= prop_model->floor() || raw >= 1.0) return;
          const double dz = d_theta * raw * (1.0 - raw);
          gw += dz * neural_src->item_features.row(item).transpose();
          gb += dz;
        };
        for (std::size_t t = 0; t < batch.triplets.size(); ++t) {
          push(batch.triplets[t].pos, d_theta_pos[t]);
          push(batch.triplets[t].neg, d_theta_neg[t]);
        }
        Vector w = prop_model->weight();
        double b = prop_model->bias();
        Vector gb_vec = Vector::Constant(1, gb);
        Vector b_vec = Vector::Constant(1, b);
        Vector b_avg = Vector::Constant(1, prop_b_avg);
        rmsprop(Eigen::Map<Vector>(w.data(), w.size()),
                Eigen::Map<Vector>(prop_w_avg.data(), prop_w_avg.size()), gw);
        rmsprop(Eigen::Map<Vector>(b_vec.data(), 1),
                Eigen::Map<Vector>(b_avg.data(), 1), gb_vec);
        prop_b_avg = b_avg[0];
        prop_model->set_parameters(w, b_vec[0]);
      }

      epoch_sum.add(loss);
      ++batches;
    }
    const double mean_loss = epoch_sum.value() / batches;
    if (!std::isfinite(mean_loss) || !model.params().all_finite()) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    result.epoch_loss.push_back(mean_loss);
  }
  if (prop_model) result.propensity_model = prop_model;
  return result;
}

}  // namespace sharecause
