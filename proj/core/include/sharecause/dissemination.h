#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "sharecause/common.h"
#include "sharecause/interactions.h"
#include "sharecause/propensity.h"

namespace sharecause {

enum class Backbone { kMf, kNeural };

const char* to_string(Backbone backbone);
Backbone parse_backbone(const std::string& text);

// All trainable blocks. The mf backbone leaves the hidden-layer blocks empty.
// Gradients and optimizer state share this shape.
struct ModelParameters {
  RowMatrix user_emb;  // n_users x d; the sharing-behavior representation
  RowMatrix item_emb;  // n_items x d
  RowMatrix hidden_w;  // h x 2d, applied to [user_emb(u), item_emb(i)]
  Vector hidden_b;     // h
  Vector out_w;        // h
  Vector out_b;        // 1

  ModelParameters zeros_like() const;
  bool all_finite() const;

  // Calls fn(name, lhs_block, rhs_block) for matching blocks of `a` and `b`,
  // both viewed as flat vectors.
  template <typename Fn>
  static void zip_blocks(ModelParameters& a, ModelParameters& b, Fn&& fn);
};

class FactorModel {
 public:
  FactorModel() = default;

  static FactorModel zeros(Backbone backbone, std::size_t num_users,
                           std::size_t num_items, std::size_t dims);
  // Every parameter drawn from N(0, stddev^2); biases start at zero.
  static FactorModel gaussian(Backbone backbone, std::size_t num_users,
                              std::size_t num_items, std::size_t dims,
                              double stddev, std::uint64_t seed);

  Backbone backbone() const { return backbone_; }
  std::size_t num_users() const { return params_.user_emb.rows(); }
  std::size_t num_items() const { return params_.item_emb.rows(); }
  std::size_t dims() const { return params_.user_emb.cols(); }
  // Hidden width of the neural backbone; equals dims().
  std::size_t hidden() const { return params_.hidden_w.rows(); }

  const ModelParameters& params() const { return params_; }
  ModelParameters& mutable_params() { return params_; }

  const RowMatrix& user_embeddings() const { return params_.user_emb; }
  const RowMatrix& item_embeddings() const { return params_.item_emb; }

 private:
  Backbone backbone_ = Backbone::kMf;
  ModelParameters params_;
};

// mf: U_u . V_i. neural: one ReLU hidden layer of width d over the
// concatenation [U_u, V_i] followed by a linear readout. Deterministic
// (dropout is a training-only effect).
double score(const FactorModel& model, int user, int item);

// Scores of every item for one user.
Vector score_all(const FactorModel& model, int user);

// -ln(sigmoid(s)).
double local_loss(double s_uij);

// (y_ui / theta_ui)(1 - y_uj / theta_uj) * local_loss(s_uij); with `clamp`
// the result is max(that, 0).
double weighted_triplet_term(double y_ui, double theta_ui, double y_uj,
                             double theta_uj, double s_uij, bool clamp);

struct Triplet {
  int user = 0;
  int pos = 0;  // observed positive i
  int neg = 0;  // sampled item j
  double y_pos = 1.0;
  double y_neg = 0.0;
  double theta_pos = 1.0;
  double theta_neg = 1.0;

  double ips_weight() const;
};

struct TripletBatch {
  std::vector<Triplet> triplets;
};

// kFull penalizes every row of U and V. kBatch penalizes the rows a batch
// touches: the batch mean of |U_u|^2 + |V_i|^2 + |V_j|^2.
enum class RegularizationScope { kFull, kBatch };

// Mean weighted triplet term plus lambda times the regularizer. With unit
// propensities and lambda = 0 this is the plain BPR objective.
double batch_objective(const FactorModel& model, const TripletBatch& batch,
                       double lambda, bool clamp,
                       RegularizationScope scope = RegularizationScope::kFull);

// Exact gradient of batch_objective.
ModelParameters gradients(const FactorModel& model, const TripletBatch& batch,
                          double lambda, bool clamp,
                          RegularizationScope scope = RegularizationScope::kFull);

// Draws n triplets: (u, i) uniform over positives, j uniform over the items u
// has not shared. Users positive on every item are skipped. Propensities are
// left at 1.
TripletBatch sample_triplets(const InteractionSet& interactions, std::size_t n,
                             std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-3;
  double l2_lambda = 1e-2;
  int epochs = 500;
  int batch_size = 1024;
  int embedding_dim = 64;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double dropout_keep = 0.9;
  double init_stddev = 0.01;
  bool clamp_nonnegative = true;
  // With a batch-mean data loss, kFull shrinks rarely-seen rows toward zero
  // every step; kBatch keeps the penalty proportional to each row's use.
  RegularizationScope regularization = RegularizationScope::kBatch;
  std::uint64_t seed = 0;

  static TrainConfig defaults_for(Backbone backbone);
  void validate() const;
};

struct NeuralPropensitySource {
  NeuralPropensityModel model;
  RowMatrix item_features;
};

// Unweighted baseline, a fixed table, or a content model (fixed unless its
// mode is kJoint).
using PropensitySource =
    std::variant<std::monostate, PropensityTable, NeuralPropensitySource>;

struct TrainResult {
  FactorModel model;
  std::vector<double> epoch_loss;
  std::optional<NeuralPropensityModel> propensity_model;
};

// RMSProp on one-negative-per-positive triplet batches. Throws NumericError
// naming the epoch when the loss stops being finite.
TrainResult train(Backbone backbone, const InteractionSet& interactions,
                  const PropensitySource& propensity,
                  const TrainConfig& config);

struct LoadedModel {
  FactorModel model;
  IndexMap users;
  IndexMap items;
};

// Text format: one header line, id blocks, then one CSV block per parameter.
void save_model(std::ostream& out, const FactorModel& model,
                const IndexMap& users, const IndexMap& items);
LoadedModel load_model(std::istream& in);
void save_loss_trace(std::ostream& out, const std::vector<double>& epoch_loss);

template <typename Fn>
void ModelParameters::zip_blocks(ModelParameters& a, ModelParameters& b,
                                 Fn&& fn) {
  auto flat = [](auto& m) {
    return Eigen::Map<Vector>(m.data(), m.size());
  };
  fn("user_emb", flat(a.user_emb), flat(b.user_emb));
  fn("item_emb", flat(a.item_emb), flat(b.item_emb));
  fn("hidden_w", flat(a.hidden_w), flat(b.hidden_w));
  fn("hidden_b", flat(a.hidden_b), flat(b.hidden_b));
  fn("out_w", flat(a.out_w), flat(b.out_w));
  fn("out_b", flat(a.out_b), flat(b.out_b));
}

}  // namespace sharecause
