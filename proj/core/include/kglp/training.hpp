#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kglp/dataset.hpp"
#include "kglp/models.hpp"

namespace kglp {

enum class OptimizerKind { sgd, adagrad, adam };
enum class LossKind { margin, logistic, self_adversarial };
enum class SamplingKind { uniform, bernoulli };
enum class RegKind { none, l2, n3 };

std::string_view to_string(OptimizerKind k);
std::string_view to_string(LossKind k);
std::string_view to_string(SamplingKind k);
std::string_view to_string(RegKind k);
OptimizerKind optimizer_kind_from_string(std::string_view s);
LossKind loss_kind_from_string(std::string_view s);
SamplingKind sampling_kind_from_string(std::string_view s);
RegKind reg_kind_from_string(std::string_view s);

// Training hyperparameters.  Loaded from a key=value file ('#' comments and
// blank lines ignored); every key also has a CLI flag override.  Keys match
// the field names below.
struct TrainConfig {
  std::int64_t epochs = 100;      // 0 is allowed: returns the initialization untouched
  std::int64_t batch_size = 128;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  LossKind loss = LossKind::margin;
  double margin = 1.0;            // gamma, used by loss=margin
  double adv_temperature = 1.0;   // alpha, used by loss=self_adversarial
  std::int64_t negatives = 1;     // negative samples per positive
  SamplingKind sampling = SamplingKind::uniform;
  RegKind regularization = RegKind::none;
  double reg_lambda = 0.0;        // required > 0 when regularization != none
  std::int64_t dim = 100;
  int norm_p = 2;                 // TransE distance norm, 1 or 2
  std::uint64_t seed = 42;

  void validate() const;  // throws input_error on any out-of-range field
};

TrainConfig parse_train_config(std::istream& in, const std::string& source_name);
TrainConfig load_train_config(const std::filesystem::path& path);

// Mean tails-per-head / heads-per-tail, per relation appearing in train.
// tph(r) = (#train facts with r) / (#distinct heads appearing with r);
// hpt analogous.  Relations absent from train have no entry.
struct BernoulliStats {
  struct Entry {
    double tph = 0;
    double hpt = 0;
    double head_probability() const { return tph / (tph + hpt); }
  };
  std::unordered_map<RelationId, Entry> by_relation;
};

BernoulliStats bernoulli_stats(const Dataset& dataset);

// Corrupts exactly one side of `positive` with a uniformly drawn entity
// different from the one replaced.  Uniform sampling picks the side with
// probability 1/2; Bernoulli corrupts the head with probability
// tph/(tph+hpt) (stats required, and must contain the relation).  The draw
// is repeated (at most 100 times) while the corrupted triple is a training
// fact; the last candidate is then accepted regardless.
Triple sample_negative(const Triple& positive, const Dataset& dataset, SamplingKind sampling,
                       const BernoulliStats* stats, std::mt19937_64& rng);

// Sparse per-row gradient accumulator.  Keys are (store, row id) with
// store 0 = entity, 1 = relation; rows are zero-initialized to the row
// width on first touch.
struct GradientBuffer {
  std::map<std::pair<int, std::int64_t>, std::vector<double>> rows;

  std::vector<double>& entity_row(const ModelParams& params, EntityId e);
  std::vector<double>& relation_row(const ModelParams& params, RelationId r);
  void clear() { rows.clear(); }
};

// softmax(alpha * scores); weights sum to 1.
std::vector<double> self_adversarial_weights(std::span<const double> scores, double alpha);

// Loss of one positive against its negatives, with d(loss)/d(params)
// accumulated into `grads` (nothing is applied):
//   margin           sum_j max(0, gamma - phi(pos) + phi(neg_j))
//   logistic         softplus(-phi(pos)) + sum_j softplus(phi(neg_j))
//   self_adversarial softplus(-phi(pos)) + sum_j w_j softplus(phi(neg_j)),
//                    w = softmax(alpha * phi(neg)); the weights are a
//                    function of the parameters and are differentiated too.
// Regularization (L2: lambda*sum ||row||^2, N3: lambda*sum |x|^3) is added
// once over the distinct rows of the positive triple.  Throws kglp::error
// if the loss is non-finite.
double loss_gradients(const ModelParams& params, const Triple& positive,
                      std::span<const Triple> negatives, const TrainConfig& config,
                      GradientBuffer& grads);

// Applies accumulated gradients to the stores.  Adam uses beta1=0.9,
// beta2=0.999, eps=1e-8 with one global timestep per apply() call; Adagrad
// keeps a per-coordinate squared-gradient accumulator.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, const ModelParams& params);
  void apply(ModelParams& params, const GradientBuffer& grads);

 private:
  OptimizerKind kind_;
  double lr_;
  std::int64_t step_ = 0;
  std::vector<double> m_[2];  // first moment (adam); unused otherwise
  std::vector<double> v_[2];  // second moment (adam) / accumulator (adagrad)
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // mean loss per positive, one entry per epoch
};

// Full training loop: init_params, then `epochs` passes over shuffled
// train facts in batches of `batch_size`; per positive, `negatives`
// corruptions; per batch, one optimizer step over the summed gradients.
// TransE entity rows are clamped to L2 norm <= 1 after initialization and
// after every update.  Single-threaded and deterministic given the seed.
TrainResult train(const Dataset& dataset, ModelKind kind, const TrainConfig& config);

}  // namespace kglp
