#include "kglp/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "kglp/errors.hpp"

namespace kglp {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename T>
T parse_number(const std::string& value, const std::string& where) {
  std::istringstream ss(value);
  T out{};
  ss >> out;
  if (ss.fail() || !(ss >> std::ws).eof()) {
    throw input_error(where + ": malformed numeric value '" + value + "'");
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd:     return "sgd";
    case OptimizerKind::adagrad: return "adagrad";
    case OptimizerKind::adam:    return "adam";
  }
  return "?";
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::margin:           return "margin";
    case LossKind::logistic:         return "logistic";
    case LossKind::self_adversarial: return "self_adversarial";
  }
  return "?";
}

std::string_view to_string(SamplingKind k) {
  switch (k) {
    case SamplingKind::uniform:   return "uniform";
    case SamplingKind::bernoulli: return "bernoulli";
  }
  return "?";
}

std::string_view to_string(RegKind k) {
  switch (k) {
    case RegKind::none: return "none";
    case RegKind::l2:   return "l2";
    case RegKind::n3:   return "n3";
  }
  return "?";
}

OptimizerKind optimizer_kind_from_string(std::string_view s) {
  for (auto k : {OptimizerKind::sgd, OptimizerKind::adagrad, OptimizerKind::adam}) {
    if (s == to_string(k)) return k;
  }
  throw input_error("unknown optimizer '" + std::string(s) + "' (expected sgd|adagrad|adam)");
}

LossKind loss_kind_from_string(std::string_view s) {
  for (auto k : {LossKind::margin, LossKind::logistic, LossKind::self_adversarial}) {
    if (s == to_string(k)) return k;
  }
  throw input_error("unknown loss '" + std::string(s) +
                    "' (expected margin|logistic|self_adversarial)");
}

SamplingKind sampling_kind_from_string(std::string_view s) {
  for (auto k : {SamplingKind::uniform, SamplingKind::bernoulli}) {
    if (s == to_string(k)) return k;
  }
  throw input_error("unknown sampling scheme '" + std::string(s) +
                    "' (expected uniform|bernoulli)");
}

RegKind reg_kind_from_string(std::string_view s) {
  for (auto k : {RegKind::none, RegKind::l2, RegKind::n3}) {
    if (s == to_string(k)) return k;
  }
  throw input_error("unknown regularization '" + std::string(s) + "' (expected none|l2|n3)");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw input_error("epochs must be >= 0");
  if (batch_size <= 0) throw input_error("batch_size must be positive");
  if (!(learning_rate > 0)) throw input_error("learning_rate must be positive");
  if (negatives <= 0) throw input_error("negatives must be positive");
  if (dim <= 0) throw input_error("dim must be positive");
  if (norm_p != 1 && norm_p != 2) throw input_error("norm_p must be 1 or 2");
  if (loss == LossKind::margin && !(margin > 0)) throw input_error("margin must be positive");
  if (loss == LossKind::self_adversarial && !(adv_temperature > 0)) {
    throw input_error("adv_temperature must be positive");
  }
  if (regularization != RegKind::none && !(reg_lambda > 0)) {
    throw input_error("reg_lambda must be positive when regularization is enabled");
  }
}

TrainConfig parse_train_config(std::istream& in, const std::string& source_name) {
  TrainConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw input_error(where + ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) throw input_error(where + ": expected key=value");

    if (key == "epochs") {
      cfg.epochs = parse_number<std::int64_t>(value, where);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_number<std::int64_t>(value, where);
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_number<double>(value, where);
    } else if (key == "optimizer") {
      cfg.optimizer = optimizer_kind_from_string(value);
    } else if (key == "loss") {
      cfg.loss = loss_kind_from_string(value);
    } else if (key == "margin") {
      cfg.margin = parse_number<double>(value, where);
    } else if (key == "adv_temperature") {
      cfg.adv_temperature = parse_number<double>(value, where);
    } else if (key == "negatives") {
      cfg.negatives = parse_number<std::int64_t>(value, where);
    } else if (key == "sampling") {
      cfg.sampling = sampling_kind_from_string(value);
    } else if (key == "regularization") {
      cfg.regularization = reg_kind_from_string(value);
    } else if (key == "reg_lambda") {
      cfg.reg_lambda = parse_number<double>(value, where);
    } else if (key == "dim") {
      cfg.dim = parse_number<std::int64_t>(value, where);
    } else if (key == "norm_p") {
      cfg.norm_p = parse_number<int>(value, where);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, where);
    } else {
      throw input_error(where + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open config file: " + path.string());
  return parse_train_config(in, path.string());
}

BernoulliStats bernoulli_stats(const Dataset& dataset) {
  struct Acc {
    std::int64_t facts = 0;
    std::unordered_set<EntityId> heads, tails;
  };
  std::unordered_map<RelationId, Acc> acc;
  for (const Triple& t : dataset.train()) {
    Acc& a = acc[t.relation];
    ++a.facts;
    a.heads.insert(t.head);
    a.tails.insert(t.tail);
  }
  BernoulliStats stats;
  for (const auto& [rel, a] : acc) {
    BernoulliStats::Entry e;
    e.tph = static_cast<double>(a.facts) / static_cast<double>(a.heads.size());
    e.hpt = static_cast<double>(a.facts) / static_cast<double>(a.tails.size());
    stats.by_relation.emplace(rel, e);
  }
  return stats;
}

Triple sample_negative(const Triple& positive, const Dataset& dataset, SamplingKind sampling,
                       const BernoulliStats* stats, std::mt19937_64& rng) {
  double head_prob = 0.5;
  if (sampling == SamplingKind::bernoulli) {
    if (stats == nullptr) throw error("bernoulli sampling requires relation statistics");
    auto it = stats->by_relation.find(positive.relation);
    if (it == stats->by_relation.end()) {
      throw error("bernoulli sampling: no statistics for relation " +
                  std::string(dataset.relation_label(positive.relation)));
    }
    head_prob = it->second.head_probability();
  }
  const EntityId n = static_cast<EntityId>(dataset.num_entities());
  if (n < 2) throw error("negative sampling needs at least two entities");
  const bool corrupt_head = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < head_prob;
  const EntityId original = corrupt_head ? positive.head : positive.tail;

  Triple candidate = positive;
  for (int attempt = 0; attempt <= 100; ++attempt) {
    // uniform over entities other than the one replaced
    EntityId e = std::uniform_int_distribution<EntityId>(0, n - 2)(rng);
    if (e >= original) ++e;
    (corrupt_head ? candidate.head : candidate.tail) = e;
    if (!dataset.in_train(candidate)) break;
  }
  return candidate;
}

std::vector<double>& GradientBuffer::entity_row(const ModelParams& params, EntityId e) {
  auto [it, inserted] = rows.try_emplace({0, e});
  if (inserted) it->second.assign(static_cast<std::size_t>(params.entity_row_width()), 0.0);
  return it->second;
}

std::vector<double>& GradientBuffer::relation_row(const ModelParams& params, RelationId r) {
  auto [it, inserted] = rows.try_emplace({1, r});
  if (inserted) it->second.assign(static_cast<std::size_t>(params.relation_row_width()), 0.0);
  return it->second;
}

std::vector<double> self_adversarial_weights(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw error("self_adversarial_weights: empty score list");
  std::vector<double> w(scores.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (double s : scores) hi = std::max(hi, alpha * s);
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w[i] = std::exp(alpha * scores[i] - hi);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

namespace {

// d(loss)/d(phi(triple)) * d(phi)/d(rows), accumulated into the buffer.
void accumulate_score_gradient(const ModelParams& params, const Triple& t, double scale,
                               GradientBuffer& grads) {
  if (scale == 0.0) return;
  ScoreGradients g;
  score_backward(params, t.head, t.relation, t.tail, g);
  auto axpy = [scale](std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += scale * src[i];
  };
  axpy(grads.entity_row(params, t.head), g.head);
  axpy(grads.relation_row(params, t.relation), g.relation);
  axpy(grads.entity_row(params, t.tail), g.tail);  // accumulates when head == tail
}

}  // namespace

double loss_gradients(const ModelParams& params, const Triple& positive,
                      std::span<const Triple> negatives, const TrainConfig& config,
                      GradientBuffer& grads) {
  if (negatives.empty()) throw error("loss_gradients: at least one negative is required");

  const double phi_pos = score(params, positive.head, positive.relation, positive.tail);
  std::vector<double> phi_neg(negatives.size());
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    phi_neg[i] = score(params, negatives[i].head, negatives[i].relation, negatives[i].tail);
  }

  double loss = 0;
  double pos_scale = 0;
  std::vector<double> neg_scale(negatives.size(), 0.0);
  switch (config.loss) {
    case LossKind::margin:
      for (std::size_t i = 0; i < negatives.size(); ++i) {
        const double m = config.margin - phi_pos + phi_neg[i];
        if (m > 0) {
          loss += m;
          pos_scale -= 1.0;
          neg_scale[i] = 1.0;
        }
      }
      break;
    case LossKind::logistic:
      loss = softplus(-phi_pos);
      pos_scale = -sigmoid(-phi_pos);
      for (std::size_t i = 0; i < negatives.size(); ++i) {
        loss += softplus(phi_neg[i]);
        neg_scale[i] = sigmoid(phi_neg[i]);
      }
      break;
    case LossKind::self_adversarial: {
      const double alpha = config.adv_temperature;
      const std::vector<double> w = self_adversarial_weights(phi_neg, alpha);
      loss = softplus(-phi_pos);
      pos_scale = -sigmoid(-phi_pos);
      double weighted = 0;
      std::vector<double> sp(negatives.size());
      for (std::size_t i = 0; i < negatives.size(); ++i) {
        sp[i] = softplus(phi_neg[i]);
        weighted += w[i] * sp[i];
      }
      loss += weighted;
      // the softmax weights depend on phi too:
      // d/dphi_i [sum_j w_j sp_j] = w_i (sigmoid(phi_i) + alpha (sp_i - weighted))
      for (std::size_t i = 0; i < negatives.size(); ++i) {
        neg_scale[i] = w[i] * (sigmoid(phi_neg[i]) + alpha * (sp[i] - weighted));
      }
      break;
    }
  }

  accumulate_score_gradient(params, positive, pos_scale, grads);
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    accumulate_score_gradient(params, negatives[i], neg_scale[i], grads);
  }

  if (config.regularization != RegKind::none) {
    const double lambda = config.reg_lambda;
    auto regularize = [&](std::span<const double> row, std::vector<double>& grad) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        const double x = row[i];
        if (config.regularization == RegKind::l2) {
          loss += lambda * x * x;
          grad[i] += 2.0 * lambda * x;
        } else {  // n3
          const double ax = std::fabs(x);
          loss += lambda * ax * ax * ax;
          grad[i] += 3.0 * lambda * x * ax;
        }
      }
    };
    regularize(params.entity_row(positive.head), grads.entity_row(params, positive.head));
    if (positive.tail != positive.head) {
      regularize(params.entity_row(positive.tail), grads.entity_row(params, positive.tail));
    }
    regularize(params.relation_row(positive.relation),
               grads.relation_row(params, positive.relation));
  }

  if (!std::isfinite(loss)) {
    throw error("non-finite training loss (diverged); lower the learning rate");
  }
  return loss;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, const ModelParams& params)
    : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0)) throw error("optimizer learning rate must be positive");
  if (kind_ != OptimizerKind::sgd) {
    v_[0].assign(params.entity_store.size(), 0.0);
    v_[1].assign(params.relation_store.size(), 0.0);
    if (kind_ == OptimizerKind::adam) {
      m_[0].assign(params.entity_store.size(), 0.0);
      m_[1].assign(params.relation_store.size(), 0.0);
    }
  }
}

void Optimizer::apply(ModelParams& params, const GradientBuffer& grads) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  ++step_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  for (const auto& [key, grad] : grads.rows) {
    auto& store = key.first == 0 ? params.entity_store : params.relation_store;
    const std::size_t base = static_cast<std::size_t>(key.second) * grad.size();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double g = grad[i];
      const std::size_t j = base + i;
      switch (kind_) {
        case OptimizerKind::sgd:
          store[j] -= lr_ * g;
          break;
        case OptimizerKind::adagrad: {
          auto& acc = v_[key.first][j];
          acc += g * g;
          store[j] -= lr_ * g / (std::sqrt(acc) + kEps);
          break;
        }
        case OptimizerKind::adam: {
          auto& m = m_[key.first][j];
          auto& v = v_[key.first][j];
          m = kBeta1 * m + (1.0 - kBeta1) * g;
          v = kBeta2 * v + (1.0 - kBeta2) * g * g;
          store[j] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + kEps);
          break;
        }
      }
    }
  }
}

namespace {

void clamp_entity_row(ModelParams& params, EntityId e) {
  auto row = params.entity_row(e);
  double sq = 0;
  for (double x : row) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > 1.0) {
    for (double& x : row) x /= norm;
  }
}

}  // namespace

TrainResult train(const Dataset& dataset, ModelKind kind, const TrainConfig& config) {
  config.validate();
  TrainResult result;
  result.params = init_params(kind, dataset.num_entities(), dataset.num_relations(),
                              static_cast<int>(config.dim), config.seed, config.norm_p);
  if (config.epochs == 0) return result;
  if (dataset.train().empty()) {
    throw input_error("cannot train: the training split is empty");
  }
  if (dataset.num_entities() < 2) {
    throw input_error("cannot train: negative sampling needs at least two entities");
  }

  ModelParams& params = result.params;
  if (kind == ModelKind::transe) {
    for (EntityId e = 0; e < params.num_entities; ++e) clamp_entity_row(params, e);
  }

  BernoulliStats stats;
  if (config.sampling == SamplingKind::bernoulli) stats = bernoulli_stats(dataset);
  const BernoulliStats* stats_ptr =
      config.sampling == SamplingKind::bernoulli ? &stats : nullptr;

  std::mt19937_64 rng(config.seed);
  Optimizer optimizer(config.optimizer, config.learning_rate, params);
  const std::span<const Triple> facts = dataset.train();
  std::vector<std::size_t> order(facts.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Triple> negatives(static_cast<std::size_t>(config.negatives));
  GradientBuffer grads;

  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      grads.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const Triple& pos = facts[order[k]];
        for (auto& neg : negatives) {
          neg = sample_negative(pos, dataset, config.sampling, stats_ptr, rng);
        }
        epoch_loss += loss_gradients(params, pos, negatives, config, grads);
      }
      optimizer.apply(params, grads);
      if (kind == ModelKind::transe) {
        for (const auto& [key, grad] : grads.rows) {
          if (key.first == 0) clamp_entity_row(params, static_cast<EntityId>(key.second));
        }
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(facts.size()));
  }
  return result;
}

}  // namespace kglp
