#include "kglp/evaluation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include "kglp/errors.hpp"

namespace kglp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t prediction_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

double rank_from_counts(TiePolicy policy, std::int64_t greater, std::int64_t ties,
                        std::int64_t ordinal_below, std::int64_t random_below) {
  switch (policy) {
    case TiePolicy::min:     return static_cast<double>(greater + 1);
    case TiePolicy::max:     return static_cast<double>(greater + ties + 1);
    case TiePolicy::average: return static_cast<double>(greater) + 1.0 + static_cast<double>(ties) * 0.5;
    case TiePolicy::ordinal: return static_cast<double>(greater + 1 + ordinal_below);
    case TiePolicy::random:  return static_cast<double>(greater + 1 + random_below);
  }
  throw error("unhandled tie policy");
}

// Everything one prediction needs to produce a rank under any policy and
// either scenario.  Random tie-breaks assign every raw-tied entity (target
// included) a key from one seeded stream; counting key-below-target over
// the raw tie set or its filtered subset yields uniform draws that are
// coupled, so the filtered random rank never exceeds the raw one.
struct PredictionCounts {
  std::int64_t g_raw = 0, t_raw = 0, o_raw = 0, u_raw = 0;
  std::int64_t g_filt = 0, t_filt = 0, o_filt = 0, u_filt = 0;
  std::vector<EntityId> outranking;
};

PredictionCounts count_prediction(std::span<const double> scores, EntityId target,
                                  std::span<const EntityId> filtered_sorted, bool need_random,
                                  std::uint64_t key_seed) {
  PredictionCounts pc;
  const double ts = scores[static_cast<std::size_t>(target)];
  const EntityId n = static_cast<EntityId>(scores.size());
  std::vector<EntityId> tied;  // raw-tied competitors, ascending by id

  for (EntityId e = 0; e < n; ++e) {
    if (e == target) continue;
    const double s = scores[static_cast<std::size_t>(e)];
    const bool filtered = std::ranges::binary_search(filtered_sorted, e);
    if (s > ts) {
      ++pc.g_raw;
      if (!filtered) {
        ++pc.g_filt;
        pc.outranking.push_back(e);
      }
    } else if (s == ts) {
      ++pc.t_raw;
      if (e < target) ++pc.o_raw;
      tied.push_back(e);
      if (!filtered) {
        ++pc.t_filt;
        if (e < target) ++pc.o_filt;
      }
    }
  }

  if (need_random && !tied.empty()) {
    std::mt19937_64 rng(key_seed);
    std::vector<std::pair<EntityId, std::uint64_t>> keys;
    keys.reserve(tied.size());
    std::size_t i = 0;
    for (; i < tied.size() && tied[i] < target; ++i) keys.emplace_back(tied[i], rng());
    const std::uint64_t target_key = rng();
    for (; i < tied.size(); ++i) keys.emplace_back(tied[i], rng());
    for (const auto& [e, key] : keys) {
      if (key < target_key) {
        ++pc.u_raw;
        if (!std::ranges::binary_search(filtered_sorted, e)) ++pc.u_filt;
      }
    }
  }

  std::ranges::sort(pc.outranking, [&scores](EntityId a, EntityId b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  return pc;
}

// Minimal work-sharing parallel loop; rethrows the first worker exception.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string format_rank(double rank) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", rank);
  return buf;
}

}  // namespace

std::string_view to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::min:     return "min";
    case TiePolicy::average: return "average";
    case TiePolicy::random:  return "random";
    case TiePolicy::ordinal: return "ordinal";
    case TiePolicy::max:     return "max";
  }
  return "?";
}

TiePolicy tie_policy_from_string(std::string_view s) {
  for (TiePolicy p : {TiePolicy::min, TiePolicy::average, TiePolicy::random, TiePolicy::ordinal,
                      TiePolicy::max}) {
    if (s == to_string(p)) return p;
  }
  throw input_error("unknown tie policy '" + std::string(s) +
                    "' (expected min|average|random|ordinal|max)");
}

Metrics metrics_from_ranks(std::span<const double> ranks) {
  if (ranks.empty()) throw error("metrics_from_ranks: empty rank list");
  Metrics m;
  m.count = ranks.size();
  double mr = 0, mrr = 0, h1 = 0, h3 = 0, h5 = 0, h10 = 0;
  for (double q : ranks) {
    if (!std::isfinite(q) || q < 1.0) throw error("metrics_from_ranks: rank below 1");
    mr += q;
    mrr += 1.0 / q;
    if (q <= 1.0) ++h1;
    if (q <= 3.0) ++h3;
    if (q <= 5.0) ++h5;
    if (q <= 10.0) ++h10;
  }
  const double n = static_cast<double>(m.count);
  m.mr = mr / n;
  m.mrr = mrr / n;
  m.h1 = h1 / n;
  m.h3 = h3 / n;
  m.h5 = h5 / n;
  m.h10 = h10 / n;
  return m;
}

double compute_rank(std::span<const double> scores, EntityId target,
                    std::span<const EntityId> filtered_out, Scenario scenario, TiePolicy policy,
                    std::mt19937_64* rng) {
  if (scores.empty() || target < 0 || std::cmp_greater_equal(target, scores.size())) {
    throw error("compute_rank: target out of range");
  }
  if (std::ranges::binary_search(filtered_out, target)) {
    throw error("compute_rank: target must not appear in filtered_out");
  }
  if (policy == TiePolicy::random && rng == nullptr) {
    throw error("compute_rank: random tie policy needs an rng");
  }

  const double ts = scores[static_cast<std::size_t>(target)];
  std::int64_t greater = 0, ties = 0, ordinal_below = 0;
  const EntityId n = static_cast<EntityId>(scores.size());
  for (EntityId e = 0; e < n; ++e) {
    if (e == target) continue;
    if (scenario == Scenario::filtered && std::ranges::binary_search(filtered_out, e)) continue;
    const double s = scores[static_cast<std::size_t>(e)];
    if (s > ts) {
      ++greater;
    } else if (s == ts) {
      ++ties;
      if (e < target) ++ordinal_below;
    }
  }
  std::int64_t random_below = 0;
  if (policy == TiePolicy::random) {
    random_below = std::uniform_int_distribution<std::int64_t>(0, ties)(*rng);
  }
  return rank_from_counts(policy, greater, ties, ordinal_below, random_below);
}

std::map<TiePolicy, EvalResult> evaluate_scorer(const ScoreAllFn& scorer, const Dataset& dataset,
                                                std::span<const Triple> facts,
                                                const std::vector<TiePolicy>& policies,
                                                const EvalOptions& options) {
  if (policies.empty()) throw error("evaluate: at least one tie policy is required");
  const std::int64_t n_entities = dataset.num_entities();
  if (n_entities == 0) throw error("evaluate: empty entity vocabulary");
  const bool need_random = std::ranges::find(policies, TiePolicy::random) != policies.end();
  const std::size_t n_preds = facts.size() * 2;

  std::vector<PredictionCounts> counts(n_preds);
  parallel_for(n_preds, options.threads, [&](std::size_t idx) {
    const Triple& fact = facts[idx / 2];
    const Direction dir = idx % 2 == 0 ? Direction::head : Direction::tail;
    const EntityId source = dir == Direction::head ? fact.tail : fact.head;
    const EntityId target = dir == Direction::head ? fact.head : fact.tail;

    std::vector<double> scores(static_cast<std::size_t>(n_entities));
    scorer(source, fact.relation, dir, scores);

    auto cands = dataset.filter_candidates(source, fact.relation, dir);
    std::vector<EntityId> filtered;
    filtered.reserve(cands.size());
    for (EntityId e : cands) {
      if (e != target) filtered.push_back(e);  // stays sorted
    }
    counts[idx] =
        count_prediction(scores, target, filtered, need_random, prediction_seed(options.seed, idx));
  });

  std::map<TiePolicy, EvalResult> results;
  for (TiePolicy policy : policies) {
    EvalResult res;
    res.records.resize(n_preds);
    std::vector<double> raw_ranks(n_preds), filt_ranks(n_preds);
    for (std::size_t idx = 0; idx < n_preds; ++idx) {
      const PredictionCounts& pc = counts[idx];
      PredictionRecord& rec = res.records[idx];
      rec.triple = facts[idx / 2];
      rec.direction = idx % 2 == 0 ? Direction::head : Direction::tail;
      rec.raw_rank = rank_from_counts(policy, pc.g_raw, pc.t_raw, pc.o_raw, pc.u_raw);
      rec.filtered_rank = rank_from_counts(policy, pc.g_filt, pc.t_filt, pc.o_filt, pc.u_filt);
      rec.outranking = pc.outranking;
      raw_ranks[idx] = rec.raw_rank;
      filt_ranks[idx] = rec.filtered_rank;
    }
    if (n_preds > 0) {
      res.raw = metrics_from_ranks(raw_ranks);
      res.filtered = metrics_from_ranks(filt_ranks);
    }
    results.emplace(policy, std::move(res));
  }
  return results;
}

std::map<TiePolicy, EvalResult> evaluate(const ModelParams& params, const Dataset& dataset,
                                         const std::vector<TiePolicy>& policies,
                                         const EvalOptions& options) {
  if (params.num_entities != dataset.num_entities() ||
      params.num_relations != dataset.num_relations()) {
    throw input_error("vocabulary mismatch: model has " + std::to_string(params.num_entities) +
                      " entities / " + std::to_string(params.num_relations) +
                      " relations, dataset has " + std::to_string(dataset.num_entities()) +
                      " / " + std::to_string(dataset.num_relations()));
  }
  ScoreAllFn scorer = [&params](EntityId source, RelationId rel, Direction dir,
                                std::span<double> out) {
    score_all(params, source, rel, dir, out);
  };
  return evaluate_scorer(scorer, dataset, dataset.test(), policies, options);
}

void write_predictions_csv(std::ostream& out, const Dataset& dataset,
                           std::span<const PredictionRecord> records) {
  out << "head,relation,tail,direction,raw_rank,filtered_rank,outranking\n";
  for (const PredictionRecord& rec : records) {
    out << dataset.entity_label(rec.triple.head) << ','
        << dataset.relation_label(rec.triple.relation) << ','
        << dataset.entity_label(rec.triple.tail) << ',' << to_string(rec.direction) << ','
        << format_rank(rec.raw_rank) << ',' << format_rank(rec.filtered_rank) << ',';
    for (std::size_t i = 0; i < rec.outranking.size(); ++i) {
      if (i > 0) out << ';';
      out << dataset.entity_label(rec.outranking[i]);
    }
    out << '\n';
  }
  if (!out) throw error("failed writing predictions CSV");
}

std::vector<CsvPrediction> read_predictions_csv(std::istream& in, const std::string& source_name) {
  std::vector<CsvPrediction> rows;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (!line.starts_with("head,relation,tail,direction,raw_rank,filtered_rank")) {
        throw input_error(source_name + ":1: unrecognized predictions CSV header");
      }
      saw_header = true;
      continue;
    }
    // Split the six leading fields; the remainder is the outranking list.
    std::array<std::string, 6> fields;
    std::size_t pos = 0;
    for (int f = 0; f < 6; ++f) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos && f < 5) {
        throw input_error(source_name + ":" + std::to_string(line_no) + ": too few fields");
      }
      fields[static_cast<std::size_t>(f)] =
          line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? line.size() : comma + 1;
    }
    CsvPrediction row;
    row.head = fields[0];
    row.relation = fields[1];
    row.tail = fields[2];
    row.direction = direction_from_string(fields[3]);
    try {
      row.raw_rank = std::stod(fields[4]);
      row.filtered_rank = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw input_error(source_name + ":" + std::to_string(line_no) + ": malformed rank");
    }
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw input_error(source_name + ": missing predictions CSV header");
  return rows;
}

EvalResult ingest_external_rankings(const std::filesystem::path& path, const Dataset& dataset,
                                    TiePolicy policy, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open external ranking file: " + path.string());
  const std::string name = path.string();

  struct Block {
    Triple triple;
    Direction direction;
    std::vector<double> scores;
    std::vector<char> listed;
  };
  const std::int64_t n_entities = dataset.num_entities();

  bool lower_is_better = false;
  bool saw_convention = false;
  std::vector<Block> blocks;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& msg) -> input_error {
    return input_error(name + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (!saw_convention) {
      if (line == "convention=higher") {
        lower_is_better = false;
      } else if (line == "convention=lower") {
        lower_is_better = true;
      } else {
        throw fail("expected 'convention=higher' or 'convention=lower'");
      }
      saw_convention = true;
      continue;
    }

    const auto tabs = std::ranges::count(line, '\t');
    if (tabs == 3) {
      std::istringstream ls(line);
      std::string h, r, t, d;
      std::getline(ls, h, '\t');
      std::getline(ls, r, '\t');
      std::getline(ls, t, '\t');
      std::getline(ls, d, '\t');
      EntityId hid = dataset.entity_id(h), tid = dataset.entity_id(t);
      RelationId rid = dataset.relation_id(r);
      if (hid < 0) throw fail("unknown entity '" + h + "'");
      if (tid < 0) throw fail("unknown entity '" + t + "'");
      if (rid < 0) throw fail("unknown relation '" + r + "'");
      Block b;
      b.triple = Triple{hid, rid, tid};
      b.direction = direction_from_string(d);
      b.scores.assign(static_cast<std::size_t>(n_entities), 0.0);
      b.listed.assign(static_cast<std::size_t>(n_entities), 0);
      blocks.push_back(std::move(b));
    } else if (tabs == 1) {
      if (blocks.empty()) throw fail("candidate line before any prediction block");
      auto tab = line.find('\t');
      std::string label = line.substr(0, tab);
      EntityId id = dataset.entity_id(label);
      if (id < 0) throw fail("unknown entity '" + label + "'");
      double s = 0;
      try {
        s = std::stod(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw fail("malformed score");
      }
      if (!std::isfinite(s)) throw fail("non-finite score");
      Block& b = blocks.back();
      if (b.listed[static_cast<std::size_t>(id)]) {
        throw fail("entity '" + label + "' listed twice in one prediction");
      }
      b.listed[static_cast<std::size_t>(id)] = 1;
      b.scores[static_cast<std::size_t>(id)] = lower_is_better ? -s : s;
    } else {
      throw fail("expected a 4-field prediction header or a 2-field candidate line");
    }
  }
  if (!saw_convention) throw input_error(name + ": missing convention header");

  EvalResult res;
  res.records.resize(blocks.size());
  std::vector<double> raw_ranks(blocks.size()), filt_ranks(blocks.size());
  const bool need_random = policy == TiePolicy::random;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    const EntityId source = b.direction == Direction::head ? b.triple.tail : b.triple.head;
    const EntityId target = b.direction == Direction::head ? b.triple.head : b.triple.tail;
    auto cands = dataset.filter_candidates(source, b.triple.relation, b.direction);
    std::vector<EntityId> filtered;
    filtered.reserve(cands.size());
    for (EntityId e : cands) {
      if (e != target) filtered.push_back(e);
    }
    PredictionCounts pc =
        count_prediction(b.scores, target, filtered, need_random, prediction_seed(seed, i));
    PredictionRecord& rec = res.records[i];
    rec.triple = b.triple;
    rec.direction = b.direction;
    rec.raw_rank = rank_from_counts(policy, pc.g_raw, pc.t_raw, pc.o_raw, pc.u_raw);
    rec.filtered_rank = rank_from_counts(policy, pc.g_filt, pc.t_filt, pc.o_filt, pc.u_filt);
    rec.outranking = std::move(pc.outranking);
    raw_ranks[i] = rec.raw_rank;
    filt_ranks[i] = rec.filtered_rank;
  }
  if (!blocks.empty()) {
    res.raw = metrics_from_ranks(raw_ranks);
    res.filtered = metrics_from_ranks(filt_ranks);
  }
  return res;
}

}  // namespace kglp
