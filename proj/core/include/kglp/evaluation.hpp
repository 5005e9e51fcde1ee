#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "kglp/dataset.hpp"
#include "kglp/models.hpp"

namespace kglp {

// How the rank of a target tied with T competitors at the same score is
// resolved.  With G competitors scoring strictly higher:
//   min      -> G + 1
//   max      -> G + T + 1
//   average  -> G + 1 + T/2
//   random   -> G + 1 + u, u drawn uniformly from {0..T}
//   ordinal  -> G + 1 + |tied competitors with id < target id|
enum class TiePolicy { min, average, random, ordinal, max };

std::string_view to_string(TiePolicy p);
TiePolicy tie_policy_from_string(std::string_view s);
inline constexpr TiePolicy kDefaultTiePolicy = TiePolicy::average;

enum class Scenario { raw, filtered };

struct Metrics {
  double mr = 0.0;
  double mrr = 0.0;
  double h1 = 0.0;
  double h3 = 0.0;
  double h5 = 0.0;
  double h10 = 0.0;
  std::size_t count = 0;
};

// Aggregates MR, MRR and Hits@{1,3,5,10} over a nonempty rank list.
// Fractional ranks participate directly: Hits@K counts rank <= K.
Metrics metrics_from_ranks(std::span<const double> ranks);

// Rank of `target` among the competitor set: every other entity in the raw
// scenario, every other non-filtered entity in the filtered scenario.
// `filtered_out` must be sorted ascending and must not contain the target;
// it is consulted only in the filtered scenario.  Ties compare with exact
// floating equality.  TiePolicy::random requires `rng` and consumes exactly
// one draw.
double compute_rank(std::span<const double> scores, EntityId target,
                    std::span<const EntityId> filtered_out, Scenario scenario, TiePolicy policy,
                    std::mt19937_64* rng = nullptr);

struct PredictionRecord {
  Triple triple;
  Direction direction = Direction::tail;
  double raw_rank = 0.0;
  double filtered_rank = 0.0;
  // Entities scoring strictly above the target in the filtered scenario,
  // ordered by descending score, then ascending id.
  std::vector<EntityId> outranking;
};

struct EvalResult {
  // Two records per evaluated fact: head prediction first, then tail.
  std::vector<PredictionRecord> records;
  Metrics raw;
  Metrics filtered;
};

struct EvalOptions {
  std::uint64_t seed = 0;  // tie-break seed for TiePolicy::random
  int threads = 0;         // 0 = hardware concurrency
};

// Fills `out[e]` with the score of candidate entity e for the given query;
// must be safe to call concurrently.
using ScoreAllFn =
    std::function<void(EntityId source, RelationId rel, Direction direction, std::span<double> out)>;

// Runs head and tail prediction for every fact, scoring each prediction
// once and deriving all requested policies (and both scenarios) from that
// single score vector.  The filtered scenario removes the other known
// completions of the query (never the target itself).  Random tie-breaks
// are seeded per prediction, so results do not depend on thread count, and
// are coupled across scenarios so filtered_rank <= raw_rank holds for every
// policy.
std::map<TiePolicy, EvalResult> evaluate_scorer(const ScoreAllFn& scorer, const Dataset& dataset,
                                                std::span<const Triple> facts,
                                                const std::vector<TiePolicy>& policies,
                                                const EvalOptions& options = {});

// Same, scoring with a trained model over dataset.test().
std::map<TiePolicy, EvalResult> evaluate(const ModelParams& params, const Dataset& dataset,
                                         const std::vector<TiePolicy>& policies,
                                         const EvalOptions& options = {});

// CSV with header head,relation,tail,direction,raw_rank,filtered_rank,outranking.
// Ranks carry full precision; outranking is a ';'-separated label list.
void write_predictions_csv(std::ostream& out, const Dataset& dataset,
                           std::span<const PredictionRecord> records);

// One parsed row of a predictions CSV (labels as written).
struct CsvPrediction {
  std::string head, relation, tail;
  Direction direction = Direction::tail;
  double raw_rank = 0.0;
  double filtered_rank = 0.0;
};
std::vector<CsvPrediction> read_predictions_csv(std::istream& in, const std::string& source_name);

// Evaluates ranking files produced by an external system.  Format:
//   convention=higher            (or lower: smaller scores are better)
//   h<TAB>r<TAB>t<TAB>direction  (one block per prediction)
//   entity<TAB>score             (candidate lines, one per listed entity)
// Entities absent from a block score 0; under convention=lower all listed
// scores are negated before ranking.  Labels must resolve in the dataset
// vocabulary and a block may not list an entity twice.
EvalResult ingest_external_rankings(const std::filesystem::path& path, const Dataset& dataset,
                                    TiePolicy policy, std::uint64_t seed = 0);

}  // namespace kglp
