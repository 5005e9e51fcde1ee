#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kglp/dataset.hpp"

namespace kglp {

// ---------------------------------------------------------------------------
// Peers: alternative entities co-occurring in train with the same
// (relation, other-entity) pair.

struct PeerCounts {
  std::int64_t head_peers = 0;  // |{h' : <h', r, t> in train}|
  std::int64_t tail_peers = 0;  // |{t' : <h, r, t'> in train}|
};

struct DirectedPeers {
  std::int64_t source_peers = 0;
  std::int64_t target_peers = 0;
};

PeerCounts count_peers(const Dataset& dataset, const Triple& fact);

// Head prediction ranks the head: the tail is the source, so
// source_peers = tail_peers and target_peers = head_peers; tail
// prediction is the reverse.
DirectedPeers directed_peers(const PeerCounts& peers, Direction direction);

// ---------------------------------------------------------------------------
// Relational paths: walks over training edges, entity-free.  A token is a
// relation traversed forward, or backward with an INV. marker.

using PathToken = std::int32_t;
using RelationalPath = std::vector<PathToken>;

constexpr PathToken path_token(RelationId rel, bool inverse) {
  return static_cast<PathToken>(rel) * 2 + (inverse ? 1 : 0);
}
constexpr RelationId path_token_relation(PathToken t) { return t / 2; }
constexpr bool path_token_inverse(PathToken t) { return (t & 1) != 0; }

std::string path_label(const Dataset& dataset, const RelationalPath& path);  // "a+INV.b"

// All distinct relational paths of 1..max_len training edges from h to t.
// Edges may be walked in either orientation (backward steps emit INV
// tokens); the same edge is never taken twice in a row in opposite
// orientations (no immediate backtracking); `exclude`, when given, is
// banned in both orientations.  Paths are entity-free and deduplicated.
std::vector<RelationalPath> enumerate_relational_paths(const Dataset& dataset, EntityId h,
                                                       EntityId t, int max_len = 3,
                                                       const Triple* exclude = nullptr);

// ---------------------------------------------------------------------------
// RPS: TF-IDF over relational paths.  Every relation is a document whose
// terms are the paths supporting its training facts (each fact's path set
// is computed with that fact excluded, and contributes at most once per
// distinct path).  IDF uses log base 10 over all |R| documents.

class RpsIndex {
 public:
  static RpsIndex build(const Dataset& dataset, int max_len = 3);

  int max_len() const { return max_len_; }
  std::int64_t num_documents() const { return num_relations_; }
  std::int64_t vocabulary_size() const { return static_cast<std::int64_t>(vocab_.size()); }
  bool has_path(const RelationalPath& p) const { return vocab_.count(p) > 0; }

  std::int64_t df(const RelationalPath& p) const;      // documents containing p
  double idf(const RelationalPath& p) const;           // log10(|R| / DF[p])
  double tf(RelationId r, const RelationalPath& p) const;
  double tfidf(RelationId r, const RelationalPath& p) const;

  // Similarity between an ad-hoc query document (a set of paths with
  // uniform TF) and relation r's TF-IDF vector.  The query is treated as
  // an extra document: its IDF is log10((|R|+1) / (DF[p] + 1 if p is a
  // query path)).  Returns 0 when either vector is all-zero.
  double query_similarity(RelationId r, std::span<const RelationalPath> query_paths) const;

  const std::vector<RelationalPath>& paths() const { return path_by_id_; }

 private:
  int max_len_ = 3;
  std::int64_t num_relations_ = 0;
  std::map<RelationalPath, std::int32_t> vocab_;
  std::vector<RelationalPath> path_by_id_;
  std::vector<std::int64_t> df_;
  std::vector<double> idf_;
  struct Doc {
    std::map<std::int32_t, std::int64_t> counts;  // path id -> n_{r_p}
    std::int64_t total = 0;                       // sum of counts
    std::map<std::int32_t, double> tfidf;
    double norm = 0;
  };
  std::vector<Doc> docs_;  // indexed by RelationId
};

inline RpsIndex build_rps_index(const Dataset& dataset, int max_len = 3) {
  return RpsIndex::build(dataset, max_len);
}

// Relational Path Support of one fact: cosine similarity between the
// query document (paths from fact.head to fact.tail) and the TF-IDF
// vector of fact.relation.  Always in [0, 1].
double rps(const RpsIndex& index, const Dataset& dataset, const Triple& fact);

// RPS of every candidate completion <source, rel, e> (tail direction) or
// <e, rel, source> (head direction); plugs into the evaluation engine as
// a scoring function.  Candidates with identical path sets receive
// exactly equal scores.
std::vector<double> rps_score_all(const RpsIndex& index, const Dataset& dataset, EntityId source,
                                  RelationId rel, Direction direction);

// ---------------------------------------------------------------------------
// Relation properties over the training facts of each relation.

enum class RelationProperty { reflexive, irreflexive, symmetric, anti_symmetric, transitive };
inline constexpr RelationProperty kAllRelationProperties[] = {
    RelationProperty::reflexive, RelationProperty::irreflexive, RelationProperty::symmetric,
    RelationProperty::anti_symmetric, RelationProperty::transitive};

std::string_view to_string(RelationProperty p);

struct RelationPropertyRatios {
  double reflexive = 0;        // facts whose head has a self-loop <h,r,h> in train
  double irreflexive = 0;      // facts with h != t and no self-loop <h,r,h> in train
  double symmetric = 0;        // facts whose reverse <t,r,h> is in train
  double anti_symmetric = 0;   // facts with h != t whose reverse is absent
  double transitive = 0;       // composable pairs <h,r,x>,<x,r,t> closed by <h,r,t>;
                               // 0 when no pair is composable
  double ratio(RelationProperty p) const;
};

struct RelationProperties {
  std::vector<RelationPropertyRatios> ratios;  // indexed by RelationId
  double tolerance = 0.5;

  bool granted(RelationId r, RelationProperty p) const {
    return ratios[static_cast<std::size_t>(r)].ratio(p) > tolerance;
  }
  std::vector<RelationProperty> granted_list(RelationId r) const;
};

RelationProperties detect_relation_properties(const Dataset& dataset, double tolerance = 0.5);

// ---------------------------------------------------------------------------
// Bucketed performance reports.

enum class BucketMode { cumulative, disjoint };
BucketMode bucket_mode_from_string(std::string_view s);
std::string_view to_string(BucketMode m);

struct BucketRow {
  double edge = 0;            // cumulative: upper bound; disjoint: left endpoint
  std::int64_t count = 0;
  double coverage_pct = 0;    // 100 * count / total records
  double h1 = 0;              // 0 for empty buckets
  double mrr = 0;
};

// One rank and one feature value per prediction record.  Cumulative mode
// emits one row per edge x aggregating records with feature <= x;
// disjoint mode emits one row per half-open interval [edges[i],
// edges[i+1]).  Edges must be strictly increasing.
std::vector<BucketRow> bucket_report(std::span<const double> ranks,
                                     std::span<const double> features, BucketMode mode,
                                     std::span<const double> edges);

void write_bucket_csv(std::ostream& out, std::span<const BucketRow> rows);

// External per-prediction feature files: head,relation,tail,direction,value.
struct FeatureRow {
  std::string head, relation, tail;
  Direction direction = Direction::head;
  double value = 0;
};

std::vector<FeatureRow> read_feature_csv(std::istream& in, const std::string& source_name);
void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows);

}  // namespace kglp
