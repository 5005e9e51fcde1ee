#include "kglp/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "kglp/errors.hpp"

namespace kglp {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_max_len(int max_len) {
  if (max_len < 1 || max_len > 3) throw error("max_len must be 1, 2, or 3");
}

// Training edges as an undirected multigraph; each edge keeps its id so
// walks can refuse to re-traverse the edge they just used in the opposite
// orientation, and so one edge can be excluded outright.
struct Adjacency {
  struct Arc {
    EntityId to;
    RelationId rel;
    std::int32_t edge_id;
    bool inv;
  };
  std::vector<std::vector<Arc>> adj;

  explicit Adjacency(const Dataset& ds) {
    adj.resize(static_cast<std::size_t>(ds.num_entities()));
    const auto train = ds.train();
    for (std::size_t i = 0; i < train.size(); ++i) {
      const Triple& t = train[i];
      const auto id = static_cast<std::int32_t>(i);
      adj[static_cast<std::size_t>(t.head)].push_back({t.tail, t.relation, id, false});
      adj[static_cast<std::size_t>(t.tail)].push_back({t.head, t.relation, id, true});
    }
  }
};

std::int32_t find_train_edge(const Dataset& ds, const Triple& t) {
  const auto train = ds.train();
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i] == t) return static_cast<std::int32_t>(i);
  }
  return -1;
}

// Depth-first walk of 1..max_len edges from `start`; calls
// sink(endpoint, path) once per visited walk prefix.
template <typename Sink>
void walk_paths(const Adjacency& g, EntityId start, int max_len, std::int32_t exclude_edge,
                Sink&& sink) {
  RelationalPath path;
  auto rec = [&](auto&& self, EntityId node, std::int32_t last_edge, bool last_inv,
                 int depth) -> void {
    for (const Adjacency::Arc& a : g.adj[static_cast<std::size_t>(node)]) {
      if (a.edge_id == exclude_edge) continue;
      if (a.edge_id == last_edge && a.inv != last_inv) continue;  // immediate backtrack
      path.push_back(path_token(a.rel, a.inv));
      sink(a.to, path);
      if (depth + 1 < max_len) self(self, a.to, a.edge_id, a.inv, depth + 1);
      path.pop_back();
    }
  };
  rec(rec, start, -1, false, 0);
}

// Distinct paths from `start` to every endpoint.
std::vector<std::set<RelationalPath>> paths_from(const Dataset& ds, const Adjacency& g,
                                                 EntityId start, int max_len,
                                                 std::int32_t exclude_edge) {
  std::vector<std::set<RelationalPath>> out(static_cast<std::size_t>(ds.num_entities()));
  walk_paths(g, start, max_len, exclude_edge, [&](EntityId endpoint, const RelationalPath& p) {
    out[static_cast<std::size_t>(endpoint)].insert(p);
  });
  return out;
}

void check_entity(const Dataset& ds, EntityId e) {
  if (e < 0 || e >= ds.num_entities()) throw error("entity id out of range");
}

void check_relation(const Dataset& ds, RelationId r) {
  if (r < 0 || r >= ds.num_relations()) throw error("relation id out of range");
}

}  // namespace

PeerCounts count_peers(const Dataset& dataset, const Triple& fact) {
  PeerCounts pc;
  pc.head_peers = static_cast<std::int64_t>(dataset.train_heads(fact.relation, fact.tail).size());
  pc.tail_peers = static_cast<std::int64_t>(dataset.train_tails(fact.head, fact.relation).size());
  return pc;
}

DirectedPeers directed_peers(const PeerCounts& peers, Direction direction) {
  DirectedPeers dp;
  if (direction == Direction::head) {
    dp.source_peers = peers.tail_peers;
    dp.target_peers = peers.head_peers;
  } else {
    dp.source_peers = peers.head_peers;
    dp.target_peers = peers.tail_peers;
  }
  return dp;
}

std::string path_label(const Dataset& dataset, const RelationalPath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) out += '+';
    if (path_token_inverse(path[i])) out += "INV.";
    out += dataset.relation_label(path_token_relation(path[i]));
  }
  return out;
}

std::vector<RelationalPath> enumerate_relational_paths(const Dataset& dataset, EntityId h,
                                                       EntityId t, int max_len,
                                                       const Triple* exclude) {
  check_max_len(max_len);
  check_entity(dataset, h);
  check_entity(dataset, t);
  const std::int32_t excluded = exclude != nullptr ? find_train_edge(dataset, *exclude) : -1;
  Adjacency g(dataset);
  std::set<RelationalPath> found;
  walk_paths(g, h, max_len, excluded, [&](EntityId endpoint, const RelationalPath& p) {
    if (endpoint == t) found.insert(p);
  });
  return {found.begin(), found.end()};
}

RpsIndex RpsIndex::build(const Dataset& dataset, int max_len) {
  check_max_len(max_len);
  RpsIndex idx;
  idx.max_len_ = max_len;
  idx.num_relations_ = dataset.num_relations();
  idx.docs_.resize(static_cast<std::size_t>(idx.num_relations_));

  Adjacency g(dataset);
  const auto train = dataset.train();
  std::vector<std::int64_t> facts_per_relation(static_cast<std::size_t>(idx.num_relations_), 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Triple& fact = train[i];
    ++facts_per_relation[static_cast<std::size_t>(fact.relation)];
    std::set<RelationalPath> support;
    walk_paths(g, fact.head, max_len, static_cast<std::int32_t>(i),
               [&](EntityId endpoint, const RelationalPath& p) {
                 if (endpoint == fact.tail) support.insert(p);
               });
    Doc& doc = idx.docs_[static_cast<std::size_t>(fact.relation)];
    for (const RelationalPath& p : support) {
      auto [it, inserted] =
          idx.vocab_.try_emplace(p, static_cast<std::int32_t>(idx.path_by_id_.size()));
      if (inserted) idx.path_by_id_.push_back(p);
      ++doc.counts[it->second];
      ++doc.total;
    }
  }

  idx.df_.assign(idx.path_by_id_.size(), 0);
  for (const Doc& doc : idx.docs_) {
    for (const auto& [pid, n] : doc.counts) {
      if (n > 0) ++idx.df_[static_cast<std::size_t>(pid)];
    }
  }
  idx.idf_.assign(idx.path_by_id_.size(), 0.0);
  for (std::size_t p = 0; p < idx.df_.size(); ++p) {
    idx.idf_[p] = std::log10(static_cast<double>(idx.num_relations_) /
                             static_cast<double>(idx.df_[p]));
  }

  for (std::size_t r = 0; r < idx.docs_.size(); ++r) {
    Doc& doc = idx.docs_[r];
    double norm2 = 0;
    for (const auto& [pid, n] : doc.counts) {
      if (n > facts_per_relation[r]) {
        throw error("path support exceeds the relation's fact count (index corruption)");
      }
      const double tfidf = (static_cast<double>(n) / static_cast<double>(doc.total)) *
                           idx.idf_[static_cast<std::size_t>(pid)];
      doc.tfidf.emplace(pid, tfidf);
      norm2 += tfidf * tfidf;
    }
    doc.norm = std::sqrt(norm2);
  }
  return idx;
}

std::int64_t RpsIndex::df(const RelationalPath& p) const {
  auto it = vocab_.find(p);
  if (it == vocab_.end()) throw error("unknown relational path");
  return df_[static_cast<std::size_t>(it->second)];
}

double RpsIndex::idf(const RelationalPath& p) const {
  auto it = vocab_.find(p);
  if (it == vocab_.end()) throw error("unknown relational path");
  return idf_[static_cast<std::size_t>(it->second)];
}

double RpsIndex::tf(RelationId r, const RelationalPath& p) const {
  if (r < 0 || r >= num_relations_) throw error("relation id out of range");
  auto it = vocab_.find(p);
  if (it == vocab_.end()) return 0.0;
  const Doc& doc = docs_[static_cast<std::size_t>(r)];
  auto cit = doc.counts.find(it->second);
  if (cit == doc.counts.end() || doc.total == 0) return 0.0;
  return static_cast<double>(cit->second) / static_cast<double>(doc.total);
}

double RpsIndex::tfidf(RelationId r, const RelationalPath& p) const {
  if (r < 0 || r >= num_relations_) throw error("relation id out of range");
  auto it = vocab_.find(p);
  if (it == vocab_.end()) return 0.0;
  const Doc& doc = docs_[static_cast<std::size_t>(r)];
  auto dit = doc.tfidf.find(it->second);
  return dit == doc.tfidf.end() ? 0.0 : dit->second;
}

double RpsIndex::query_similarity(RelationId r,
                                  std::span<const RelationalPath> query_paths) const {
  if (r < 0 || r >= num_relations_) throw error("relation id out of range");
  const Doc& doc = docs_[static_cast<std::size_t>(r)];
  if (doc.norm == 0.0 || query_paths.empty()) return 0.0;

  const double tf_q = 1.0 / static_cast<double>(query_paths.size());
  double dot = 0, qnorm2 = 0;
  for (const RelationalPath& p : query_paths) {
    std::int64_t dfp = 0;
    std::int32_t pid = -1;
    auto it = vocab_.find(p);
    if (it != vocab_.end()) {
      pid = it->second;
      dfp = df_[static_cast<std::size_t>(pid)];
    }
    // the query counts as one extra document that contains p
    const double idf_q = std::log10(static_cast<double>(num_relations_ + 1) /
                                    static_cast<double>(dfp + 1));
    const double q = tf_q * idf_q;
    qnorm2 += q * q;
    if (pid >= 0) {
      auto dit = doc.tfidf.find(pid);
      if (dit != doc.tfidf.end()) dot += q * dit->second;
    }
  }
  if (qnorm2 == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(qnorm2) * doc.norm), 0.0, 1.0);
}

double rps(const RpsIndex& index, const Dataset& dataset, const Triple& fact) {
  check_relation(dataset, fact.relation);
  const auto paths = enumerate_relational_paths(dataset, fact.head, fact.tail, index.max_len());
  return index.query_similarity(fact.relation, paths);
}

std::vector<double> rps_score_all(const RpsIndex& index, const Dataset& dataset, EntityId source,
                                  RelationId rel, Direction direction) {
  check_entity(dataset, source);
  check_relation(dataset, rel);
  std::vector<double> out(static_cast<std::size_t>(dataset.num_entities()), 0.0);
  Adjacency g(dataset);
  auto by_endpoint = paths_from(dataset, g, source, index.max_len(), -1);
  for (std::size_t e = 0; e < by_endpoint.size(); ++e) {
    const auto& found = by_endpoint[e];
    if (found.empty()) continue;
    std::vector<RelationalPath> query;
    if (direction == Direction::tail) {
      query.assign(found.begin(), found.end());
    } else {
      // candidate triple is <e, rel, source>: invert source->e walks into
      // e->source walks (reverse order, flip orientations); re-sort so the
      // similarity sums in the same order as a direct enumeration.
      std::set<RelationalPath> inverted;
      for (const RelationalPath& p : found) {
        RelationalPath q(p.rbegin(), p.rend());
        for (PathToken& tok : q) tok ^= 1;
        inverted.insert(std::move(q));
      }
      query.assign(inverted.begin(), inverted.end());
    }
    out[e] = index.query_similarity(rel, query);
  }
  return out;
}

std::string_view to_string(RelationProperty p) {
  switch (p) {
    case RelationProperty::reflexive:      return "reflexive";
    case RelationProperty::irreflexive:    return "irreflexive";
    case RelationProperty::symmetric:      return "symmetric";
    case RelationProperty::anti_symmetric: return "anti_symmetric";
    case RelationProperty::transitive:     return "transitive";
  }
  return "?";
}

double RelationPropertyRatios::ratio(RelationProperty p) const {
  switch (p) {
    case RelationProperty::reflexive:      return reflexive;
    case RelationProperty::irreflexive:    return irreflexive;
    case RelationProperty::symmetric:      return symmetric;
    case RelationProperty::anti_symmetric: return anti_symmetric;
    case RelationProperty::transitive:     return transitive;
  }
  return 0;
}

std::vector<RelationProperty> RelationProperties::granted_list(RelationId r) const {
  std::vector<RelationProperty> out;
  for (RelationProperty p : kAllRelationProperties) {
    if (granted(r, p)) out.push_back(p);
  }
  return out;
}

RelationProperties detect_relation_properties(const Dataset& dataset, double tolerance) {
  if (!(tolerance >= 0.0 && tolerance <= 1.0)) {
    throw input_error("tolerance must lie in [0, 1]");
  }
  RelationProperties props;
  props.tolerance = tolerance;
  props.ratios.resize(static_cast<std::size_t>(dataset.num_relations()));

  std::vector<std::vector<Triple>> by_relation(static_cast<std::size_t>(dataset.num_relations()));
  for (const Triple& t : dataset.train()) {
    by_relation[static_cast<std::size_t>(t.relation)].push_back(t);
  }

  for (std::size_t r = 0; r < by_relation.size(); ++r) {
    const auto& facts = by_relation[r];
    if (facts.empty()) continue;
    RelationPropertyRatios& q = props.ratios[r];
    const auto rel = static_cast<RelationId>(r);
    std::int64_t refl = 0, irrefl = 0, sym = 0, anti = 0;
    for (const Triple& f : facts) {
      const bool head_loop = dataset.in_train(Triple{f.head, rel, f.head});
      const bool reversed = dataset.in_train(Triple{f.tail, rel, f.head});
      if (head_loop) ++refl;
      if (f.head != f.tail && !head_loop) ++irrefl;
      if (reversed) ++sym;
      if (f.head != f.tail && !reversed) ++anti;
    }
    const double n = static_cast<double>(facts.size());
    q.reflexive = static_cast<double>(refl) / n;
    q.irreflexive = static_cast<double>(irrefl) / n;
    q.symmetric = static_cast<double>(sym) / n;
    q.anti_symmetric = static_cast<double>(anti) / n;

    std::unordered_map<EntityId, std::vector<const Triple*>> by_head;
    for (const Triple& f : facts) by_head[f.head].push_back(&f);
    std::int64_t pairs = 0, closed = 0;
    for (const Triple& f1 : facts) {
      auto it = by_head.find(f1.tail);
      if (it == by_head.end()) continue;
      for (const Triple* f2 : it->second) {
        ++pairs;
        if (dataset.in_train(Triple{f1.head, rel, f2->tail})) ++closed;
      }
    }
    q.transitive = pairs > 0 ? static_cast<double>(closed) / static_cast<double>(pairs) : 0.0;
  }
  return props;
}

std::string_view to_string(BucketMode m) {
  return m == BucketMode::cumulative ? "cumulative" : "disjoint";
}

BucketMode bucket_mode_from_string(std::string_view s) {
  if (s == "cumulative") return BucketMode::cumulative;
  if (s == "disjoint") return BucketMode::disjoint;
  throw input_error("unknown bucket mode '" + std::string(s) +
                    "' (expected cumulative|disjoint)");
}

std::vector<BucketRow> bucket_report(std::span<const double> ranks,
                                     std::span<const double> features, BucketMode mode,
                                     std::span<const double> edges) {
  if (ranks.size() != features.size()) {
    throw error("bucket_report: " + std::to_string(ranks.size()) + " ranks vs " +
                std::to_string(features.size()) + " feature values");
  }
  if (edges.empty()) throw error("bucket_report: at least one edge is required");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i - 1] < edges[i])) throw error("bucket_report: edges must be increasing");
  }
  if (mode == BucketMode::disjoint && edges.size() < 2) {
    throw error("bucket_report: disjoint mode needs at least two edges");
  }

  const std::size_t n_rows = mode == BucketMode::cumulative ? edges.size() : edges.size() - 1;
  std::vector<BucketRow> rows(n_rows);
  const double total = static_cast<double>(ranks.size());
  for (std::size_t b = 0; b < n_rows; ++b) {
    BucketRow& row = rows[b];
    row.edge = edges[b];
    double h1 = 0, mrr = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      const bool inside = mode == BucketMode::cumulative
                              ? features[i] <= edges[b]
                              : features[i] >= edges[b] && features[i] < edges[b + 1];
      if (!inside) continue;
      ++row.count;
      if (ranks[i] <= 1.0) ++h1;
      mrr += 1.0 / ranks[i];
    }
    if (row.count > 0) {
      row.h1 = h1 / static_cast<double>(row.count);
      row.mrr = mrr / static_cast<double>(row.count);
    }
    row.coverage_pct = total > 0 ? 100.0 * static_cast<double>(row.count) / total : 0.0;
  }
  return rows;
}

void write_bucket_csv(std::ostream& out, std::span<const BucketRow> rows) {
  out << "edge,count,coverage_pct,h1,mrr\n";
  for (const BucketRow& r : rows) {
    out << format_double(r.edge) << ',' << r.count << ',' << format_double(r.coverage_pct) << ','
        << format_double(r.h1) << ',' << format_double(r.mrr) << '\n';
  }
  if (!out) throw error("failed writing bucket CSV");
}

std::vector<FeatureRow> read_feature_csv(std::istream& in, const std::string& source_name) {
  std::vector<FeatureRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (!saw_header) {
      if (!line.starts_with("head,relation,tail,direction,value")) {
        throw input_error(source_name + ":1: unrecognized feature CSV header");
      }
      saw_header = true;
      continue;
    }
    std::array<std::string, 5> fields;
    std::size_t pos = 0;
    for (int f = 0; f < 5; ++f) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos && f < 4) throw input_error(where + ": too few fields");
      fields[static_cast<std::size_t>(f)] =
          line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? line.size() : comma + 1;
    }
    FeatureRow row;
    row.head = fields[0];
    row.relation = fields[1];
    row.tail = fields[2];
    if (fields[3] == "head") {
      row.direction = Direction::head;
    } else if (fields[3] == "tail") {
      row.direction = Direction::tail;
    } else {
      throw input_error(where + ": unknown direction '" + fields[3] + "'");
    }
    try {
      std::size_t used = 0;
      row.value = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw input_error(where + ": malformed value '" + fields[4] + "'");
    }
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw input_error(source_name + ": missing feature CSV header");
  return rows;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows) {
  out << "head,relation,tail,direction,value\n";
  for (const FeatureRow& r : rows) {
    out << r.head << ',' << r.relation << ',' << r.tail << ','
        << (r.direction == Direction::head ? "head" : "tail") << ',' << format_double(r.value)
        << '\n';
  }
  if (!out) throw error("failed writing feature CSV");
}

}  // namespace kglp
