#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kglp {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

// Which side of a triple a prediction (or a candidate set) targets.
enum class Direction { head, tail };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

// A triple as read from disk, before vocabulary ids are assigned.
struct LabeledTriple {
  std::string head;
  std::string relation;
  std::string tail;
};

// Reads a UTF-8 TSV file of `head<TAB>relation<TAB>tail` lines.
// Empty lines are skipped, a trailing "\r" is tolerated, and any other
// deviation (wrong field count, empty field) raises input_error with the
// 1-based line number.  An empty file yields an empty list.
std::vector<LabeledTriple> load_triples(const std::filesystem::path& path);
std::vector<LabeledTriple> parse_triples(std::istream& in, const std::string& source_name);

// Immutable container for the three splits plus lookup indices.
//
// Vocabulary ids are assigned by first appearance while scanning train,
// then valid, then test, visiting head before tail within a triple, so two
// builds from identical files assign identical ids.  Exact duplicates
// within one split are collapsed; the same triple appearing in two
// different splits is an error (splits must stay disjoint).  Entities or
// relations that only occur in valid/test are legal.
class Dataset {
 public:
  static Dataset build(const std::vector<LabeledTriple>& train,
                       const std::vector<LabeledTriple>& valid,
                       const std::vector<LabeledTriple>& test);

  const std::vector<std::string>& entities() const { return entity_labels_; }
  const std::vector<std::string>& relations() const { return relation_labels_; }
  std::int64_t num_entities() const { return static_cast<std::int64_t>(entity_labels_.size()); }
  std::int64_t num_relations() const { return static_cast<std::int64_t>(relation_labels_.size()); }

  const std::string& entity_label(EntityId e) const { return entity_labels_.at(static_cast<std::size_t>(e)); }
  const std::string& relation_label(RelationId r) const { return relation_labels_.at(static_cast<std::size_t>(r)); }
  // Returns -1 when the label is unknown.
  EntityId entity_id(std::string_view label) const;
  RelationId relation_id(std::string_view label) const;

  const std::vector<Triple>& train() const { return train_; }
  const std::vector<Triple>& valid() const { return valid_; }
  const std::vector<Triple>& test() const { return test_; }

  // Lookup indices; each returns a sorted, duplicate-free id list (empty
  // when the pair was never seen).  known_* cover the union of all three
  // splits, train_* only the training split.
  std::span<const EntityId> known_tails(EntityId head, RelationId rel) const;
  std::span<const EntityId> known_heads(RelationId rel, EntityId tail) const;
  std::span<const EntityId> train_tails(EntityId head, RelationId rel) const;
  std::span<const EntityId> train_heads(RelationId rel, EntityId tail) const;

  bool in_train(const Triple& t) const;

  // Entities that complete the query into a triple present anywhere in the
  // dataset: candidates for `direction == tail` are the known tails of
  // (source, rel), for `direction == head` the known heads of (rel, source).
  // Used to build the filtered evaluation scenario.
  std::span<const EntityId> filter_candidates(EntityId source, RelationId rel,
                                              Direction direction) const;

  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;
  Dataset(Dataset&&) = default;
  Dataset& operator=(Dataset&&) = default;

 private:
  Dataset() = default;

  using PairIndex = std::unordered_map<std::uint64_t, std::vector<EntityId>>;

  std::vector<std::string> entity_labels_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::vector<Triple> train_, valid_, test_;
  PairIndex known_tails_, known_heads_, train_tails_, train_heads_;
  std::unordered_set<Triple, TripleHash> train_membership_;
};

// Loads `train.txt`, `valid.txt`, `test.txt` from a directory and builds
// the dataset.  Missing directory or files raise input_error.
Dataset load_dataset_dir(const std::filesystem::path& dir);

}  // namespace kglp
