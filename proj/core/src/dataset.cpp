#include "kglp/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "kglp/errors.hpp"

namespace kglp {

namespace {

// Packs an ordered id pair into one index key.
std::uint64_t pack(std::int32_t a, std::int32_t b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::span<const EntityId> lookup(
    const std::unordered_map<std::uint64_t, std::vector<EntityId>>& index,
    std::uint64_t key) {
  auto it = index.find(key);
  if (it == index.end()) return {};
  return it->second;
}

void sort_unique_values(std::unordered_map<std::uint64_t, std::vector<EntityId>>& index) {
  for (auto& [key, ids] : index) {
    std::ranges::sort(ids);
    ids.erase(std::ranges::unique(ids).begin(), ids.end());
  }
}

}  // namespace

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  // FNV-1a over the three ids.
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t v : {static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.head)),
                          static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.relation)),
                          static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.tail))}) {
    h ^= v;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

std::string_view to_string(Direction d) {
  return d == Direction::head ? "head" : "tail";
}

Direction direction_from_string(std::string_view s) {
  if (s == "head") return Direction::head;
  if (s == "tail") return Direction::tail;
  throw input_error("unknown direction '" + std::string(s) + "' (expected 'head' or 'tail')");
}

std::vector<LabeledTriple> parse_triples(std::istream& in, const std::string& source_name) {
  std::vector<LabeledTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    auto first = line.find('\t');
    auto second = first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
    auto third = second == std::string::npos ? std::string::npos : line.find('\t', second + 1);
    if (first == std::string::npos || second == std::string::npos || third != std::string::npos) {
      throw input_error(source_name + ":" + std::to_string(line_no) +
                        ": expected exactly three tab-separated fields");
    }
    LabeledTriple t{line.substr(0, first), line.substr(first + 1, second - first - 1),
                    line.substr(second + 1)};
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      throw input_error(source_name + ":" + std::to_string(line_no) + ": empty field");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<LabeledTriple> load_triples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open triple file: " + path.string());
  return parse_triples(in, path.string());
}

EntityId Dataset::entity_id(std::string_view label) const {
  auto it = entity_ids_.find(std::string(label));
  return it == entity_ids_.end() ? EntityId{-1} : it->second;
}

RelationId Dataset::relation_id(std::string_view label) const {
  auto it = relation_ids_.find(std::string(label));
  return it == relation_ids_.end() ? RelationId{-1} : it->second;
}

Dataset Dataset::build(const std::vector<LabeledTriple>& train,
                       const std::vector<LabeledTriple>& valid,
                       const std::vector<LabeledTriple>& test) {
  Dataset ds;

  auto intern_entity = [&ds](const std::string& label) -> EntityId {
    auto [it, inserted] =
        ds.entity_ids_.try_emplace(label, static_cast<EntityId>(ds.entity_labels_.size()));
    if (inserted) ds.entity_labels_.push_back(label);
    return it->second;
  };
  auto intern_relation = [&ds](const std::string& label) -> RelationId {
    auto [it, inserted] =
        ds.relation_ids_.try_emplace(label, static_cast<RelationId>(ds.relation_labels_.size()));
    if (inserted) ds.relation_labels_.push_back(label);
    return it->second;
  };

  // Maps each distinct triple to the split that first contributed it, so a
  // reappearance in a *different* split can be reported.
  std::unordered_map<Triple, int, TripleHash> origin;
  const char* split_names[3] = {"train", "valid", "test"};

  auto ingest = [&](const std::vector<LabeledTriple>& in, int split,
                    std::vector<Triple>& out) {
    out.reserve(in.size());
    for (const LabeledTriple& lt : in) {
      Triple t{intern_entity(lt.head), intern_relation(lt.relation), intern_entity(lt.tail)};
      auto [it, inserted] = origin.try_emplace(t, split);
      if (!inserted) {
        if (it->second != split) {
          throw input_error("triple <" + lt.head + ", " + lt.relation + ", " + lt.tail +
                            "> appears in both " + split_names[it->second] + " and " +
                            split_names[split] + "; splits must be disjoint");
        }
        continue;  // duplicate within the same split: collapse
      }
      out.push_back(t);
    }
  };

  ingest(train, 0, ds.train_);
  ingest(valid, 1, ds.valid_);
  ingest(test, 2, ds.test_);

  for (const Triple& t : ds.train_) {
    ds.train_tails_[pack(t.head, t.relation)].push_back(t.tail);
    ds.train_heads_[pack(t.relation, t.tail)].push_back(t.head);
    ds.train_membership_.insert(t);
  }
  for (const std::vector<Triple>* split : {&ds.train_, &ds.valid_, &ds.test_}) {
    for (const Triple& t : *split) {
      ds.known_tails_[pack(t.head, t.relation)].push_back(t.tail);
      ds.known_heads_[pack(t.relation, t.tail)].push_back(t.head);
    }
  }
  sort_unique_values(ds.known_tails_);
  sort_unique_values(ds.known_heads_);
  sort_unique_values(ds.train_tails_);
  sort_unique_values(ds.train_heads_);
  return ds;
}

std::span<const EntityId> Dataset::known_tails(EntityId head, RelationId rel) const {
  return lookup(known_tails_, pack(head, rel));
}

std::span<const EntityId> Dataset::known_heads(RelationId rel, EntityId tail) const {
  return lookup(known_heads_, pack(rel, tail));
}

std::span<const EntityId> Dataset::train_tails(EntityId head, RelationId rel) const {
  return lookup(train_tails_, pack(head, rel));
}

std::span<const EntityId> Dataset::train_heads(RelationId rel, EntityId tail) const {
  return lookup(train_heads_, pack(rel, tail));
}

bool Dataset::in_train(const Triple& t) const {
  return train_membership_.contains(t);
}

std::span<const EntityId> Dataset::filter_candidates(EntityId source, RelationId rel,
                                                     Direction direction) const {
  return direction == Direction::tail ? known_tails(source, rel) : known_heads(rel, source);
}

Dataset load_dataset_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw input_error("dataset directory not found: " + dir.string());
  }
  auto train = load_triples(dir / "train.txt");
  auto valid = load_triples(dir / "valid.txt");
  auto test = load_triples(dir / "test.txt");
  return Dataset::build(train, valid, test);
}

}  // namespace kglp
