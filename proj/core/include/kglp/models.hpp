#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "kglp/dataset.hpp"

namespace kglp {

enum class ModelKind { transe, distmult, complex, simple, hole, rotate };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

// Flat embedding stores for one model.
//
// Row layouts (all widths derived from `dim` and the kind):
//   transe, distmult, hole : entity d          | relation d
//   complex                : entity [re|im] 2d | relation [re|im] 2d
//   simple                 : entity [h|t]   2d | relation [fwd|inv] 2d
//   rotate                 : entity [re|im] 2d | relation d phase angles
//
// All score functions return "higher is better".  TransE and RotatE wrap
// a distance in a negation to meet that convention.
struct ModelParams {
  ModelKind kind = ModelKind::transe;
  int dim = 0;     // embedding dimension d (per component for complex kinds)
  int norm_p = 1;  // TransE distance norm, 1 or 2
  std::uint64_t seed = 0;
  std::int64_t num_entities = 0;
  std::int64_t num_relations = 0;
  std::vector<double> entity_store;    // num_entities rows
  std::vector<double> relation_store;  // num_relations rows

  int entity_row_width() const;
  int relation_row_width() const;
  std::span<const double> entity_row(EntityId e) const;
  std::span<const double> relation_row(RelationId r) const;
  std::span<double> entity_row(EntityId e);
  std::span<double> relation_row(RelationId r);
};

// Fresh parameters, i.i.d. uniform on [-6/sqrt(d), +6/sqrt(d)]; RotatE
// relation rows are phases drawn uniform on [-pi, pi] instead.  The draw
// sequence is fixed (entity rows in id order, then relation rows), so a
// given seed always produces the same stores.
ModelParams init_params(ModelKind kind, std::int64_t num_entities, std::int64_t num_relations,
                        int dim, std::uint64_t seed, int norm_p = 1);

// Plausibility score of one triple; raises kglp::error if the result is
// non-finite (signals divergence).
double score(const ModelParams& params, EntityId head, RelationId rel, EntityId tail);

// Scores of every entity substituted into the open slot: out[e] is the
// score of <source, rel, e> for Direction::tail and of <e, rel, source>
// for Direction::head.  Bit-identical to num_entities individual score()
// calls; out.size() must equal num_entities.
void score_all(const ModelParams& params, EntityId source, RelationId rel,
               Direction direction, std::span<double> out);
std::vector<double> score_all(const ModelParams& params, EntityId source, RelationId rel,
                              Direction direction);

// Circular correlation (a star b)_k = sum_i a_i * b_{(i+k) mod d}.
// Direct O(d^2) evaluation; a and b must have equal nonzero length.
std::vector<double> circular_correlation(std::span<const double> a, std::span<const double> b);

// Partial derivatives of score() with respect to the three involved rows.
// Vectors are sized to the corresponding row widths.  When head == tail the
// two entity gradients refer to the same row and must be accumulated by the
// caller.
struct ScoreGradients {
  std::vector<double> head;
  std::vector<double> relation;
  std::vector<double> tail;
};
void score_backward(const ModelParams& params, EntityId head, RelationId rel, EntityId tail,
                    ScoreGradients& out);

// Plain-text persistence.  Header line:
//   kind d_e d_r num_entities num_relations norm_p seed
// (d_e and d_r are the entity/relation embedding dimensions; equal for all
// kinds supported here) followed by one whitespace-separated row per
// entity, then per relation.  Values are written with 17 significant
// digits, so save/load round-trips doubles losslessly.
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace kglp
