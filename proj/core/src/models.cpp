#include "kglp/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "kglp/errors.hpp"

namespace kglp {

namespace {

// Shared scoring kernels.  score() and score_all() both funnel into these,
// which is what makes their results bit-identical: a candidate substituted
// into the open slot goes through exactly the same arithmetic.
//
// distmult multiplies (h_i * t_i) * r_i so that swapping head and tail is
// an exact no-op (IEEE multiplication commutes); complex degenerates to the
// same product order when the imaginary parts are zero.

double kernel_transe(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, int d, int norm_p) {
  if (norm_p == 1) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += std::fabs(h[i] + r[i] - t[i]);
    return -acc;
  }
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    double diff = h[i] + r[i] - t[i];
    acc += diff * diff;
  }
  return -std::sqrt(acc);
}

double kernel_distmult(std::span<const double> h, std::span<const double> r,
                       std::span<const double> t, int d) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) acc += h[i] * t[i] * r[i];
  return acc;
}

double kernel_complex(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t, int d) {
  // Re(<h, r, conj(t)>); rows are laid out [re(0..d) | im(0..d)].
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    double hre = h[i], him = h[d + i];
    double rre = r[i], rim = r[d + i];
    double tre = t[i], tim = t[d + i];
    acc += (hre * tre + him * tim) * rre + (hre * tim - him * tre) * rim;
  }
  return acc;
}

double kernel_simple(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, int d) {
  // Mean of the forward bilinear form and the inverse-relation form.
  double fwd = 0.0, inv = 0.0;
  for (int i = 0; i < d; ++i) fwd += h[i] * r[i] * t[d + i];
  for (int i = 0; i < d; ++i) inv += t[i] * r[d + i] * h[d + i];
  return 0.5 * (fwd + inv);
}

double kernel_hole(std::span<const double> h, std::span<const double> r,
                   std::span<const double> t, int d) {
  double acc = 0.0;
  for (int k = 0; k < d; ++k) {
    double corr = 0.0;
    for (int i = 0; i < d; ++i) {
      int j = i + k;
      if (j >= d) j -= d;
      corr += h[i] * t[j];
    }
    acc += r[k] * corr;
  }
  return acc;
}

double kernel_rotate(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, int d) {
  // -L1 norm of h*rot - t in C^d; relation row holds the phase angles.
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    double c = std::cos(r[i]), s = std::sin(r[i]);
    double u = (h[i] * c - h[d + i] * s) - t[i];
    double v = (h[i] * s + h[d + i] * c) - t[d + i];
    acc += std::sqrt(u * u + v * v);
  }
  return -acc;
}

double kernel(ModelKind kind, std::span<const double> h, std::span<const double> r,
              std::span<const double> t, int d, int norm_p) {
  switch (kind) {
    case ModelKind::transe:   return kernel_transe(h, r, t, d, norm_p);
    case ModelKind::distmult: return kernel_distmult(h, r, t, d);
    case ModelKind::complex:  return kernel_complex(h, r, t, d);
    case ModelKind::simple:   return kernel_simple(h, r, t, d);
    case ModelKind::hole:     return kernel_hole(h, r, t, d);
    case ModelKind::rotate:   return kernel_rotate(h, r, t, d);
  }
  throw error("unhandled model kind");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_ids(const ModelParams& p, EntityId h, RelationId r, EntityId t) {
  if (h < 0 || h >= p.num_entities || t < 0 || t >= p.num_entities || r < 0 ||
      r >= p.num_relations) {
    throw error("entity or relation id out of range");
  }
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::transe:   return "transe";
    case ModelKind::distmult: return "distmult";
    case ModelKind::complex:  return "complex";
    case ModelKind::simple:   return "simple";
    case ModelKind::hole:     return "hole";
    case ModelKind::rotate:   return "rotate";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  for (ModelKind k : {ModelKind::transe, ModelKind::distmult, ModelKind::complex,
                      ModelKind::simple, ModelKind::hole, ModelKind::rotate}) {
    if (s == to_string(k)) return k;
  }
  throw input_error("unknown model kind '" + std::string(s) +
                    "' (expected transe|distmult|complex|simple|hole|rotate)");
}

int ModelParams::entity_row_width() const {
  switch (kind) {
    case ModelKind::complex:
    case ModelKind::simple:
    case ModelKind::rotate:
      return 2 * dim;
    default:
      return dim;
  }
}

int ModelParams::relation_row_width() const {
  switch (kind) {
    case ModelKind::complex:
    case ModelKind::simple:
      return 2 * dim;
    default:
      return dim;  // rotate stores d phases
  }
}

std::span<const double> ModelParams::entity_row(EntityId e) const {
  const int w = entity_row_width();
  return {entity_store.data() + static_cast<std::size_t>(e) * w, static_cast<std::size_t>(w)};
}

std::span<const double> ModelParams::relation_row(RelationId r) const {
  const int w = relation_row_width();
  return {relation_store.data() + static_cast<std::size_t>(r) * w, static_cast<std::size_t>(w)};
}

std::span<double> ModelParams::entity_row(EntityId e) {
  const int w = entity_row_width();
  return {entity_store.data() + static_cast<std::size_t>(e) * w, static_cast<std::size_t>(w)};
}

std::span<double> ModelParams::relation_row(RelationId r) {
  const int w = relation_row_width();
  return {relation_store.data() + static_cast<std::size_t>(r) * w, static_cast<std::size_t>(w)};
}

ModelParams init_params(ModelKind kind, std::int64_t num_entities, std::int64_t num_relations,
                        int dim, std::uint64_t seed, int norm_p) {
  if (num_entities <= 0 || num_relations <= 0) {
    throw error("init_params: entity and relation counts must be positive");
  }
  if (dim <= 0) throw error("init_params: dimension must be positive");
  if (norm_p != 1 && norm_p != 2) throw error("init_params: norm_p must be 1 or 2");

  ModelParams p;
  p.kind = kind;
  p.dim = dim;
  p.norm_p = norm_p;
  p.seed = seed;
  p.num_entities = num_entities;
  p.num_relations = num_relations;
  p.entity_store.resize(static_cast<std::size_t>(num_entities) * p.entity_row_width());
  p.relation_store.resize(static_cast<std::size_t>(num_relations) * p.relation_row_width());

  std::mt19937_64 rng(seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> uni(-bound, bound);
  for (double& v : p.entity_store) v = uni(rng);
  if (kind == ModelKind::rotate) {
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    for (double& v : p.relation_store) v = phase(rng);
  } else {
    for (double& v : p.relation_store) v = uni(rng);
  }
  return p;
}

double score(const ModelParams& p, EntityId head, RelationId rel, EntityId tail) {
  check_ids(p, head, rel, tail);
  double s = kernel(p.kind, p.entity_row(head), p.relation_row(rel), p.entity_row(tail), p.dim,
                    p.norm_p);
  if (!std::isfinite(s)) {
    throw error("non-finite score for triple (" + std::to_string(head) + ", " +
                std::to_string(rel) + ", " + std::to_string(tail) + ")");
  }
  return s;
}

void score_all(const ModelParams& p, EntityId source, RelationId rel, Direction direction,
               std::span<double> out) {
  check_ids(p, source, rel, source);
  if (std::cmp_not_equal(out.size(), p.num_entities)) {
    throw error("score_all: output span must have one slot per entity");
  }
  const auto src = p.entity_row(source);
  const auto r = p.relation_row(rel);
  for (EntityId e = 0; e < p.num_entities; ++e) {
    const auto cand = p.entity_row(e);
    out[static_cast<std::size_t>(e)] =
        direction == Direction::tail ? kernel(p.kind, src, r, cand, p.dim, p.norm_p)
                                     : kernel(p.kind, cand, r, src, p.dim, p.norm_p);
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw error("non-finite score in score_all");
  }
}

std::vector<double> score_all(const ModelParams& p, EntityId source, RelationId rel,
                              Direction direction) {
  std::vector<double> out(static_cast<std::size_t>(p.num_entities));
  score_all(p, source, rel, direction, out);
  return out;
}

std::vector<double> circular_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw error("circular_correlation: inputs must have equal nonzero length");
  }
  const int d = static_cast<int>(a.size());
  std::vector<double> out(a.size(), 0.0);
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      int j = i + k;
      if (j >= d) j -= d;
      acc += a[i] * b[j];
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

void score_backward(const ModelParams& p, EntityId head, RelationId rel, EntityId tail,
                    ScoreGradients& g) {
  check_ids(p, head, rel, tail);
  const int d = p.dim;
  const auto h = p.entity_row(head);
  const auto r = p.relation_row(rel);
  const auto t = p.entity_row(tail);
  g.head.assign(static_cast<std::size_t>(p.entity_row_width()), 0.0);
  g.relation.assign(static_cast<std::size_t>(p.relation_row_width()), 0.0);
  g.tail.assign(static_cast<std::size_t>(p.entity_row_width()), 0.0);

  switch (p.kind) {
    case ModelKind::transe: {
      if (p.norm_p == 1) {
        for (int i = 0; i < d; ++i) {
          double s = sign(h[i] + r[i] - t[i]);
          g.head[i] = -s;
          g.relation[i] = -s;
          g.tail[i] = s;
        }
      } else {
        double norm = 0.0;
        for (int i = 0; i < d; ++i) {
          double diff = h[i] + r[i] - t[i];
          norm += diff * diff;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
          for (int i = 0; i < d; ++i) {
            double diff = (h[i] + r[i] - t[i]) / norm;
            g.head[i] = -diff;
            g.relation[i] = -diff;
            g.tail[i] = diff;
          }
        }
      }
      break;
    }
    case ModelKind::distmult: {
      for (int i = 0; i < d; ++i) {
        g.head[i] = r[i] * t[i];
        g.relation[i] = h[i] * t[i];
        g.tail[i] = h[i] * r[i];
      }
      break;
    }
    case ModelKind::complex: {
      for (int i = 0; i < d; ++i) {
        double hre = h[i], him = h[d + i];
        double rre = r[i], rim = r[d + i];
        double tre = t[i], tim = t[d + i];
        g.head[i] = rre * tre + rim * tim;
        g.head[d + i] = rre * tim - rim * tre;
        g.relation[i] = hre * tre + him * tim;
        g.relation[d + i] = hre * tim - him * tre;
        g.tail[i] = hre * rre - him * rim;
        g.tail[d + i] = hre * rim + him * rre;
      }
      break;
    }
    case ModelKind::simple: {
      for (int i = 0; i < d; ++i) {
        g.head[i] = 0.5 * r[i] * t[d + i];          // d(fwd)/d(h_h)
        g.head[d + i] = 0.5 * t[i] * r[d + i];      // d(inv)/d(h_t)
        g.relation[i] = 0.5 * h[i] * t[d + i];
        g.relation[d + i] = 0.5 * t[i] * h[d + i];
        g.tail[i] = 0.5 * r[d + i] * h[d + i];      // d(inv)/d(t_h)
        g.tail[d + i] = 0.5 * h[i] * r[i];          // d(fwd)/d(t_t)
      }
      break;
    }
    case ModelKind::hole: {
      for (int k = 0; k < d; ++k) {
        double corr = 0.0;
        for (int i = 0; i < d; ++i) {
          int j = i + k;
          if (j >= d) j -= d;
          corr += h[i] * t[j];
        }
        g.relation[k] = corr;
      }
      for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) {
          int j = i + k;
          if (j >= d) j -= d;
          acc += r[k] * t[j];
        }
        g.head[i] = acc;
      }
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) {
          int i = j - k;
          if (i < 0) i += d;
          acc += r[k] * h[i];
        }
        g.tail[j] = acc;
      }
      break;
    }
    case ModelKind::rotate: {
      for (int i = 0; i < d; ++i) {
        double c = std::cos(r[i]), s = std::sin(r[i]);
        double hre = h[i], him = h[d + i];
        double u = (hre * c - him * s) - t[i];
        double v = (hre * s + him * c) - t[d + i];
        double m = std::sqrt(u * u + v * v);
        if (m == 0.0) continue;  // subgradient at the kink
        g.head[i] = -(u * c + v * s) / m;
        g.head[d + i] = -(v * c - u * s) / m;
        g.tail[i] = u / m;
        g.tail[d + i] = v / m;
        g.relation[i] = -(u * (-hre * s - him * c) + v * (hre * c - him * s)) / m;
      }
      break;
    }
  }
}

void save_model(const ModelParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open model file for writing: " + path.string());
  out << to_string(p.kind) << ' ' << p.dim << ' ' << p.dim << ' ' << p.num_entities << ' '
      << p.num_relations << ' ' << p.norm_p << ' ' << p.seed << '\n';

  char buf[64];
  auto write_rows = [&](const std::vector<double>& store, std::int64_t rows, int width) {
    for (std::int64_t row = 0; row < rows; ++row) {
      for (int i = 0; i < width; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", store[static_cast<std::size_t>(row) * width + i]);
        out << buf << (i + 1 == width ? '\n' : ' ');
      }
    }
  };
  write_rows(p.entity_store, p.num_entities, p.entity_row_width());
  write_rows(p.relation_store, p.num_relations, p.relation_row_width());
  if (!out) throw error("failed writing model file: " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open model file: " + path.string());

  std::string kind_name;
  int d_e = 0, d_r = 0, norm_p = 0;
  std::int64_t ne = 0, nr = 0;
  std::uint64_t seed = 0;
  if (!(in >> kind_name >> d_e >> d_r >> ne >> nr >> norm_p >> seed)) {
    throw input_error("malformed model header in " + path.string());
  }
  ModelKind kind = model_kind_from_string(kind_name);
  if (d_e != d_r || d_e <= 0) {
    throw input_error("unsupported dimensions in model header of " + path.string());
  }
  if (ne <= 0 || nr <= 0 || (norm_p != 1 && norm_p != 2)) {
    throw input_error("invalid model header in " + path.string());
  }

  ModelParams p;
  p.kind = kind;
  p.dim = d_e;
  p.norm_p = norm_p;
  p.seed = seed;
  p.num_entities = ne;
  p.num_relations = nr;
  p.entity_store.resize(static_cast<std::size_t>(ne) * p.entity_row_width());
  p.relation_store.resize(static_cast<std::size_t>(nr) * p.relation_row_width());
  for (double& v : p.entity_store) {
    if (!(in >> v)) throw input_error("model file truncated or malformed: " + path.string());
  }
  for (double& v : p.relation_store) {
    if (!(in >> v)) throw input_error("model file truncated or malformed: " + path.string());
  }
  for (double v : p.entity_store) {
    if (!std::isfinite(v)) throw input_error("non-finite value in model file: " + path.string());
  }
  for (double v : p.relation_store) {
    if (!std::isfinite(v)) throw input_error("non-finite value in model file: " + path.string());
  }
  return p;
}

}  // namespace kglp
