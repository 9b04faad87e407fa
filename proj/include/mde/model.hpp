#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mde/data.hpp"
#include "mde/error.hpp"

namespace mde {

// Each distance term owns an independent family of entity and relation
// vectors: term 1 reads family I, term 2 family J, term 3 family K and the
// optional Hadamard term 4 family L.
enum class Family : std::uint8_t { kI = 0, kJ = 1, kK = 2, kL = 3 };
enum class Kind : std::uint8_t { kEntity = 0, kRelation = 1 };

inline constexpr std::size_t kMaxTerms = 4;

inline Family family_of_term(int term) {
  return static_cast<Family>(term - 1);
}

template <std::floating_point Real = float>
class EmbeddingSet {
 public:
  using value_type = Real;

  EmbeddingSet() = default;

  EmbeddingSet(std::size_t n_entities, std::size_t n_relations,
                std::size_t dim, bool term4)
      : n_entities_(n_entities),
        n_relations_(n_relations),
        dim_(dim),
        term4_(term4) {
    if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
    for (std::size_t f = 0; f < num_families(); ++f) {
      entities_[f].assign(n_entities * dim, Real(0));
      relations_[f].assign(n_relations * dim, Real(0));
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t num_entities() const { return n_entities_; }
  std::size_t num_relations() const { return n_relations_; }
  bool has_term4() const { return term4_; }
  std::size_t num_families() const { return term4_ ? 4 : 3; }
  bool has_family(Family f) const {
    return static_cast<std::size_t>(f) < num_families();
  }

  std::span<Real> vec(Kind kind, Family f, std::uint32_t index) {
    return table(kind, f).subspan(std::size_t(index) * dim_, dim_);
  }
  std::span<const Real> vec(Kind kind, Family f, std::uint32_t index) const {
    return table(kind, f).subspan(std::size_t(index) * dim_, dim_);
  }

  std::span<Real> entity(Family f, EntityId e) { return vec(Kind::kEntity, f, e); }
  std::span<const Real> entity(Family f, EntityId e) const {
    return vec(Kind::kEntity, f, e);
  }
  std::span<Real> relation(Family f, RelationId r) {
    return vec(Kind::kRelation, f, r);
  }
  std::span<const Real> relation(Family f, RelationId r) const {
    return vec(Kind::kRelation, f, r);
  }

  // Whole table for one (kind, family), index-major.
  std::span<Real> table(Kind kind, Family f) {
    check_family(f);
    auto& v = kind == Kind::kEntity ? entities_[idx(f)] : relations_[idx(f)];
    return v;
  }
  std::span<const Real> table(Kind kind, Family f) const {
    check_family(f);
    const auto& v =
        kind == Kind::kEntity ? entities_[idx(f)] : relations_[idx(f)];
    return v;
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  static std::size_t idx(Family f) { return static_cast<std::size_t>(f); }
  void check_family(Family f) const {
    if (!has_family(f)) {
      throw ConfigError("term 4 vectors requested but term 4 is disabled");
    }
  }

  std::size_t n_entities_ = 0;
  std::size_t n_relations_ = 0;
  std::size_t dim_ = 0;
  bool term4_ = false;
  std::array<std::vector<Real>, kMaxTerms> entities_;
  std::array<std::vector<Real>, kMaxTerms> relations_;
};

struct ScoreConfig {
  std::array<double, kMaxTerms> weights{0.25, 0.5, 0.25, 0.0};
  double psi = 1.2;
  int p = 1;
  bool term4 = false;

  bool term_enabled(int term) const {
    return weights[term - 1] != 0.0 && (term != 4 || term4);
  }

  // The plain translational model: w = (1, 0, 0, 0), psi = 0.
  static ScoreConfig transe(int p = 1) {
    ScoreConfig c;
    c.weights = {1.0, 0.0, 0.0, 0.0};
    c.psi = 0.0;
    c.p = p;
    return c;
  }

  friend bool operator==(const ScoreConfig&, const ScoreConfig&) = default;
};

inline void validate(const ScoreConfig& c) {
  if (c.p != 1 && c.p != 2) throw ConfigError("norm order p must be 1 or 2");
  bool any = false;
  for (double w : c.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("term weights must be finite and >= 0");
    }
    any = any || w > 0.0;
  }
  if (!any) throw ConfigError("at least one term weight must be positive");
  if (!c.term4 && c.weights[3] != 0.0) {
    throw ConfigError("w4 must be 0 unless term 4 is enabled");
  }
  if (!(c.psi >= 0.0) || !std::isfinite(c.psi)) {
    throw ConfigError("psi must be finite and >= 0");
  }
}

// Components drawn i.i.d. from U[-6/sqrt(d), 6/sqrt(d)], families in order
// I, J, K, (L), entities before relations within each family.
template <std::floating_point Real = float>
EmbeddingSet<Real> init_embeddings(std::size_t n_entities,
                                   std::size_t n_relations, std::size_t dim,
                                   std::uint64_t seed, bool term4) {
  EmbeddingSet<Real> e(n_entities, n_relations, dim, term4);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (std::size_t f = 0; f < e.num_families(); ++f) {
    for (Kind k : {Kind::kEntity, Kind::kRelation}) {
      for (Real& x : e.table(k, static_cast<Family>(f))) {
        x = static_cast<Real>(u(rng));
      }
    }
  }
  return e;
}

template <std::floating_point Real = float>
EmbeddingSet<Real> init_embeddings(const Vocabulary& vocab, std::size_t dim,
                                   std::uint64_t seed, bool term4) {
  return init_embeddings<Real>(vocab.num_entities(), vocab.num_relations(),
                               dim, seed, term4);
}

namespace detail {

inline void check_term(int term) {
  if (term < 1 || term > 4) {
    throw ConfigError("term index must be in 1..4, got " +
                      std::to_string(term));
  }
}

// Residual component c of term `term` given the family-specific vectors.
//   1: h + r - t    2: h + t - r    3: t + r - h    4: h - r*t
template <typename Real>
inline double residual(int term, std::span<const Real> h,
                       std::span<const Real> r, std::span<const Real> t,
                       std::size_t c) {
  const double hc = h[c], rc = r[c], tc = t[c];
  switch (term) {
    case 1: return hc + rc - tc;
    case 2: return hc + tc - rc;
    case 3: return tc + rc - hc;
    default: return hc - rc * tc;
  }
}

}  // namespace detail

// Distance S_m(h, r, t) >= 0 using family m's vectors and the p-norm.
template <typename Real>
double score_term(int term, const Triple& t, const EmbeddingSet<Real>& e,
                  int p) {
  detail::check_term(term);
  const Family f = family_of_term(term);
  auto h = e.entity(f, t.head);
  auto r = e.relation(f, t.relation);
  auto tl = e.entity(f, t.tail);
  double acc = 0.0;
  if (p == 1) {
    for (std::size_t c = 0; c < e.dim(); ++c) {
      acc += std::abs(detail::residual(term, h, r, tl, c));
    }
    return acc;
  }
  for (std::size_t c = 0; c < e.dim(); ++c) {
    double v = detail::residual(term, h, r, tl, c);
    acc += v * v;
  }
  return std::sqrt(acc);
}

// sum_m w_m * S_m - psi. Lower means more plausible.
template <typename Real>
double score_mde(const Triple& t, const EmbeddingSet<Real>& e,
                 const ScoreConfig& c) {
  double s = 0.0;
  for (int m = 1; m <= 4; ++m) {
    if (c.term_enabled(m)) s += c.weights[m - 1] * score_term(m, t, e, c.p);
  }
  return s - c.psi;
}

// Rescales every entity vector (all families) to unit L2 norm.
template <typename Real>
void project_entities_to_unit_norm(EmbeddingSet<Real>& e) {
  for (std::size_t f = 0; f < e.num_families(); ++f) {
    for (EntityId id = 0; id < e.num_entities(); ++id) {
      auto v = e.entity(static_cast<Family>(f), id);
      double n2 = 0.0;
      for (Real x : v) n2 += double(x) * double(x);
      if (n2 == 0.0) continue;
      const double inv = 1.0 / std::sqrt(n2);
      for (Real& x : v) x = static_cast<Real>(x * inv);
    }
  }
}

}  // namespace mde
