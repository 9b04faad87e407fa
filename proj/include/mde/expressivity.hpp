#pragma once

// Fits the translational model to a complete ground truth: every listed fact
// is positive and every other (h, r, t) is negative, then reports whether some
// threshold puts all facts strictly below all non-facts.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mde/data.hpp"
#include "mde/error.hpp"
#include "mde/loss.hpp"
#include "mde/model.hpp"
#include "mde/optim.hpp"

namespace mde {

struct FitOptions {
  std::size_t max_epochs = 2000;
  std::uint64_t seed = 1;
  int p = 2;
  double gamma1 = 1.0;
  double gamma2 = 2.0;
  double lr = 1.0;
  // Upper bound on |E|^2 * |R| (the number of enumerated candidates).
  std::size_t max_candidates = 1'000'000;
  // Required gap between the worst fact and the best non-fact, relative to
  // max(1, |worst fact score|); rules out separations made of rounding noise.
  double min_gap = 1e-6;
};

struct SeparationReport {
  bool separated = false;
  std::size_t epochs = 0;
  std::size_t n_facts = 0;
  std::size_t n_negatives = 0;
  // Worst (highest) fact score and best (lowest) non-fact score.
  double max_fact_score = -std::numeric_limits<double>::infinity();
  double min_negative_score = std::numeric_limits<double>::infinity();
  // Midpoint threshold when separated.
  double threshold = 0.0;
  // See translation_obstructed().
  bool obstructed = false;
};

// True when no translational embedding can separate the ground truth: some
// relation has a directed cycle among its facts (a self-loop counts) and one
// of its reflexive triples (x, r, x) is a non-fact. Around a cycle of length k
// the residuals sum to k * r, so ||r|| <= the largest fact score, while every
// reflexive triple of r scores exactly ||r||.
inline bool translation_obstructed(std::size_t n_entities,
                                   std::size_t n_relations,
                                   std::span<const Triple> facts) {
  std::vector<std::vector<std::vector<EntityId>>> adj(
      n_relations, std::vector<std::vector<EntityId>>(n_entities));
  std::vector<std::size_t> reflexive(n_relations, 0);
  std::unordered_set<Triple, TripleHash> seen;
  for (const Triple& t : facts) {
    if (!seen.insert(t).second) continue;
    adj[t.relation][t.head].push_back(t.tail);
    if (t.head == t.tail) ++reflexive[t.relation];
  }
  for (std::size_t r = 0; r < n_relations; ++r) {
    if (reflexive[r] == n_entities) continue;
    // Iterative three-colour DFS for a back edge.
    std::vector<char> colour(n_entities, 0);
    bool cycle = false;
    for (EntityId s = 0; s < n_entities && !cycle; ++s) {
      if (colour[s]) continue;
      std::vector<std::pair<EntityId, std::size_t>> stack{{s, 0}};
      colour[s] = 1;
      while (!stack.empty() && !cycle) {
        auto& [v, next] = stack.back();
        if (next < adj[r][v].size()) {
          const EntityId w = adj[r][v][next++];
          if (colour[w] == 1) {
            cycle = true;
          } else if (colour[w] == 0) {
            colour[w] = 1;
            stack.push_back({w, 0});
          }
        } else {
          colour[v] = 2;
          stack.pop_back();
        }
      }
    }
    if (cycle) return true;
  }
  return false;
}

namespace detail {

inline SeparationReport measure_separation(const EmbeddingSet<double>& e,
                                           const ScoreConfig& c,
                                           std::span<const Triple> facts,
                                           std::span<const Triple> negatives,
                                           double min_gap) {
  SeparationReport r;
  r.n_facts = facts.size();
  r.n_negatives = negatives.size();
  for (const Triple& t : facts) {
    r.max_fact_score = std::max(r.max_fact_score, score_mde(t, e, c));
  }
  for (const Triple& t : negatives) {
    r.min_negative_score = std::min(r.min_negative_score, score_mde(t, e, c));
  }
  const double gap = min_gap * std::max(1.0, std::abs(r.max_fact_score));
  r.separated = facts.empty() || negatives.empty() ||
                r.min_negative_score - r.max_fact_score > gap;
  if (r.separated && !facts.empty() && !negatives.empty()) {
    r.threshold = 0.5 * (r.max_fact_score + r.min_negative_score);
  }
  return r;
}

}  // namespace detail

inline SeparationReport fit_ground_truth(std::size_t n_entities,
                                         std::size_t n_relations,
                                         const std::vector<Triple>& facts,
                                         std::size_t dim,
                                         const FitOptions& opts = {}) {
  const double candidates =
      double(n_entities) * double(n_entities) * double(n_relations);
  if (candidates > double(opts.max_candidates)) {
    throw ConfigError("ground truth has " +
                      std::to_string(static_cast<std::uint64_t>(candidates)) +
                      " candidate triples, above the cap of " +
                      std::to_string(opts.max_candidates));
  }
  if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
  std::unordered_set<Triple, TripleHash> fact_set(facts.begin(), facts.end());
  for (const Triple& t : fact_set) {
    if (t.head >= n_entities || t.tail >= n_entities ||
        t.relation >= n_relations) {
      throw ConfigError("fact index out of range");
    }
  }
  std::vector<Triple> pos(fact_set.begin(), fact_set.end());
  std::sort(pos.begin(), pos.end());
  std::vector<Triple> neg;
  for (EntityId h = 0; h < n_entities; ++h) {
    for (RelationId r = 0; r < n_relations; ++r) {
      for (EntityId t = 0; t < n_entities; ++t) {
        if (!fact_set.contains({h, r, t})) neg.push_back({h, r, t});
      }
    }
  }

  const ScoreConfig c = ScoreConfig::transe(opts.p);
  LossState s;
  s.gamma1 = opts.gamma1;
  s.gamma2 = opts.gamma2;
  s.xi = 0.0;
  auto e = init_embeddings<double>(n_entities, n_relations, dim, opts.seed,
                                   false);
  SeparationReport rep = detail::measure_separation(e, c, pos, neg, opts.min_gap);
  rep.obstructed = translation_obstructed(n_entities, n_relations, pos);
  if (pos.empty()) return rep;

  AdadeltaState opt;
  opt.lr = opts.lr;
  for (std::size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    auto lg = loss_and_gradient<double>(pos, neg, e, c, s);
    if (lg.loss.total == 0.0) break;
    adadelta_step(opt, lg.grads, e);
    const bool obstructed = rep.obstructed;
    rep = detail::measure_separation(e, c, pos, neg, opts.min_gap);
    rep.obstructed = obstructed;
    rep.epochs = epoch;
    if (rep.separated) break;
  }
  return rep;
}

}  // namespace mde
