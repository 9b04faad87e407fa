#pragma once

// Synthetic knowledge graphs exhibiting a single relational pattern, used to
// check which patterns a scoring function can generalise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "mde/data.hpp"
#include "mde/error.hpp"

namespace mde {

enum class Pattern { kSymmetry, kAntisymmetry, kInversion, kComposition };

inline std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::kSymmetry: return "symmetry";
    case Pattern::kAntisymmetry: return "antisymmetry";
    case Pattern::kInversion: return "inversion";
    case Pattern::kComposition: return "composition";
  }
  return "?";
}

inline Pattern parse_pattern(std::string_view name) {
  for (Pattern p : {Pattern::kSymmetry, Pattern::kAntisymmetry,
                    Pattern::kInversion, Pattern::kComposition}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown pattern '" + std::string(name) + "'");
}

struct PatternSpec {
  std::size_t n_entities = 100;
  Pattern pattern = Pattern::kSymmetry;
  std::size_t n_relations = 1;
  // Fraction of all possible groundings (unordered pairs for the two-entity
  // patterns, ordered chains of distinct entities for composition).
  double density = 0.05;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;
};

// Number of relations consumed by one grounding of each pattern.
inline std::size_t relations_per_group(Pattern p) {
  switch (p) {
    case Pattern::kSymmetry:
    case Pattern::kAntisymmetry: return 1;
    case Pattern::kInversion: return 2;
    case Pattern::kComposition: return 3;
  }
  return 1;
}

// One instantiation of the pattern's rule body. `y`/`z` are unused where the
// rule has fewer variables.
struct Grounding {
  std::uint32_t group = 0;
  EntityId x = 0;
  EntityId y = 0;
  EntityId z = 0;
  bool held_out = false;
};

struct PatternDataset {
  Pattern pattern = Pattern::kSymmetry;
  Vocabulary vocab;
  TripleSet train{Split::kTrain, {}};
  TripleSet holdout{Split::kTest, {}};
  // Antisymmetry only: reversed facts that must rank below the positives.
  TripleSet negatives{Split::kTest, {}};
  std::size_t groundings = 0;
};

inline void validate(const PatternSpec& spec) {
  if (spec.n_entities < 3) {
    throw ConfigError("pattern datasets need at least 3 entities");
  }
  std::size_t need = relations_per_group(spec.pattern);
  if (spec.n_relations < need) {
    throw ConfigError("pattern '" + std::string(to_string(spec.pattern)) +
                      "' needs at least " + std::to_string(need) +
                      " relations, got " + std::to_string(spec.n_relations));
  }
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw ConfigError("density must lie in (0, 1]");
  }
  if (!(spec.holdout_fraction >= 0.0 && spec.holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in [0, 1)");
  }
}

namespace detail {

inline Vocabulary pattern_vocabulary(Pattern p, std::size_t n_entities,
                                     std::size_t groups) {
  Vocabulary v;
  for (std::size_t e = 0; e < n_entities; ++e) {
    v.add_entity("e" + std::to_string(e));
  }
  for (std::size_t g = 0; g < groups; ++g) {
    std::string base;
    switch (p) {
      case Pattern::kSymmetry: v.add_relation("sym" + std::to_string(g)); break;
      case Pattern::kAntisymmetry:
        v.add_relation("asym" + std::to_string(g));
        break;
      case Pattern::kInversion:
        base = "inv" + std::to_string(g);
        v.add_relation(base + "_r1");
        v.add_relation(base + "_r2");
        break;
      case Pattern::kComposition:
        base = "comp" + std::to_string(g);
        v.add_relation(base + "_r1");
        v.add_relation(base + "_r2");
        v.add_relation(base + "_r3");
        break;
    }
  }
  return v;
}

}  // namespace detail

// Expands explicit groundings into train / holdout (/ negative) triples.
//   symmetry:     r(x,y) in train; r(y,x) in holdout if held out, else train
//   antisymmetry: r(x,y) in holdout if held out, else train; r(y,x) negative
//   inversion:    r2(x,y) in train; r1(y,x) in holdout if held out, else train
//   composition:  r2(x,y), r3(y,z) in train; r1(x,z) holdout or train
// Duplicates are dropped and any holdout triple also implied in train is
// removed from the holdout, so the two sets are always disjoint.
inline PatternDataset materialize_pattern(Pattern pattern,
                                          std::size_t n_entities,
                                          std::size_t groups,
                                          const std::vector<Grounding>& gs) {
  PatternDataset d;
  d.pattern = pattern;
  d.vocab = detail::pattern_vocabulary(pattern, n_entities, groups);
  d.groundings = gs.size();
  const auto per = static_cast<RelationId>(relations_per_group(pattern));

  auto& train = d.train.triples;
  auto& hold = d.holdout.triples;
  for (const Grounding& g : gs) {
    if (g.group >= groups || g.x >= n_entities || g.y >= n_entities ||
        g.z >= n_entities) {
      throw ConfigError("grounding out of range");
    }
    const RelationId r1 = g.group * per;
    switch (pattern) {
      case Pattern::kSymmetry:
        train.push_back({g.x, r1, g.y});
        (g.held_out ? hold : train).push_back({g.y, r1, g.x});
        break;
      case Pattern::kAntisymmetry:
        (g.held_out ? hold : train).push_back({g.x, r1, g.y});
        d.negatives.triples.push_back({g.y, r1, g.x});
        break;
      case Pattern::kInversion:
        train.push_back({g.x, r1 + 1, g.y});
        (g.held_out ? hold : train).push_back({g.y, r1, g.x});
        break;
      case Pattern::kComposition:
        train.push_back({g.x, r1 + 1, g.y});
        train.push_back({g.y, r1 + 2, g.z});
        (g.held_out ? hold : train).push_back({g.x, r1, g.z});
        break;
    }
  }
  deduplicate(train);
  deduplicate(hold);
  deduplicate(d.negatives.triples);
  std::unordered_set<Triple, TripleHash> in_train(train.begin(), train.end());
  std::erase_if(hold, [&](const Triple& t) { return in_train.contains(t); });
  return d;
}

// Samples groundings with a seeded generator and materializes them. The same
// spec always produces the same dataset.
inline PatternDataset generate_pattern_kg(const PatternSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_entities;
  const std::size_t groups = spec.n_relations / relations_per_group(spec.pattern);
  const bool chains = spec.pattern == Pattern::kComposition;

  const double possible = chains ? double(n) * double(n - 1) * double(n - 2)
                                 : double(n) * double(n - 1) / 2.0;
  const auto per_group = static_cast<std::size_t>(
      std::max(1.0, std::round(spec.density * possible)));

  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n - 1));
  std::bernoulli_distribution coin(0.5);

  std::vector<Grounding> gs;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<Grounding> local;
    if (spec.density > 0.5) {
      // Dense: enumerate every grounding, then keep a random subset.
      for (EntityId x = 0; x < n; ++x) {
        for (EntityId y = chains ? 0 : x + 1; y < n; ++y) {
          if (y == x) continue;
          if (!chains) {
            local.push_back({static_cast<std::uint32_t>(g), x, y, 0, false});
            continue;
          }
          for (EntityId z = 0; z < n; ++z) {
            if (z == x || z == y) continue;
            local.push_back({static_cast<std::uint32_t>(g), x, y, z, false});
          }
        }
      }
      std::shuffle(local.begin(), local.end(), rng);
      local.resize(std::min(per_group, local.size()));
    } else {
      std::set<std::tuple<EntityId, EntityId, EntityId>> taken;
      while (local.size() < per_group) {
        EntityId x = pick(rng), y = pick(rng), z = chains ? pick(rng) : 0;
        if (x == y || (chains && (z == x || z == y))) continue;
        auto key = chains ? std::tuple{x, y, z}
                          : std::tuple{std::min(x, y), std::max(x, y), 0u};
        if (!taken.insert(key).second) continue;
        local.push_back({static_cast<std::uint32_t>(g), x, y, z, false});
      }
    }
    // Unordered pairs get a random orientation.
    if (!chains) {
      for (Grounding& gr : local) {
        if (gr.x > gr.y) std::swap(gr.x, gr.y);
        if (coin(rng)) std::swap(gr.x, gr.y);
      }
    }
    std::shuffle(local.begin(), local.end(), rng);
    auto n_hold = static_cast<std::size_t>(
        std::floor(spec.holdout_fraction * double(local.size()) + 0.5));
    for (std::size_t i = 0; i < n_hold && i < local.size(); ++i) {
      local[i].held_out = true;
    }
    gs.insert(gs.end(), local.begin(), local.end());
  }
  return materialize_pattern(spec.pattern, n, groups, gs);
}

// Writes train.tsv, holdout.tsv, negatives.tsv (antisymmetry only) and a
// key: value manifest into `dir`.
inline void write_pattern_dataset(const std::filesystem::path& dir,
                                  const PatternSpec& spec,
                                  const PatternDataset& d) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "'");
  save_triples((dir / "train.tsv").string(), d.train, d.vocab);
  save_triples((dir / "holdout.tsv").string(), d.holdout, d.vocab);
  if (spec.pattern == Pattern::kAntisymmetry) {
    save_triples((dir / "negatives.tsv").string(), d.negatives, d.vocab);
  }
  std::ofstream m(dir / "manifest.txt", std::ios::binary);
  if (!m) throw DataError("cannot write manifest in '" + dir.string() + "'");
  m << "pattern: " << to_string(spec.pattern) << '\n'
    << "seed: " << spec.seed << '\n'
    << "n_entities: " << spec.n_entities << '\n'
    << "n_relations: " << spec.n_relations << '\n'
    << "density: " << spec.density << '\n'
    << "holdout_fraction: " << spec.holdout_fraction << '\n'
    << "groundings: " << d.groundings << '\n'
    << "train_triples: " << d.train.size() << '\n'
    << "holdout_triples: " << d.holdout.size() << '\n'
    << "negative_triples: " << d.negatives.size() << '\n';
}

}  // namespace mde
