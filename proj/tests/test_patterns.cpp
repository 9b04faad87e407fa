#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <unordered_set>

#include "mde/patterns.hpp"
#include "test_util.hpp"

namespace mde {
namespace {

std::set<Triple> as_set(const TripleSet& s) { return {s.begin(), s.end()}; }

TEST(PatternKg, SymmetryWithoutHoldoutIsClosed) {
  PatternSpec spec;
  spec.pattern = Pattern::kSymmetry;
  spec.n_entities = 3;
  spec.density = 1.0;
  spec.holdout_fraction = 0.0;
  auto d = generate_pattern_kg(spec);
  auto train = as_set(d.train);
  EXPECT_EQ(d.groundings, 3u);
  EXPECT_EQ(train.size(), 6u);
  for (const Triple& t : train) {
    EXPECT_TRUE(train.contains({t.tail, t.relation, t.head}));
  }
  EXPECT_TRUE(d.holdout.empty());
}

TEST(PatternKg, InversionSinglePair) {
  // a = 0, b = 1; relation 0 is r1, relation 1 is r2.
  auto d = materialize_pattern(Pattern::kInversion, 3, 1,
                               {{0, 0, 1, 0, /*held_out=*/true}});
  EXPECT_EQ(d.train.triples, (std::vector<Triple>{{0, 1, 1}}));
  EXPECT_EQ(d.holdout.triples, (std::vector<Triple>{{1, 0, 0}}));
  EXPECT_EQ(d.vocab.relation_name(0), "inv0_r1");
  EXPECT_EQ(d.vocab.relation_name(1), "inv0_r2");
}

TEST(PatternKg, CompositionChain) {
  // a -> b -> c with a = 0, b = 1, c = 2; relations r1, r2, r3 = 0, 1, 2.
  auto d = materialize_pattern(Pattern::kComposition, 3, 1,
                               {{0, 0, 1, 2, true}});
  EXPECT_EQ(d.train.triples, (std::vector<Triple>{{0, 1, 1}, {1, 2, 2}}));
  EXPECT_EQ(d.holdout.triples, (std::vector<Triple>{{0, 0, 2}}));
}

TEST(PatternKg, AntisymmetryRecordsReversedNegatives) {
  PatternSpec spec;
  spec.pattern = Pattern::kAntisymmetry;
  spec.n_entities = 30;
  spec.density = 0.1;
  spec.holdout_fraction = 0.25;
  auto d = generate_pattern_kg(spec);
  auto positives = as_set(d.train);
  for (const Triple& t : d.holdout) positives.insert(t);
  EXPECT_EQ(d.negatives.size(), positives.size());
  for (const Triple& n : d.negatives) {
    EXPECT_FALSE(positives.contains(n));
    EXPECT_TRUE(positives.contains({n.tail, n.relation, n.head}));
  }
}

TEST(PatternKg, PreconditionsAreChecked) {
  PatternSpec spec;
  spec.n_entities = 2;
  EXPECT_THROW(generate_pattern_kg(spec), ConfigError);
  spec.n_entities = 10;
  spec.pattern = Pattern::kComposition;
  spec.n_relations = 2;
  EXPECT_THROW(generate_pattern_kg(spec), ConfigError);
  spec.n_relations = 3;
  spec.holdout_fraction = 1.0;
  EXPECT_THROW(generate_pattern_kg(spec), ConfigError);
  spec.holdout_fraction = 0.2;
  spec.density = 0.0;
  EXPECT_THROW(generate_pattern_kg(spec), ConfigError);
}

// Properties over all patterns and a range of seeds: disjoint splits, no
// duplicates, valid indices, determinism.
TEST(PatternKg, SplitsAreDisjointAndDeterministic) {
  for (Pattern p : {Pattern::kSymmetry, Pattern::kAntisymmetry,
                    Pattern::kInversion, Pattern::kComposition}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      PatternSpec spec;
      spec.pattern = p;
      spec.n_entities = 25;
      spec.n_relations = 6;
      spec.density = p == Pattern::kComposition ? 0.01 : 0.2;
      spec.holdout_fraction = 0.3;
      spec.seed = seed;
      auto d = generate_pattern_kg(spec);
      auto train = as_set(d.train);
      EXPECT_EQ(train.size(), d.train.size());
      for (const Triple& t : d.holdout) EXPECT_FALSE(train.contains(t));
      for (const auto* s : {&d.train, &d.holdout, &d.negatives}) {
        for (const Triple& t : *s) {
          EXPECT_LT(t.head, d.vocab.num_entities());
          EXPECT_LT(t.tail, d.vocab.num_entities());
          EXPECT_LT(t.relation, d.vocab.num_relations());
        }
      }
      EXPECT_FALSE(d.holdout.empty());
      auto again = generate_pattern_kg(spec);
      EXPECT_EQ(again.train.triples, d.train.triples);
      EXPECT_EQ(again.holdout.triples, d.holdout.triples);
    }
  }
}

TEST(PatternKg, WrittenFilesAreByteIdentical) {
  testing::TempDir a, b;
  PatternSpec spec;
  spec.pattern = Pattern::kAntisymmetry;
  spec.seed = 5;
  write_pattern_dataset(a.path(), spec, generate_pattern_kg(spec));
  write_pattern_dataset(b.path(), spec, generate_pattern_kg(spec));
  for (const char* f : {"train.tsv", "holdout.tsv", "negatives.tsv",
                        "manifest.txt"}) {
    EXPECT_EQ(testing::read_file(a.file(f)), testing::read_file(b.file(f))) << f;
    EXPECT_FALSE(testing::read_file(a.file(f)).empty()) << f;
  }
  auto loaded = load_triples(a.file("train.tsv"), Split::kTrain);
  EXPECT_EQ(loaded.set.size(), generate_pattern_kg(spec).train.size());
}

}  // namespace
}  // namespace mde
