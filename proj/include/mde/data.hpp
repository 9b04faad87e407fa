#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mde/error.hpp"

namespace mde {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// Dense string <-> index maps for entities and relations.
class Vocabulary {
 public:
  EntityId add_entity(std::string_view name) {
    return add(name, entity_names_, entity_index_);
  }
  RelationId add_relation(std::string_view name) {
    return add(name, relation_names_, relation_index_);
  }

  std::optional<EntityId> find_entity(std::string_view name) const {
    return find(name, entity_index_);
  }
  std::optional<RelationId> find_relation(std::string_view name) const {
    return find(name, relation_index_);
  }

  const std::string& entity_name(EntityId id) const {
    return entity_names_.at(id);
  }
  const std::string& relation_name(RelationId id) const {
    return relation_names_.at(id);
  }

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_relations() const { return relation_names_.size(); }

  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const {
    return relation_names_;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entity_names_ == b.entity_names_ &&
           a.relation_names_ == b.relation_names_;
  }

 private:
  using Index = std::unordered_map<std::string, std::uint32_t>;

  static std::uint32_t add(std::string_view name,
                           std::vector<std::string>& names, Index& index) {
    auto [it, inserted] = index.try_emplace(
        std::string(name), static_cast<std::uint32_t>(names.size()));
    if (inserted) names.emplace_back(name);
    return it->second;
  }

  static std::optional<std::uint32_t> find(std::string_view name,
                                           const Index& index) {
    auto it = index.find(std::string(name));
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  Index entity_index_;
  Index relation_index_;
};

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t key = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
    key ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
    return std::hash<std::uint64_t>{}(key);
  }
};

enum class Split { kTrain, kValid, kTest };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

struct TripleSet {
  Split role = Split::kTrain;
  std::vector<Triple> triples;

  std::size_t size() const { return triples.size(); }
  bool empty() const { return triples.empty(); }
  auto begin() const { return triples.begin(); }
  auto end() const { return triples.end(); }
};

// Drops repeated triples, keeping first occurrences in order. Returns the
// number removed.
inline std::size_t deduplicate(std::vector<Triple>& triples) {
  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(triples.size());
  std::size_t kept = 0;
  for (const Triple& t : triples) {
    if (seen.insert(t).second) triples[kept++] = t;
  }
  std::size_t removed = triples.size() - kept;
  triples.resize(kept);
  return removed;
}

// How load_triples treats names that are not in a supplied vocabulary.
enum class VocabPolicy {
  kExtend,  // add them (valid/test loading during training)
  kStrict,  // reject the file (evaluating against a fixed checkpoint)
};

struct LoadedTriples {
  TripleSet set;
  Vocabulary vocab;
  std::size_t duplicates = 0;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace detail

// Reads a `head<TAB>relation<TAB>tail` file. Blank lines are skipped and
// duplicate triples are dropped (their count is reported in `duplicates`).
inline LoadedTriples load_triples(const std::string& path, Split role,
                                  std::optional<Vocabulary> vocab = {},
                                  VocabPolicy policy = VocabPolicy::kExtend) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file '" + path + "'");

  LoadedTriples out;
  out.set.role = role;
  if (vocab) out.vocab = std::move(*vocab);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 3 tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    for (auto f : fields) {
      if (f.empty()) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": empty field");
      }
    }
    Triple t;
    if (policy == VocabPolicy::kStrict) {
      auto h = out.vocab.find_entity(fields[0]);
      auto r = out.vocab.find_relation(fields[1]);
      auto tl = out.vocab.find_entity(fields[2]);
      if (!h || !r || !tl) {
        std::string_view missing = !h ? fields[0] : (!r ? fields[1] : fields[2]);
        throw DataError(path + ":" + std::to_string(line_no) + ": name '" +
                        std::string(missing) +
                        "' is not in the model vocabulary");
      }
      t = {*h, *r, *tl};
    } else {
      t.head = out.vocab.add_entity(fields[0]);
      t.relation = out.vocab.add_relation(fields[1]);
      t.tail = out.vocab.add_entity(fields[2]);
    }
    out.set.triples.push_back(t);
  }
  if (out.set.triples.empty()) {
    throw DataError("triple file '" + path + "' contains no triples");
  }
  out.duplicates = deduplicate(out.set.triples);
  return out;
}

inline void save_triples(const std::string& path, const TripleSet& set,
                         const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write triple file '" + path + "'");
  for (const Triple& t : set) {
    out << vocab.entity_name(t.head) << '\t'
        << vocab.relation_name(t.relation) << '\t'
        << vocab.entity_name(t.tail) << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

// Membership over the union of all known splits, used to filter candidate
// corruptions during evaluation.
class FilterIndex {
 public:
  FilterIndex() = default;

  explicit FilterIndex(std::span<const TripleSet* const> splits) {
    for (const TripleSet* s : splits) add(*s);
  }

  void add(const TripleSet& set) {
    for (const Triple& t : set) known_.insert(t);
  }
  void add(const Triple& t) { known_.insert(t); }

  bool contains(const Triple& t) const { return known_.contains(t); }
  std::size_t size() const { return known_.size(); }

 private:
  std::unordered_set<Triple, TripleHash> known_;
};

inline FilterIndex build_filter_index(const TripleSet& train,
                                      const TripleSet& valid,
                                      const TripleSet& test) {
  const TripleSet* splits[] = {&train, &valid, &test};
  return FilterIndex(splits);
}

}  // namespace mde
