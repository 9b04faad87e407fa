#pragma once

// Binary checkpoint container. All integers and floats are little-endian.
//
//   offset  type      field
//   0       char[8]   magic "MDECKPT\0"
//   8       u32       format version (kCheckpointVersion)
//   12      u32       dim
//   16      u64       |E|
//   24      u64       |R|
//   32      u32       family mask (bit f set = family f present; 0b0111 or
//                     0b1111)
//   36      f64[4]    weights w1..w4
//   68      f64       psi
//   76      u32       norm order p
//   80      u32       flags (bit 0: training state section present)
//   84      ...       vocabulary: |E| entity names then |R| relation names,
//                     each u32 byte length + UTF-8 bytes
//           ...       vectors: for each present family in order I, J, K, L:
//                     |E| x dim f32 entity table, then |R| x dim f32
//                     relation table (row = one vector)
//   optional training state:
//           u64       completed epochs
//           f64[8]    gamma1 gamma2 delta delta' xi threshold beta1 beta2
//           f64[3]    adadelta rho eps lr
//           u64       slot count, then per slot sorted by (kind, family,
//                     index): u8 kind, u8 family, u32 index,
//                     f64[dim] E[g^2], f64[dim] E[dx^2]

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mde/data.hpp"
#include "mde/error.hpp"
#include "mde/loss.hpp"
#include "mde/model.hpp"
#include "mde/optim.hpp"

namespace mde {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic = {'M', 'D', 'E', 'C',
                                                         'K', 'P', 'T', '\0'};

struct TrainingState {
  std::uint64_t epoch = 0;
  LossState loss;
  AdadeltaState optimizer;
};

struct Checkpoint {
  EmbeddingSet<float> embeddings;
  Vocabulary vocab;
  ScoreConfig config;
  std::optional<TrainingState> state;
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(b.begin(), b.end());
    }
    out_.write(reinterpret_cast<const char*>(b.data()), b.size());
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class LeReader {
 public:
  LeReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T get() {
    std::array<unsigned char, sizeof(T)> b;
    in_.read(reinterpret_cast<char*>(b.data()), b.size());
    if (!in_) throw DataError("checkpoint '" + path_ + "' is truncated");
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(b.begin(), b.end());
    }
    T value;
    std::memcpy(&value, b.data(), sizeof(T));
    return value;
  }
  std::string get_string() {
    auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw DataError("checkpoint '" + path_ + "' is corrupt");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw DataError("checkpoint '" + path_ + "' is truncated");
    return s;
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace detail

template <typename Real>
void save_checkpoint(const std::string& path, const EmbeddingSet<Real>& e,
                     const Vocabulary& vocab, const ScoreConfig& config,
                     const TrainingState* state = nullptr) {
  if (vocab.num_entities() != e.num_entities() ||
      vocab.num_relations() != e.num_relations()) {
    throw ConfigError("vocabulary and embeddings disagree in size");
  }
  // Write to a sibling file and rename so an interrupted write never
  // replaces a good checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + tmp + "'");
    detail::LeWriter w(out);
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    w.put(kCheckpointVersion);
    w.put(static_cast<std::uint32_t>(e.dim()));
    w.put(static_cast<std::uint64_t>(e.num_entities()));
    w.put(static_cast<std::uint64_t>(e.num_relations()));
    w.put(static_cast<std::uint32_t>(e.has_term4() ? 0b1111 : 0b0111));
    for (double wt : config.weights) w.put(wt);
    w.put(config.psi);
    w.put(static_cast<std::uint32_t>(config.p));
    w.put(static_cast<std::uint32_t>(state ? 1 : 0));
    for (const auto& n : vocab.entity_names()) w.put_string(n);
    for (const auto& n : vocab.relation_names()) w.put_string(n);
    for (std::size_t f = 0; f < e.num_families(); ++f) {
      for (Kind k : {Kind::kEntity, Kind::kRelation}) {
        for (Real x : e.table(k, static_cast<Family>(f))) {
          w.put(static_cast<float>(x));
        }
      }
    }
    if (state) {
      const LossState& s = state->loss;
      w.put(state->epoch);
      for (double v : {s.gamma1, s.gamma2, s.delta, s.delta_prime, s.xi,
                       s.threshold, s.beta1, s.beta2}) {
        w.put(v);
      }
      const AdadeltaState& o = state->optimizer;
      w.put(o.rho);
      w.put(o.eps);
      w.put(o.lr);
      std::vector<const std::pair<const ParamKey, AdadeltaState::Slot>*> slots;
      for (const auto& kv : o.slots) slots.push_back(&kv);
      std::sort(slots.begin(), slots.end(), [](auto* a, auto* b) {
        auto key = [](const ParamKey& k) {
          return std::tuple(int(k.kind), int(k.family), k.index);
        };
        return key(a->first) < key(b->first);
      });
      w.put(static_cast<std::uint64_t>(slots.size()));
      for (const auto* kv : slots) {
        w.put(static_cast<std::uint8_t>(kv->first.kind));
        w.put(static_cast<std::uint8_t>(kv->first.family));
        w.put(kv->first.index);
        for (double v : kv->second.sq_grad) w.put(v);
        for (double v : kv->second.sq_delta) w.put(v);
      }
    }
    out.flush();
    if (!out) throw DataError("write failed for checkpoint '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move checkpoint into '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) {
    throw DataError("'" + path + "' is not an MDE checkpoint (bad magic)");
  }
  detail::LeReader r(in, path);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " in '" + path + "' (this build reads version " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto dim = r.get<std::uint32_t>();
  const auto n_e = r.get<std::uint64_t>();
  const auto n_r = r.get<std::uint64_t>();
  const auto mask = r.get<std::uint32_t>();
  if (dim == 0 || (mask != 0b0111 && mask != 0b1111) || n_e > (1ull << 32) ||
      n_r > (1ull << 32)) {
    throw DataError("checkpoint '" + path + "' has a corrupt header");
  }
  Checkpoint ck;
  for (double& wt : ck.config.weights) wt = r.get<double>();
  ck.config.psi = r.get<double>();
  ck.config.p = static_cast<int>(r.get<std::uint32_t>());
  ck.config.term4 = mask == 0b1111;
  const auto flags = r.get<std::uint32_t>();
  for (std::uint64_t i = 0; i < n_e; ++i) ck.vocab.add_entity(r.get_string());
  for (std::uint64_t i = 0; i < n_r; ++i) ck.vocab.add_relation(r.get_string());
  if (ck.vocab.num_entities() != n_e || ck.vocab.num_relations() != n_r) {
    throw DataError("checkpoint '" + path + "' has duplicate vocabulary names");
  }
  ck.embeddings = EmbeddingSet<float>(n_e, n_r, dim, ck.config.term4);
  for (std::size_t f = 0; f < ck.embeddings.num_families(); ++f) {
    for (Kind k : {Kind::kEntity, Kind::kRelation}) {
      for (float& x : ck.embeddings.table(k, static_cast<Family>(f))) {
        x = r.get<float>();
      }
    }
  }
  if (flags & 1u) {
    TrainingState st;
    st.epoch = r.get<std::uint64_t>();
    LossState& s = st.loss;
    for (double* v : {&s.gamma1, &s.gamma2, &s.delta, &s.delta_prime, &s.xi,
                      &s.threshold, &s.beta1, &s.beta2}) {
      *v = r.get<double>();
    }
    st.optimizer.rho = r.get<double>();
    st.optimizer.eps = r.get<double>();
    st.optimizer.lr = r.get<double>();
    const auto n_slots = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_slots; ++i) {
      ParamKey key;
      key.kind = static_cast<Kind>(r.get<std::uint8_t>());
      key.family = static_cast<Family>(r.get<std::uint8_t>());
      key.index = r.get<std::uint32_t>();
      auto& slot = st.optimizer.slots[key];
      slot.sq_grad.resize(dim);
      slot.sq_delta.resize(dim);
      for (double& v : slot.sq_grad) v = r.get<double>();
      for (double& v : slot.sq_delta) v = r.get<double>();
    }
    ck.state = std::move(st);
  }
  return ck;
}

}  // namespace mde
