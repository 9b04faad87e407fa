#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mde/checkpoint.hpp"
#include "mde/config.hpp"
#include "mde/data.hpp"
#include "mde/error.hpp"
#include "mde/loss.hpp"
#include "mde/model.hpp"
#include "mde/optim.hpp"

namespace mde {

// Replaces the head or the tail (probability 1/2 each) by a different entity
// drawn uniformly.
template <typename Rng>
Triple sample_negative(const Triple& t, std::size_t n_entities, Rng& rng) {
  if (n_entities < 2) {
    throw ConfigError("negative sampling needs at least 2 entities");
  }
  std::bernoulli_distribution head_side(0.5);
  std::uniform_int_distribution<EntityId> pick(
      0, static_cast<EntityId>(n_entities - 2));
  const bool head = head_side(rng);
  Triple out = t;
  EntityId& slot = head ? out.head : out.tail;
  EntityId x = pick(rng);
  if (x >= slot) ++x;
  slot = x;
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_pos = 0.0;
  double loss_neg = 0.0;
  double total = 0.0;
  double delta = 0.0;
  double delta_prime = 0.0;
  double seconds = 0.0;
  std::size_t negatives = 0;  // corrupted triples drawn this epoch
};

struct TrainHistory {
  std::vector<EpochRecord> records;
};

inline void write_history_csv_header(std::ostream& os) {
  os << "epoch,loss_pos,loss_neg,total,delta,delta_prime,seconds\n";
}

inline void write_history_csv_row(std::ostream& os, const EpochRecord& r) {
  os << r.epoch << ',' << std::setprecision(10) << r.loss_pos << ','
     << r.loss_neg << ',' << r.total << ',' << r.delta << ',' << r.delta_prime
     << ',' << std::setprecision(4) << r.seconds << '\n';
}

template <typename Real = float>
struct TrainResult {
  EmbeddingSet<Real> embeddings;
  TrainHistory history;
  TrainingState state;
};

struct TrainHooks {
  // Called after every completed epoch.
  std::function<void(const EpochRecord&)> on_epoch;
  // Resume from this state; the embeddings must match the vocabulary.
  const Checkpoint* resume = nullptr;
};

inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kLogFile = "train_log.csv";

// Epoch loop: shuffle, draw negatives, one optimizer step per batch, then
// one limit-controller update from the epoch-summed losses. Each epoch uses
// its own generator seeded from (seed, epoch), so a resumed run replays the
// same stream. When cfg.output_dir is set, a CSV log and checkpoints are
// written there; on a numerical failure the checkpoint of the last completed
// epoch is written before the error propagates.
template <typename Real = float>
TrainResult<Real> train(const TrainConfig& cfg, const Vocabulary& vocab,
                        const TripleSet& train_set, const TrainHooks& hooks = {}) {
  validate(cfg);
  if (train_set.empty()) throw DataError("training set is empty");
  const ScoreConfig score = cfg.score_config();

  TrainResult<Real> res;
  if (hooks.resume) {
    const Checkpoint& ck = *hooks.resume;
    if (!(ck.vocab == vocab)) {
      throw DataError("resume checkpoint vocabulary does not match the data");
    }
    if (ck.embeddings.dim() != cfg.dim || ck.config.term4 != cfg.term4) {
      throw ConfigError("resume checkpoint shape does not match the config");
    }
    res.embeddings = EmbeddingSet<Real>(vocab.num_entities(),
                                        vocab.num_relations(), cfg.dim,
                                        cfg.term4);
    for (std::size_t f = 0; f < res.embeddings.num_families(); ++f) {
      for (Kind k : {Kind::kEntity, Kind::kRelation}) {
        auto src = ck.embeddings.table(k, static_cast<Family>(f));
        auto dst = res.embeddings.table(k, static_cast<Family>(f));
        std::copy(src.begin(), src.end(), dst.begin());
      }
    }
    if (ck.state) {
      res.state = *ck.state;
    } else {
      res.state.loss = cfg.loss_state();
      res.state.optimizer = cfg.adadelta();
    }
  } else {
    res.embeddings = init_embeddings<Real>(vocab, cfg.dim, cfg.seed, cfg.term4);
    res.state.loss = cfg.loss_state();
    res.state.optimizer = cfg.adadelta();
  }

  const std::filesystem::path out_dir = cfg.output_dir;
  const bool write_files = !cfg.output_dir.empty();
  std::ofstream log;
  if (write_files) {
    std::filesystem::create_directories(out_dir);
    const auto log_path = out_dir / kLogFile;
    const bool fresh = !hooks.resume || !std::filesystem::exists(log_path);
    log.open(log_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw DataError("cannot write training log in " + cfg.output_dir);
    if (fresh) write_history_csv_header(log);
  }
  auto save = [&](const EmbeddingSet<Real>& e, const TrainingState& st) {
    save_checkpoint((out_dir / kCheckpointFile).string(), e, vocab, score, &st);
  };

  std::unordered_set<Triple, TripleHash> known;
  if (cfg.filtered_negatives) known.insert(train_set.begin(), train_set.end());

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::vector<Triple> pos, neg;
  pos.reserve(cfg.batch_size);
  neg.reserve(cfg.batch_size * cfg.negatives_per_positive);

  const std::size_t first = res.state.epoch + 1;
  for (std::size_t epoch = first; epoch < first + cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::optional<EmbeddingSet<Real>> snapshot;
    std::optional<TrainingState> snapshot_state;
    if (write_files) {
      snapshot = res.embeddings;
      snapshot_state = res.state;
    }

    double epoch_pos = 0.0, epoch_neg = 0.0;
    std::size_t drawn = 0;
    try {
      for (std::size_t b = 0; b < n; b += cfg.batch_size) {
        pos.clear();
        neg.clear();
        for (std::size_t i = b; i < std::min(n, b + cfg.batch_size); ++i) {
          const Triple& t = train_set.triples[order[i]];
          pos.push_back(t);
          for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
            Triple c = sample_negative(t, vocab.num_entities(), rng);
            for (int tries = 0; cfg.filtered_negatives && known.contains(c) &&
                                tries < 100;
                 ++tries) {
              c = sample_negative(t, vocab.num_entities(), rng);
            }
            neg.push_back(c);
          }
        }
        auto lg = loss_and_gradient<Real>(pos, neg, res.embeddings, score,
                                          res.state.loss);
        if (!std::isfinite(lg.loss.total)) {
          throw NumericalError("non-finite loss in epoch " +
                               std::to_string(epoch));
        }
        drawn += neg.size();
        epoch_pos += lg.loss.pos;
        epoch_neg += lg.loss.neg;
        if (cfg.optimizer == "sgd") {
          sgd_step(cfg.lr, lg.grads, res.embeddings);
        } else {
          adadelta_step(res.state.optimizer, lg.grads, res.embeddings);
        }
      }
    } catch (const NumericalError&) {
      if (write_files && snapshot_state->epoch > 0) save(*snapshot, *snapshot_state);
      throw;
    }

    if (cfg.entity_norm) project_entities_to_unit_norm(res.embeddings);
    res.state.loss = update_limits(res.state.loss, epoch_pos, epoch_neg);
    res.state.epoch = epoch;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_pos = epoch_pos;
    rec.loss_neg = epoch_neg;
    rec.total = res.state.loss.beta1 * epoch_pos + res.state.loss.beta2 * epoch_neg;
    rec.negatives = drawn;
    rec.delta = res.state.loss.delta;
    rec.delta_prime = res.state.loss.delta_prime;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.history.records.push_back(rec);
    if (write_files) {
      write_history_csv_row(log, rec);
      log.flush();
      if (cfg.checkpoint_interval > 0 && epoch % cfg.checkpoint_interval == 0) {
        save(res.embeddings, res.state);
      }
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  if (write_files) save(res.embeddings, res.state);
  return res;
}

}  // namespace mde
