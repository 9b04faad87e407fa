#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mde/data.hpp"
#include "mde/error.hpp"
#include "mde/model.hpp"

namespace mde {

enum class Side { kHead, kTail, kBoth };
enum class Setting { kRaw, kFiltered };

inline std::string_view to_string(Side s) {
  switch (s) {
    case Side::kHead: return "head";
    case Side::kTail: return "tail";
    case Side::kBoth: return "both";
  }
  return "?";
}

inline std::string_view to_string(Setting s) {
  return s == Setting::kRaw ? "raw" : "filtered";
}

inline Setting parse_setting(std::string_view s) {
  if (s == "raw") return Setting::kRaw;
  if (s == "filtered") return Setting::kFiltered;
  throw ConfigError("unknown evaluation setting '" + std::string(s) + "'");
}

// Rank of t among all corruptions of one slot (lower score = better).
// Ties count half: rank = 1 + #better + ceil(#tied / 2), i.e. the mean rank
// among ties rounded half up. In filtered mode, corruptions that are known
// facts are skipped.
template <typename Real>
std::uint64_t rank_triple(const Triple& t, const EmbeddingSet<Real>& e,
                          const ScoreConfig& c, Side side,
                          const FilterIndex* filter = nullptr) {
  const double target = score_mde(t, e, c);
  const EntityId original = side == Side::kHead ? t.head : t.tail;
  std::uint64_t better = 0, tied = 0;
  Triple cand = t;
  for (EntityId x = 0; x < e.num_entities(); ++x) {
    if (x == original) continue;
    (side == Side::kHead ? cand.head : cand.tail) = x;
    if (filter && filter->contains(cand)) continue;
    const double s = score_mde(cand, e, c);
    if (s < target) {
      ++better;
    } else if (s == target) {
      ++tied;
    }
  }
  return 1 + better + (tied + 1) / 2;
}

struct RankingReport {
  Setting setting = Setting::kFiltered;
  Side side = Side::kBoth;
  std::size_t n_test = 0;
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;

  double hits(int n) const {
    switch (n) {
      case 1: return hits1;
      case 3: return hits3;
      case 10: return hits10;
    }
    throw ConfigError("hits@N is reported for N in {1, 3, 10}");
  }
};

inline RankingReport summarize_ranks(std::span<const std::uint64_t> ranks,
                                     Setting setting, Side side) {
  if (ranks.empty()) throw DataError("cannot summarise an empty rank list");
  RankingReport r;
  r.setting = setting;
  r.side = side;
  r.n_test = ranks.size();
  double sum = 0.0, rsum = 0.0;
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  for (std::uint64_t k : ranks) {
    sum += double(k);
    rsum += 1.0 / double(k);
    h1 += k <= 1;
    h3 += k <= 3;
    h10 += k <= 10;
  }
  const double n = double(ranks.size());
  r.mr = sum / n;
  r.mrr = rsum / n;
  r.hits1 = double(h1) / n;
  r.hits3 = double(h3) / n;
  r.hits10 = double(h10) / n;
  return r;
}

struct SettingRanks {
  Setting setting = Setting::kFiltered;
  std::vector<std::uint64_t> head;
  std::vector<std::uint64_t> tail;
};

struct Evaluation {
  std::vector<SettingRanks> ranks;
  std::vector<RankingReport> reports;  // per setting: head, tail, both

  const RankingReport& report(Setting setting, Side side) const {
    for (const auto& r : reports) {
      if (r.setting == setting && r.side == side) return r;
    }
    throw ConfigError("setting not evaluated");
  }
};

struct EvalOptions {
  std::vector<Setting> settings{Setting::kRaw, Setting::kFiltered};
  unsigned threads = 1;
};

// Ranks every test triple on both sides. Filtered settings require a filter
// index. Results do not depend on the thread count.
template <typename Real>
Evaluation evaluate(const TripleSet& test, const EmbeddingSet<Real>& e,
                    const ScoreConfig& c, const FilterIndex* filter,
                    const EvalOptions& opts = {}) {
  if (test.empty()) throw DataError("evaluation needs a non-empty test set");
  Evaluation out;
  const std::size_t n = test.size();
  for (Setting setting : opts.settings) {
    const FilterIndex* f = nullptr;
    if (setting == Setting::kFiltered) {
      if (!filter) throw ConfigError("filtered evaluation needs a filter index");
      f = filter;
    }
    SettingRanks sr;
    sr.setting = setting;
    sr.head.resize(n);
    sr.tail.resize(n);
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        sr.head[i] = rank_triple(test.triples[i], e, c, Side::kHead, f);
        sr.tail[i] = rank_triple(test.triples[i], e, c, Side::kTail, f);
      }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, n));
    if (threads == 1) {
      work(0, n);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (n + threads - 1) / threads;
      for (unsigned w = 0; w < threads; ++w) {
        const std::size_t b = w * chunk, end = std::min(n, b + chunk);
        if (b < end) pool.emplace_back(work, b, end);
      }
    }
    std::vector<std::uint64_t> both(sr.head);
    both.insert(both.end(), sr.tail.begin(), sr.tail.end());
    out.reports.push_back(summarize_ranks(sr.head, setting, Side::kHead));
    out.reports.push_back(summarize_ranks(sr.tail, setting, Side::kTail));
    out.reports.push_back(summarize_ranks(both, setting, Side::kBoth));
    out.ranks.push_back(std::move(sr));
  }
  return out;
}

// Key: value blocks, one per (setting, side).
inline void write_report_text(std::ostream& os,
                              std::span<const RankingReport> reports) {
  std::ostringstream buf;
  buf << std::setprecision(6) << std::fixed;
  bool first = true;
  for (const auto& r : reports) {
    if (!first) buf << '\n';
    first = false;
    buf << "[" << to_string(r.setting) << "/" << to_string(r.side) << "]\n"
        << "n: " << r.n_test << '\n'
        << "mr: " << r.mr << '\n'
        << "mrr: " << r.mrr << '\n'
        << "hits@1: " << r.hits1 << '\n'
        << "hits@3: " << r.hits3 << '\n'
        << "hits@10: " << r.hits10 << '\n';
  }
  os << buf.str();
}

inline void write_report_csv(std::ostream& os,
                             std::span<const RankingReport> reports,
                             bool header = true) {
  std::ostringstream buf;
  buf << std::setprecision(6) << std::fixed;
  if (header) buf << "setting,side,n,mr,mrr,hits1,hits3,hits10\n";
  for (const auto& r : reports) {
    buf << to_string(r.setting) << ',' << to_string(r.side) << ',' << r.n_test
        << ',' << r.mr << ',' << r.mrr << ',' << r.hits1 << ',' << r.hits3
        << ',' << r.hits10 << '\n';
  }
  os << buf.str();
}

}  // namespace mde
