#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mde/data.hpp"
#include "mde/error.hpp"
#include "mde/loss.hpp"
#include "mde/model.hpp"

namespace mde {

// Identifies one embedding vector.
struct ParamKey {
  Kind kind = Kind::kEntity;
  Family family = Family::kI;
  std::uint32_t index = 0;

  friend bool operator==(const ParamKey&, const ParamKey&) = default;
};

struct ParamKeyHash {
  std::size_t operator()(const ParamKey& k) const noexcept {
    std::uint64_t v = (std::uint64_t(k.index) << 8) |
                      (std::uint64_t(k.kind) << 4) | std::uint64_t(k.family);
    return std::hash<std::uint64_t>{}(v);
  }
};

// Sparse per-vector gradient accumulator; holds entries only for vectors
// touched since it was created.
class GradientBuffer {
 public:
  explicit GradientBuffer(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }

  // Zero-initialised on first access.
  std::span<double> at(const ParamKey& key) {
    auto [it, inserted] = grads_.try_emplace(key);
    if (inserted) it->second.assign(dim_, 0.0);
    return it->second;
  }

  const std::vector<double>* find(const ParamKey& key) const {
    auto it = grads_.find(key);
    return it == grads_.end() ? nullptr : &it->second;
  }

  bool contains(const ParamKey& key) const { return grads_.contains(key); }
  std::size_t size() const { return grads_.size(); }
  bool empty() const { return grads_.empty(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  std::size_t dim_;
  std::unordered_map<ParamKey, std::vector<double>, ParamKeyHash> grads_;
};

// Partial derivatives of one distance term w.r.t. its three vectors.
struct TermGradient {
  std::vector<double> head;
  std::vector<double> relation;
  std::vector<double> tail;
};

namespace detail {

// Writes the (sub)gradient of the p-norm at residual `v` into `g`. The
// subgradient is 0 at L1 kinks and at a zero L2 residual.
inline void norm_gradient(std::span<const double> v, int p,
                          std::span<double> g) {
  if (p == 1) {
    for (std::size_t c = 0; c < v.size(); ++c) {
      g[c] = v[c] > 0.0 ? 1.0 : (v[c] < 0.0 ? -1.0 : 0.0);
    }
    return;
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double n = std::sqrt(n2);
  for (std::size_t c = 0; c < v.size(); ++c) g[c] = n > 0.0 ? v[c] / n : 0.0;
}

// Calls emit(head_grad, rel_grad, tail_grad) for component c after computing
// the norm gradient of term `term` at triple t.
template <typename Real, typename Emit>
void term_gradient(int term, const Triple& t, const EmbeddingSet<Real>& e,
                   int p, std::vector<double>& scratch_v,
                   std::vector<double>& scratch_g, Emit&& emit) {
  check_term(term);
  const Family f = family_of_term(term);
  auto h = e.entity(f, t.head);
  auto r = e.relation(f, t.relation);
  auto tl = e.entity(f, t.tail);
  const std::size_t d = e.dim();
  scratch_v.resize(d);
  scratch_g.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    scratch_v[c] = residual(term, h, r, tl, c);
  }
  norm_gradient(scratch_v, p, scratch_g);
  for (std::size_t c = 0; c < d; ++c) {
    const double g = scratch_g[c];
    switch (term) {
      case 1: emit(c, g, g, -g); break;
      case 2: emit(c, g, -g, g); break;
      case 3: emit(c, -g, g, g); break;
      default: emit(c, g, -g * double(tl[c]), -g * double(r[c])); break;
    }
  }
}

}  // namespace detail

template <typename Real>
TermGradient grad_score_term(int term, const Triple& t,
                             const EmbeddingSet<Real>& e, int p) {
  TermGradient out;
  out.head.assign(e.dim(), 0.0);
  out.relation.assign(e.dim(), 0.0);
  out.tail.assign(e.dim(), 0.0);
  std::vector<double> v, g;
  detail::term_gradient(term, t, e, p, v, g,
                        [&](std::size_t c, double dh, double dr, double dt) {
                          out.head[c] = dh;
                          out.relation[c] = dr;
                          out.tail[c] = dt;
                        });
  return out;
}

// Adds scale * dS_m/d(params) for triple t into the buffer.
template <typename Real>
void accumulate_term_gradient(int term, const Triple& t,
                              const EmbeddingSet<Real>& e, int p, double scale,
                              GradientBuffer& buf) {
  const Family f = family_of_term(term);
  auto gh = buf.at({Kind::kEntity, f, t.head});
  auto gr = buf.at({Kind::kRelation, f, t.relation});
  auto gt = buf.at({Kind::kEntity, f, t.tail});
  thread_local std::vector<double> v, g;
  detail::term_gradient(term, t, e, p, v, g,
                        [&](std::size_t c, double dh, double dr, double dt) {
                          gh[c] += scale * dh;
                          gr[c] += scale * dr;
                          gt[c] += scale * dt;
                        });
}

struct LossAndGradient {
  LossValues loss;
  GradientBuffer grads;
};

// Evaluates the limit loss over a batch and its gradient. Inactive hinges
// contribute nothing, so the buffer only holds vectors of violating triples.
template <typename Real>
LossAndGradient loss_and_gradient(std::span<const Triple> pos,
                                  std::span<const Triple> neg,
                                  const EmbeddingSet<Real>& e,
                                  const ScoreConfig& c, const LossState& s) {
  LossAndGradient out{{}, GradientBuffer(e.dim())};
  const double lp = s.positive_limit();
  const double ln = s.negative_limit();
  auto add = [&](const Triple& t, double scale) {
    for (int m = 1; m <= 4; ++m) {
      if (c.term_enabled(m)) {
        accumulate_term_gradient(m, t, e, c.p, scale * c.weights[m - 1],
                                 out.grads);
      }
    }
  };
  auto checked_score = [&](const Triple& t) {
    const double f = score_mde(t, e, c);
    if (!std::isfinite(f)) throw NumericalError("non-finite score");
    return f;
  };
  for (const Triple& t : pos) {
    const double f = checked_score(t);
    if (f > lp) {
      out.loss.pos += f - lp;
      add(t, s.beta1);
    }
  }
  for (const Triple& t : neg) {
    const double f = checked_score(t);
    if (f < ln) {
      out.loss.neg += ln - f;
      add(t, -s.beta2);
    }
  }
  out.loss.total = s.beta1 * out.loss.pos + s.beta2 * out.loss.neg;
  return out;
}

template <typename Real>
GradientBuffer grad_loss(std::span<const Triple> pos,
                         std::span<const Triple> neg,
                         const EmbeddingSet<Real>& e, const ScoreConfig& c,
                         const LossState& s) {
  return loss_and_gradient(pos, neg, e, c, s).grads;
}

inline void check_finite(const GradientBuffer& grads) {
  for (const auto& [key, g] : grads) {
    for (double x : g) {
      if (!std::isfinite(x)) {
        throw NumericalError(
            "non-finite gradient for " +
            std::string(key.kind == Kind::kEntity ? "entity " : "relation ") +
            std::to_string(key.index) + " (family " +
            std::to_string(int(key.family) + 1) + ")");
      }
    }
  }
}

// Adadelta with a global learning-rate multiplier:
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       <- x + lr * dx
// Accumulators are allocated per vector on first touch.
struct AdadeltaState {
  struct Slot {
    std::vector<double> sq_grad;
    std::vector<double> sq_delta;
  };

  double rho = 0.95;
  double eps = 1e-6;
  double lr = 10.0;
  std::unordered_map<ParamKey, Slot, ParamKeyHash> slots;

  const Slot* find(const ParamKey& key) const {
    auto it = slots.find(key);
    return it == slots.end() ? nullptr : &it->second;
  }
};

template <typename Real>
void adadelta_step(AdadeltaState& state, const GradientBuffer& grads,
                   EmbeddingSet<Real>& e) {
  check_finite(grads);
  const double rho = state.rho, eps = state.eps;
  for (const auto& [key, g] : grads) {
    auto [it, inserted] = state.slots.try_emplace(key);
    auto& slot = it->second;
    if (inserted) {
      slot.sq_grad.assign(g.size(), 0.0);
      slot.sq_delta.assign(g.size(), 0.0);
    }
    auto x = e.vec(key.kind, key.family, key.index);
    for (std::size_t c = 0; c < g.size(); ++c) {
      slot.sq_grad[c] = rho * slot.sq_grad[c] + (1.0 - rho) * g[c] * g[c];
      const double dx =
          -std::sqrt(slot.sq_delta[c] + eps) / std::sqrt(slot.sq_grad[c] + eps) *
          g[c];
      slot.sq_delta[c] = rho * slot.sq_delta[c] + (1.0 - rho) * dx * dx;
      x[c] = static_cast<Real>(x[c] + state.lr * dx);
    }
  }
}

// Plain gradient descent, for debugging.
template <typename Real>
void sgd_step(double lr, const GradientBuffer& grads, EmbeddingSet<Real>& e) {
  check_finite(grads);
  for (const auto& [key, g] : grads) {
    auto x = e.vec(key.kind, key.family, key.index);
    for (std::size_t c = 0; c < g.size(); ++c) {
      x[c] = static_cast<Real>(x[c] - lr * g[c]);
    }
  }
}

}  // namespace mde
