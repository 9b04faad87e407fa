#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "mde/error.hpp"

namespace mde {

// Limits and controller state of the limit-based loss.
//
// Positive scores are pushed below L+ = gamma1 - delta and negative scores
// above L- = gamma2 - delta_prime. The controller moves delta / delta_prime
// in steps of xi; xi = 0 freezes it (static limits).
struct LossState {
  double gamma1 = 2.0;
  double gamma2 = 2.0;
  double delta = 0.0;
  double delta_prime = 0.0;
  double xi = 0.1;
  double threshold = 0.05;
  double beta1 = 1.0;
  double beta2 = 1.0;

  double positive_limit() const { return gamma1 - delta; }
  double negative_limit() const { return gamma2 - delta_prime; }
  double alpha_margin() const { return gamma2 - gamma1; }

  friend bool operator==(const LossState&, const LossState&) = default;
};

inline void validate(const LossState& s) {
  if (!(s.gamma1 > 0.0) || !(s.gamma2 > 0.0)) {
    throw ConfigError("gamma1 and gamma2 must be positive");
  }
  if (s.gamma2 < s.gamma1) throw ConfigError("gamma2 must be >= gamma1");
  if (!(s.xi >= 0.0)) throw ConfigError("xi must be >= 0");
  if (!(s.threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (!(s.beta1 > 0.0) || !(s.beta2 > 0.0)) {
    throw ConfigError("beta1 and beta2 must be positive");
  }
}

struct LossValues {
  double pos = 0.0;
  double neg = 0.0;
  double total = 0.0;
};

inline double hinge(double x) { return std::max(x, 0.0); }

// pos = sum [f - L+]_+, neg = sum [L- - f]_+, total = beta1*pos + beta2*neg.
inline LossValues limit_loss(std::span<const double> pos_scores,
                             std::span<const double> neg_scores,
                             const LossState& s) {
  LossValues v;
  const double lp = s.positive_limit();
  const double ln = s.negative_limit();
  for (double f : pos_scores) v.pos += hinge(f - lp);
  for (double f : neg_scores) v.neg += hinge(ln - f);
  v.total = s.beta1 * v.pos + s.beta2 * v.neg;
  return v;
}

// One step of the dynamic-limit controller:
//
//   if loss+ == 0 and gamma1 >= xi:
//     delta += xi
//     if loss- > threshold and gamma2 >= xi: delta' += xi
//   if loss- == 0: delta' -= xi
//
// A delta' increase that would leave L- < L+ is skipped. Zero tests are exact
// because hinge clamping yields exact zeros.
inline LossState update_limits(LossState s, double loss_pos, double loss_neg) {
  if (loss_pos == 0.0 && s.gamma1 >= s.xi) {
    s.delta += s.xi;
    if (loss_neg > s.threshold && s.gamma2 >= s.xi) {
      // The only move that narrows L- - L+; skipped if it would invert them.
      LossState next = s;
      next.delta_prime += s.xi;
      if (next.negative_limit() >= next.positive_limit()) s = next;
    }
  }
  if (loss_neg == 0.0) s.delta_prime -= s.xi;
  return s;
}

}  // namespace mde
