#pragma once

// Advisory check that the term weights, psi and the loss limits let a single
// confident distance term carry the aggregate score.
//
// Mixed case A: terms 1 and 3 see a value N in [gamma2, 2a) (a negative
// verdict) while term 2 sees P in [0, gamma1) (a positive verdict). Case B is
// the mirror image. With W_N, W_P the summed weights of the negative and
// positive sides, the aggregate Sum = W_N*N + W_P*P - psi ranges over
//
//   [W_N*gamma2 - psi,  2a*W_N + W_P*gamma1 - psi)
//
// and the configuration is consistent when that range lies inside
// [0, gamma1), i.e. the aggregate still classifies the fact as positive.
// If gamma1 == 0 no term can issue a positive verdict and the check holds
// vacuously.

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>

#include "mde/loss.hpp"
#include "mde/model.hpp"

namespace mde {

struct Prop5Case {
  double neg_weight = 0.0;
  double pos_weight = 0.0;
  double sum_lower = 0.0;  // inclusive
  double sum_upper = 0.0;  // exclusive
  bool ok = false;
};

struct Prop5Report {
  bool consistent = false;
  bool vacuous = false;
  // The `a` that was checked: the supplied value, or a witness when one
  // exists.
  std::optional<double> a;
  Prop5Case case_a;  // terms 1 and 3 negative, term 2 positive
  Prop5Case case_b;  // terms 1 and 3 positive, term 2 negative
  std::string message;
};

namespace detail {

inline Prop5Case prop5_case(double wn, double wp, double a, double psi,
                            double g1, double g2) {
  Prop5Case c;
  c.neg_weight = wn;
  c.pos_weight = wp;
  c.sum_lower = wn * g2 - psi;
  c.sum_upper = 2.0 * a * wn + wp * g1 - psi;
  c.ok = c.sum_lower >= 0.0 && c.sum_upper <= g1;
  return c;
}

}  // namespace detail

// When `a` is omitted the check searches for any a > gamma2 / 2.
inline Prop5Report check_prop5_consistency(const ScoreConfig& c,
                                           const LossState& s,
                                           std::optional<double> a = {}) {
  Prop5Report r;
  const double w13 = c.weights[0] + c.weights[2];
  const double w2 = c.weights[1];
  const double g1 = s.gamma1, g2 = s.gamma2, psi = c.psi;
  std::ostringstream msg;

  if (!(c.weights[0] > 0.0 && c.weights[1] > 0.0 && c.weights[2] > 0.0)) {
    r.message = "warning: weights of terms 1-3 must all be positive";
    return r;
  }
  if (g1 == 0.0) {
    r.consistent = true;
    r.vacuous = true;
    r.message = "consistent (vacuous: gamma1 = 0 admits no positive verdict)";
    return r;
  }

  if (!a) {
    // Each case bounds a from above; the largest admissible value is the
    // witness and must still exceed gamma2/2.
    const double a_max = std::min((g1 + psi - w2 * g1) / (2.0 * w13),
                                  (g1 + psi - w13 * g1) / (2.0 * w2));
    const bool lower_ok = w13 * g2 - psi >= 0.0 && w2 * g2 - psi >= 0.0;
    if (lower_ok && a_max > g2 / 2.0) a = a_max;
  }
  if (!a) {
    r.case_a = detail::prop5_case(w13, w2, g2 / 2.0, psi, g1, g2);
    r.case_b = detail::prop5_case(w2, w13, g2 / 2.0, psi, g1, g2);
    r.message = "inconsistent: no a > gamma2/2 keeps the aggregate inside "
                "[0, gamma1)";
    return r;
  }
  r.a = a;
  if (!(*a > g2 / 2.0)) {
    msg << "inconsistent: a = " << *a << " must exceed gamma2/2 = " << g2 / 2;
    r.message = msg.str();
    return r;
  }
  r.case_a = detail::prop5_case(w13, w2, *a, psi, g1, g2);
  r.case_b = detail::prop5_case(w2, w13, *a, psi, g1, g2);
  r.consistent = r.case_a.ok && r.case_b.ok;
  msg << (r.consistent ? "consistent" : "inconsistent") << ": a = " << *a
      << ", Sum in [" << r.case_a.sum_lower << ", " << r.case_a.sum_upper
      << ") / [" << r.case_b.sum_lower << ", " << r.case_b.sum_upper
      << "), need [0, " << g1 << ")";
  r.message = msg.str();
  return r;
}

}  // namespace mde
