#pragma once

#include "fairmdp/mdp.hpp"
#include "fairmdp/simulate.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace fairmdp {

enum class FairnessDefinition { Exact, Choice, Action };

std::string to_string(FairnessDefinition d);

/// One violating comparison: at step t in state s, action `better` had
/// Q*(s,better) (weakly or substantially, per definition) above
/// Q*(s,favored), yet the committed distribution put more weight on
/// `favored`. qgap = Q*(s,better) − Q*(s,favored);
/// pgap = L(s,favored) − L(s,better).
struct FairnessViolation {
  long t{0};
  int state{0};
  int better{0};
  int favored{0};
  Scalar qgap{0};
  Scalar pgap{0};
};

/// Auditor verdict over a whole trace. violations is capped at
/// kMaxRecordedViolations entries; violation_count always reports the true
/// total and the verdict is unaffected by the cap.
struct FairnessReport {
  FairnessDefinition definition{FairnessDefinition::Exact};
  Scalar alpha{0};
  bool pass{true};
  std::size_t violation_count{0};
  std::vector<FairnessViolation> violations;
};

inline constexpr std::size_t kMaxRecordedViolations = 10000;

/// Exact fairness: a violation is Q*(s,a) ≥ Q*(s,a') − tie_tol with
/// L(s,a) < L(s,a') − tie_tol. tie_tol converts the exact real-number inequalities
/// over real Q* into numerically robust predicates and must dominate the
/// planner tolerance by ≥ 100×.
FairnessReport audit_exact(const Trace& trace, const Matrix& qstar,
                           Scalar tie_tol = kDefaultTieTol);

/// α-choice fairness: the probability slack α is added on the distribution
/// side, L(s,a) < L(s,a') − α − tie_tol.
FairnessReport audit_choice(const Trace& trace, const Matrix& qstar,
                            Scalar alpha, Scalar tie_tol = kDefaultTieTol);

/// α-action fairness: the quality slack α is added on the Q side,
/// Q*(s,a) > Q*(s,a') + α + tie_tol.
FairnessReport audit_action(const Trace& trace, const Matrix& qstar,
                            Scalar alpha, Scalar tie_tol = kDefaultTieTol);

/// The α-restricted MDP M^α: per-state action sets pruned to
/// {a : Q*(s,a) ≥ max_a' Q*(s,a') − α − tie_tol}. The argmax action is always
/// allowed. Plan on it with value_iteration(base, allowed, tol).
struct RestrictedMdp {
  Mdp base;
  ActionMask allowed;

  std::vector<int> allowed_actions(int s) const;
};

RestrictedMdp restrict_mdp(const Mdp& m, const Matrix& qstar, Scalar alpha,
                           Scalar tie_tol = kDefaultTieTol);

/// The fair optimal policy: uniform over the argmax set of Q*(s,·) at
/// tolerance tie_tol. Optimal, and exactly fair on any trace it generates.
StochasticPolicy fair_optimal_policy(const Mdp& m, const Matrix& qstar,
                                     Scalar tie_tol = kDefaultTieTol);

/// Uniform distribution over the argmax set of one q row (the per-state core
/// of fair_optimal_policy; the induced planners reuse it on masked rows).
Vector uniform_over_argmax(const RowVector& q_row, Scalar tie_tol,
                           const ActionMask* allowed = nullptr, int state = 0);

}  // namespace fairmdp
