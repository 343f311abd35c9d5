#pragma once

#include "fairmdp/mdp.hpp"

namespace fairmdp {

/// Planner output: per-state values v, per-(state, action) values q,
/// iterations used and the final Bellman residual in sup norm.
///
/// Conventions (fixed project-wide): the current state's reward accrues
/// undiscounted at the current step, so Q(s,a) = R̄(s) + γ·Σ_{s'} P(s,a,s')·V(s')
/// and the value of a path s_1, s_2, … is Σ_{t≥1} γ^{t-1}·R̄(s_t).
struct PlanResult {
  Vector v;
  Matrix q;
  long iterations{0};
  Scalar residual{0};
};

/// Q(s,a) = R̄(s) + γ·Σ_{s'} P(s,a,s')·v(s') for a given state-value vector.
Matrix q_from_values(const Mdp& m, const Vector& v);

/// Value iteration to the optimal (V*, Q*).
///
/// Stops when the sup-norm sweep change is ≤ tol·(1-γ)/(2γ), which guarantees
/// the returned fixed point is within tol of exact; the Bellman residual of
/// the result is ≤ tol.
PlanResult value_iteration(const Mdp& m, Scalar tol = kDefaultPlanTol);

/// Value iteration with per-state allowed-action sets (the α-restricted MDP
/// and the induced planning constructions use this). Every state must allow
/// at least one action. The returned q is filled for all (s,a); v maximizes
/// over allowed actions only.
PlanResult value_iteration(const Mdp& m, const ActionMask& allowed,
                           Scalar tol = kDefaultPlanTol);

/// Fixed-policy evaluation to (V^π, Q^π); same contract as value_iteration
/// with the max replaced by the π-expectation.
PlanResult policy_evaluation(const Mdp& m, const StochasticPolicy& pi,
                             Scalar tol = kDefaultPlanTol);

/// T-step expected discounted reward V^π(s, T) of following π from s,
/// by backward induction.
Vector finite_horizon_values(const Mdp& m, const StochasticPolicy& pi, int T);

/// Horizon time H^γ_ε = ⌈log(ε(1-γ))/log(γ)⌉: the number of steps after
/// which discounted tails contribute less than ε.
/// Requires ε > 0, 0 < γ < 1 and ε(1-γ) < 1.
int horizon_time(Scalar eps, Scalar gamma);

/// Lowest-index argmax over allowed actions, with ties detected at tie_tol.
int greedy_action(const RowVector& q_row, int k, Scalar tie_tol,
                  const ActionMask* allowed = nullptr, int state = 0);

/// Deterministic greedy policy (lowest-index argmax at tie_tol per state).
StochasticPolicy greedy_policy(const Matrix& q, Scalar tie_tol = kDefaultTieTol);

}  // namespace fairmdp
