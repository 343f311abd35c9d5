#pragma once

#include "fairmdp/fairness.hpp"
#include "fairmdp/mdp.hpp"
#include "fairmdp/planning.hpp"

#include <set>
#include <vector>

namespace fairmdp {

enum class InducedKind { Exploitation, Exploration };

/// Known-state MDP with the unknown states collapsed into one absorbing
/// state s0 (the last index of `model`). Γ-internal transitions are
/// preserved; all Γ→unknown mass is redirected to s0. Exploitation keeps the
/// source mean rewards on Γ and gives 0 at s0; exploration zeroes Γ and
/// rewards s0 with 1.
struct InducedMdp {
  Mdp model;
  InducedKind kind{InducedKind::Exploitation};
  std::vector<int> base_states;    ///< induced index i < |Γ| → base state
  std::vector<int> to_induced;     ///< base state → induced index, -1 outside Γ

  int absorbing_state() const { return static_cast<int>(base_states.size()); }
};

/// `model` may be the true MDP or an empirical plug-in; only its Γ rows are
/// read. Throws InvalidArgument on empty Γ.
InducedMdp build_exploitation(const Mdp& model, const std::set<int>& gammaset);
InducedMdp build_exploration(const Mdp& model, const std::set<int>& gammaset);

/// An induced MDP with per-state allowed-action sets. The mask comes from
/// the α-restriction of the *original task's* Q estimates (restriction
/// encodes task fairness; the induced rewards encode explore/exploit), so
/// the s0 row allows every action.
struct RestrictedInducedMdp {
  InducedMdp induced;
  ActionMask allowed;
};

/// Lifts restrict_mdp's allowed sets (computed from base_qstar over the base
/// state space) onto the induced state space.
RestrictedInducedMdp restrict_induced(InducedMdp induced,
                                      const Matrix& base_qstar, Scalar alpha,
                                      Scalar tie_tol = kDefaultTieTol);

/// Bracket form for estimated Q values: action a stays allowed in s unless
/// even its upper estimate falls more than α below the best lower estimate,
/// i.e. allowed iff q_upper(s,a) ≥ max_a' q_lower(s,a') − α − tie_tol.
/// Excluding on the pessimistic table alone would prune good actions that
/// merely lead toward unknown states; with exact tables (q_lower = q_upper)
/// this reduces to the plain restriction.
RestrictedInducedMdp restrict_induced(InducedMdp induced,
                                      const Matrix& base_q_lower,
                                      const Matrix& base_q_upper, Scalar alpha,
                                      Scalar tie_tol = kDefaultTieTol);

/// Probability that a `steps`-transition walk from base state s under π
/// (a policy over induced states) reaches s0, computed exactly by forward
/// distribution evolution (s0 absorbing makes reach = occupancy).
/// Monotone nondecreasing in steps. Throws InvalidArgument if s ∉ Γ.
Scalar escape_probability(const InducedMdp& induced, const StochasticPolicy& pi,
                          int base_state, long steps);

/// The exploit-or-explore decision at a known state.
struct Decision {
  enum class Variant { Exploit, Explore };

  Variant variant{Variant::Exploit};
  /// Fair optimal policy (uniform over the argmax set) of the chosen
  /// restricted induced MDP, over induced states.
  StochasticPolicy policy;
  Scalar escape_prob{0};
  Scalar threshold{0};
  long horizon{0};  ///< the T used; the walk length is 2T
};

/// Computes the optimal policy of the restricted exploration MDP and its
/// 2T-step escape probability p from s; explores iff p ≥ beta/(4T) with
/// beta = eps by default (the failure-probability accounting treats each
/// attempted exploration as a Bernoulli trial with success chance ε/(4T*)).
/// Otherwise returns the optimal policy of the restricted exploitation MDP.
Decision decide(int base_state, const RestrictedInducedMdp& exploit,
                const RestrictedInducedMdp& explore, long T, Scalar eps,
                Scalar plan_tol = kDefaultPlanTol,
                Scalar tie_tol = kDefaultTieTol);

/// Witness for the exploit-or-explore dichotomy at one known state: either an
/// exploitation policy whose T-step average value deficit against the best
/// T-step policy of M is ≤ β, or a policy whose 2T-step escape probability
/// exceeds β/T.
struct ExploitOrExploreWitness {
  enum class Kind { Exploit, Explore };

  int state{0};
  Kind kind{Kind::Exploit};
  std::vector<int> policy;  ///< deterministic actions per induced state
  Scalar deficit{0};        ///< exploit side: Ṽ − achieved average
  Scalar escape{0};         ///< explore side: 2T-step escape probability
};

/// Test utility: exhaustively searches deterministic policies on small
/// instances (k^n ≤ 243) and certifies the dichotomy at every s ∈ Γ. alpha
/// restricts the searched policies to M_Γ^α (default: unrestricted).
/// Throws InvalidArgument if the instance is too large, and WitnessNotFound
/// if some state has no witness — a correct implementation never observes
/// this.
struct WitnessNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<ExploitOrExploreWitness> verify_exploit_or_explore(
    const Mdp& m, const std::set<int>& gammaset, long T, Scalar beta,
    Scalar alpha = std::numeric_limits<Scalar>::infinity(),
    Scalar tie_tol = kDefaultTieTol);

}  // namespace fairmdp
