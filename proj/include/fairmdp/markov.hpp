#pragma once

#include "fairmdp/mdp.hpp"

namespace fairmdp {

/// State-to-state transition matrix of π: rows are from-states,
/// P_π(s, s') = Σ_a π(s,a)·P(s,a,s').
Matrix policy_transition_matrix(const Mdp& m, const StochasticPolicy& pi);

struct StationaryDist {
  Vector mu;
  long iterations{0};
  /// Total-variation distance between mu and mu·P_π at termination.
  Scalar residual{0};
};

/// Stationary distribution of π by exact power iteration, evolving the
/// distribution from every start state simultaneously.
///
/// The unichain assumption is verified, not assumed: if the per-start limits
/// disagree by more than 10·tol in total variation, UnichainViolation is
/// thrown. Distributions that keep oscillating (periodic chains) hit the
/// iteration cap and throw NonConvergence.
StationaryDist stationary_distribution(const Mdp& m, const StochasticPolicy& pi,
                                       Scalar tol = 1e-10,
                                       long max_iterations = 200000);

/// ε-mixing time of π: the smallest T ≥ 1 such that from every start state
/// the distribution after T transitions (δ_s·P_π^T) is within ε of μ^π in L1.
///
/// Computed by exact distribution evolution and a linear minimality scan:
/// the returned T satisfies the bound for every start and T-1 violates it
/// for some start (degenerate n=1 instances return 1). Throws NonConvergence
/// if the cap is exceeded.
long mixing_time(const Mdp& m, const StochasticPolicy& pi, Scalar eps,
                 long cap = 1000000);

}  // namespace fairmdp
