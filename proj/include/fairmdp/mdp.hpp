#pragma once

#include "fairmdp/types.hpp"

#include <string>
#include <vector>

namespace fairmdp {

/// Reward distribution of a single state. Support is confined to [0,1]:
/// a point mass at v, or a Bernoulli coin with success probability p.
struct RewardDist {
  enum class Kind { PointMass, Bernoulli };

  Kind kind{Kind::PointMass};
  Scalar param{0};

  static RewardDist point_mass(Scalar v) { return {Kind::PointMass, v}; }
  static RewardDist bernoulli(Scalar p) { return {Kind::Bernoulli, p}; }

  /// Mean equals the parameter for both kinds.
  Scalar mean() const { return param; }

  Scalar sample(Rng& rng) const {
    return kind == Kind::PointMass ? param : (rng.bernoulli(param) ? 1.0 : 0.0);
  }
};

/// Finite tabular MDP: n states, k actions, transition tensor P indexed
/// (state, action, next state), per-state reward distributions with means
/// in [0,1], and discount gamma in [0,1).
///
/// P is stored as one n-by-n matrix per action: P[a](s, s') is the
/// probability of landing in s' after taking a in s. Row s of P[a] must be
/// a probability vector.
struct Mdp {
  int n{0};
  int k{0};
  std::vector<Matrix> P;
  std::vector<RewardDist> rewards;
  Scalar gamma{0.9};

  Scalar p(int s, int a, int s2) const { return P[a](s, s2); }

  /// The mean-reward vector R̄.
  Vector mean_rewards() const {
    Vector r(n);
    for (int s = 0; s < n; ++s) r(s) = rewards[s].mean();
    return r;
  }

  /// Upper bound 1/(1-gamma) on any discounted value.
  Scalar value_bound() const { return 1.0 / (1.0 - gamma); }
};

/// One violated invariant, with the indices where it was observed.
struct ValidationIssue {
  std::string what;
  int state{-1};
  int action{-1};
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

/// Checks every Mdp invariant and reports all violations (row sums within
/// 1e-12, no negative transition probabilities, reward parameters in [0,1],
/// gamma in [0,1), consistent tensor shapes).
ValidationReport validate_mdp(const Mdp& m);

/// Throws InvalidMdp naming the first violation. Planning entry points call
/// this so invalid models fail loudly instead of producing garbage values.
void require_valid(const Mdp& m);

/// Stationary stochastic policy: row s of dist is the action distribution
/// committed in state s.
struct StochasticPolicy {
  Matrix dist;

  int n() const { return static_cast<int>(dist.rows()); }
  int k() const { return static_cast<int>(dist.cols()); }

  static StochasticPolicy uniform(int n, int k) {
    return {Matrix::Constant(n, k, Scalar(1) / k)};
  }

  /// Point mass on actions[s] in each state s.
  static StochasticPolicy deterministic(const std::vector<int>& actions, int k);

  bool valid() const;
};

}  // namespace fairmdp
