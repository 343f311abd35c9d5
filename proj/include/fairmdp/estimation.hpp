#pragma once

#include "fairmdp/mdp.hpp"
#include "fairmdp/planning.hpp"

#include <set>
#include <span>
#include <vector>

namespace fairmdp {

/// Known-state sample thresholds (m1, m2, mQ). In formula mode,
///   m1 = ⌈scale·k^{H+3}·n·(1/((1-γ)α))²·ln(k/δ)⌉
///   m2 = ⌈scale·(n/min(ε,α))⁴·H⁸·ln(1/δ)⌉
///   mQ = k·max(m1, m2),
/// the big-O constants set to 1 behind a scale knob (the source bounds leave
/// them unspecified and the literal values are astronomical; desk experiments
/// run in override mode with mQ in the tens to hundreds).
struct Thresholds {
  enum class Mode { Formula, Override };

  long m1{0};
  long m2{0};
  long mq{0};
  Scalar scale{1.0};
  Mode mode{Mode::Formula};

  static Thresholds override_mq(long mq) {
    Thresholds t;
    t.mq = mq;
    t.mode = Mode::Override;
    return t;
  }
};

Thresholds known_thresholds(int n, int k, int H, Scalar alpha, Scalar eps,
                            Scalar gamma, Scalar delta, Scalar scale = 1.0);

/// One observed transition: reward realized at `state`, then `action` led
/// to `next_state`.
struct TransitionRecord {
  int state{0};
  int action{0};
  Scalar reward{0};
  int next_state{0};
};

/// Empirical transition/reward estimates restricted to the known set Γ.
struct EmpiricalModel {
  std::vector<int> known_states;  ///< sorted Γ
  std::vector<Matrix> phat;       ///< per action; rows valid only for s ∈ Γ
  Vector rhat;                    ///< valid only on Γ
};

/// Bracketed plug-in Q estimates: value iteration on the empirical model
/// with unknown states pessimistically absorbed at reward 0 and
/// optimistically absorbed at reward 1 (value 1/(1-γ)). Restriction
/// decisions consume the pessimistic table so no action is ever admitted on
/// optimistic speculation alone.
struct QEstimates {
  Matrix pessimistic;
  Matrix optimistic;
  Vector v_pessimistic;
  Vector v_optimistic;
};

/// Plain-data checkpoint of a KnownModel (experiment snapshots serialize
/// this). Γ is derived from the counts, not stored.
struct KnownModelSnapshot {
  int n{0};
  int k{0};
  Thresholds thresholds;
  std::vector<long> trajectory_counts;                  // [s]
  std::vector<std::vector<long>> visit_counts;          // [s][a]
  std::vector<std::vector<std::vector<long>>> next_counts;  // [s][a][s']
  std::vector<long> reward_counts;                      // [s]
  std::vector<Scalar> reward_sums;
  std::vector<Scalar> reward_sumsqs;
};

/// Visit statistics and known-state bookkeeping.
///
/// Membership rule: s ∈ Γ iff trajectory_count(s) ≥ mQ, where only
/// trajectories *rooted* at s advance trajectory_count(s); every visited
/// (s,a) pair along any trajectory or policy phase contributes to the
/// empirical transition and reward counts.
class KnownModel {
 public:
  KnownModel(int n, int k, Thresholds thresholds);
  explicit KnownModel(const KnownModelSnapshot& snap);

  KnownModelSnapshot snapshot() const;

  int n() const { return n_; }
  int k() const { return k_; }
  const Thresholds& thresholds() const { return thresholds_; }

  /// Ingests one transition into the model counts (no Γ effect).
  void record_transition(const TransitionRecord& rec);

  /// Adds another model's counts into this one (parallel trajectory
  /// collection merges per-worker deltas this way; the operation is
  /// associative and commutative). Shapes and thresholds must match.
  void merge(const KnownModel& other);

  /// Ingests one uniformly-random trajectory rooted at traj.front().state:
  /// all transitions feed the model counts, the root's trajectory count
  /// advances, and any state newly crossing mQ is returned. Throws
  /// InvalidArgument on an empty or wrongly-sized trajectory (expected_len
  /// < 0 skips the length check).
  std::vector<int> record_trajectory(std::span<const TransitionRecord> traj,
                                     long expected_len = -1);

  bool is_known(int s) const { return gammaset_.count(s) > 0; }
  const std::set<int>& gammaset() const { return gammaset_; }
  long trajectory_count(int s) const { return traj_count_[s]; }
  long visit_count(int s, int a) const { return sa_count_(s, a); }
  long next_count(int s, int a, int s2) const { return next_count_[a](s, s2); }
  long reward_count(int s) const { return reward_count_[s]; }
  Scalar reward_sum(int s) const { return reward_sum_[s]; }
  Scalar reward_sumsq(int s) const { return reward_sumsq_[s]; }

  /// Maximum-likelihood P̂ and R̄̂ over Γ. Throws InvalidArgument if some
  /// (s,a) with s ∈ Γ was never visited (thresholds too small or bookkeeping
  /// bug). Γ = ∅ yields an empty model.
  EmpiricalModel empirical_model() const;

  /// The empirical model completed to a full MDP: Γ rows are the ML
  /// estimates, unknown states self-loop with reward 0 (pessimistic) or
  /// reward 1 (optimistic).
  Mdp plug_in_mdp(Scalar gamma, bool optimistic) const;

 private:
  int n_, k_;
  Thresholds thresholds_;
  std::vector<long> traj_count_;
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> sa_count_;
  std::vector<Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>> next_count_;
  std::vector<long> reward_count_;
  std::vector<Scalar> reward_sum_;
  std::vector<Scalar> reward_sumsq_;
  std::set<int> gammaset_;
};

QEstimates q_estimates(const KnownModel& km, Scalar gamma,
                       Scalar tol = kDefaultPlanTol);

/// β-approximation check: true iff |R̄_m − R̄_mhat| ≤ β at every state and
/// |P_m − P_mhat| ≤ β entrywise. On failure the first violating entry is
/// reported (action = -1 marks a reward entry). Throws on shape mismatch.
struct BetaApproxResult {
  bool ok{true};
  int state{-1};
  int action{-1};
  int next{-1};
  Scalar deviation{0};
};

BetaApproxResult beta_approx_check(const Mdp& m, const Mdp& mhat, Scalar beta);

}  // namespace fairmdp
