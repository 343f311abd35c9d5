#pragma once

#include "fairmdp/estimation.hpp"
#include "fairmdp/induced.hpp"
#include "fairmdp/simulate.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <variant>
#include <vector>

namespace fairmdp {

/// Fair-E³ parameters. Invariants: eps, alpha > 0; delta ∈ (0, 1/2);
/// gamma ∈ [0,1). tstar empty selects sequential mode (guesses 1, 2, …).
struct FairE3Config {
  Scalar eps{0.1};
  Scalar alpha{0.1};
  Scalar delta{0.1};
  Scalar gamma{0.9};

  /// ε-mixing time of the optimal policy, when known. Exploitation phases
  /// run tstar steps, exploration phases 2·tstar.
  std::optional<long> tstar;

  /// Known-state thresholds: desk-scale runs override mQ directly; the
  /// formula values (scale knob threshold_scale) are astronomically large.
  std::optional<long> mq_override;
  Scalar threshold_scale{1.0};

  /// Random-trajectory length; 0 derives horizon_time(eps, gamma).
  int horizon{0};

  /// Exploitation phases per sequential macro-cycle; 0 derives
  /// ⌈ln(1/δ)/ε²⌉ from the failure accounting.
  long min_exploit_phases{0};

  /// Explore iff the 2T-step escape probability is ≥ decide_beta/(4T);
  /// 0 derives decide_beta = eps.
  Scalar decide_beta{0};

  /// Multiplier on the sequential-mode exploration budget
  /// ⌈g·n·mQ·ln(n/δ)/ε⌉ for guess g.
  Scalar seq_budget_scale{1.0};

  Scalar plan_tol{kDefaultPlanTol};
  Scalar tie_tol{kDefaultTieTol};
};

/// Throws InvalidArgument on any violated config invariant.
void validate(const FairE3Config& cfg);

struct DecisionEvent {
  long t{0};
  int state{0};
  Decision::Variant variant{Decision::Variant::Exploit};
  Scalar p{0};
  Scalar threshold{0};
  std::uint64_t policy_id{0};
};

/// The Fair-E³ learner.
///
/// Dispatch per step: an unknown state starts (or an active random
/// trajectory continues) a length-H uniformly random trajectory; a known
/// state at a phase boundary runs the exploit-or-explore decision on the
/// α-restricted induced MDPs built from the current pessimistic estimates;
/// mid-phase the active policy's distribution is emitted; arriving at an
/// unknown state mid-policy aborts the phase into a random trajectory.
/// A random trajectory always runs its full H steps, even through known
/// states, so trajectory counting stays exact.
class FairE3 final : public Learner {
 public:
  FairE3(int n, int k, FairE3Config cfg);

  /// Test hook: plan from exact quantities instead of learned estimates.
  /// The phase machine is unchanged; the injected model, Q* table and known
  /// set replace the plug-in estimates wherever planning consumes them.
  struct Oracle {
    Mdp model;
    Matrix qstar;
    std::set<int> known;
  };
  void inject_oracle(Oracle oracle);

  Vector act(int state) override;
  void observe(const TraceStep& step, int next_state) override;

  bool state_known(int s) const;
  const KnownModel& known_model() const { return km_; }
  long current_tstar() const;

  long steps_random() const { return steps_random_; }
  long steps_explore() const { return steps_explore_; }
  long steps_exploit() const { return steps_exploit_; }
  long trajectories_taken() const { return trajectories_; }
  long explorations_attempted() const { return explorations_; }
  long exploit_phases_completed() const { return exploit_phases_; }
  const std::vector<std::pair<long, int>>& known_curve() const {
    return known_curve_;
  }
  const std::vector<DecisionEvent>& decisions() const { return decisions_; }

 private:
  struct Deciding {};
  struct RandomTrajectory {
    int remaining{0};
    int root{0};
    std::vector<TransitionRecord> buffer;
  };
  struct FollowingPolicy {
    Decision::Variant variant{Decision::Variant::Exploit};
    StochasticPolicy policy;       // over induced states
    std::vector<int> to_induced;   // base → induced snapshot
    long remaining{0};
  };

  void plan(int state);
  std::set<int> effective_known() const;
  long seq_exploration_budget() const;
  void finish_exploit_phase();
  void maybe_advance_guess();

  int n_, k_;
  FairE3Config cfg_;
  int horizon_;
  long min_exploit_phases_;
  KnownModel km_;
  std::optional<Oracle> oracle_;
  std::variant<Deciding, RandomTrajectory, FollowingPolicy> phase_;

  long t_{0};
  long steps_random_{0}, steps_explore_{0}, steps_exploit_{0};
  long trajectories_{0}, explorations_{0}, exploit_phases_{0};
  std::vector<std::pair<long, int>> known_curve_;
  std::vector<DecisionEvent> decisions_;

  // sequential mode
  long seq_guess_{1};
  long seq_explorations_in_cycle_{0};
  long seq_exploit_phases_in_cycle_{0};
  Scalar seq_cycle_reward_{0};
  long seq_cycle_exploit_steps_{0};
};

struct FairE3Metrics {
  std::uint64_t seed{0};
  long T{0};
  Scalar gap{0};
  long steps_random{0};
  long steps_explore{0};
  long steps_exploit{0};
  long trajectories{0};
  long explorations_attempted{0};
  long exploit_phases{0};
  long final_tstar{0};
  std::vector<std::pair<long, int>> known_curve;
  std::vector<DecisionEvent> decisions;
};

/// End-to-end driver: runs Fair-E³ for T steps and reports the trace plus
/// metrics; gap is computed against the oracle V* and the stationary
/// distribution of the (lowest-index) optimal policy.
std::pair<Trace, FairE3Metrics> run_fair_e3(const Mdp& m,
                                            const FairE3Config& cfg, long T,
                                            std::uint64_t seed,
                                            int start_state = 0);

/// Fair baseline: uniform over all actions regardless of history.
std::unique_ptr<Learner> baseline_uniform(int n, int k);

/// Unfair contrast learner: balanced wandering over least-tried actions,
/// then deterministic escape/exploit planning on its empirical model with no
/// fairness restriction — the optimism-flavored behavior Fair-E³ forbids.
/// Intentionally fails the exact-fairness audit on decisive instances.
std::unique_ptr<Learner> baseline_greedy_e3(int n, int k, Scalar gamma);

}  // namespace fairmdp
