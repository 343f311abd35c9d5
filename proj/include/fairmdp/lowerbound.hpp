#pragma once

#include "fairmdp/mdp.hpp"
#include "fairmdp/simulate.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace fairmdp {

/// The lower-bound chain family M(x): n states in a line, k actions.
/// Action k-1 advances s_i → s_{min(i+1,n)}, every other action resets to
/// s_1; all transitions deterministic. R̄(s_i) = 0.5 for i < n and
/// R̄(s_n) = x (point masses). x ∈ {0.5, 1} in the source experiments;
/// any x ∈ [0,1] is accepted for sensitivity sweeps.
struct ChainSpec {
  int n{3};
  int k{2};
  Scalar x{1.0};
  Scalar gamma{0.9};
};

Mdp make_chain(const ChainSpec& spec);

/// Index of the advancing action (the last one, by convention).
inline int chain_advance_action(const ChainSpec& spec) { return spec.k - 1; }

/// Closed-form V* of the chain for the advance-optimal regime x ≥ 0.5:
/// V*(s_i) = 0.5·(1-γ^{n-i})/(1-γ) + x·γ^{n-i}/(1-γ) with i 1-based.
/// Throws InvalidArgument for x < 0.5 (use value_iteration there).
Vector chain_vstar(const ChainSpec& spec);

/// Upper chain value bound (1+2γ^{n-i+1})/(2(1-γ)); strict
/// above V*(s_i) for x = 1 whenever γ > 1/2, an exact equality at γ = 1/2.
Scalar chain_vstar_bound(const ChainSpec& spec, int i_one_based);

/// Expected steps for the uniform-random policy to first reach s_n from s_1.
struct HittingTime {
  Scalar value{0};
  /// True while k^n is exactly representable in a double (no rounding).
  bool exact{true};
};

/// Closed form (k^n − k)/(k − 1).
HittingTime chain_hitting_time(int n, int k);

/// The same value via the linear recurrence
/// E_i = 1 + (1-1/k)·E_1 + (1/k)·E_{i+1}, E_n = 0 — kept independent of the
/// closed form for cross-validation.
Scalar chain_hitting_time_recurrence(int n, int k);

/// Per-seed record of the coupling experiment: the first arrival at s_n is
/// the observation distinguishing M(0.5) from M(1).
struct FirstHitRecord {
  std::uint64_t seed{0};
  long steps_to_reach_sn{0};  ///< transitions taken; t_cap if censored
  bool distinguished{false};  ///< reached s_n within t_cap
};

using LearnerFactory = std::function<std::unique_ptr<Learner>(const Mdp&)>;

/// Runs the learner on M(x) once per seed and records the first arrival at
/// s_n (or censors at t_cap). Deterministic per seed; seeds are used directly
/// (callers derive them from a root seed with the standard splitting rule).
/// Seeds run in parallel across up to `jobs` threads; the factory must be
/// callable concurrently. Results are ordered by seed index either way.
std::vector<FirstHitRecord> coupling_experiment(
    const ChainSpec& spec, const LearnerFactory& make_learner,
    const std::vector<std::uint64_t>& seeds, long t_cap, int jobs = 1);

/// seeds {root ^ 0, …, root ^ (count-1)} per the splitting rule.
std::vector<std::uint64_t> seed_range(std::uint64_t root, std::size_t count);

/// The maximally-biased α-choice-fair learner used for the scaling
/// experiments: advance probability 1/k + α·(k-1)/k, the remaining mass
/// split evenly (every action pair differs by at most α).
std::unique_ptr<Learner> make_choice_fair_biased(const Mdp& chain, Scalar alpha);

/// Chain size ⌈log(1/(2α))/(1-γ)⌉ at which the chain family witnesses the
/// α-action-fairness lower bound (every Q gap along it exceeds α).
int action_fair_chain_size(Scalar alpha, Scalar gamma);

}  // namespace fairmdp
