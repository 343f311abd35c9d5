#pragma once

#include "fairmdp/mdp.hpp"

#include <cstdint>
#include <vector>

namespace fairmdp {

/// One audited step: the state occupied, the full action distribution the
/// agent committed to before anything was sampled, the sampled action and
/// the realized reward. t is 1-based; step 1 records the start state.
struct TraceStep {
  long t{0};
  int state{0};
  Vector dist;
  int action{0};
  Scalar reward{0};
};

/// The audited record of a run.
struct Trace {
  std::vector<TraceStep> steps;
  std::uint64_t seed{0};

  long length() const { return static_cast<long>(steps.size()); }
};

/// An online agent. act must return the full action distribution for the
/// current state *before* the simulator samples from it (the audit hooks
/// depend on this); observe feeds back the sampled step and the landing
/// state. Stationary policies ignore observe.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual Vector act(int state) = 0;
  virtual void observe(const TraceStep& step, int next_state) {
    (void)step;
    (void)next_state;
  }
};

/// Stationary-policy agent.
class PolicyAgent final : public Learner {
 public:
  explicit PolicyAgent(StochasticPolicy pi) : pi_(std::move(pi)) {}
  Vector act(int state) override { return pi_.dist.row(state); }

 private:
  StochasticPolicy pi_;
};

/// Runs the interaction protocol for exactly T ≥ 1 steps from start_state.
///
/// Per step, in fixed draw order: action ~ committed distribution, reward ~
/// R(s) (point masses consume no randomness), next state ~ P(s,a,·). The
/// result is a deterministic function of (m, agent, T, seed, start_state).
/// Throws InvalidArgument on T < 1 or if the agent emits an invalid
/// distribution.
Trace simulate(const Mdp& m, Learner& agent, long T, std::uint64_t seed,
               int start_state = 0);

Trace simulate(const Mdp& m, const StochasticPolicy& pi, long T,
               std::uint64_t seed, int start_state = 0);

/// ε-optimality gap of a trace: E_{s~μ*}[V*(s)] − (1/T)·Σ_t V*(s_t).
/// May be negative when the trace beats the stationary average.
Scalar epsilon_optimality_gap(const Mdp& m, const Trace& trace,
                              const Vector& vstar, const Vector& mustar);

/// |μ^π·R̄ − (1-γ)·μ^π·V^π|; zero up to planner/stationary tolerances.
Scalar reward_rate_residual(const Mdp& m, const StochasticPolicy& pi,
                         Scalar tol = 1e-10);

}  // namespace fairmdp
