#include "fairmdp/simulate.hpp"

#include "fairmdp/markov.hpp"
#include "fairmdp/planning.hpp"

#include <cmath>

namespace fairmdp {

namespace {

void check_distribution(const Vector& dist, int k) {
  if (static_cast<int>(dist.size()) != k)
    throw InvalidArgument("agent emitted a distribution of the wrong size");
  if ((dist.array() < 0).any())
    throw InvalidArgument("agent emitted a negative action probability");
  if (std::abs(dist.sum() - 1.0) > 1e-9)
    throw InvalidArgument("agent emitted a distribution not summing to 1");
}

}  // namespace

Trace simulate(const Mdp& m, Learner& agent, long T, std::uint64_t seed,
               int start_state) {
  require_valid(m);
  if (T < 1) throw InvalidArgument("simulation needs T >= 1");
  if (start_state < 0 || start_state >= m.n)
    throw InvalidArgument("start state out of range");

  Rng rng(seed);
  Trace trace;
  trace.seed = seed;
  trace.steps.reserve(static_cast<std::size_t>(T));

  int s = start_state;
  for (long t = 1; t <= T; ++t) {
    Vector dist = agent.act(s);
    check_distribution(dist, m.k);
    const int a = rng.categorical(dist);
    const Scalar r = m.rewards[s].sample(rng);
    const int s_next = rng.categorical(m.P[a].row(s).transpose());
    trace.steps.push_back({t, s, std::move(dist), a, r});
    agent.observe(trace.steps.back(), s_next);
    s = s_next;
  }
  return trace;
}

Trace simulate(const Mdp& m, const StochasticPolicy& pi, long T,
               std::uint64_t seed, int start_state) {
  PolicyAgent agent(pi);
  return simulate(m, agent, T, seed, start_state);
}

Scalar epsilon_optimality_gap(const Mdp& m, const Trace& trace,
                              const Vector& vstar, const Vector& mustar) {
  if (trace.steps.empty()) throw InvalidArgument("trace is empty");
  if (vstar.size() != m.n || mustar.size() != m.n)
    throw InvalidArgument("value table or stationary distribution has wrong size");
  Scalar visited = 0;
  for (const TraceStep& step : trace.steps) {
    if (step.state < 0 || step.state >= m.n)
      throw InvalidArgument("trace state out of range");
    visited += vstar(step.state);
  }
  visited /= static_cast<Scalar>(trace.steps.size());
  return mustar.dot(vstar) - visited;
}

Scalar reward_rate_residual(const Mdp& m, const StochasticPolicy& pi, Scalar tol) {
  const Vector mu = stationary_distribution(m, pi, tol).mu;
  const PlanResult eval = policy_evaluation(m, pi, tol);
  const Vector rbar = m.mean_rewards();
  return std::abs(mu.dot(rbar) - (1 - m.gamma) * mu.dot(eval.v));
}

}  // namespace fairmdp
