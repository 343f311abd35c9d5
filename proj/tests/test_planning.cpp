#include "fairmdp/lowerbound.hpp"
#include "fairmdp/planning.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace fairmdp;
using namespace fairmdp::testing;

TEST_CASE("value iteration matches the chain closed form") {
  const PlanResult plan = value_iteration(make_chain({3, 2, 1.0, 0.9}));
  CHECK(plan.v(0) == doctest::Approx(9.05).epsilon(1e-9));
  CHECK(plan.v(1) == doctest::Approx(9.5).epsilon(1e-9));
  CHECK(plan.v(2) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("constant-reward chain has constant V*") {
  const PlanResult plan = value_iteration(make_chain({3, 2, 0.5, 0.9}));
  for (int s = 0; s < 3; ++s)
    CHECK(plan.v(s) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("Q* reflects the one-step Bellman split on the chain") {
  const PlanResult plan = value_iteration(make_chain({3, 2, 1.0, 0.9}));
  CHECK(plan.q(0, 1) == doctest::Approx(9.05));         // advance
  CHECK(plan.q(0, 0) == doctest::Approx(0.5 + 0.9 * 9.05));  // reset
}

TEST_CASE("planner rejects bad inputs") {
  const Mdp m = make_chain({3, 2, 1.0, 0.9});
  CHECK_THROWS_AS(value_iteration(m, 0.0), InvalidArgument);
  Mdp bad = m;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(value_iteration(bad), InvalidMdp);
}

TEST_CASE("policy evaluation on the chain") {
  const Mdp m1 = make_chain({3, 2, 1.0, 0.9});
  const StochasticPolicy always_r = StochasticPolicy::deterministic({1, 1, 1}, 2);
  const PlanResult vr = policy_evaluation(m1, always_r);
  CHECK(vr.v(0) == doctest::Approx(9.05));  // always-advance is optimal
  CHECK(vr.v(2) == doctest::Approx(10.0));

  const Mdp half = make_chain({4, 2, 0.5, 0.9});
  const PlanResult vu = policy_evaluation(half, StochasticPolicy::uniform(4, 2));
  for (int s = 0; s < 4; ++s) CHECK(vu.v(s) == doctest::Approx(5.0));

  const StochasticPolicy always_l = StochasticPolicy::deterministic({0, 0, 0}, 2);
  const PlanResult vl = policy_evaluation(m1, always_l);
  CHECK(vl.v(0) == doctest::Approx(0.5 / (1 - 0.9)));  // self-loop at s1
}

TEST_CASE("horizon time") {
  CHECK(horizon_time(0.1, 0.9) == 44);
  CHECK(horizon_time(0.1, 0.5) == 5);
  // eps*(1-gamma) = gamma makes the formula exactly 1
  CHECK(horizon_time(1.0, 0.5) == 1);
  CHECK_THROWS_AS(horizon_time(0.0, 0.9), InvalidArgument);
  CHECK_THROWS_AS(horizon_time(0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(horizon_time(20.0, 0.9), InvalidArgument);
}

TEST_CASE("Bellman residual and max-consistency on random instances") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Mdp m = random_mdp(rng);
    const PlanResult plan = value_iteration(m, 1e-9);
    CHECK(bellman_residual(m, plan.v) <= 1e-9);
    for (int s = 0; s < m.n; ++s) {
      CHECK(plan.q.row(s).maxCoeff() == doctest::Approx(plan.v(s)).epsilon(2e-9));
      CHECK(plan.v(s) >= -1e-12);
      CHECK(plan.v(s) <= m.value_bound() + 1e-9);
    }
  }
}

TEST_CASE("reward monotonicity: bumping a mean never lowers V*") {
  Rng rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    const Mdp m = random_mdp(rng);
    Mdp bumped = m;
    const int s = uniform_int(rng, 0, m.n - 1);
    bumped.rewards[s].param =
        std::min<Scalar>(1.0, bumped.rewards[s].param + 0.3 * rng.uniform01());
    const Vector v0 = value_iteration(m).v;
    const Vector v1 = value_iteration(bumped).v;
    for (int i = 0; i < m.n; ++i) CHECK(v1(i) >= v0(i) - 1e-9);
  }
}

TEST_CASE("masked value iteration: singleton masks recover policy evaluation") {
  Rng rng(303);
  const Mdp m = random_mdp(rng, 4, 3, 0.9);
  const std::vector<int> actions = random_deterministic_actions(rng, 4, 3);
  ActionMask mask = ActionMask::Constant(4, 3, false);
  for (int s = 0; s < 4; ++s) mask(s, actions[s]) = true;
  const PlanResult masked = value_iteration(m, mask);
  const PlanResult eval =
      policy_evaluation(m, StochasticPolicy::deterministic(actions, 3));
  for (int s = 0; s < 4; ++s)
    CHECK(masked.v(s) == doctest::Approx(eval.v(s)).epsilon(1e-8));

  ActionMask empty = mask;
  empty.row(1).setZero();
  CHECK_THROWS_AS(value_iteration(m, empty), InvalidArgument);
}

TEST_CASE("finite horizon values accumulate the discounted path") {
  const Mdp m = make_chain({3, 2, 1.0, 0.9});
  const StochasticPolicy always_r = StochasticPolicy::deterministic({1, 1, 1}, 2);
  // from s1: 0.5 + 0.9*0.5 + 0.81*1
  CHECK(finite_horizon_values(m, always_r, 3)(0) ==
        doctest::Approx(0.5 + 0.45 + 0.81));
  CHECK(finite_horizon_values(m, always_r, 0)(0) == 0.0);
}

TEST_CASE("single-state single-action MDP plans trivially") {
  Mdp m;
  m.n = 1;
  m.k = 1;
  m.gamma = 0.5;
  m.P.assign(1, Matrix::Ones(1, 1));
  m.rewards = {RewardDist::point_mass(1.0)};
  const PlanResult plan = value_iteration(m);
  CHECK(plan.v(0) == doctest::Approx(2.0));
  const PlanResult eval = policy_evaluation(m, StochasticPolicy::uniform(1, 1));
  CHECK(eval.v(0) == doctest::Approx(2.0));
}
