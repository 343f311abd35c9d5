#include "fairmdp/estimation.hpp"
#include "fairmdp/lowerbound.hpp"
#include "fairmdp/planning.hpp"
#include "fairmdp/simulate.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace fairmdp;
using namespace fairmdp::testing;

namespace {

// Collect one uniformly-random length-H rooted trajectory on m from `root`.
std::vector<TransitionRecord> rooted_trajectory(const Mdp& m, int root, int H,
                                                Rng& rng) {
  std::vector<TransitionRecord> traj;
  int s = root;
  for (int t = 0; t < H; ++t) {
    const int a = uniform_int(rng, 0, m.k - 1);
    const Scalar r = m.rewards[s].sample(rng);
    const int s2 = rng.categorical(m.P[a].row(s).transpose());
    traj.push_back({s, a, r, s2});
    s = s2;
  }
  return traj;
}

}  // namespace

TEST_CASE("threshold formulas at the worked example") {
  const Thresholds t = known_thresholds(2, 2, 2, 0.5, 0.5, 0.5, 0.5, 1.0);
  CHECK(t.m1 == 1420);
  CHECK(t.m2 == 45427);
  CHECK(t.mq == 90854);
  CHECK_THROWS_AS(known_thresholds(2, 2, 2, 0.5, 0.5, 0.5, 0.5, 0.0),
                  InvalidArgument);
}

TEST_CASE("threshold scale knob and override mode") {
  const Thresholds t = known_thresholds(2, 2, 2, 0.5, 0.5, 0.5, 0.5, 0.01);
  CHECK(t.m1 == 15);     // ceil(14.196)
  CHECK(t.m2 == 455);    // ceil(454.267)
  CHECK(t.mq == 910);
  const Thresholds o = Thresholds::override_mq(25);
  CHECK(o.mq == 25);
  CHECK(o.mode == Thresholds::Mode::Override);
}

TEST_CASE("known-set membership crosses exactly at mQ rooted trajectories") {
  const Mdp m = make_chain({3, 2, 1.0, 0.9});
  KnownModel km(3, 2, Thresholds::override_mq(3));
  Rng rng(5);
  for (int i = 0; i < 2; ++i)
    km.record_trajectory(rooted_trajectory(m, 0, 4, rng), 4);
  CHECK_FALSE(km.is_known(0));
  const std::vector<int> newly =
      km.record_trajectory(rooted_trajectory(m, 0, 4, rng), 4);
  REQUIRE(newly.size() == 1);
  CHECK(newly[0] == 0);
  CHECK(km.is_known(0));
  // a trajectory rooted at an already-known state updates counts only
  const long visits_before = km.visit_count(0, 0) + km.visit_count(0, 1);
  const std::vector<int> again =
      km.record_trajectory(rooted_trajectory(m, 0, 4, rng), 4);
  CHECK(again.empty());
  CHECK(km.visit_count(0, 0) + km.visit_count(0, 1) > visits_before);
  CHECK(km.trajectory_count(0) == 4);
}

TEST_CASE("malformed trajectories are rejected") {
  KnownModel km(3, 2, Thresholds::override_mq(2));
  CHECK_THROWS_AS(km.record_trajectory({}, -1), InvalidArgument);
  const std::vector<TransitionRecord> wrong_len = {{0, 1, 0.5, 1}};
  CHECK_THROWS_AS(km.record_trajectory(wrong_len, 2), InvalidArgument);
  const std::vector<TransitionRecord> broken = {{0, 1, 0.5, 1}, {2, 0, 0.5, 0}};
  CHECK_THROWS_AS(km.record_trajectory(broken, 2), InvalidArgument);
}

TEST_CASE("gamma set never shrinks") {
  const Mdp m = make_chain({4, 2, 1.0, 0.9});
  KnownModel km(4, 2, Thresholds::override_mq(2));
  Rng rng(6);
  std::size_t prev = 0;
  for (int i = 0; i < 60; ++i) {
    const int root = uniform_int(rng, 0, 3);
    km.record_trajectory(rooted_trajectory(m, root, 5, rng), 5);
    CHECK(km.gammaset().size() >= prev);
    prev = km.gammaset().size();
  }
  CHECK(prev == 4);
}

TEST_CASE("deterministic instances estimate exactly after one visit per pair") {
  const Mdp m = make_chain({3, 2, 1.0, 0.9});
  KnownModel km(3, 2, Thresholds::override_mq(1));
  // visit every (s,a) once via hand-rolled rooted trajectories
  km.record_trajectory(std::vector<TransitionRecord>{{0, 0, 0.5, 0}, {0, 1, 0.5, 1}}, 2);
  km.record_trajectory(std::vector<TransitionRecord>{{1, 0, 0.5, 0}, {0, 0, 0.5, 0}}, 2);
  km.record_trajectory(std::vector<TransitionRecord>{{1, 1, 0.5, 2}, {2, 0, 1.0, 0}}, 2);
  km.record_trajectory(std::vector<TransitionRecord>{{2, 1, 1.0, 2}, {2, 1, 1.0, 2}}, 2);
  REQUIRE(km.gammaset().size() == 3);
  const EmpiricalModel em = km.empirical_model();
  for (int a = 0; a < 2; ++a)
    for (int s = 0; s < 3; ++s)
      for (int s2 = 0; s2 < 3; ++s2)
        CHECK(em.phat[a](s, s2) == m.P[a](s, s2));
  CHECK(em.rhat(2) == 1.0);

  // plug-in Q on the fully-known deterministic chain equals Q*
  const QEstimates est = q_estimates(km, 0.9);
  const Matrix qstar = value_iteration(m).q;
  CHECK((est.pessimistic - qstar).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((est.optimistic - qstar).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("empty known set yields an empty empirical model") {
  KnownModel km(3, 2, Thresholds::override_mq(5));
  const EmpiricalModel em = km.empirical_model();
  CHECK(em.known_states.empty());
  CHECK_THROWS_AS(q_estimates(km, 0.9), InvalidArgument);
}

TEST_CASE("unvisited pair inside the known set is an error") {
  KnownModel km(2, 2, Thresholds::override_mq(1));
  // root 0 crosses the threshold without ever trying action 1
  km.record_trajectory(std::vector<TransitionRecord>{{0, 0, 0.5, 1}}, 1);
  REQUIRE(km.is_known(0));
  CHECK_THROWS_AS(km.empirical_model(), InvalidArgument);
}

TEST_CASE("reward concentration: 10000 samples pin a Bernoulli mean to 0.02") {
  int hits = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(9000 + trial);
    KnownModel km(1, 1, Thresholds::override_mq(1));
    Mdp m;
    m.n = 1;
    m.k = 1;
    m.gamma = 0.5;
    m.P.assign(1, Matrix::Ones(1, 1));
    m.rewards = {RewardDist::bernoulli(0.5)};
    for (int i = 0; i < 10000; ++i)
      km.record_transition({0, 0, m.rewards[0].sample(rng), 0});
    km.record_trajectory(std::vector<TransitionRecord>{{0, 0, 0.0, 0}}, 1);
    // the extra zero-reward record shifts the mean by < 1e-4
    const EmpiricalModel em = km.empirical_model();
    if (std::abs(em.rhat(0) - 0.5) <= 0.02) ++hits;
  }
  CHECK(hits >= 19);
}

TEST_CASE("bracketed plug-ins with a partially known chain") {
  // known root s1 whose advancing action leads into unknown territory
  KnownModel km(3, 2, Thresholds::override_mq(1));
  km.record_trajectory(
      std::vector<TransitionRecord>{{0, 0, 0.5, 0}, {0, 1, 0.5, 1}, {1, 0, 0.5, 0}}, 3);
  REQUIRE(km.is_known(0));
  REQUIRE_FALSE(km.is_known(1));
  const QEstimates est = q_estimates(km, 0.9);
  // pessimistic: unknown states worth 0; optimistic: worth 1/(1-gamma)
  CHECK(est.v_pessimistic(1) == doctest::Approx(0.0));
  CHECK(est.v_optimistic(1) == doctest::Approx(10.0));
  CHECK(est.pessimistic(0, 1) <= est.optimistic(0, 1));
  CHECK(est.optimistic(0, 1) == doctest::Approx(0.5 + 0.9 * 10.0));
}

TEST_CASE("empirical transition rows concentrate at the binomial rate") {
  // L1 error <= sqrt(2 n ln(2/delta') / N) on >= (1-delta') of seeds
  const int n = 4;
  const int N = 2000;
  const Scalar delta = 0.05;
  const Scalar bound = std::sqrt(2 * n * std::log(2 / delta) / N);
  Rng meta(31);
  Vector p(n);
  for (int i = 0; i < n; ++i) p(i) = -std::log(1 - meta.uniform01());
  p /= p.sum();

  const int trials = 1000;
  int inside = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(5000 + trial);
    Vector counts = Vector::Zero(n);
    for (int i = 0; i < N; ++i) counts(rng.categorical(p)) += 1;
    const Scalar l1 = (counts / N - p).cwiseAbs().sum();
    if (l1 <= bound) ++inside;
  }
  CHECK(inside >= static_cast<int>((1 - delta) * trials));
}

TEST_CASE("beta approximation check") {
  Rng rng(41);
  const Mdp m = random_mdp(rng, 4, 2, 0.9);
  CHECK(beta_approx_check(m, m, 0.0).ok);
  CHECK(beta_approx_check(m, m, 1.0).ok);

  Mdp shifted = m;
  shifted.P[1](2, 0) += 0.2;
  shifted.P[1](2, 1) -= 0.2;
  const BetaApproxResult res = beta_approx_check(m, shifted, 0.1);
  CHECK_FALSE(res.ok);
  CHECK(res.state == 2);
  CHECK(res.action == 1);
  CHECK(res.deviation == doctest::Approx(0.2));

  const Mdp other = random_mdp(rng, 4, 2, 0.9);
  CHECK(beta_approx_check(m, other, 1.0).ok);
  Mdp wrong_shape = random_mdp(rng, 5, 2, 0.9);
  CHECK_THROWS_AS(beta_approx_check(m, wrong_shape, 0.5), InvalidArgument);
}

TEST_CASE("perturbation helper produces valid beta-approximations") {
  Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    const Mdp m = random_mdp(rng);
    const Scalar beta = 0.001 + 0.05 * rng.uniform01();
    const Mdp mhat = perturb_mdp(m, beta, rng);
    CHECK(validate_mdp(mhat).ok());
    CHECK(beta_approx_check(m, mhat, beta + 1e-12).ok);
  }
}

TEST_CASE("plug-in values track the exact values at the prescribed noise rate") {
  // model noise at the rate min(eps,alpha)^2 / (n^2 H^4) keeps plug-in policy
  // values within min(alpha/2, eps)
  Rng rng(63);
  const Scalar eps = 0.3, alpha = 0.3, gamma = 0.5;
  const int H = horizon_time(eps, gamma);
  for (int trial = 0; trial < 25; ++trial) {
    const Mdp m = random_mdp(rng, uniform_int(rng, 2, 5), 2, gamma);
    const Scalar beta = std::pow(std::min(eps, alpha), 2) /
                        (static_cast<Scalar>(m.n) * m.n * std::pow(H, 4));
    const Mdp mhat = perturb_mdp(m, beta, rng);
    for (int p = 0; p < 10; ++p) {
      const StochasticPolicy pi = random_policy(rng, m.n, m.k);
      const Vector exact = policy_evaluation(m, pi).v;
      const Vector plug = policy_evaluation(mhat, pi).v;
      CHECK((exact - plug).cwiseAbs().maxCoeff() <=
            std::min(alpha / 2, eps));
    }
  }
}

TEST_CASE("snapshot round trip preserves every counter") {
  const Mdp m = make_chain({3, 2, 1.0, 0.9});
  KnownModel km(3, 2, Thresholds::override_mq(2));
  Rng rng(74);
  for (int i = 0; i < 12; ++i)
    km.record_trajectory(rooted_trajectory(m, uniform_int(rng, 0, 2), 6, rng), 6);
  const KnownModelSnapshot snap = km.snapshot();
  const KnownModel restored(snap);
  CHECK(restored.gammaset() == km.gammaset());
  for (int s = 0; s < 3; ++s) {
    CHECK(restored.trajectory_count(s) == km.trajectory_count(s));
    CHECK(restored.reward_sum(s) == km.reward_sum(s));
    for (int a = 0; a < 2; ++a) {
      CHECK(restored.visit_count(s, a) == km.visit_count(s, a));
      for (int s2 = 0; s2 < 3; ++s2)
        CHECK(restored.next_count(s, a, s2) == km.next_count(s, a, s2));
    }
  }
}

TEST_CASE("sampled two-state model pins the plug-in Q table") {
  // collect enough per-pair samples that the empirical model is a ~0.01
  // approximation; the plug-in Q then sits within alpha/2 = 0.05 of exact
  Mdp m;
  m.n = 2;
  m.k = 2;
  m.gamma = 0.8;
  m.P.assign(2, Matrix::Zero(2, 2));
  m.P[0] << 0.7, 0.3, 0.4, 0.6;
  m.P[1] << 0.2, 0.8, 0.9, 0.1;
  m.rewards = {RewardDist::bernoulli(0.3), RewardDist::bernoulli(0.8)};

  Rng rng(8642);
  KnownModel km(2, 2, Thresholds::override_mq(1));
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 10000; ++i)
        km.record_transition({s, a, m.rewards[s].sample(rng),
                              rng.categorical(m.P[a].row(s).transpose())});
  km.record_trajectory(std::vector<TransitionRecord>{{0, 0, 0.0, 0}}, 1);
  km.record_trajectory(std::vector<TransitionRecord>{{1, 0, 0.0, 1}}, 1);
  REQUIRE(km.gammaset().size() == 2);

  CHECK(beta_approx_check(m, km.plug_in_mdp(0.8, false), 0.05).ok);
  const Matrix qstar = value_iteration(m, 1e-10).q;
  const QEstimates est = q_estimates(km, 0.8);
  CHECK((est.pessimistic - qstar).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("merging per-worker counts matches single-writer ingestion") {
  const Mdp m = make_chain({3, 2, 1.0, 0.9});
  Rng rng(85);
  std::vector<std::vector<TransitionRecord>> trajectories;
  for (int i = 0; i < 30; ++i)
    trajectories.push_back(rooted_trajectory(m, uniform_int(rng, 0, 2), 5, rng));

  KnownModel whole(3, 2, Thresholds::override_mq(4));
  for (const auto& traj : trajectories) whole.record_trajectory(traj, 5);

  KnownModel left(3, 2, Thresholds::override_mq(4));
  KnownModel right(3, 2, Thresholds::override_mq(4));
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    (i % 2 == 0 ? left : right).record_trajectory(trajectories[i], 5);
  left.merge(right);

  CHECK(left.gammaset() == whole.gammaset());
  for (int s = 0; s < 3; ++s) {
    CHECK(left.trajectory_count(s) == whole.trajectory_count(s));
    CHECK(left.reward_sum(s) == whole.reward_sum(s));
    for (int a = 0; a < 2; ++a)
      for (int s2 = 0; s2 < 3; ++s2)
        CHECK(left.next_count(s, a, s2) == whole.next_count(s, a, s2));
  }
  KnownModel mismatched(4, 2, Thresholds::override_mq(4));
  CHECK_THROWS_AS(left.merge(mismatched), InvalidArgument);
}
