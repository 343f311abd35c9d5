#include "fairmdp/lowerbound.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace fairmdp {

namespace {

void check_spec(const ChainSpec& spec) {
  if (spec.n < 2) throw InvalidArgument("chain needs n >= 2");
  if (spec.k < 2) throw InvalidArgument("chain needs k >= 2");
  if (!(spec.x >= 0 && spec.x <= 1))
    throw InvalidArgument("terminal reward x must lie in [0,1]");
  if (!(spec.gamma >= 0 && spec.gamma < 1))
    throw InvalidArgument("gamma must lie in [0,1)");
}

}  // namespace

Mdp make_chain(const ChainSpec& spec) {
  check_spec(spec);
  Mdp m;
  m.n = spec.n;
  m.k = spec.k;
  m.gamma = spec.gamma;
  m.P.assign(spec.k, Matrix::Zero(spec.n, spec.n));
  // Actions 0..k-2 reset to s_1; the last action advances.
  for (int a = 0; a < spec.k - 1; ++a)
    for (int s = 0; s < spec.n; ++s) m.P[a](s, 0) = 1.0;
  for (int s = 0; s < spec.n; ++s)
    m.P[spec.k - 1](s, std::min(s + 1, spec.n - 1)) = 1.0;
  m.rewards.assign(spec.n, RewardDist::point_mass(0.5));
  m.rewards[spec.n - 1] = RewardDist::point_mass(spec.x);
  return m;
}

Vector chain_vstar(const ChainSpec& spec) {
  check_spec(spec);
  if (spec.x < 0.5)
    throw InvalidArgument(
        "closed form covers the advance-optimal regime x >= 0.5 only");
  Vector v(spec.n);
  for (int i = 1; i <= spec.n; ++i) {
    const Scalar gm = std::pow(spec.gamma, spec.n - i);
    v(i - 1) = 0.5 * (1 - gm) / (1 - spec.gamma) + spec.x * gm / (1 - spec.gamma);
  }
  return v;
}

Scalar chain_vstar_bound(const ChainSpec& spec, int i_one_based) {
  if (i_one_based < 1 || i_one_based > spec.n)
    throw InvalidArgument("state index out of range");
  const Scalar g = spec.gamma;
  return (1 + 2 * std::pow(g, spec.n - i_one_based + 1)) / (2 * (1 - g));
}

HittingTime chain_hitting_time(int n, int k) {
  if (n < 2 || k < 2) throw InvalidArgument("hitting time needs n, k >= 2");
  const Scalar kn = std::pow(static_cast<Scalar>(k), n);
  const bool exact = n * std::log2(static_cast<Scalar>(k)) <= 53.0;
  return {(kn - k) / (k - 1), exact};
}

Scalar chain_hitting_time_recurrence(int n, int k) {
  if (n < 2 || k < 2) throw InvalidArgument("hitting time needs n, k >= 2");
  // E_i = 1 + (1-1/k)*E_1 + (1/k)*E_{i+1}, E_n = 0. Write E_i = a_i + b_i*E_1
  // and sweep down from i = n.
  const Scalar reset_p = static_cast<Scalar>(k - 1) / k;
  const Scalar adv_p = 1.0 / k;
  Scalar a = 0, b = 0;  // coefficients of E_{i+1}
  for (int i = n - 1; i >= 1; --i) {
    a = 1 + adv_p * a;
    b = reset_p + adv_p * b;
  }
  return a / (1 - b);
}

std::vector<std::uint64_t> seed_range(std::uint64_t root, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i)
    seeds[i] = root ^ static_cast<std::uint64_t>(i);
  return seeds;
}

namespace {

FirstHitRecord first_hit_run(const Mdp& chain, const LearnerFactory& make_learner,
                             std::uint64_t seed, long t_cap) {
  const int target = chain.n - 1;
  std::unique_ptr<Learner> learner = make_learner(chain);
  Rng rng(seed);
  int s = 0;
  FirstHitRecord rec{seed, t_cap, false};
  for (long t = 1; t <= t_cap; ++t) {
    TraceStep step;
    step.t = t;
    step.state = s;
    step.dist = learner->act(s);
    step.action = rng.categorical(step.dist);
    step.reward = chain.rewards[s].sample(rng);
    const int s_next = rng.categorical(chain.P[step.action].row(s).transpose());
    learner->observe(step, s_next);
    s = s_next;
    if (s == target) {
      rec.steps_to_reach_sn = t;
      rec.distinguished = true;
      break;
    }
  }
  return rec;
}

}  // namespace

std::vector<FirstHitRecord> coupling_experiment(
    const ChainSpec& spec, const LearnerFactory& make_learner,
    const std::vector<std::uint64_t>& seeds, long t_cap, int jobs) {
  if (t_cap < 1) throw InvalidArgument("t_cap must be >= 1");
  const Mdp chain = make_chain(spec);

  std::vector<FirstHitRecord> records(seeds.size());
  const int workers = std::max(
      1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      records[i] = first_hit_run(chain, make_learner, seeds[i], t_cap);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) return;
        records[i] = first_hit_run(chain, make_learner, seeds[i], t_cap);
      }
    });
  for (std::thread& t : pool) t.join();
  return records;
}

namespace {

class ChoiceFairBiased final : public Learner {
 public:
  ChoiceFairBiased(int k, Scalar alpha) : dist_(k) {
    const Scalar advance = 1.0 / k + alpha * (k - 1) / k;
    dist_.setConstant((1 - alpha) / k);
    dist_(k - 1) = advance;
  }
  Vector act(int) override { return dist_; }

 private:
  Vector dist_;
};

}  // namespace

std::unique_ptr<Learner> make_choice_fair_biased(const Mdp& chain, Scalar alpha) {
  if (!(alpha >= 0 && alpha <= 1))
    throw InvalidArgument("choice-fair bias alpha must lie in [0,1]");
  return std::make_unique<ChoiceFairBiased>(chain.k, alpha);
}

int action_fair_chain_size(Scalar alpha, Scalar gamma) {
  if (!(alpha > 0 && alpha < 0.5))
    throw InvalidArgument("sizing needs alpha in (0, 1/2)");
  if (!(gamma > 0 && gamma < 1))
    throw InvalidArgument("sizing needs gamma in (0,1)");
  return static_cast<int>(std::ceil(std::log(1 / (2 * alpha)) / (1 - gamma)));
}

}  // namespace fairmdp
