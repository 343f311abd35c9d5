#include "fairmdp/fair_e3.hpp"

#include "fairmdp/markov.hpp"
#include "fairmdp/planning.hpp"

#include <cmath>
#include <cstring>

namespace fairmdp {

void validate(const FairE3Config& cfg) {
  if (!(cfg.eps > 0)) throw InvalidArgument("eps must be positive");
  if (!(cfg.alpha > 0)) throw InvalidArgument("alpha must be positive");
  if (!(cfg.delta > 0 && cfg.delta < 0.5))
    throw InvalidArgument("delta must lie in (0, 1/2)");
  if (!(cfg.gamma >= 0 && cfg.gamma < 1))
    throw InvalidArgument("gamma must lie in [0,1)");
  if (cfg.tstar && *cfg.tstar < 1)
    throw InvalidArgument("tstar must be positive");
  if (cfg.mq_override && *cfg.mq_override < 1)
    throw InvalidArgument("mQ override must be positive");
  if (!(cfg.threshold_scale > 0))
    throw InvalidArgument("threshold scale must be positive");
  if (cfg.horizon < 0) throw InvalidArgument("horizon must be nonnegative");
  if (cfg.min_exploit_phases < 0)
    throw InvalidArgument("min exploit phases must be nonnegative");
  if (cfg.decide_beta < 0)
    throw InvalidArgument("decide beta must be nonnegative");
  if (!(cfg.seq_budget_scale > 0))
    throw InvalidArgument("sequential budget scale must be positive");
  if (!(cfg.plan_tol > 0)) throw InvalidArgument("plan tolerance must be positive");
  if (cfg.tie_tol < 0) throw InvalidArgument("tie tolerance must be nonnegative");
}

namespace {

FairE3Config validated(FairE3Config cfg) {
  validate(cfg);
  return cfg;
}

int derive_horizon(const FairE3Config& cfg) {
  if (cfg.horizon > 0) return cfg.horizon;
  if (cfg.gamma == 0) return 1;  // discounted tails vanish after one step
  return horizon_time(cfg.eps, cfg.gamma);
}

long derive_min_exploit_phases(const FairE3Config& cfg) {
  if (cfg.min_exploit_phases > 0) return cfg.min_exploit_phases;
  return static_cast<long>(
      std::ceil(std::log(1.0 / cfg.delta) / (cfg.eps * cfg.eps)));
}

Thresholds derive_thresholds(int n, int k, int H, const FairE3Config& cfg) {
  if (cfg.mq_override) return Thresholds::override_mq(*cfg.mq_override);
  return known_thresholds(n, k, H, cfg.alpha, cfg.eps, cfg.gamma, cfg.delta,
                          cfg.threshold_scale);
}

std::uint64_t policy_hash(const Matrix& dist) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    std::uint64_t bits;
    const double v = dist.data()[i];
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

FairE3::FairE3(int n, int k, FairE3Config cfg)
    : n_(n),
      k_(k),
      cfg_(validated(std::move(cfg))),
      horizon_(derive_horizon(cfg_)),
      min_exploit_phases_(derive_min_exploit_phases(cfg_)),
      km_(n, k, derive_thresholds(n, k, derive_horizon(cfg_), cfg_)),
      phase_(Deciding{}) {
  if (n < 1 || k < 1) throw InvalidArgument("FairE3 needs n, k >= 1");
}

void FairE3::inject_oracle(Oracle oracle) {
  if (oracle.qstar.rows() != n_ || oracle.qstar.cols() != k_)
    throw InvalidArgument("oracle Q table has wrong shape");
  oracle_ = std::move(oracle);
}

bool FairE3::state_known(int s) const {
  return oracle_ ? oracle_->known.count(s) > 0 : km_.is_known(s);
}

std::set<int> FairE3::effective_known() const {
  return oracle_ ? oracle_->known : km_.gammaset();
}

long FairE3::current_tstar() const {
  return cfg_.tstar ? *cfg_.tstar : seq_guess_;
}

Vector FairE3::act(int s) {
  const Vector uniform = Vector::Constant(k_, Scalar(1) / k_);
  // An active random trajectory runs its full H steps, through known states
  // included, so the trajectory count semantics stay exact.
  if (std::holds_alternative<RandomTrajectory>(phase_)) return uniform;
  if (!state_known(s)) {
    RandomTrajectory rt;
    rt.remaining = horizon_;
    rt.root = s;
    rt.buffer.reserve(horizon_);
    phase_ = std::move(rt);
    return uniform;
  }
  if (std::holds_alternative<Deciding>(phase_)) plan(s);
  const FollowingPolicy& fp = std::get<FollowingPolicy>(phase_);
  const int idx = fp.to_induced[s];
  return fp.policy.dist.row(idx);
}

void FairE3::plan(int s) {
  const std::set<int> known = effective_known();
  Mdp model;
  Matrix q_lower, q_upper;
  if (oracle_) {
    model = oracle_->model;
    q_lower = oracle_->qstar;
    q_upper = oracle_->qstar;
  } else {
    model = km_.plug_in_mdp(cfg_.gamma, false);
    QEstimates est = q_estimates(km_, cfg_.gamma, cfg_.plan_tol);
    q_lower = std::move(est.pessimistic);
    q_upper = std::move(est.optimistic);
  }

  RestrictedInducedMdp exploit =
      restrict_induced(build_exploitation(model, known), q_lower, q_upper,
                       cfg_.alpha, cfg_.tie_tol);
  RestrictedInducedMdp explore =
      restrict_induced(build_exploration(model, known), q_lower, q_upper,
                       cfg_.alpha, cfg_.tie_tol);

  const long T = current_tstar();
  const Scalar beta = cfg_.decide_beta > 0 ? cfg_.decide_beta : cfg_.eps;
  Decision d = decide(s, exploit, explore, T, beta, cfg_.plan_tol, cfg_.tie_tol);

  if (decisions_.size() < 10000)
    decisions_.push_back({t_ + 1, s, d.variant, d.escape_prob, d.threshold,
                          policy_hash(d.policy.dist)});

  FollowingPolicy fp;
  fp.variant = d.variant;
  fp.to_induced = exploit.induced.to_induced;
  fp.remaining = d.variant == Decision::Variant::Explore ? 2 * T : T;
  fp.policy = std::move(d.policy);
  if (d.variant == Decision::Variant::Explore) {
    ++explorations_;
    ++seq_explorations_in_cycle_;
  }
  phase_ = std::move(fp);
}

void FairE3::observe(const TraceStep& step, int next_state) {
  ++t_;
  if (auto* rt = std::get_if<RandomTrajectory>(&phase_)) {
    rt->buffer.push_back({step.state, step.action, step.reward, next_state});
    --rt->remaining;
    ++steps_random_;
    if (rt->remaining == 0) {
      const std::vector<int> newly = km_.record_trajectory(rt->buffer, horizon_);
      ++trajectories_;
      if (!newly.empty() && !oracle_)
        known_curve_.emplace_back(t_, static_cast<int>(km_.gammaset().size()));
      phase_ = Deciding{};
    }
    return;
  }
  auto* fp = std::get_if<FollowingPolicy>(&phase_);
  if (!fp)
    throw InvalidArgument("observe received a record with no active phase");
  km_.record_transition({step.state, step.action, step.reward, next_state});
  --fp->remaining;
  if (fp->variant == Decision::Variant::Explore) {
    ++steps_explore_;
    if (fp->remaining == 0) phase_ = Deciding{};
  } else {
    ++steps_exploit_;
    seq_cycle_reward_ += step.reward;
    ++seq_cycle_exploit_steps_;
    if (fp->remaining == 0) {
      finish_exploit_phase();
      phase_ = Deciding{};
    }
  }
}

long FairE3::seq_exploration_budget() const {
  const Scalar raw = cfg_.seq_budget_scale * static_cast<Scalar>(seq_guess_) *
                     n_ * static_cast<Scalar>(km_.thresholds().mq) *
                     std::log(static_cast<Scalar>(n_) / cfg_.delta) / cfg_.eps;
  if (raw > 8.9e18) return std::numeric_limits<long>::max();
  return std::max<long>(1, static_cast<long>(std::ceil(raw)));
}

void FairE3::finish_exploit_phase() {
  ++exploit_phases_;
  if (!cfg_.tstar) {
    ++seq_exploit_phases_in_cycle_;
    maybe_advance_guess();
  }
}

void FairE3::maybe_advance_guess() {
  if (seq_explorations_in_cycle_ < seq_exploration_budget()) return;
  if (seq_exploit_phases_in_cycle_ < min_exploit_phases_) return;

  // Macro-cycle complete: compare the realized reward rate over the cycle's
  // exploitation steps with the model-implied rate of the current exploit
  // policy. A shortfall beyond eps/2 (or an unevaluable model) means the
  // phases were too short to mix, so the guess advances.
  bool pass = false;
  if (seq_cycle_exploit_steps_ > 0 && !effective_known().empty()) {
    try {
      const Mdp model = km_.plug_in_mdp(cfg_.gamma, false);
      const QEstimates est = q_estimates(km_, cfg_.gamma, cfg_.plan_tol);
      RestrictedInducedMdp exploit = restrict_induced(
          build_exploitation(model, km_.gammaset()), est.pessimistic,
          est.optimistic, cfg_.alpha, cfg_.tie_tol);
      const PlanResult plan =
          value_iteration(exploit.induced.model, exploit.allowed, cfg_.plan_tol);
      Matrix dist(exploit.induced.model.n, k_);
      for (int i = 0; i < exploit.induced.model.n; ++i)
        dist.row(i) =
            uniform_over_argmax(plan.q.row(i), cfg_.tie_tol, &exploit.allowed, i)
                .transpose();
      const Vector mu =
          stationary_distribution(exploit.induced.model, {dist}).mu;
      const Scalar target = mu.dot(exploit.induced.model.mean_rewards());
      const Scalar realized =
          seq_cycle_reward_ / static_cast<Scalar>(seq_cycle_exploit_steps_);
      pass = realized >= target - cfg_.eps / 2;
    } catch (const std::exception&) {
      pass = false;
    }
  }
  if (!pass) ++seq_guess_;
  seq_explorations_in_cycle_ = 0;
  seq_exploit_phases_in_cycle_ = 0;
  seq_cycle_reward_ = 0;
  seq_cycle_exploit_steps_ = 0;
}

std::pair<Trace, FairE3Metrics> run_fair_e3(const Mdp& m,
                                            const FairE3Config& cfg, long T,
                                            std::uint64_t seed,
                                            int start_state) {
  require_valid(m);
  FairE3Config run_cfg = cfg;
  run_cfg.gamma = m.gamma;  // the discount is the MDP's
  FairE3 learner(m.n, m.k, run_cfg);
  Trace trace = simulate(m, learner, T, seed, start_state);

  const PlanResult plan = value_iteration(m, run_cfg.plan_tol);
  const StochasticPolicy pistar = greedy_policy(plan.q, run_cfg.tie_tol);
  const Vector mustar = stationary_distribution(m, pistar).mu;

  FairE3Metrics metrics;
  metrics.seed = seed;
  metrics.T = T;
  metrics.gap = epsilon_optimality_gap(m, trace, plan.v, mustar);
  metrics.steps_random = learner.steps_random();
  metrics.steps_explore = learner.steps_explore();
  metrics.steps_exploit = learner.steps_exploit();
  metrics.trajectories = learner.trajectories_taken();
  metrics.explorations_attempted = learner.explorations_attempted();
  metrics.exploit_phases = learner.exploit_phases_completed();
  metrics.final_tstar = learner.current_tstar();
  metrics.known_curve = learner.known_curve();
  metrics.decisions = learner.decisions();
  return {std::move(trace), std::move(metrics)};
}

namespace {

class UniformLearner final : public Learner {
 public:
  UniformLearner(int, int k) : dist_(Vector::Constant(k, Scalar(1) / k)) {}
  Vector act(int) override { return dist_; }

 private:
  Vector dist_;
};

// Balanced wandering over least-tried actions; once every action at the
// current state has been tried, plans deterministically on the empirical
// model: escape toward states with untried actions if reachable, otherwise
// exploit. No fairness restriction anywhere — the contrast learner.
class GreedyE3Baseline final : public Learner {
 public:
  GreedyE3Baseline(int n, int k, Scalar gamma)
      : n_(n),
        k_(k),
        gamma_(gamma),
        counts_(Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, k)),
        next_counts_(
            k, Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n)),
        reward_sum_(Vector::Zero(n)),
        reward_count_(n, 0) {}

  Vector act(int s) override {
    Vector dist = Vector::Zero(k_);
    long min_count = counts_.row(s).minCoeff();
    if (min_count == 0) {
      for (int a = 0; a < k_; ++a) {
        if (counts_(s, a) == min_count) {
          dist(a) = 1.0;
          return dist;
        }
      }
    }
    dist(plan_action(s)) = 1.0;
    return dist;
  }

  void observe(const TraceStep& step, int next_state) override {
    counts_(step.state, step.action) += 1;
    next_counts_[step.action](step.state, next_state) += 1;
    reward_sum_(step.state) += step.reward;
    reward_count_[step.state] += 1;
  }

 private:
  Mdp empirical() const {
    Mdp m;
    m.n = n_;
    m.k = k_;
    m.gamma = gamma_;
    m.P.assign(k_, Matrix::Zero(n_, n_));
    m.rewards.assign(n_, RewardDist::point_mass(0));
    for (int s = 0; s < n_; ++s) {
      for (int a = 0; a < k_; ++a) {
        const long c = counts_(s, a);
        if (c == 0) {
          m.P[a](s, s) = 1.0;
        } else {
          for (int s2 = 0; s2 < n_; ++s2)
            m.P[a](s, s2) = static_cast<Scalar>(next_counts_[a](s, s2)) /
                            static_cast<Scalar>(c);
        }
      }
      if (reward_count_[s] > 0)
        m.rewards[s] = RewardDist::point_mass(std::clamp(
            reward_sum_(s) / static_cast<Scalar>(reward_count_[s]), Scalar(0),
            Scalar(1)));
    }
    return m;
  }

  int plan_action(int s) const {
    const Mdp model = empirical();
    std::set<int> known;
    for (int st = 0; st < n_; ++st)
      if (counts_.row(st).minCoeff() >= 1) known.insert(st);
    if (known.count(s) && known.size() < static_cast<std::size_t>(n_)) {
      const InducedMdp explore = build_exploration(model, known);
      const PlanResult plan = value_iteration(explore.model, 1e-9);
      const int idx = explore.to_induced[s];
      if (plan.v(idx) > 1e-9)
        return greedy_action(plan.q.row(idx), k_, 1e-9);
    }
    const PlanResult plan = value_iteration(model, 1e-9);
    return greedy_action(plan.q.row(s), k_, 1e-9);
  }

  int n_, k_;
  Scalar gamma_;
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts_;
  std::vector<Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>> next_counts_;
  Vector reward_sum_;
  std::vector<long> reward_count_;
};

}  // namespace

std::unique_ptr<Learner> baseline_uniform(int n, int k) {
  return std::make_unique<UniformLearner>(n, k);
}

std::unique_ptr<Learner> baseline_greedy_e3(int n, int k, Scalar gamma) {
  return std::make_unique<GreedyE3Baseline>(n, k, gamma);
}

}  // namespace fairmdp
