#include "fairmdp/estimation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fairmdp {

namespace {

long ceil_to_count(Scalar x) {
  constexpr Scalar kMax = 9.0e18;
  if (!(x > 0)) return 1;
  if (x > kMax) return std::numeric_limits<long>::max();
  return static_cast<long>(std::ceil(x));
}

}  // namespace

Thresholds known_thresholds(int n, int k, int H, Scalar alpha, Scalar eps,
                            Scalar gamma, Scalar delta, Scalar scale) {
  if (n < 1 || k < 1 || H < 1)
    throw InvalidArgument("thresholds need n, k, H >= 1");
  if (!(alpha > 0) || !(eps > 0))
    throw InvalidArgument("thresholds need alpha, eps > 0");
  if (!(gamma >= 0 && gamma < 1))
    throw InvalidArgument("gamma must lie in [0,1)");
  if (!(delta > 0 && delta < 1))
    throw InvalidArgument("delta must lie in (0,1)");
  if (!(scale > 0)) throw InvalidArgument("scale must be positive");

  const Scalar inv = 1.0 / ((1 - gamma) * alpha);
  const Scalar m1 = scale * std::pow(static_cast<Scalar>(k), H + 3) * n *
                    inv * inv * std::log(k / delta);
  const Scalar ratio = n / std::min(eps, alpha);
  const Scalar m2 = scale * std::pow(ratio, 4) *
                    std::pow(static_cast<Scalar>(H), 8) * std::log(1 / delta);

  Thresholds t;
  t.scale = scale;
  t.mode = Thresholds::Mode::Formula;
  t.m1 = ceil_to_count(m1);
  t.m2 = ceil_to_count(m2);
  const Scalar mq = static_cast<Scalar>(k) * std::max(m1, m2);
  t.mq = ceil_to_count(static_cast<Scalar>(k) *
                       static_cast<Scalar>(std::max(t.m1, t.m2)));
  if (mq > 8.9e18) t.mq = std::numeric_limits<long>::max();
  return t;
}

KnownModel::KnownModel(int n, int k, Thresholds thresholds)
    : n_(n),
      k_(k),
      thresholds_(thresholds),
      traj_count_(n, 0),
      sa_count_(Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, k)),
      next_count_(k, Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n)),
      reward_count_(n, 0),
      reward_sum_(n, 0),
      reward_sumsq_(n, 0) {
  if (n < 1 || k < 1) throw InvalidArgument("KnownModel needs n, k >= 1");
  if (thresholds_.mq < 1) throw InvalidArgument("mQ threshold must be >= 1");
}

KnownModel::KnownModel(const KnownModelSnapshot& snap)
    : KnownModel(snap.n, snap.k, snap.thresholds) {
  for (int s = 0; s < n_; ++s) {
    traj_count_[s] = snap.trajectory_counts.at(s);
    reward_count_[s] = snap.reward_counts.at(s);
    reward_sum_[s] = snap.reward_sums.at(s);
    reward_sumsq_[s] = snap.reward_sumsqs.at(s);
    for (int a = 0; a < k_; ++a) {
      sa_count_(s, a) = snap.visit_counts.at(s).at(a);
      long total = 0;
      for (int s2 = 0; s2 < n_; ++s2) {
        next_count_[a](s, s2) = snap.next_counts.at(s).at(a).at(s2);
        total += next_count_[a](s, s2);
      }
      if (total != sa_count_(s, a))
        throw InvalidArgument("snapshot counts are inconsistent");
    }
    if (traj_count_[s] >= thresholds_.mq) gammaset_.insert(s);
  }
}

KnownModelSnapshot KnownModel::snapshot() const {
  KnownModelSnapshot snap;
  snap.n = n_;
  snap.k = k_;
  snap.thresholds = thresholds_;
  snap.trajectory_counts = traj_count_;
  snap.reward_counts = reward_count_;
  snap.reward_sums = reward_sum_;
  snap.reward_sumsqs = reward_sumsq_;
  snap.visit_counts.assign(n_, std::vector<long>(k_, 0));
  snap.next_counts.assign(
      n_, std::vector<std::vector<long>>(k_, std::vector<long>(n_, 0)));
  for (int s = 0; s < n_; ++s)
    for (int a = 0; a < k_; ++a) {
      snap.visit_counts[s][a] = sa_count_(s, a);
      for (int s2 = 0; s2 < n_; ++s2)
        snap.next_counts[s][a][s2] = next_count_[a](s, s2);
    }
  return snap;
}

void KnownModel::record_transition(const TransitionRecord& rec) {
  if (rec.state < 0 || rec.state >= n_ || rec.next_state < 0 ||
      rec.next_state >= n_ || rec.action < 0 || rec.action >= k_)
    throw InvalidArgument("transition record indices out of range");
  if (!(rec.reward >= 0 && rec.reward <= 1))
    throw InvalidArgument("transition record reward outside [0,1]");
  sa_count_(rec.state, rec.action) += 1;
  next_count_[rec.action](rec.state, rec.next_state) += 1;
  reward_count_[rec.state] += 1;
  reward_sum_[rec.state] += rec.reward;
  reward_sumsq_[rec.state] += rec.reward * rec.reward;
}

void KnownModel::merge(const KnownModel& other) {
  if (other.n_ != n_ || other.k_ != k_)
    throw InvalidArgument("merge needs matching model shapes");
  if (other.thresholds_.mq != thresholds_.mq)
    throw InvalidArgument("merge needs matching thresholds");
  sa_count_ += other.sa_count_;
  for (int a = 0; a < k_; ++a) next_count_[a] += other.next_count_[a];
  for (int s = 0; s < n_; ++s) {
    traj_count_[s] += other.traj_count_[s];
    reward_count_[s] += other.reward_count_[s];
    reward_sum_[s] += other.reward_sum_[s];
    reward_sumsq_[s] += other.reward_sumsq_[s];
    if (traj_count_[s] >= thresholds_.mq) gammaset_.insert(s);
  }
}

std::vector<int> KnownModel::record_trajectory(
    std::span<const TransitionRecord> traj, long expected_len) {
  if (traj.empty()) throw InvalidArgument("empty trajectory");
  if (expected_len >= 0 && static_cast<long>(traj.size()) != expected_len)
    throw InvalidArgument("trajectory has the wrong length");
  for (std::size_t i = 0; i + 1 < traj.size(); ++i)
    if (traj[i].next_state != traj[i + 1].state)
      throw InvalidArgument("trajectory is not contiguous");
  for (const TransitionRecord& rec : traj) record_transition(rec);

  const int root = traj.front().state;
  traj_count_[root] += 1;
  std::vector<int> newly_known;
  if (!is_known(root) && traj_count_[root] >= thresholds_.mq) {
    gammaset_.insert(root);
    newly_known.push_back(root);
  }
  return newly_known;
}

EmpiricalModel KnownModel::empirical_model() const {
  EmpiricalModel em;
  em.known_states.assign(gammaset_.begin(), gammaset_.end());
  em.phat.assign(k_, Matrix::Zero(n_, n_));
  em.rhat = Vector::Zero(n_);
  for (const int s : em.known_states) {
    for (int a = 0; a < k_; ++a) {
      const long c = sa_count_(s, a);
      if (c == 0) {
        std::ostringstream msg;
        msg << "unvisited pair (state " << s << ", action " << a
            << ") inside the known set";
        throw InvalidArgument(msg.str());
      }
      for (int s2 = 0; s2 < n_; ++s2)
        em.phat[a](s, s2) =
            static_cast<Scalar>(next_count_[a](s, s2)) / static_cast<Scalar>(c);
    }
    em.rhat(s) = reward_count_[s] > 0
                     ? reward_sum_[s] / static_cast<Scalar>(reward_count_[s])
                     : 0;
  }
  return em;
}

Mdp KnownModel::plug_in_mdp(Scalar gamma, bool optimistic) const {
  const EmpiricalModel em = empirical_model();
  Mdp m;
  m.n = n_;
  m.k = k_;
  m.gamma = gamma;
  m.P.assign(k_, Matrix::Zero(n_, n_));
  m.rewards.assign(n_, RewardDist::point_mass(optimistic ? 1.0 : 0.0));
  for (int s = 0; s < n_; ++s) {
    if (is_known(s)) {
      for (int a = 0; a < k_; ++a) m.P[a].row(s) = em.phat[a].row(s);
      m.rewards[s] =
          RewardDist::point_mass(std::clamp(em.rhat(s), Scalar(0), Scalar(1)));
    } else {
      for (int a = 0; a < k_; ++a) m.P[a](s, s) = 1.0;
    }
  }
  return m;
}

QEstimates q_estimates(const KnownModel& km, Scalar gamma, Scalar tol) {
  if (km.gammaset().empty())
    throw InvalidArgument("q_estimates needs a nonempty known set");
  const PlanResult pess = value_iteration(km.plug_in_mdp(gamma, false), tol);
  const PlanResult opt = value_iteration(km.plug_in_mdp(gamma, true), tol);
  return {pess.q, opt.q, pess.v, opt.v};
}

BetaApproxResult beta_approx_check(const Mdp& m, const Mdp& mhat, Scalar beta) {
  if (m.n != mhat.n || m.k != mhat.k)
    throw InvalidArgument("beta_approx_check needs MDPs of the same shape");
  if (beta < 0) throw InvalidArgument("beta must be nonnegative");
  // Scan order fixed: per state the reward entry first, then transitions.
  for (int s = 0; s < m.n; ++s) {
    const Scalar dr = std::abs(m.rewards[s].mean() - mhat.rewards[s].mean());
    if (dr > beta) return {false, s, -1, -1, dr};
    for (int a = 0; a < m.k; ++a)
      for (int s2 = 0; s2 < m.n; ++s2) {
        const Scalar dp = std::abs(m.P[a](s, s2) - mhat.P[a](s, s2));
        if (dp > beta) return {false, s, a, s2, dp};
      }
  }
  return {};
}

}  // namespace fairmdp
