#include "fairmdp/planning.hpp"

#include <cmath>
#include <limits>

namespace fairmdp {

namespace {

constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();

// Sweep stop threshold guaranteeing a tol-accurate fixed point:
// sup-norm change <= tol*(1-gamma)/(2*gamma).
Scalar stop_threshold(Scalar tol, Scalar gamma) {
  if (gamma <= 0) return tol;
  return tol * (1 - gamma) / (2 * gamma);
}

// One optimality backup; returns the new state values given the masked max.
Vector backup_max(const Mdp& m, const Vector& rbar, const Vector& v,
                  const ActionMask* allowed, Matrix* q_out) {
  const int n = m.n;
  Vector v_new = Vector::Constant(n, kNegInf);
  for (int a = 0; a < m.k; ++a) {
    const Vector qa = rbar + m.gamma * (m.P[a] * v);
    if (q_out) q_out->col(a) = qa;
    for (int s = 0; s < n; ++s) {
      if (allowed && !(*allowed)(s, a)) continue;
      v_new(s) = std::max(v_new(s), qa(s));
    }
  }
  return v_new;
}

PlanResult iterate_optimal(const Mdp& m, const ActionMask* allowed,
                           Scalar tol) {
  require_valid(m);
  if (tol <= 0) throw InvalidArgument("planning tolerance must be positive");
  if (allowed) {
    if (allowed->rows() != m.n || allowed->cols() != m.k)
      throw InvalidArgument("action mask has wrong shape");
    for (int s = 0; s < m.n; ++s)
      if (!allowed->row(s).any())
        throw InvalidArgument("action mask allows nothing in some state");
  }

  const Vector rbar = m.mean_rewards();
  const Scalar stop = stop_threshold(tol, m.gamma);
  Vector v = Vector::Zero(m.n);
  Matrix q(m.n, m.k);
  long iterations = 0;
  while (true) {
    const Vector v_new = backup_max(m, rbar, v, allowed, &q);
    const Scalar change = (v_new - v).cwiseAbs().maxCoeff();
    v = v_new;
    ++iterations;
    if (change <= stop || m.gamma == 0) break;
  }
  // One more backup pins q to the converged v and measures the residual.
  Vector v_final = backup_max(m, rbar, v, allowed, &q);
  const Scalar residual = (v_final - v).cwiseAbs().maxCoeff();
  return {std::move(v_final), std::move(q), iterations, residual};
}

}  // namespace

Matrix q_from_values(const Mdp& m, const Vector& v) {
  const Vector rbar = m.mean_rewards();
  Matrix q(m.n, m.k);
  for (int a = 0; a < m.k; ++a) q.col(a) = rbar + m.gamma * (m.P[a] * v);
  return q;
}

PlanResult value_iteration(const Mdp& m, Scalar tol) {
  return iterate_optimal(m, nullptr, tol);
}

PlanResult value_iteration(const Mdp& m, const ActionMask& allowed,
                           Scalar tol) {
  return iterate_optimal(m, &allowed, tol);
}

PlanResult policy_evaluation(const Mdp& m, const StochasticPolicy& pi,
                             Scalar tol) {
  require_valid(m);
  if (tol <= 0) throw InvalidArgument("planning tolerance must be positive");
  if (pi.n() != m.n || pi.k() != m.k || !pi.valid())
    throw InvalidArgument("policy does not match the MDP");

  const Vector rbar = m.mean_rewards();
  const Scalar stop = stop_threshold(tol, m.gamma);
  Vector v = Vector::Zero(m.n);
  Matrix q(m.n, m.k);
  long iterations = 0;
  auto backup = [&](const Vector& cur) {
    Vector out = Vector::Zero(m.n);
    for (int a = 0; a < m.k; ++a) {
      const Vector qa = rbar + m.gamma * (m.P[a] * cur);
      q.col(a) = qa;
      out += pi.dist.col(a).cwiseProduct(qa);
    }
    return out;
  };
  while (true) {
    const Vector v_new = backup(v);
    const Scalar change = (v_new - v).cwiseAbs().maxCoeff();
    v = v_new;
    ++iterations;
    if (change <= stop || m.gamma == 0) break;
  }
  Vector v_final = backup(v);
  const Scalar residual = (v_final - v).cwiseAbs().maxCoeff();
  return {std::move(v_final), std::move(q), iterations, residual};
}

Vector finite_horizon_values(const Mdp& m, const StochasticPolicy& pi, int T) {
  require_valid(m);
  if (T < 0) throw InvalidArgument("horizon must be nonnegative");
  const Vector rbar = m.mean_rewards();
  Vector v = Vector::Zero(m.n);
  for (int t = 0; t < T; ++t) {
    Vector next = rbar;
    for (int a = 0; a < m.k; ++a)
      next += m.gamma * pi.dist.col(a).cwiseProduct(m.P[a] * v);
    v = next;
  }
  return v;
}

int horizon_time(Scalar eps, Scalar gamma) {
  if (!(eps > 0) || !(gamma > 0 && gamma < 1) || !(eps * (1 - gamma) < 1))
    throw InvalidArgument("horizon_time requires eps > 0, gamma in (0,1), eps*(1-gamma) < 1");
  const Scalar h = std::log(eps * (1 - gamma)) / std::log(gamma);
  return static_cast<int>(std::ceil(h));
}

int greedy_action(const RowVector& q_row, int k, Scalar tie_tol,
                  const ActionMask* allowed, int state) {
  Scalar best = kNegInf;
  for (int a = 0; a < k; ++a) {
    if (allowed && !(*allowed)(state, a)) continue;
    best = std::max(best, q_row(a));
  }
  for (int a = 0; a < k; ++a) {
    if (allowed && !(*allowed)(state, a)) continue;
    if (q_row(a) >= best - tie_tol) return a;
  }
  throw InvalidArgument("no allowed action");
}

StochasticPolicy greedy_policy(const Matrix& q, Scalar tie_tol) {
  const int n = static_cast<int>(q.rows());
  const int k = static_cast<int>(q.cols());
  std::vector<int> actions(n);
  for (int s = 0; s < n; ++s)
    actions[s] = greedy_action(q.row(s), k, tie_tol);
  return StochasticPolicy::deterministic(actions, k);
}

}  // namespace fairmdp
