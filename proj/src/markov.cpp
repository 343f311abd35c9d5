#include "fairmdp/markov.hpp"

namespace fairmdp {

namespace {

Scalar tv_distance(const RowVector& a, const RowVector& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace

Matrix policy_transition_matrix(const Mdp& m, const StochasticPolicy& pi) {
  require_valid(m);
  if (pi.n() != m.n || pi.k() != m.k || !pi.valid())
    throw InvalidArgument("policy does not match the MDP");
  Matrix P = Matrix::Zero(m.n, m.n);
  for (int a = 0; a < m.k; ++a)
    P += pi.dist.col(a).asDiagonal() * m.P[a];
  return P;
}

StationaryDist stationary_distribution(const Mdp& m, const StochasticPolicy& pi,
                                       Scalar tol, long max_iterations) {
  if (tol <= 0) throw InvalidArgument("tolerance must be positive");
  const Matrix P = policy_transition_matrix(m, pi);
  const int n = m.n;

  // Evolve the exact distribution from every start state at once. The rows
  // must individually stabilize well below tol before the unichain check is
  // meaningful, hence the tighter step threshold.
  const Scalar step_stop = tol * 1e-2;
  Matrix D = Matrix::Identity(n, n);
  Scalar step = std::numeric_limits<Scalar>::infinity();
  long iter = 0;
  while (iter < max_iterations) {
    Matrix Dn = D * P;
    step = 0;
    for (int s = 0; s < n; ++s)
      step = std::max(step, tv_distance(Dn.row(s), D.row(s)));
    D = std::move(Dn);
    ++iter;
    if (step <= step_stop) break;
  }
  if (step > step_stop)
    throw NonConvergence(
        "stationary distribution did not converge (periodic chain or cap too small)");

  Scalar spread = 0;
  for (int s = 1; s < n; ++s)
    spread = std::max(spread, tv_distance(D.row(s), D.row(0)));
  if (spread > 10 * tol)
    throw UnichainViolation(
        "start-state limits disagree: the unichain assumption fails for this policy");

  Vector mu = D.colwise().mean().transpose();
  mu /= mu.sum();
  const Scalar residual = tv_distance(mu.transpose() * P, mu.transpose());
  return {std::move(mu), iter, residual};
}

long mixing_time(const Mdp& m, const StochasticPolicy& pi, Scalar eps,
                 long cap) {
  if (!(eps > 0 && eps < 1)) throw InvalidArgument("eps must lie in (0,1)");
  const Vector mu = stationary_distribution(m, pi).mu;
  const Matrix P = policy_transition_matrix(m, pi);
  const RowVector mu_row = mu.transpose();

  // L1 distance to stationarity is nonincreasing under the transition map,
  // so the first passing T is minimal.
  Matrix D = Matrix::Identity(m.n, m.n);
  for (long T = 1; T <= cap; ++T) {
    D = D * P;
    Scalar worst = 0;
    for (int s = 0; s < m.n; ++s)
      worst = std::max(worst, (D.row(s) - mu_row).cwiseAbs().sum());
    if (worst <= eps) return T;
  }
  throw NonConvergence("mixing time exceeds the iteration cap");
}

}  // namespace fairmdp
