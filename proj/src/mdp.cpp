#include "fairmdp/mdp.hpp"

#include <cmath>
#include <sstream>

namespace fairmdp {

ValidationReport validate_mdp(const Mdp& m) {
  ValidationReport report;
  auto add = [&](std::string what, int s = -1, int a = -1) {
    report.issues.push_back({std::move(what), s, a});
  };

  if (m.n < 1) add("state count must be >= 1");
  if (m.k < 1) add("action count must be >= 1");
  if (!(m.gamma >= 0 && m.gamma < 1)) add("gamma must lie in [0,1)");
  if (static_cast<int>(m.P.size()) != m.k)
    add("transition tensor has wrong action count");
  if (static_cast<int>(m.rewards.size()) != m.n)
    add("reward list has wrong state count");
  if (!report.ok()) return report;

  for (int a = 0; a < m.k; ++a) {
    if (m.P[a].rows() != m.n || m.P[a].cols() != m.n) {
      add("transition matrix has wrong shape", -1, a);
      continue;
    }
    for (int s = 0; s < m.n; ++s) {
      if ((m.P[a].row(s).array() < 0).any()) {
        add("negative transition probability", s, a);
      }
      const Scalar sum = m.P[a].row(s).sum();
      if (std::abs(sum - 1.0) > kRowSumTol) {
        std::ostringstream msg;
        msg << "transition row sums to " << sum;
        add(msg.str(), s, a);
      }
    }
  }
  for (int s = 0; s < m.n; ++s) {
    const Scalar p = m.rewards[s].param;
    if (!(p >= 0 && p <= 1)) add("reward parameter outside [0,1]", s);
  }
  return report;
}

void require_valid(const Mdp& m) {
  const ValidationReport report = validate_mdp(m);
  if (report.ok()) return;
  const ValidationIssue& first = report.issues.front();
  std::ostringstream msg;
  msg << "invalid MDP: " << first.what;
  if (first.state >= 0) msg << " (state " << first.state;
  if (first.state >= 0 && first.action >= 0) msg << ", action " << first.action;
  if (first.state >= 0) msg << ")";
  throw InvalidMdp(msg.str());
}

StochasticPolicy StochasticPolicy::deterministic(const std::vector<int>& actions,
                                                 int k) {
  const int n = static_cast<int>(actions.size());
  Matrix dist = Matrix::Zero(n, k);
  for (int s = 0; s < n; ++s) {
    if (actions[s] < 0 || actions[s] >= k)
      throw InvalidArgument("deterministic policy action out of range");
    dist(s, actions[s]) = 1.0;
  }
  return {std::move(dist)};
}

bool StochasticPolicy::valid() const {
  for (int s = 0; s < n(); ++s) {
    if ((dist.row(s).array() < 0).any()) return false;
    if (std::abs(dist.row(s).sum() - 1.0) > kRowSumTol) return false;
  }
  return n() > 0;
}

}  // namespace fairmdp
