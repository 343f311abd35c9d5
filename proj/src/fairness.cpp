#include "fairmdp/fairness.hpp"

namespace fairmdp {

std::string to_string(FairnessDefinition d) {
  switch (d) {
    case FairnessDefinition::Exact: return "exact";
    case FairnessDefinition::Choice: return "choice";
    case FairnessDefinition::Action: return "action";
  }
  return "?";
}

namespace {

// Shared audit sweep. A violation pairs a (weakly or substantially) better
// action with a favored worse one; the two thresholds select the definition:
//   exact:  q_slack = 0,     p_slack = 0
//   choice: q_slack = 0,     p_slack = alpha
//   action: q_slack = alpha, p_slack = 0
// with q comparisons strict beyond q_slack + tie_tol for the action variant
// and weak beyond -tie_tol otherwise.
FairnessReport audit(const Trace& trace, const Matrix& qstar,
                     FairnessDefinition def, Scalar alpha, Scalar tie_tol) {
  if (alpha < 0) throw InvalidArgument("alpha must be nonnegative");
  if (tie_tol < 0) throw InvalidArgument("tie tolerance must be nonnegative");
  const int k = static_cast<int>(qstar.cols());

  FairnessReport report;
  report.definition = def;
  report.alpha = alpha;

  for (const TraceStep& step : trace.steps) {
    if (step.state < 0 || step.state >= qstar.rows() ||
        static_cast<int>(step.dist.size()) != k)
      throw InvalidArgument("trace does not match the Q table shape");
    for (int a = 0; a < k; ++a) {
      for (int a2 = 0; a2 < k; ++a2) {
        if (a == a2) continue;
        const Scalar qgap = qstar(step.state, a) - qstar(step.state, a2);
        const Scalar pgap = step.dist(a2) - step.dist(a);
        bool quality_binds, favored;
        switch (def) {
          case FairnessDefinition::Exact:
            quality_binds = qgap >= -tie_tol;
            favored = pgap > tie_tol;
            break;
          case FairnessDefinition::Choice:
            quality_binds = qgap >= -tie_tol;
            favored = pgap > alpha + tie_tol;
            break;
          case FairnessDefinition::Action:
            quality_binds = qgap > alpha + tie_tol;
            favored = pgap > tie_tol;
            break;
        }
        if (quality_binds && favored) {
          ++report.violation_count;
          if (report.violations.size() < kMaxRecordedViolations)
            report.violations.push_back(
                {step.t, step.state, a, a2, qgap, pgap});
        }
      }
    }
  }
  report.pass = report.violation_count == 0;
  return report;
}

}  // namespace

FairnessReport audit_exact(const Trace& trace, const Matrix& qstar,
                           Scalar tie_tol) {
  return audit(trace, qstar, FairnessDefinition::Exact, 0, tie_tol);
}

FairnessReport audit_choice(const Trace& trace, const Matrix& qstar,
                            Scalar alpha, Scalar tie_tol) {
  return audit(trace, qstar, FairnessDefinition::Choice, alpha, tie_tol);
}

FairnessReport audit_action(const Trace& trace, const Matrix& qstar,
                            Scalar alpha, Scalar tie_tol) {
  return audit(trace, qstar, FairnessDefinition::Action, alpha, tie_tol);
}

std::vector<int> RestrictedMdp::allowed_actions(int s) const {
  std::vector<int> out;
  for (int a = 0; a < base.k; ++a)
    if (allowed(s, a)) out.push_back(a);
  return out;
}

RestrictedMdp restrict_mdp(const Mdp& m, const Matrix& qstar, Scalar alpha,
                           Scalar tie_tol) {
  require_valid(m);
  if (alpha < 0) throw InvalidArgument("alpha must be nonnegative");
  if (qstar.rows() != m.n || qstar.cols() != m.k)
    throw InvalidArgument("Q table has wrong shape");
  ActionMask allowed(m.n, m.k);
  for (int s = 0; s < m.n; ++s) {
    const Scalar best = qstar.row(s).maxCoeff();
    for (int a = 0; a < m.k; ++a)
      allowed(s, a) = qstar(s, a) >= best - alpha - tie_tol;
  }
  return {m, std::move(allowed)};
}

Vector uniform_over_argmax(const RowVector& q_row, Scalar tie_tol,
                           const ActionMask* allowed, int state) {
  const int k = static_cast<int>(q_row.size());
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (int a = 0; a < k; ++a) {
    if (allowed && !(*allowed)(state, a)) continue;
    best = std::max(best, q_row(a));
  }
  Vector dist = Vector::Zero(k);
  int hits = 0;
  for (int a = 0; a < k; ++a) {
    if (allowed && !(*allowed)(state, a)) continue;
    if (q_row(a) >= best - tie_tol) {
      dist(a) = 1;
      ++hits;
    }
  }
  if (hits == 0) throw InvalidArgument("no allowed action");
  dist /= static_cast<Scalar>(hits);
  return dist;
}

StochasticPolicy fair_optimal_policy(const Mdp& m, const Matrix& qstar,
                                     Scalar tie_tol) {
  require_valid(m);
  if (qstar.rows() != m.n || qstar.cols() != m.k)
    throw InvalidArgument("Q table has wrong shape");
  Matrix dist(m.n, m.k);
  for (int s = 0; s < m.n; ++s)
    dist.row(s) = uniform_over_argmax(qstar.row(s), tie_tol).transpose();
  return {std::move(dist)};
}

}  // namespace fairmdp
