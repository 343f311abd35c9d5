#include "fairmdp/induced.hpp"

#include "fairmdp/markov.hpp"

#include <algorithm>
#include <cmath>

namespace fairmdp {

namespace {

InducedMdp build_induced(const Mdp& model, const std::set<int>& gammaset,
                         InducedKind kind) {
  require_valid(model);
  if (gammaset.empty())
    throw InvalidArgument("induced MDP needs a nonempty known set");
  for (const int s : gammaset)
    if (s < 0 || s >= model.n)
      throw InvalidArgument("known set contains an invalid state");

  InducedMdp out;
  out.kind = kind;
  out.base_states.assign(gammaset.begin(), gammaset.end());
  out.to_induced.assign(model.n, -1);
  const int g = static_cast<int>(out.base_states.size());
  for (int i = 0; i < g; ++i) out.to_induced[out.base_states[i]] = i;

  Mdp& ind = out.model;
  ind.n = g + 1;
  ind.k = model.k;
  ind.gamma = model.gamma;
  ind.P.assign(model.k, Matrix::Zero(g + 1, g + 1));
  for (int a = 0; a < model.k; ++a) {
    for (int i = 0; i < g; ++i) {
      const int s = out.base_states[i];
      Scalar inside = 0;
      for (int j = 0; j < g; ++j) {
        const Scalar p = model.P[a](s, out.base_states[j]);
        ind.P[a](i, j) = p;
        inside += p;
      }
      // All mass leaving the known set is redirected to the absorbing s0.
      ind.P[a](i, g) = std::max(Scalar(0), 1 - inside);
    }
    ind.P[a](g, g) = 1.0;
  }

  ind.rewards.assign(g + 1, RewardDist::point_mass(0));
  if (kind == InducedKind::Exploitation) {
    for (int i = 0; i < g; ++i)
      ind.rewards[i] =
          RewardDist::point_mass(model.rewards[out.base_states[i]].mean());
  } else {
    ind.rewards[g] = RewardDist::point_mass(1.0);
  }
  return out;
}

}  // namespace

InducedMdp build_exploitation(const Mdp& model, const std::set<int>& gammaset) {
  return build_induced(model, gammaset, InducedKind::Exploitation);
}

InducedMdp build_exploration(const Mdp& model, const std::set<int>& gammaset) {
  return build_induced(model, gammaset, InducedKind::Exploration);
}

RestrictedInducedMdp restrict_induced(InducedMdp induced,
                                      const Matrix& base_qstar, Scalar alpha,
                                      Scalar tie_tol) {
  return restrict_induced(std::move(induced), base_qstar, base_qstar, alpha,
                          tie_tol);
}

RestrictedInducedMdp restrict_induced(InducedMdp induced,
                                      const Matrix& base_q_lower,
                                      const Matrix& base_q_upper, Scalar alpha,
                                      Scalar tie_tol) {
  if (alpha < 0) throw InvalidArgument("alpha must be nonnegative");
  const int g = static_cast<int>(induced.base_states.size());
  const int k = induced.model.k;
  if (base_q_lower.cols() != k || base_q_upper.cols() != k)
    throw InvalidArgument("Q table has wrong action count");
  ActionMask allowed = ActionMask::Constant(g + 1, k, true);
  for (int i = 0; i < g; ++i) {
    const int s = induced.base_states[i];
    if (s >= base_q_lower.rows() || s >= base_q_upper.rows())
      throw InvalidArgument("Q table has wrong state count");
    const Scalar best = base_q_lower.row(s).maxCoeff();
    for (int a = 0; a < k; ++a)
      allowed(i, a) = base_q_upper(s, a) >= best - alpha - tie_tol;
  }
  return {std::move(induced), std::move(allowed)};
}

Scalar escape_probability(const InducedMdp& induced, const StochasticPolicy& pi,
                          int base_state, long steps) {
  if (steps < 1) throw InvalidArgument("escape horizon must be >= 1");
  if (base_state < 0 || base_state >= static_cast<int>(induced.to_induced.size()) ||
      induced.to_induced[base_state] < 0)
    throw InvalidArgument("escape start state is not in the known set");
  const Matrix P = policy_transition_matrix(induced.model, pi);
  RowVector d = RowVector::Zero(induced.model.n);
  d(induced.to_induced[base_state]) = 1.0;
  for (long t = 0; t < steps; ++t) d = d * P;
  return d(induced.absorbing_state());
}

namespace {

StochasticPolicy fair_masked_policy(const Matrix& q, const ActionMask& allowed,
                                    Scalar tie_tol) {
  const int n = static_cast<int>(q.rows());
  Matrix dist(n, q.cols());
  for (int s = 0; s < n; ++s)
    dist.row(s) =
        uniform_over_argmax(q.row(s), tie_tol, &allowed, s).transpose();
  return {std::move(dist)};
}

}  // namespace

Decision decide(int base_state, const RestrictedInducedMdp& exploit,
                const RestrictedInducedMdp& explore, long T, Scalar eps,
                Scalar plan_tol, Scalar tie_tol) {
  if (T < 1) throw InvalidArgument("decide needs T >= 1");
  if (!(eps > 0)) throw InvalidArgument("decide needs eps > 0");

  const PlanResult explore_plan =
      value_iteration(explore.induced.model, explore.allowed, plan_tol);
  StochasticPolicy explore_policy =
      fair_masked_policy(explore_plan.q, explore.allowed, tie_tol);
  const Scalar p =
      escape_probability(explore.induced, explore_policy, base_state, 2 * T);
  const Scalar threshold = eps / (4 * static_cast<Scalar>(T));

  Decision d;
  d.escape_prob = p;
  d.threshold = threshold;
  d.horizon = T;
  if (p >= threshold) {
    d.variant = Decision::Variant::Explore;
    d.policy = std::move(explore_policy);
  } else {
    d.variant = Decision::Variant::Exploit;
    const PlanResult exploit_plan =
        value_iteration(exploit.induced.model, exploit.allowed, plan_tol);
    d.policy = fair_masked_policy(exploit_plan.q, exploit.allowed, tie_tol);
  }
  return d;
}

namespace {

// Iterates every deterministic action assignment drawn from per-state menus.
class PolicyOdometer {
 public:
  explicit PolicyOdometer(std::vector<std::vector<int>> menus)
      : menus_(std::move(menus)), index_(menus_.size(), 0), done_(false) {
    for (const auto& menu : menus_)
      if (menu.empty()) done_ = true;
  }

  bool done() const { return done_; }

  std::vector<int> current() const {
    std::vector<int> actions(menus_.size());
    for (std::size_t s = 0; s < menus_.size(); ++s)
      actions[s] = menus_[s][index_[s]];
    return actions;
  }

  void advance() {
    for (std::size_t s = 0; s < menus_.size(); ++s) {
      if (++index_[s] < menus_[s].size()) return;
      index_[s] = 0;
    }
    done_ = true;
  }

 private:
  std::vector<std::vector<int>> menus_;
  std::vector<std::size_t> index_;
  bool done_;
};

Matrix deterministic_transition(const Mdp& m, const std::vector<int>& actions) {
  Matrix P(m.n, m.n);
  for (int s = 0; s < m.n; ++s) P.row(s) = m.P[actions[s]].row(s);
  return P;
}

Vector finite_horizon_det(const Mdp& m, const Matrix& P_pi, long T) {
  const Vector rbar = m.mean_rewards();
  Vector v = Vector::Zero(m.n);
  for (long t = 0; t < T; ++t) v = rbar + m.gamma * (P_pi * v);
  return v;
}

// (1/T) * sum_{t=1..T} (e_s P^t) . v_T
Scalar path_average(const Matrix& P_pi, const Vector& v_T, int start, long T) {
  RowVector d = RowVector::Zero(P_pi.rows());
  d(start) = 1.0;
  Scalar acc = 0;
  for (long t = 1; t <= T; ++t) {
    d = d * P_pi;
    acc += d.dot(v_T.transpose());
  }
  return acc / static_cast<Scalar>(T);
}

}  // namespace

std::vector<ExploitOrExploreWitness> verify_exploit_or_explore(
    const Mdp& m, const std::set<int>& gammaset, long T, Scalar beta,
    Scalar alpha, Scalar tie_tol) {
  require_valid(m);
  if (T < 1) throw InvalidArgument("verify needs T >= 1");
  if (!(beta > 0 && beta < 1)) throw InvalidArgument("beta must lie in (0,1)");
  const Scalar policy_budget = std::pow(static_cast<Scalar>(m.k), m.n);
  if (policy_budget > 243)
    throw InvalidArgument("instance too large for exhaustive policy search");

  // Best T-step average over all deterministic policies of M, per start.
  std::vector<int> starts(gammaset.begin(), gammaset.end());
  std::vector<Scalar> vtilde(starts.size(),
                             -std::numeric_limits<Scalar>::infinity());
  {
    std::vector<std::vector<int>> menus(m.n);
    for (int s = 0; s < m.n; ++s)
      for (int a = 0; a < m.k; ++a) menus[s].push_back(a);
    for (PolicyOdometer it(menus); !it.done(); it.advance()) {
      const std::vector<int> actions = it.current();
      const Matrix P_pi = deterministic_transition(m, actions);
      const Vector v_T = finite_horizon_det(m, P_pi, T);
      for (std::size_t i = 0; i < starts.size(); ++i)
        vtilde[i] = std::max(vtilde[i], path_average(P_pi, v_T, starts[i], T));
    }
  }

  // Candidate policies live in the (alpha-restricted) exploitation MDP.
  InducedMdp induced = build_exploitation(m, gammaset);
  ActionMask allowed = ActionMask::Constant(induced.model.n, m.k, true);
  if (std::isfinite(alpha)) {
    const PlanResult plan = value_iteration(m);
    allowed = restrict_induced(induced, plan.q, alpha, tie_tol).allowed;
  }
  std::vector<std::vector<int>> menus(induced.model.n);
  for (int i = 0; i < induced.model.n; ++i) {
    if (i == induced.absorbing_state()) {
      menus[i].push_back(0);  // absorbing: action irrelevant
      continue;
    }
    for (int a = 0; a < m.k; ++a)
      if (allowed(i, a)) menus[i].push_back(a);
  }

  constexpr Scalar kSlack = 1e-12;
  std::vector<ExploitOrExploreWitness> witnesses;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const int s = starts[i];
    const int start_idx = induced.to_induced[s];
    ExploitOrExploreWitness best_exploit{s, ExploitOrExploreWitness::Kind::Exploit,
                                         {},
                                         std::numeric_limits<Scalar>::infinity(),
                                         0};
    ExploitOrExploreWitness best_escape{
        s, ExploitOrExploreWitness::Kind::Explore, {}, 0, -1};
    for (PolicyOdometer it(menus); !it.done(); it.advance()) {
      const std::vector<int> actions = it.current();
      const Matrix P_pi = deterministic_transition(induced.model, actions);
      const Vector w_T = finite_horizon_det(induced.model, P_pi, T);
      const Scalar achieved = path_average(P_pi, w_T, start_idx, T);
      const Scalar deficit = vtilde[i] - achieved;
      if (deficit < best_exploit.deficit) {
        best_exploit.deficit = deficit;
        best_exploit.policy = actions;
      }
      RowVector d = RowVector::Zero(induced.model.n);
      d(start_idx) = 1.0;
      for (long t = 0; t < 2 * T; ++t) d = d * P_pi;
      const Scalar escape = d(induced.absorbing_state());
      if (escape > best_escape.escape) {
        best_escape.escape = escape;
        best_escape.policy = actions;
      }
    }
    if (best_exploit.deficit <= beta + kSlack) {
      witnesses.push_back(std::move(best_exploit));
    } else if (best_escape.escape > beta / static_cast<Scalar>(T) - kSlack) {
      witnesses.push_back(std::move(best_escape));
    } else {
      throw WitnessNotFound(
          "no exploit or explore witness at a known state — this should be "
          "impossible");
    }
  }
  return witnesses;
}

}  // namespace fairmdp
