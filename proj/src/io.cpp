#include "fairmdp/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace fairmdp::io {

namespace {

const json& field(const json& j, const std::string& name) {
  const auto it = j.find(name);
  if (it == j.end()) throw ParseError("missing field '" + name + "'");
  return *it;
}

template <class T>
T field_as(const json& j, const std::string& name) {
  try {
    return field(j, name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError("field '" + name + "': " + e.what());
  }
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

std::string reward_kind_name(RewardDist::Kind kind) {
  return kind == RewardDist::Kind::PointMass ? "point_mass" : "bernoulli";
}

RewardDist::Kind reward_kind_from(const std::string& name) {
  if (name == "point_mass") return RewardDist::Kind::PointMass;
  if (name == "bernoulli") return RewardDist::Kind::Bernoulli;
  throw ParseError("field 'R.kind': unknown reward kind '" + name + "'");
}

}  // namespace

json to_json(const Mdp& m) {
  json j;
  j["n"] = m.n;
  j["k"] = m.k;
  j["gamma"] = m.gamma;
  json P = json::array();
  for (int s = 0; s < m.n; ++s) {
    json per_action = json::array();
    for (int a = 0; a < m.k; ++a) {
      json row = json::array();
      for (int s2 = 0; s2 < m.n; ++s2) row.push_back(m.P[a](s, s2));
      per_action.push_back(std::move(row));
    }
    P.push_back(std::move(per_action));
  }
  j["P"] = std::move(P);
  json R = json::array();
  for (const RewardDist& r : m.rewards)
    R.push_back({{"kind", reward_kind_name(r.kind)}, {"param", r.param}});
  j["R"] = std::move(R);
  return j;
}

Mdp mdp_from_json(const json& j) {
  Mdp m;
  m.n = field_as<int>(j, "n");
  m.k = field_as<int>(j, "k");
  m.gamma = field_as<Scalar>(j, "gamma");
  if (m.n < 1) throw ParseError("field 'n': must be >= 1");
  if (m.k < 1) throw ParseError("field 'k': must be >= 1");

  const json& P = field(j, "P");
  if (!P.is_array() || static_cast<int>(P.size()) != m.n)
    throw ParseError("field 'P': expected an [n][k][n] array");
  m.P.assign(m.k, Matrix::Zero(m.n, m.n));
  for (int s = 0; s < m.n; ++s) {
    const json& per_action = P.at(s);
    if (!per_action.is_array() || static_cast<int>(per_action.size()) != m.k)
      throw ParseError("field 'P': state " + std::to_string(s) +
                       " does not list k action rows");
    for (int a = 0; a < m.k; ++a) {
      const json& row = per_action.at(a);
      if (!row.is_array() || static_cast<int>(row.size()) != m.n)
        throw ParseError("field 'P': row (" + std::to_string(s) + "," +
                         std::to_string(a) + ") has wrong length");
      for (int s2 = 0; s2 < m.n; ++s2) {
        if (!row.at(s2).is_number())
          throw ParseError("field 'P': non-numeric entry at (" +
                           std::to_string(s) + "," + std::to_string(a) + "," +
                           std::to_string(s2) + ")");
        m.P[a](s, s2) = row.at(s2).get<Scalar>();
      }
    }
  }

  const json& R = field(j, "R");
  if (!R.is_array() || static_cast<int>(R.size()) != m.n)
    throw ParseError("field 'R': expected one entry per state");
  m.rewards.clear();
  for (int s = 0; s < m.n; ++s) {
    const json& r = R.at(s);
    RewardDist dist;
    dist.kind = reward_kind_from(field_as<std::string>(r, "kind"));
    dist.param = field_as<Scalar>(r, "param");
    m.rewards.push_back(dist);
  }
  return m;
}

Mdp load_mdp(const std::string& path) { return mdp_from_json(parse_file(path)); }

void save_mdp(const Mdp& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << to_json(m).dump(2) << "\n";
}

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
  for (const TraceStep& step : trace.steps) {
    json j;
    j["t"] = step.t;
    j["state"] = step.state;
    json dist = json::array();
    for (Eigen::Index a = 0; a < step.dist.size(); ++a)
      dist.push_back(step.dist(a));
    j["dist"] = std::move(dist);
    j["action"] = step.action;
    j["reward"] = step.reward;
    out << j.dump() << "\n";
  }
}

Trace read_trace_jsonl(std::istream& in) {
  Trace trace;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("trace line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    TraceStep step;
    step.t = field_as<long>(j, "t");
    step.state = field_as<int>(j, "state");
    step.action = field_as<int>(j, "action");
    step.reward = field_as<Scalar>(j, "reward");
    const json& dist = field(j, "dist");
    if (!dist.is_array())
      throw ParseError("trace line " + std::to_string(line_no) +
                       ": field 'dist': expected an array");
    step.dist = Vector::Zero(static_cast<Eigen::Index>(dist.size()));
    for (std::size_t a = 0; a < dist.size(); ++a)
      step.dist(static_cast<Eigen::Index>(a)) = dist.at(a).get<Scalar>();
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_trace_jsonl(in);
}

void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  write_trace_jsonl(out, trace);
}

json report_summary(const FairnessReport& report) {
  json j;
  j["definition"] = to_string(report.definition);
  j["alpha"] = report.alpha;
  j["verdict"] = report.pass ? "pass" : "fail";
  j["violation_count"] = report.violation_count;
  return j;
}

json to_json(const FairnessReport& report) {
  json j = report_summary(report);
  json violations = json::array();
  for (const FairnessViolation& v : report.violations)
    violations.push_back({{"t", v.t},
                          {"state", v.state},
                          {"a", v.better},
                          {"a_prime", v.favored},
                          {"qgap", v.qgap},
                          {"pgap", v.pgap}});
  j["violations"] = std::move(violations);
  return j;
}

json to_json(const FairE3Metrics& metrics, bool include_decisions) {
  json j;
  j["seed"] = metrics.seed;
  j["T"] = metrics.T;
  j["gap"] = metrics.gap;
  j["steps_random"] = metrics.steps_random;
  j["steps_explore"] = metrics.steps_explore;
  j["steps_exploit"] = metrics.steps_exploit;
  j["trajectories"] = metrics.trajectories;
  j["explorations"] = metrics.explorations_attempted;
  j["exploit_phases"] = metrics.exploit_phases;
  j["final_tstar"] = metrics.final_tstar;
  json curve = json::array();
  for (const auto& [t, size] : metrics.known_curve)
    curve.push_back({t, size});
  j["known_curve"] = std::move(curve);
  if (include_decisions) {
    json events = json::array();
    for (const DecisionEvent& e : metrics.decisions)
      events.push_back(
          {{"t", e.t},
           {"state", e.state},
           {"variant",
            e.variant == Decision::Variant::Explore ? "explore" : "exploit"},
           {"p", e.p},
           {"threshold", e.threshold},
           {"policy_id", e.policy_id}});
    j["decisions"] = std::move(events);
  }
  return j;
}

json snapshot_to_json(const KnownModelSnapshot& snap) {
  json j;
  j["n"] = snap.n;
  j["k"] = snap.k;
  j["thresholds"] = {
      {"m1", snap.thresholds.m1},
      {"m2", snap.thresholds.m2},
      {"mq", snap.thresholds.mq},
      {"scale", snap.thresholds.scale},
      {"mode",
       snap.thresholds.mode == Thresholds::Mode::Formula ? "formula"
                                                         : "override"}};
  j["trajectory_counts"] = snap.trajectory_counts;
  j["visit_counts"] = snap.visit_counts;
  j["next_counts"] = snap.next_counts;
  j["reward_counts"] = snap.reward_counts;
  j["reward_sums"] = snap.reward_sums;
  j["reward_sumsqs"] = snap.reward_sumsqs;
  json gamma_set = json::array();
  for (int s = 0; s < snap.n; ++s)
    if (snap.trajectory_counts[s] >= snap.thresholds.mq) gamma_set.push_back(s);
  j["gamma_set"] = std::move(gamma_set);
  return j;
}

KnownModelSnapshot snapshot_from_json(const json& j) {
  KnownModelSnapshot snap;
  snap.n = field_as<int>(j, "n");
  snap.k = field_as<int>(j, "k");
  const json& t = field(j, "thresholds");
  snap.thresholds.m1 = field_as<long>(t, "m1");
  snap.thresholds.m2 = field_as<long>(t, "m2");
  snap.thresholds.mq = field_as<long>(t, "mq");
  snap.thresholds.scale = field_as<Scalar>(t, "scale");
  snap.thresholds.mode = field_as<std::string>(t, "mode") == "formula"
                             ? Thresholds::Mode::Formula
                             : Thresholds::Mode::Override;
  snap.trajectory_counts = field_as<std::vector<long>>(j, "trajectory_counts");
  snap.visit_counts =
      field_as<std::vector<std::vector<long>>>(j, "visit_counts");
  snap.next_counts =
      field_as<std::vector<std::vector<std::vector<long>>>>(j, "next_counts");
  snap.reward_counts = field_as<std::vector<long>>(j, "reward_counts");
  snap.reward_sums = field_as<std::vector<Scalar>>(j, "reward_sums");
  snap.reward_sumsqs = field_as<std::vector<Scalar>>(j, "reward_sumsqs");
  return snap;
}

void write_csv_header(std::ostream& out, const std::vector<std::string>& cols,
                      bool with_timestamp) {
  out << kCsvSchemaHeader << "\n";
  if (with_timestamp) {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
    out << "# generated " << buf << "\n";
  }
  for (std::size_t i = 0; i < cols.size(); ++i)
    out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
}

void write_first_hit_csv(std::ostream& out,
                         const std::vector<FirstHitRecord>& records, int n,
                         int k, Scalar alpha, bool with_timestamp) {
  write_csv_header(out, {"seed", "n", "k", "alpha", "first_hit", "censored"},
                   with_timestamp);
  for (const FirstHitRecord& rec : records)
    out << rec.seed << "," << n << "," << k << "," << alpha << ","
        << rec.steps_to_reach_sn << "," << (rec.distinguished ? 0 : 1) << "\n";
}

}  // namespace fairmdp::io
