// Experiment harness for the fair-mdp library: exact planning tables, trace
// audits, chain scaling experiments, learner runs and resumable sweeps.
//
// Exit codes: 0 success (audit pass), 1 usage or input error, 2 audit failure.
// Seeds: run i of a command uses root_seed XOR i; the same rule applies inside
// sweeps, so outputs are reproducible cell by cell.

#include "fairmdp/fair_e3.hpp"
#include "fairmdp/fairness.hpp"
#include "fairmdp/io.hpp"
#include "fairmdp/lowerbound.hpp"
#include "fairmdp/markov.hpp"
#include "fairmdp/planning.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace {

using namespace fairmdp;
using io::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAuditFail = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Mdp load_valid_mdp(const std::string& path) {
  Mdp m = io::load_mdp(path);
  const ValidationReport report = validate_mdp(m);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << path << ": invalid MDP";
    for (const ValidationIssue& issue : report.issues) {
      msg << "\n  - " << issue.what;
      if (issue.state >= 0) msg << " (state " << issue.state;
      if (issue.state >= 0 && issue.action >= 0)
        msg << ", action " << issue.action;
      if (issue.state >= 0) msg << ")";
    }
    throw UsageError(msg.str());
  }
  return m;
}

// "n=4,k=2,x=1,gamma=0.9"
ChainSpec parse_chain_spec(const std::string& text) {
  ChainSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw UsageError("bad --chain item '" + item + "' (want key=value)");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "n") spec.n = std::stoi(value);
      else if (key == "k") spec.k = std::stoi(value);
      else if (key == "x") spec.x = std::stod(value);
      else if (key == "gamma") spec.gamma = std::stod(value);
      else throw UsageError("unknown --chain key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw UsageError("bad --chain value '" + value + "'");
    }
  }
  return spec;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw UsageError("bad range '" + text + "' (want lo:hi)");
  try {
    const int lo = std::stoi(text.substr(0, colon));
    const int hi = std::stoi(text.substr(colon + 1));
    if (lo > hi) throw UsageError("empty range '" + text + "'");
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw UsageError("bad range '" + text + "'");
  }
}

LearnerFactory make_learner_factory(const std::string& spec, Scalar* alpha_out) {
  if (spec == "uniform") {
    *alpha_out = 0;
    return [](const Mdp& m) { return baseline_uniform(m.n, m.k); };
  }
  if (spec == "greedy") {
    *alpha_out = 0;
    return [](const Mdp& m) { return baseline_greedy_e3(m.n, m.k, m.gamma); };
  }
  if (spec.rfind("choice-fair:", 0) == 0) {
    Scalar alpha;
    try {
      alpha = std::stod(spec.substr(12));
    } catch (const std::invalid_argument&) {
      throw UsageError("bad learner spec '" + spec + "'");
    }
    if (!(alpha >= 0 && alpha <= 1))
      throw UsageError("choice-fair alpha must lie in [0,1]");
    *alpha_out = alpha;
    return [alpha](const Mdp& m) { return make_choice_fair_biased(m, alpha); };
  }
  throw UsageError("unknown learner '" + spec +
                   "' (try uniform, choice-fair:ALPHA or greedy)");
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw UsageError("cannot write '" + path + "'");
  return file;
}

// ---------------------------------------------------------------- plan ----

int cmd_plan(const std::string& mdp_path, std::optional<Scalar> gamma,
             Scalar tol, const std::string& out_path) {
  Mdp m = load_valid_mdp(mdp_path);
  if (gamma) {
    m.gamma = *gamma;
    require_valid(m);
  }
  const PlanResult plan = value_iteration(m, tol);
  const StochasticPolicy fair = fair_optimal_policy(m, plan.q);
  const Vector mu = stationary_distribution(m, fair).mu;

  std::cout << "# optimal fair policy tables (n=" << m.n << ", k=" << m.k
            << ", gamma=" << m.gamma << ")\n";
  std::cout << std::setw(6) << "state" << std::setw(14) << "V*";
  for (int a = 0; a < m.k; ++a)
    std::cout << std::setw(12) << ("Q*[a" + std::to_string(a) + "]");
  std::cout << std::setw(14) << "mu*" << "\n";
  std::cout << std::setprecision(10);
  for (int s = 0; s < m.n; ++s) {
    std::cout << std::setw(6) << s << std::setw(14) << plan.v(s);
    for (int a = 0; a < m.k; ++a) std::cout << std::setw(12) << plan.q(s, a);
    std::cout << std::setw(14) << mu(s) << "\n";
  }

  if (!out_path.empty()) {
    json j;
    j["v"] = std::vector<Scalar>(plan.v.data(), plan.v.data() + m.n);
    json q = json::array();
    for (int s = 0; s < m.n; ++s) {
      json row = json::array();
      for (int a = 0; a < m.k; ++a) row.push_back(plan.q(s, a));
      q.push_back(std::move(row));
    }
    j["q"] = std::move(q);
    j["mu"] = std::vector<Scalar>(mu.data(), mu.data() + m.n);
    std::ofstream out(out_path);
    if (!out) throw UsageError("cannot write '" + out_path + "'");
    out << j.dump(2) << "\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------- audit ----

int cmd_audit(const std::string& trace_path, const std::string& mdp_path,
              const std::string& definition, Scalar alpha, Scalar tie_tol,
              Scalar tol, const std::string& out_path) {
  const Mdp m = load_valid_mdp(mdp_path);
  const Trace trace = io::load_trace(trace_path);
  if (trace.steps.empty()) throw UsageError(trace_path + ": empty trace");
  const Matrix qstar = value_iteration(m, tol).q;

  FairnessReport report;
  if (definition == "exact") report = audit_exact(trace, qstar, tie_tol);
  else if (definition == "choice") report = audit_choice(trace, qstar, alpha, tie_tol);
  else if (definition == "action") report = audit_action(trace, qstar, alpha, tie_tol);
  else throw UsageError("unknown definition '" + definition + "'");

  std::ofstream file;
  std::ostream& out = open_or_stdout(out_path, file);
  out << io::to_json(report).dump(2) << "\n";
  return report.pass ? kExitOk : kExitAuditFail;
}

// ------------------------------------------------------------ chain-lb ----

int env_jobs() {
  const char* env = std::getenv("FAIR_MDP_JOBS");
  return env ? std::max(1, std::atoi(env)) : 1;
}

int cmd_chain_lb(const std::string& n_range, int k, const std::string& learner,
                 int seeds, std::uint64_t root_seed, long t_cap, Scalar x,
                 Scalar gamma, const std::string& out_path,
                 bool with_timestamp) {
  const auto [n_lo, n_hi] = parse_range(n_range);
  if (n_lo < 2) throw UsageError("chain instances need n >= 2");
  if (seeds < 1) throw UsageError("need at least one seed");
  Scalar alpha = 0;
  const LearnerFactory factory = make_learner_factory(learner, &alpha);

  std::ofstream file;
  std::ostream& out = open_or_stdout(out_path, file);
  io::write_csv_header(out, {"seed", "n", "k", "alpha", "first_hit", "censored"},
                       with_timestamp);
  for (int n = n_lo; n <= n_hi; ++n) {
    const auto records = coupling_experiment(
        {n, k, x, gamma}, factory,
        seed_range(root_seed, static_cast<std::size_t>(seeds)), t_cap,
        env_jobs());
    for (const FirstHitRecord& rec : records)
      out << rec.seed << "," << n << "," << k << "," << alpha << ","
          << rec.steps_to_reach_sn << "," << (rec.distinguished ? 0 : 1)
          << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------- fair-e3 ----

struct FairE3RunSummary {
  std::vector<json> per_seed;
  Scalar median_gap{0};
  Scalar audit_pass_rate{0};
};

FairE3RunSummary run_fair_e3_seeds(const Mdp& m, const FairE3Config& cfg,
                                   long T, int seeds, std::uint64_t root_seed,
                                   bool log_decisions,
                                   const std::string& trace_prefix = "") {
  const PlanResult plan = value_iteration(m, cfg.plan_tol);
  FairE3RunSummary summary;
  std::vector<Scalar> gaps;
  int passes = 0;
  for (int i = 0; i < seeds; ++i) {
    const std::uint64_t seed = root_seed ^ static_cast<std::uint64_t>(i);
    const auto [trace, metrics] = run_fair_e3(m, cfg, T, seed);
    const FairnessReport report =
        audit_action(trace, plan.q, cfg.alpha, cfg.tie_tol);
    passes += report.pass;
    gaps.push_back(metrics.gap);
    json j = io::to_json(metrics, log_decisions);
    j["audit"] = io::report_summary(report);
    summary.per_seed.push_back(std::move(j));
    if (!trace_prefix.empty())
      io::save_trace(trace,
                     trace_prefix + ".seed" + std::to_string(i) + ".jsonl");
  }
  std::sort(gaps.begin(), gaps.end());
  const std::size_t mid = gaps.size() / 2;
  summary.median_gap = gaps.size() % 2 == 1
                           ? gaps[mid]
                           : 0.5 * (gaps[mid - 1] + gaps[mid]);
  summary.audit_pass_rate = static_cast<Scalar>(passes) / seeds;
  return summary;
}

int cmd_fair_e3(const std::string& mdp_path, const std::string& chain,
                FairE3Config cfg, bool sequential, bool tstar_given, long T,
                int seeds, std::uint64_t root_seed, bool log_decisions,
                const std::string& out_path, const std::string& trace_prefix) {
  if (sequential && tstar_given)
    throw UsageError("--Tstar conflicts with --Tstar-sequential");
  if (!sequential && !tstar_given)
    throw UsageError("pick one of --Tstar or --Tstar-sequential");
  if (sequential) cfg.tstar.reset();
  if (mdp_path.empty() == chain.empty())
    throw UsageError("pick exactly one of an MDP file or --chain");
  if (T < 1) throw UsageError("--T must be >= 1");
  if (seeds < 1) throw UsageError("need at least one seed");

  const Mdp m = mdp_path.empty() ? make_chain(parse_chain_spec(chain))
                                 : load_valid_mdp(mdp_path);
  cfg.gamma = m.gamma;
  validate(cfg);

  const FairE3RunSummary summary =
      run_fair_e3_seeds(m, cfg, T, seeds, root_seed, log_decisions, trace_prefix);

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw UsageError("cannot write '" + out_path + "'");
    for (const json& j : summary.per_seed) out << j.dump() << "\n";
  }
  json combined;
  combined["seeds"] = seeds;
  combined["T"] = T;
  combined["median_gap"] = summary.median_gap;
  combined["audit_pass_rate"] = summary.audit_pass_rate;
  std::cout << combined.dump(2) << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- sweep ----

struct SweepCell {
  std::string key;
  std::map<std::string, json> params;
};

json param_or(const std::map<std::string, json>& params, const json& base,
              const std::string& name, const json& fallback) {
  const auto it = params.find(name);
  if (it != params.end()) return it->second;
  if (base.contains(name)) return base.at(name);
  return fallback;
}

std::string run_sweep_cell(const SweepCell& cell, const json& base) {
  const ChainSpec spec{param_or(cell.params, base, "n", 3).get<int>(),
                       param_or(cell.params, base, "k", 2).get<int>(),
                       param_or(cell.params, base, "x", 1.0).get<Scalar>(),
                       param_or(cell.params, base, "gamma", 0.9).get<Scalar>()};
  const Mdp m = make_chain(spec);

  FairE3Config cfg;
  cfg.eps = param_or(cell.params, base, "eps", 0.1).get<Scalar>();
  cfg.alpha = param_or(cell.params, base, "alpha", 0.1).get<Scalar>();
  cfg.delta = param_or(cell.params, base, "delta", 0.1).get<Scalar>();
  cfg.gamma = spec.gamma;
  const json tstar = param_or(cell.params, base, "tstar", json());
  if (!tstar.is_null()) cfg.tstar = tstar.get<long>();
  const json mq = param_or(cell.params, base, "mq", json());
  if (!mq.is_null()) cfg.mq_override = mq.get<long>();
  validate(cfg);

  const long T = param_or(cell.params, base, "T", 10000).get<long>();
  const int seeds = param_or(cell.params, base, "seeds", 5).get<int>();
  const std::uint64_t root =
      param_or(cell.params, base, "root_seed", 1).get<std::uint64_t>();

  const FairE3RunSummary summary =
      run_fair_e3_seeds(m, cfg, T, seeds, root, false);
  std::ostringstream row;
  row << cell.key << "," << spec.n << "," << spec.k << "," << cfg.alpha << ","
      << cfg.eps << "," << T << "," << seeds << "," << summary.median_gap
      << "," << summary.audit_pass_rate;
  return row.str();
}

int cmd_sweep(const std::string& config_path, int jobs, bool with_timestamp) {
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open '" + config_path + "'");
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad sweep config: ") + e.what());
  }
  if (!config.contains("grid") || !config.at("grid").is_object() ||
      config.at("grid").empty())
    throw UsageError("sweep config needs a non-empty 'grid' object");
  if (!config.contains("out"))
    throw UsageError("sweep config needs an 'out' path");
  const json base = config.value("base", json::object());
  const std::string out_path = config.at("out").get<std::string>();

  // cartesian product over sorted grid keys gives stable cell keys
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  for (const auto& [key, values] : config.at("grid").items()) {
    if (!values.is_array() || values.empty())
      throw UsageError("grid axis '" + key + "' must be a non-empty array");
    axes.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }
  std::sort(axes.begin(), axes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<SweepCell> cells;
  std::vector<std::size_t> index(axes.size(), 0);
  while (true) {
    SweepCell cell;
    std::ostringstream key;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (i) key << ";";
      key << axes[i].first << "=" << axes[i].second[index[i]].dump();
      cell.params[axes[i].first] = axes[i].second[index[i]];
    }
    cell.key = key.str();
    cells.push_back(std::move(cell));
    std::size_t axis = 0;
    while (axis < axes.size() && ++index[axis] == axes[axis].second.size()) {
      index[axis] = 0;
      ++axis;
    }
    if (axis == axes.size()) break;
  }

  // resumability: keep rows whose cell key already exists in the output
  std::map<std::string, std::string> rows;
  {
    std::ifstream existing(out_path);
    std::string line;
    while (std::getline(existing, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("cell", 0) == 0) continue;
      const auto comma = line.find(',');
      if (comma != std::string::npos) rows[line.substr(0, comma)] = line;
    }
  }

  std::vector<const SweepCell*> pending;
  for (const SweepCell& cell : cells)
    if (!rows.count(cell.key)) pending.push_back(&cell);

  std::mutex mu;
  std::size_t next = 0;
  const int workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(pending.size())));
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const SweepCell* cell = nullptr;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (failure || next >= pending.size()) return;
          cell = pending[next++];
        }
        try {
          std::string row = run_sweep_cell(*cell, base);
          std::lock_guard<std::mutex> lock(mu);
          rows[cell->key] = std::move(row);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::ofstream out(out_path);
  if (!out) throw UsageError("cannot write '" + out_path + "'");
  io::write_csv_header(out,
                       {"cell", "n", "k", "alpha", "eps", "T", "seeds",
                        "median_gap", "audit_pass_rate"},
                       with_timestamp);
  for (const SweepCell& cell : cells) out << rows.at(cell.key) << "\n";
  std::cout << "wrote " << cells.size() << " cells (" << pending.size()
            << " computed) to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fair-mdp experiment harness.\n"
      "Seeding: run i of any command draws from an independent stream seeded "
      "root_seed XOR i."};
  app.require_subcommand(1);

  // plan
  std::string plan_mdp, plan_out;
  double plan_gamma = -1;
  double plan_tol = kDefaultPlanTol;
  CLI::App* plan = app.add_subcommand(
      "plan",
      "Print V*, Q* and the stationary distribution of the fair optimal policy");
  plan->add_option("mdp-file", plan_mdp, "MDP JSON file")->required();
  plan->add_option("--gamma", plan_gamma, "override the file's discount");
  plan->add_option("--tol", plan_tol, "planner tolerance");
  plan->add_option("--out", plan_out, "also write the tables as JSON");

  // audit
  std::string audit_trace, audit_mdp, audit_def = "exact", audit_out;
  double audit_alpha = 0, audit_tie = kDefaultTieTol,
         audit_tol = kDefaultPlanTol;
  CLI::App* audit = app.add_subcommand(
      "audit", "Audit a trace against a fairness definition (exit 2 on fail)");
  audit->add_option("trace-file", audit_trace, "JSONL trace")->required();
  audit->add_option("mdp-file", audit_mdp, "MDP JSON file")->required();
  audit->add_option("--definition", audit_def, "exact | choice | action");
  audit->add_option("--alpha", audit_alpha, "slack parameter")
      ->check(CLI::NonNegativeNumber);
  audit->add_option("--tie-tol", audit_tie, "tie tolerance");
  audit->add_option("--tol", audit_tol, "planner tolerance for Q*");
  audit->add_option("--out", audit_out, "write the report JSON here");

  // chain-lb
  std::string lb_range = "2:6", lb_learner = "uniform", lb_out;
  int lb_k = 2, lb_seeds = 1000;
  std::uint64_t lb_root = 1;
  long lb_cap = 1000000;
  double lb_x = 1.0, lb_gamma = 0.9;
  bool lb_no_ts = false;
  CLI::App* lb = app.add_subcommand(
      "chain-lb", "First-hit scaling experiment on the chain family");
  lb->add_option("--n-range", lb_range, "chain sizes lo:hi");
  lb->add_option("--k", lb_k, "actions per state")->check(CLI::Range(2, 64));
  lb->add_option("--learner", lb_learner,
                 "uniform | choice-fair:ALPHA | greedy");
  lb->add_option("--seeds", lb_seeds, "seeds per size");
  lb->add_option("--root-seed", lb_root, "root seed");
  lb->add_option("--t-cap", lb_cap, "censoring cap");
  lb->add_option("--x", lb_x, "terminal reward");
  lb->add_option("--gamma", lb_gamma, "discount");
  lb->add_option("--out", lb_out, "CSV output path (stdout if omitted)");
  lb->add_flag("--no-timestamp", lb_no_ts, "omit the timestamp header");

  // fair-e3
  std::string fe_mdp, fe_chain, fe_out;
  double fe_eps = 0.1, fe_alpha = 0.1, fe_delta = 0.1;
  long fe_tstar = 0, fe_mq = 0, fe_T = 10000;
  double fe_scale = 1.0;
  int fe_seeds = 5;
  std::uint64_t fe_root = 1;
  bool fe_seq = false, fe_decisions = false;
  CLI::App* fe = app.add_subcommand("fair-e3", "Run the fair learner");
  fe->add_option("mdp-file", fe_mdp, "MDP JSON file");
  fe->add_option("--chain", fe_chain, "chain spec n=..,k=..,x=..,gamma=..");
  fe->add_option("--eps", fe_eps, "target accuracy");
  fe->add_option("--alpha", fe_alpha, "action-fairness slack");
  fe->add_option("--delta", fe_delta, "failure probability");
  CLI::Option* fe_tstar_opt =
      fe->add_option("--Tstar", fe_tstar, "mixing time of the optimal policy");
  fe->add_flag("--Tstar-sequential", fe_seq, "guess Tstar = 1, 2, ...");
  fe->add_option("--mq", fe_mq, "override the known-state threshold");
  fe->add_option("--scale", fe_scale, "scale for formula thresholds");
  fe->add_option("--T", fe_T, "steps per run");
  fe->add_option("--seeds", fe_seeds, "number of seeded runs");
  fe->add_option("--root-seed", fe_root, "root seed");
  fe->add_flag("--log-decisions", fe_decisions,
               "include decision events in the metrics");
  fe->add_option("--out", fe_out, "metrics JSONL path");
  std::string fe_trace_prefix;
  fe->add_option("--trace-out", fe_trace_prefix,
                 "write each seed's trace to PREFIX.seed<i>.jsonl");

  // sweep
  std::string sweep_config;
  int sweep_jobs = env_jobs();
  bool sweep_no_ts = false;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Grid of fair-e3 runs from a config file; resumable by cell");
  sweep->add_option("config-file", sweep_config, "sweep config JSON")
      ->required();
  sweep->add_option("--jobs", sweep_jobs,
                    "parallel cells (default $FAIR_MDP_JOBS or 1)");
  sweep->add_flag("--no-timestamp", sweep_no_ts, "omit the timestamp header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (plan->parsed())
      return cmd_plan(
          plan_mdp,
          plan_gamma >= 0 ? std::optional<Scalar>(plan_gamma) : std::nullopt,
          plan_tol, plan_out);
    if (audit->parsed())
      return cmd_audit(audit_trace, audit_mdp, audit_def, audit_alpha,
                       audit_tie, audit_tol, audit_out);
    if (lb->parsed())
      return cmd_chain_lb(lb_range, lb_k, lb_learner, lb_seeds, lb_root,
                          lb_cap, lb_x, lb_gamma, lb_out, !lb_no_ts);
    if (fe->parsed()) {
      FairE3Config cfg;
      cfg.eps = fe_eps;
      cfg.alpha = fe_alpha;
      cfg.delta = fe_delta;
      if (fe_tstar_opt->count()) cfg.tstar = fe_tstar;
      if (fe_mq > 0) cfg.mq_override = fe_mq;
      cfg.threshold_scale = fe_scale;
      return cmd_fair_e3(fe_mdp, fe_chain, cfg, fe_seq,
                         fe_tstar_opt->count() > 0, fe_T, fe_seeds, fe_root,
                         fe_decisions, fe_out, fe_trace_prefix);
    }
    if (sweep->parsed())
      return cmd_sweep(sweep_config, sweep_jobs, !sweep_no_ts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
