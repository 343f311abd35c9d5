#pragma once

#include "fairmdp/estimation.hpp"
#include "fairmdp/fair_e3.hpp"
#include "fairmdp/fairness.hpp"
#include "fairmdp/lowerbound.hpp"
#include "fairmdp/mdp.hpp"
#include "fairmdp/simulate.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace fairmdp::io {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// MDP file format: {n, k, gamma, P: [n][k][n], R: [{kind, param}] × n} with
/// kind ∈ {"point_mass", "bernoulli"}. Parse failures name the offending
/// field.
json to_json(const Mdp& m);
Mdp mdp_from_json(const json& j);
Mdp load_mdp(const std::string& path);
void save_mdp(const Mdp& m, const std::string& path);

/// Traces are JSON-lines, one step per line:
/// {"t", "state", "dist": [k], "action", "reward"}.
void write_trace_jsonl(std::ostream& out, const Trace& trace);
Trace read_trace_jsonl(std::istream& in);
Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

/// {definition, alpha, verdict, violation_count, violations: [...]} with the
/// recorded violations capped (the count is exact).
json to_json(const FairnessReport& report);
/// The same without the violation list (per-run metric summaries embed this).
json report_summary(const FairnessReport& report);

json to_json(const FairE3Metrics& metrics, bool include_decisions = false);

json snapshot_to_json(const KnownModelSnapshot& snap);
KnownModelSnapshot snapshot_from_json(const json& j);

inline constexpr const char* kCsvSchemaHeader = "# fair-mdp schema v1";

/// Schema comment, optional timestamp comment, then the column row.
void write_csv_header(std::ostream& out, const std::vector<std::string>& cols,
                      bool with_timestamp);

void write_first_hit_csv(std::ostream& out,
                         const std::vector<FirstHitRecord>& records, int n,
                         int k, Scalar alpha, bool with_timestamp);

}  // namespace fairmdp::io
