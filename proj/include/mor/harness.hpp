#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mor/core.hpp"
#include "mor/losses.hpp"
#include "mor/online.hpp"

namespace mor {

inline constexpr const char* kConfigSchema = "mor.experiment/1";

// ---------------------------------------------------------------- inputs

// A class plus an optional distribution, as loaded from a builtin name or a JSON file.
struct ProblemSpec {
  FunctionClass cls;
  std::optional<FiniteDistribution> dist;
};

// JSON text with fields domain, K, kind, functions (name -> labels), and optionally
// support ([x, label] pairs) and weights.
ProblemSpec parse_problem(const std::string& text, const std::string& origin = "<string>");
// Builtin name or path to a JSON file.
ProblemSpec load_problem(const std::string& ref);
std::vector<std::string> builtin_problems();

// "zero-one", "hamming", "d1", "dp:<p>", "lp:<p>" (p may be "inf"), "abs-sum", "huber-sum:<d>".
LossSpec parse_loss(const std::string& name, std::size_t K);

struct ExperimentConfig {
  std::string scenario = "experiment";
  std::string command = "online";  // dims | batch | online
  std::string cls = "binary2";
  std::string dist;                // batch only; empty uses the class file's distribution
  std::string loss = "hamming";
  std::string reduction = "convert";
  std::string feedback = "full";
  std::string stream = "noisy";    // noisy | realizable | alternate | switch
  double noise = 0.2;
  double eps = 0.1;
  double delta = 0.1;
  std::size_t trials = 100;
  std::vector<std::size_t> T{32};
  double beta = 0.5;
  double alpha = 0.0;              // <= 0 selects the reduction's default
  double gamma = 0.0;              // EXP4 exploration
  double witness = 0.5;            // threshold reduction
  double scale = 0.1;              // fat-shattering margin (dims)
  std::size_t depth = 4;           // seq-fat search depth (dims)
  std::size_t seeds = 100;
  std::size_t expert_cap = 20000;
  bool merge = true;
  std::size_t k = 0;               // 0-based coordinate
  std::size_t rbar_seeds = 4;
  std::size_t streams = 1;         // independent oblivious streams; seeds are spread over them
  std::uint64_t seed = 1;
  std::string out;
};

// Unknown fields, wrong types or a schema mismatch raise ConfigError naming the field;
// malformed JSON raises ConfigError with the line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

// ---------------------------------------------------------------- reports

struct BoundCheck {
  std::string name;
  double bound = 0.0;
  double statistic = 0.0;  // mean + 2 stderr, or the success frequency
  double tolerance = 0.0;
  bool pass = false;
};

// One horizon (online) or one batch experiment.
struct RunResult {
  std::size_t T = 0;
  std::map<std::string, double> params;
  std::vector<double> values;  // final regret per seed, or excess risk per trial
  std::vector<bool> success;   // batch only
  double mean = 0.0;
  double std_error = 0.0;
  std::string csv;
  std::vector<BoundCheck> checks;
  std::vector<std::pair<std::string, std::string>> attachments;  // (path, contents), dims only
};

struct GrowthFit {
  double exponent = 0.0;
  double std_error = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::string> warnings;
};

struct Report {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  std::optional<GrowthFit> fit;

  bool passed() const;
  std::string summary() const;
  // Parameters, statistics and checks as JSON; pass/fail can be recomputed from it and the CSV.
  std::string to_json() const;
};

double mean_of(const std::vector<double>& xs);
// Sample standard deviation over sqrt(n); 0 for n < 2.
double std_error_of(const std::vector<double>& xs);

// ---------------------------------------------------------------- bounds

// Names: rewa, exp4, online-conversion, bandit-conversion, concat-conversion,
// online-regression, online-lp, mistake-bound. Missing parameters: ReportSchemaError.
double bound_value(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> bound_parameters(const std::string& name);
std::vector<std::string> bound_names();

// Passes iff mean + 2 stderr <= bound + tol. "batch-success" instead compares the success
// frequency with 1 - delta.
BoundCheck verify_bound(const RunResult& run, const std::string& name, double tol = 1e-9);

// Least-squares slope of log R against log T with a 1.96 stderr interval.
GrowthFit fit_growth_exponent(const std::vector<std::pair<double, double>>& points);

// ---------------------------------------------------------------- running

Report run_experiment(const ExperimentConfig& config);

// Writes the CSV of every run (suffix _T<n> when the grid has several horizons) and the
// JSON summary next to it. Returns the written paths.
std::vector<std::string> write_outputs(const Report& report, const std::string& out);

// Oblivious stream of length T for the given class, derived from seed; streams for smaller T
// are prefixes.
Stream make_stream(const FunctionClass& cls, const std::string& kind, double noise, std::size_t T,
                   std::uint64_t seed);

std::string trace_csv(const std::vector<GameTrace>& traces);

// Final regret per seed from a trace CSV.
std::vector<double> final_regrets_from_csv(const std::string& csv);

}  // namespace mor
