// mor: dims | batch | online | verify
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mor/errors.hpp"
#include "mor/harness.hpp"

namespace {

using mor::ExperimentConfig;

void common_flags(CLI::App* app, ExperimentConfig& c, std::string& config_path) {
  app->add_option("--config", config_path, "JSON experiment config; overrides flags");
  app->add_option("--class", c.cls, "builtin class name or JSON file");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--out", c.out, "output CSV path");
}

void loss_flag(CLI::App* app, ExperimentConfig& c) {
  app->add_option("--loss", c.loss,
                  "zero-one | hamming | d1 | dp:<p> | lp:<p|inf> | abs-sum | huber-sum:<d>");
}

int finish(const mor::Report& report, const std::string& out) {
  if (!out.empty()) {
    for (const auto& p : mor::write_outputs(report, out)) std::cerr << "wrote " << p << '\n';
  }
  for (const auto& r : report.runs) std::cout << r.csv;
  std::cout << '\n' << report.summary();
  return report.passed() ? 0 : 1;
}

int run(ExperimentConfig c, const std::string& config_path, const std::string& command) {
  if (!config_path.empty()) {
    c = mor::load_config(config_path);
    if (c.command != command) throw mor::ConfigError(config_path + ": /command: expected " + command);
  }
  c.command = command;
  const auto report = mor::run_experiment(c);
  return finish(report, c.out);
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw mor::ReportSchemaError("parameter must be name=value: " + kv);
    out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mor::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Recomputes a check from a trace CSV plus named parameters.
int verify_csv(const std::string& csv_path, const std::string& bound, const std::string& summary,
               const std::vector<std::string>& kvs, double tol) {
  mor::RunResult run;
  const std::string csv = slurp(csv_path);
  const bool batch = bound == "batch-success";
  if (!summary.empty()) {
    const auto j = nlohmann::json::parse(slurp(summary));
    const auto& runs = j.at("runs");
    // With several horizons, take the run whose T is the trace's last round.
    std::size_t pick = 0;
    if (!batch && runs.size() > 1) {
      std::size_t last_t = 0;
      std::istringstream in(csv);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        const auto a = line.find(','), b = line.find(',', a + 1);
        if (a != std::string::npos) last_t = std::max<std::size_t>(last_t, std::stoul(line.substr(a + 1, b - a - 1)));
      }
      for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].at("params").value("T", 0.0) == static_cast<double>(last_t)) pick = i;
      }
    }
    for (const auto& [k, v] : runs.at(pick).at("params").items()) run.params[k] = v.get<double>();
  }
  for (const auto& [k, v] : parse_params(kvs)) run.params[k] = v;
  if (batch) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto last = line.rfind(',');
      const auto prev = line.rfind(',', last - 1);
      run.values.push_back(std::stod(line.substr(prev + 1, last - prev - 1)));
      run.success.push_back(line.substr(last + 1) == "1");
    }
  } else {
    run.values = mor::final_regrets_from_csv(csv);
  }
  run.mean = mor::mean_of(run.values);
  run.std_error = mor::std_error_of(run.values);
  const auto check = mor::verify_bound(run, bound, tol);
  std::cout << (check.pass ? "PASS " : "FAIL ") << bound << ": statistic "
            << mor::format_number(check.statistic) << ", bound " << mor::format_number(check.bound)
            << '\n';
  return check.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multioutput learnability reductions: dimensions, batch and online experiments"};
  app.require_subcommand(1);

  ExperimentConfig dc, bc, oc, vc;
  dc.command = "dims";
  bc.command = "batch";
  oc.command = "online";
  std::string dcfg, bcfg, ocfg, vcfg;

  auto* dims = app.add_subcommand("dims", "combinatorial dimensions with certificates");
  common_flags(dims, dc, dcfg);
  dims->add_option("--gamma", dc.scale, "fat-shattering margin");
  dims->add_option("--depth", dc.depth, "sequential fat-shattering search depth");

  auto* batch = app.add_subcommand("batch", "batch reductions over Monte-Carlo trials");
  common_flags(batch, bc, bcfg);
  loss_flag(batch, bc);
  batch->add_option("--dist", bc.dist, "builtin name or JSON file with support/weights");
  batch->add_option("--reduction", bc.reduction, "alg1 | concat | extract-cls | extract-reg | lp | threshold")
      ->check(CLI::IsMember({"alg1", "concat", "extract-cls", "extract-reg", "lp", "threshold"}));
  batch->add_option("--eps", bc.eps);
  batch->add_option("--delta", bc.delta);
  batch->add_option("--trials", bc.trials);
  batch->add_option("--alpha", bc.alpha, "discretization scale; 0 selects the default");
  batch->add_option("--witness", bc.witness, "threshold level for the threshold reduction");
  std::size_t bk = 1;
  batch->add_option("--k", bk, "coordinate (1-based)");

  auto* online = app.add_subcommand("online", "online games over seeds");
  common_flags(online, oc, ocfg);
  loss_flag(online, oc);
  online->add_option("--feedback", oc.feedback)->check(CLI::IsMember({"full", "bandit"}));
  online->add_option("--reduction", oc.reduction)
      ->check(CLI::IsMember({"rewa", "exp4", "mcsoa", "convert", "convert-bandit", "concat",
                             "extract-cls", "extract-reg", "lp"}));
  online->add_option("--T", oc.T, "horizon, or several for a growth fit");
  online->add_option("--beta", oc.beta);
  online->add_option("--alpha", oc.alpha, "discretization scale; 0 selects the default");
  online->add_option("--gamma", oc.gamma, "EXP4 exploration");
  online->add_option("--seeds", oc.seeds);
  online->add_option("--expert-cap", oc.expert_cap);
  online->add_option("--stream", oc.stream)->check(CLI::IsMember({"noisy", "realizable", "alternate", "switch"}));
  online->add_option("--noise", oc.noise);
  online->add_option("--streams", oc.streams, "independent streams; seeds are spread over them");
  online->add_flag("!--no-merge", oc.merge, "keep every expert separate");
  std::size_t ok = 1;
  online->add_option("--k", ok, "coordinate (1-based)");

  auto* verify = app.add_subcommand("verify", "run a config and check its bounds, or recheck a CSV");
  verify->add_option("--config", vcfg, "experiment config to run and verify");
  std::string csv, bound, summary;
  std::vector<std::string> params;
  double tol = 1e-9;
  verify->add_option("--csv", csv, "trace or batch CSV to recheck");
  verify->add_option("--bound", bound, "named bound")->check(CLI::IsMember(mor::bound_names()));
  verify->add_option("--summary", summary, "summary JSON holding the bound parameters");
  verify->add_option("--param", params, "name=value bound parameter");
  verify->add_option("--tol", tol);
  verify->add_option("--out", vc.out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dims) return run(dc, dcfg, "dims");
    if (*batch) {
      if (bk == 0) throw mor::ConfigError("--k is 1-based");
      bc.k = bk - 1;
      return run(bc, bcfg, "batch");
    }
    if (*online) {
      if (ok == 0) throw mor::ConfigError("--k is 1-based");
      oc.k = ok - 1;
      return run(oc, ocfg, "online");
    }
    if (*verify) {
      if (!csv.empty()) {
        if (bound.empty()) throw mor::ConfigError("--csv needs --bound");
        return verify_csv(csv, bound, summary, params, tol);
      }
      if (vcfg.empty()) throw mor::ConfigError("verify needs --config or --csv");
      auto c = mor::load_config(vcfg);
      if (!vc.out.empty()) c.out = vc.out;
      return finish(mor::run_experiment(c), c.out);
    }
  } catch (const mor::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
