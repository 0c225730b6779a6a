#include "mor/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mor/batch.hpp"
#include "mor/dimensions.hpp"
#include "mor/errors.hpp"

namespace mor {

using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path, bool config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    const std::string msg = "cannot open " + path;
    if (config) throw ConfigError(msg);
    throw ParameterError(msg);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
}

[[noreturn]] void bad_field(const std::string& origin, const std::string& path,
                            const std::string& what) {
  throw ConfigError(origin + ": " + path + ": " + what);
}

LabelVector label_from_json(const json& j, const std::string& origin, const std::string& path) {
  if (j.is_number()) return LabelVector{j.get<double>()};
  if (!j.is_array()) bad_field(origin, path, "label must be a number or an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad_field(origin, path + "/" + std::to_string(i), "expected a number");
    v.push_back(j[i].get<double>());
  }
  return LabelVector(std::move(v));
}

json label_to_json(const LabelVector& y) {
  if (y.size() == 1) return y[0];
  json a = json::array();
  for (double v : y.v) a.push_back(v);
  return a;
}

// ------------------------------------------------------------- builtins

const char* kBuiltinSingleton = R"({
  "domain": [1, 2], "K": 1, "kind": "binary",
  "functions": {"only": [1, -1]},
  "support": [[1, 1], [2, -1], [2, 1]], "weights": [0.5, 0.3, 0.2]
})";

const char* kBuiltinExperts2 = R"({
  "domain": [1], "K": 1, "kind": "binary",
  "functions": {"plus": [1], "minus": [-1]},
  "support": [[1, 1], [1, -1]], "weights": [0.6, 0.4]
})";

const char* kBuiltinBinary1 = R"({
  "domain": [1, 2, 3, 4], "K": 1, "kind": "binary",
  "functions": {
    "t1": [1, 1, 1, 1], "t2": [-1, 1, 1, 1], "t3": [-1, -1, 1, 1],
    "t4": [-1, -1, -1, 1], "t5": [-1, -1, -1, -1]
  },
  "support": [[1, -1], [2, -1], [2, 1], [3, 1], [4, 1], [4, -1]],
  "weights": [0.2, 0.15, 0.1, 0.25, 0.2, 0.1]
})";

const char* kBuiltinBinary2 = R"({
  "domain": [1, 2, 3], "K": 2, "kind": "binary",
  "functions": {
    "a": [[1, 1], [1, -1], [-1, -1]],
    "b": [[1, -1], [-1, 1], [-1, -1]],
    "c": [[-1, 1], [1, 1], [1, -1]],
    "d": [[-1, -1], [-1, -1], [1, 1]]
  },
  "support": [[1, [1, 1]], [1, [-1, 1]], [2, [1, -1]], [2, [1, 1]], [3, [-1, -1]], [3, [1, 1]]],
  "weights": [0.2, 0.1, 0.2, 0.1, 0.25, 0.15]
})";

const char* kBuiltinReal2 = R"({
  "domain": [1, 2, 3], "K": 2, "kind": "real",
  "functions": {
    "f": [[0.25, 0.75], [0.75, 0.5], [0.25, 0.75]],
    "g": [[0.75, 0.5], [0.75, 0.5], [0.25, 0.75]]
  },
  "support": [[1, [0.25, 0.75]], [1, [0.75, 0.5]], [2, [0.75, 0.5]], [3, [0.25, 0.75]],
              [3, [0.75, 0.5]]],
  "weights": [0.3, 0.2, 0.2, 0.2, 0.1]
})";

const char* kBuiltinReal3 = R"({
  "domain": [1, 2], "K": 2, "kind": "real",
  "functions": {
    "f": [[0.2, 0.9], [0.7, 0.1]],
    "g": [[0.6, 0.3], [0.4, 0.8]],
    "h": [[0.9, 0.5], [0.1, 0.45]]
  },
  "support": [[1, [0.3, 0.8]], [1, [0.6, 0.4]], [2, [0.65, 0.2]], [2, [0.3, 0.7]]],
  "weights": [0.35, 0.15, 0.3, 0.2]
})";

// f and g disagree on two of three points by the full range.
const char* kBuiltinReal2Sep = R"({
  "domain": [1, 2, 3], "K": 2, "kind": "real",
  "functions": {
    "f": [[0, 1], [1, 0], [0, 1]],
    "g": [[1, 0], [0, 1], [0, 1]]
  },
  "support": [[1, [0, 1]], [1, [1, 0]], [2, [1, 0]], [3, [0, 1]]],
  "weights": [0.3, 0.2, 0.3, 0.2]
})";

const std::vector<std::pair<std::string, const char*>>& builtins() {
  static const std::vector<std::pair<std::string, const char*>> b{
      {"singleton", kBuiltinSingleton}, {"experts2", kBuiltinExperts2},
      {"binary1", kBuiltinBinary1},     {"binary2", kBuiltinBinary2},
      {"real2", kBuiltinReal2},         {"real3", kBuiltinReal3},
      {"real2sep", kBuiltinReal2Sep}};
  return b;
}

// ------------------------------------------------------------- stats

double sqr(double v) { return v * v; }

std::uint64_t learner_seed(std::uint64_t seed, std::size_t T, std::size_t s) {
  return Rng(seed).derive("learner").derive(static_cast<std::uint64_t>(T)).derive(s).next_u64();
}

std::vector<LabelVector> loss_grid(const FunctionClass& cls) {
  if (cls.kind() == LabelKind::kBinary) return binary_labels(cls.output_dim());
  return image(cls);
}

Stream project(const Stream& s, std::size_t k) {
  Stream out;
  for (const auto& e : s.rounds) out.rounds.push_back({e.x, LabelVector{e.y[k]}});
  return out;
}

std::vector<Stream> project(const std::vector<Stream>& ss, std::size_t k) {
  std::vector<Stream> out;
  for (const auto& s : ss) out.push_back(project(s, k));
  return out;
}

// Full-length relabelings plus Bernoulli(T^beta / T) subsequences, one set per labeler.
std::vector<Stream> probe_streams(const std::vector<Stream>& streams,
                                  const std::vector<std::function<LabelVector(const Example&)>>& labelers,
                                  double beta, std::uint64_t seed) {
  Rng rng = Rng(seed).derive("probes");
  std::vector<Stream> probes;
  for (const auto& stream : streams) {
    const std::size_t T = stream.horizon();
    const double p = T == 0 ? 0.0 : std::pow(static_cast<double>(T), beta) / static_cast<double>(T);
    for (const auto& lab : labelers) {
      Stream full;
      for (const auto& e : stream.rounds) full.rounds.push_back({e.x, lab(e)});
      for (int r = 0; r < 4; ++r) {
        Stream sub;
        for (const auto& e : full.rounds) {
          if (rng.bernoulli(p)) sub.rounds.push_back(e);
        }
        if (!sub.rounds.empty()) probes.push_back(std::move(sub));
      }
      probes.push_back(std::move(full));
    }
  }
  return probes;
}

std::vector<std::function<LabelVector(const Example&)>> function_labelers(const FunctionClass& cls) {
  std::vector<std::function<LabelVector(const Example&)>> out;
  for (const auto& f : cls.functions()) {
    out.push_back([f](const Example& e) { return f(e.x); });
  }
  return out;
}

double measured_rbar(const OnlineFactory& factory, const std::vector<Stream>& probes,
                     const FunctionClass& comparator, const LossSpec& loss, std::size_t seeds,
                     std::uint64_t seed, double at) {
  const auto curve =
      measure_regret_curve(factory, probes, comparator, loss, std::max<std::size_t>(seeds, 1), seed);
  return regret_majorant(curve)(at);
}

std::size_t ceil_pow(std::size_t T, double beta) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(T), beta) - 1e-9)));
}

// ------------------------------------------------------------- online setups

struct OnlineSetup {
  OnlineFactory make;  // fresh learner; seeded through run_game's reset
  FunctionClass comparator;
  LossSpec loss;
  std::vector<Stream> streams;  // seed i plays streams[i % size]
  Feedback feedback = Feedback::kFull;
  std::optional<LabelSet> labels;
  std::map<std::string, double> params;
  std::vector<std::string> bounds;
};

SubsampleOptions options_of(const ExperimentConfig& c) {
  SubsampleOptions o;
  o.cap = c.expert_cap;
  o.merge = c.merge;
  return o;
}

void require_k(const FunctionClass& cls, std::size_t k) {
  if (k >= cls.output_dim()) throw CoordinateRangeError("coordinate out of range");
}

OnlineSetup online_setup(const ExperimentConfig& c, const FunctionClass& cls, std::size_t T) {
  OnlineSetup s{nullptr, cls, parse_loss(c.loss, cls.output_dim()), {}, Feedback::kFull,
                std::nullopt, {}, {}};
  if (c.streams == 0) throw ConfigError("streams must be positive");
  std::vector<Stream> stream;
  for (std::size_t j = 0; j < c.streams; ++j) {
    const std::uint64_t sj = j == 0 ? c.seed : Rng(c.seed).derive("streams").derive(j).next_u64();
    stream.push_back(make_stream(cls, c.stream, c.noise, T, sj));
  }
  s.streams = stream;
  const double Td = static_cast<double>(T);
  const double M = s.loss.bound(cls.kind(), cls.output_dim());
  const auto opts = options_of(c);
  const auto& r = c.reduction;
  const std::uint64_t rseed = Rng(c.seed).derive("rbar").derive(static_cast<std::uint64_t>(T)).next_u64();
  s.params["T"] = Td;
  s.params["M"] = M;
  s.params["K"] = static_cast<double>(cls.output_dim());

  if (c.feedback == "bandit") s.feedback = Feedback::kBandit;
  else if (c.feedback != "full") throw ConfigError("feedback must be full or bandit");

  auto conversion_params = [&](const FunctionClass& F, const LossSpec& loss, const OnlineFactory& base) {
    s.params["beta"] = c.beta;
    s.params["c"] = subadditivity_constant(loss, loss_grid(F));
    s.params["image"] = static_cast<double>(image(F).size());
    const auto probes = probe_streams(stream, function_labelers(F), c.beta, rseed);
    s.params["Rbar"] = measured_rbar(base, probes, F, loss, c.rbar_seeds, rseed,
                                     std::pow(Td, c.beta));
  };

  if (r == "rewa" || r == "exp4") {
    const FunctionClass F = cls;
    const LossSpec loss = s.loss;
    auto experts = [F] {
      std::vector<LearnerHandle> v;
      for (const auto& f : F.functions()) v.push_back(std::make_unique<FixedFunctionLearner>(f));
      return ExpertPool::fixed(std::move(v));
    };
    s.params["N"] = static_cast<double>(F.size());
    if (r == "rewa") {
      if (s.feedback == Feedback::kBandit) throw UnsupportedFeedbackError("rewa needs full feedback");
      s.make = [=] { return std::make_unique<Rewa>(experts(), loss, M, T, 0); };
      s.bounds = {"rewa"};
    } else {
      const auto labels = image(F);
      const double gamma = c.gamma;
      s.params["Y"] = static_cast<double>(labels.size());
      s.make = [=] { return std::make_unique<Exp4>(experts(), labels, loss, M, T, 0, gamma); };
      s.bounds = {"exp4"};
    }
  } else if (r == "mcsoa") {
    s.make = mcsoa_factory(cls);
    if (c.stream == "realizable") {
      s.params["d"] = static_cast<double>(mc_littlestone(cls).value);
      s.bounds = {"mistake-bound"};
    }
  } else if (r == "convert" || r == "convert-bandit") {
    const auto base = mcsoa_factory(cls);
    const LossSpec loss = s.loss;
    conversion_params(cls, loss, base);
    const double beta = c.beta;
    if (r == "convert") {
      if (s.feedback == Feedback::kBandit) throw UnsupportedFeedbackError("use convert-bandit");
      s.make = [=] { return realizable_to_agnostic_online(base, cls, loss, T, beta, 0, opts); };
      s.bounds = {"online-conversion"};
    } else {
      s.feedback = Feedback::kBandit;
      s.params["Y"] = s.params["image"];
      const double gamma = c.gamma;
      s.make = [=] { return bandit_conversion(base, cls, {}, loss, T, beta, 0, opts, gamma); };
      s.bounds = {"bandit-conversion"};
    }
  } else if (r == "concat") {
    if (cls.kind() != LabelKind::kBinary) throw KindMismatchError("concat needs a binary class");
    const std::size_t K = cls.output_dim();
    const auto zo = LossSpec::zero_one();
    std::vector<FunctionClass> Fk;
    double rbar = 0.0, im = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      Fk.push_back(restrict(cls, k));
      const auto probes =
          probe_streams(project(stream, k), function_labelers(Fk.back()), c.beta, rseed + k);
      rbar = std::max(rbar, measured_rbar(mcsoa_factory(Fk.back()), probes, Fk.back(), zo,
                                          c.rbar_seeds, rseed, std::pow(Td, c.beta)));
      im = std::max(im, static_cast<double>(image(Fk.back()).size()));
    }
    s.params["beta"] = c.beta;
    s.params["c"] = 1.0;
    s.params["M"] = 1.0;
    s.params["Rbar"] = rbar;
    s.params["image"] = im;
    const double beta = c.beta;
    s.make = [=] {
      std::vector<LearnerHandle> parts;
      for (const auto& F : Fk) {
        parts.push_back(realizable_to_agnostic_online(mcsoa_factory(F), F, zo, T, beta, 0, opts));
      }
      return concat_online(std::move(parts));
    };
    s.bounds = {"concat-conversion"};
  } else if (r == "extract-cls") {
    if (cls.kind() != LabelKind::kBinary) throw KindMismatchError("extract-cls needs a binary class");
    require_k(cls, c.k);
    const auto base = mcsoa_factory(cls);
    const LossSpec loss = s.loss;
    conversion_params(cls, loss, base);
    const double beta = c.beta;
    const std::size_t k = c.k;
    s.make = [=] {
      return extract_coordinate_online_classification(
          realizable_to_agnostic_online(base, cls, loss, T, beta, 0, opts), k, 0);
    };
    s.comparator = restrict(cls, k);
    s.loss = LossSpec::zero_one();
    s.streams = project(stream, k);
    s.bounds = {"online-conversion"};
  } else if (r == "extract-reg") {
    if (cls.kind() != LabelKind::kReal) throw KindMismatchError("extract-reg needs a real class");
    require_k(cls, c.k);
    const LossSpec loss = s.loss;
    if (!loss.is_decomposable() || !loss.lipschitz()) {
      throw ParameterError("extract-reg needs a decomposable Lipschitz loss");
    }
    const std::size_t K = cls.output_dim(), k = c.k;
    const double L = *loss.lipschitz();
    const double alpha = c.alpha > 0.0 ? c.alpha : default_online_regression_alpha(K, T, L);
    const std::size_t h = ceil_pow(T, c.beta);
    const auto base = forecaster_factory(cls, loss, h);
    const FunctionClass rest = K > 1 ? discretize(drop_coordinate(cls, k), alpha) : cls;
    std::vector<std::function<LabelVector(const Example&)>> labelers;
    for (std::size_t i = 0; i < cls.size(); ++i) {
      labelers.push_back([=](const Example& e) {
        const LabelVector r = K > 1 ? rest[i](e.x) : LabelVector{};
        return insert_coordinate(r, k, e.y[k]);
      });
    }
    const auto probes = probe_streams(stream, labelers, c.beta, rseed);
    s.params["beta"] = c.beta;
    s.params["L"] = L;
    s.params["alpha"] = alpha;
    s.params["Rbar"] = measured_rbar(base, probes, cls, loss, c.rbar_seeds, rseed,
                                     std::pow(Td, c.beta));
    const double beta = c.beta;
    s.make = [=] {
      return extract_coordinate_online_regression(base, cls, k, alpha, beta, loss, T, 0, opts);
    };
    s.comparator = restrict(cls, k);
    s.loss = loss.coordinate_loss(k);
    s.streams = project(stream, k);
    s.bounds = {"online-regression"};
  } else if (r == "lp") {
    if (cls.kind() != LabelKind::kReal) throw KindMismatchError("lp needs a real class");
    if (s.loss.kind() != LossKind::kLp) throw ParameterError("lp reduction needs an lp loss");
    const std::size_t K = cls.output_dim();
    const double p = s.loss.p();
    const double alpha = c.alpha > 0.0 ? c.alpha : default_lp_online_alpha(K, T);
    const std::size_t h = ceil_pow(T, c.beta);
    const auto l1 = LossSpec::lp(1);
    const auto base = forecaster_factory(cls, l1, h);
    const auto probes = probe_streams(stream, function_labelers(discretize(cls, alpha)), c.beta, rseed);
    s.params["beta"] = c.beta;
    s.params["alpha"] = alpha;
    s.params["p"] = p;
    s.params["Rbar"] = measured_rbar(base, probes, cls, l1, c.rbar_seeds, rseed,
                                     std::pow(Td, c.beta));
    const double beta = c.beta;
    s.make = [=] { return lp_online(base, cls, p, alpha, beta, T, 0, opts); };
    s.bounds = {"online-lp"};
  } else {
    throw ConfigError("unknown online reduction: " + r);
  }
  if (s.feedback == Feedback::kBandit && r != "exp4" && r != "convert-bandit") {
    throw UnsupportedFeedbackError(r + " does not support bandit feedback");
  }
  return s;
}

RunResult run_online(const ExperimentConfig& c, const FunctionClass& cls, std::size_t T) {
  OnlineSetup s = online_setup(c, cls, T);
  RunResult run;
  run.T = T;
  run.params = s.params;
  std::vector<GameTrace> traces;
  for (std::size_t i = 0; i < c.seeds; ++i) {
    auto learner = s.make();
    traces.push_back(run_game(*learner, s.streams[i % s.streams.size()], s.comparator, s.loss, s.feedback,
                              learner_seed(c.seed, T, i), s.labels));
    run.values.push_back(traces.back().regret());
  }
  run.mean = mean_of(run.values);
  run.std_error = std_error_of(run.values);
  run.csv = trace_csv(traces);
  for (const auto& b : s.bounds) run.checks.push_back(verify_bound(run, b));
  return run;
}

// ------------------------------------------------------------- batch

FiniteDistribution batch_distribution(const ExperimentConfig& c, const ProblemSpec& problem) {
  if (!c.dist.empty()) {
    auto d = load_problem(c.dist);
    if (!d.dist) throw ConfigError(c.dist + ": no distribution (support/weights)");
    return *d.dist;
  }
  if (!problem.dist) throw ConfigError(c.cls + ": no distribution; pass dist");
  return *problem.dist;
}

std::vector<Instance> xs_of(const Sample& s) {
  std::vector<Instance> xs;
  xs.reserve(s.size());
  for (const auto& e : s) xs.push_back(e.x);
  return xs;
}

std::size_t required(std::optional<std::size_t> m) {
  if (!m) throw ParameterError("learner declares no sample complexity");
  return *m;
}

RunResult run_batch(const ExperimentConfig& c, const ProblemSpec& problem) {
  const FunctionClass& cls = problem.cls;
  const FiniteDistribution dist = batch_distribution(c, problem);
  const std::size_t K = cls.output_dim();
  if (dist.output_dim() != K) throw ArityError("distribution and class dimensions differ");
  const LossSpec loss = parse_loss(c.loss, K);
  const double eps = c.eps, delta = c.delta;
  const auto& r = c.reduction;

  RunResult run;
  run.params["eps"] = eps;
  run.params["delta"] = delta;
  run.params["K"] = static_cast<double>(K);
  ReductionReport rep;
  rep.eps = eps;
  rep.delta = delta;
  const Rng root = Rng(c.seed).derive("batch");

  for (std::size_t trial = 0; trial < c.trials; ++trial) {
    Rng draw = root.derive(trial);
    double excess = 0.0;
    std::size_t nu = 0, nl = 0;
    if (r == "alg1") {
      const double M = loss.bound(cls.kind(), K);
      const double cc = subadditivity_constant(loss, loss_grid(cls));
      Erm A(cls, loss);
      nu = required(A.sample_complexity(eps / (2.0 * cc), delta / 2.0, Setting::kRealizable));
      const auto SU = xs_of(dist.sample(draw, nu));
      const std::size_t C = behaviors_on(cls, SU).size();
      nl = alg1_labeled_size(eps, delta, M, C);
      const auto SL = dist.sample(draw, nl);
      const auto out = realizable_to_agnostic(A, cls, loss, SU, SL);
      excess = exact_risk(out.predictor, dist, loss) - best_risk(cls, dist, loss).value;
    } else if (r == "concat") {
      std::vector<LearnerPtr> parts;
      for (std::size_t k = 0; k < K; ++k) parts.push_back(erm(restrict(cls, k), LossSpec::zero_one()));
      const ConcatLearner A(parts);
      nl = required(A.sample_complexity(eps, delta, Setting::kAgnostic));
      const auto S = dist.sample(draw, nl);
      excess = exact_risk(A.fit(S), dist, loss) - best_risk(cls, dist, loss).value;
    } else if (r == "extract-cls") {
      require_k(cls, c.k);
      auto multi = erm(cls, loss);
      const auto D1 = marginal(dist, c.k);
      nl = required(multi->sample_complexity(eps, delta, Setting::kAgnostic));
      const auto S = D1.sample(draw, nl);
      const auto A = extract_coordinate_classification(multi, c.k, c.seed, trial);
      const auto zo = LossSpec::zero_one();
      excess = exact_risk(A->fit(S), D1, zo) - best_risk(restrict(cls, c.k), D1, zo).value;
    } else if (r == "extract-reg") {
      require_k(cls, c.k);
      if (!loss.is_decomposable() || !loss.lipschitz()) {
        throw ParameterError("extract-reg needs a decomposable Lipschitz loss");
      }
      const double L = *loss.lipschitz();
      const double alpha = c.alpha > 0.0 ? c.alpha : default_regression_alpha(eps, L, K);
      run.params["alpha"] = alpha;
      Erm A(cls, loss);
      const auto D1 = marginal(dist, c.k);
      nu = required(A.sample_complexity(eps / 4.0, delta / 2.0, Setting::kAgnostic));
      const auto S = D1.sample(draw, nu);
      // |C_1(S)| is at most the number of augmentations.
      const std::size_t C =
          K > 1 ? behaviors_on(discretize(drop_coordinate(cls, c.k), alpha), xs_of(S)).size() : 1;
      nl = alg1_labeled_size(eps, delta, L, C);
      const auto St = D1.sample(draw, nl);
      const auto coord = loss.coordinate_loss(c.k);
      const auto out = extract_coordinate_regression(A, cls, c.k, alpha, loss, S, St);
      excess = exact_risk(out.predictor, D1, coord) - best_risk(restrict(cls, c.k), D1, coord).value;
    } else if (r == "lp") {
      if (loss.kind() != LossKind::kLp) throw ParameterError("lp reduction needs an lp loss");
      const double alpha = c.alpha > 0.0 ? c.alpha : default_lp_alpha(eps, K);
      run.params["alpha"] = alpha;
      const auto l1 = LossSpec::lp(1);
      Erm A(cls, l1);
      // Selection at (eps/2, delta/2) around A; its realizable rate is its agnostic rate at
      // half the accuracy.
      nu = required(A.sample_complexity(eps / 8.0, delta / 4.0, Setting::kAgnostic));
      const auto SU = xs_of(dist.sample(draw, nu));
      const std::size_t C = behaviors_on(discretize(cls, alpha), SU).size();
      nl = alg1_labeled_size(eps / 2.0, delta / 2.0, loss.bound(LabelKind::kReal, K), C);
      const auto SL = dist.sample(draw, nl);
      const auto out = lp_agnostic(A, cls, loss.p(), alpha, SU, SL);
      excess = exact_risk(out.predictor, dist, loss) - best_risk(cls, dist, loss).value;
    } else if (r == "threshold") {
      if (cls.kind() != LabelKind::kReal || K != 1) {
        throw KindMismatchError("threshold needs a scalar real class");
      }
      if (dist.support().front().y[0] != 1.0 && dist.support().front().y[0] != -1.0) {
        throw KindMismatchError("threshold needs a binary distribution");
      }
      std::unordered_map<Instance, double> wit;
      for (Instance x : cls.domain()->ids()) wit[x] = c.witness;
      const double alpha = c.alpha > 0.0 ? c.alpha : eps / 2.0;
      run.params["alpha"] = alpha;
      Erm A(cls, LossSpec::d1());
      nu = required(A.sample_complexity(eps / 2.0, delta / 2.0, Setting::kRealizable));
      const auto SU = xs_of(dist.sample(draw, nu));
      std::vector<Predictor> hs;
      for (const auto& f : cls.functions()) hs.push_back(threshold_predictor(f, wit));
      const FunctionClass H(cls.domain(), LabelKind::kBinary, 1, hs);
      nl = alg1_labeled_size(eps, delta, 1.0, behaviors_on(H, SU).size());
      const auto SL = dist.sample(draw, nl);
      const auto out = threshold_binary_reduction(A, cls, wit, alpha, SU, SL);
      const auto zo = LossSpec::zero_one();
      excess = exact_risk(out.predictor, dist, zo) - best_risk(H, dist, zo).value;
    } else {
      throw ConfigError("unknown batch reduction: " + r);
    }
    rep.add(excess, nu + nl, nu, nl);
  }

  std::ostringstream csv;
  csv << "trial,n,|S_U|,|S_L|,excess_risk,success\n";
  for (std::size_t i = 0; i < rep.trials(); ++i) {
    csv << i << ',' << rep.n[i] << ',' << rep.unlabeled[i] << ',' << rep.labeled[i] << ','
        << format_number(rep.excess_risk[i]) << ',' << (rep.success[i] ? 1 : 0) << '\n';
  }
  run.csv = csv.str();
  run.values = rep.excess_risk;
  run.success = rep.success;
  run.mean = mean_of(run.values);
  run.std_error = std_error_of(run.values);
  run.checks.push_back(verify_bound(run, "batch-success"));
  return run;
}

// ------------------------------------------------------------- dims

json certificate_json(const ShatterCertificate& cert) {
  json j;
  j["kind"] = to_string(cert.kind);
  j["dimension"] = cert.dimension;
  if (cert.gamma > 0.0) j["gamma"] = cert.gamma;
  if (!cert.nodes.empty()) {
    json nodes = json::array();
    for (const auto& n : cert.nodes) {
      json o;
      o["x"] = n.x;
      o["label"] = json::array({label_to_json(n.label[0]), label_to_json(n.label[1])});
      if (cert.kind == DimensionKind::kSeqFatShattering) o["witness"] = n.witness;
      o["child"] = json::array({n.child[0], n.child[1]});
      if (n.function >= 0) o["function"] = n.function;
      nodes.push_back(o);
    }
    j["nodes"] = nodes;
  } else {
    j["set"] = cert.set;
    if (!cert.witness_r.empty()) j["witness"] = cert.witness_r;
    if (!cert.witness_f.empty()) {
      json f = json::array(), g = json::array();
      for (const auto& y : cert.witness_f) f.push_back(label_to_json(y));
      for (const auto& y : cert.witness_g) g.push_back(label_to_json(y));
      j["witness_f"] = f;
      j["witness_g"] = g;
    }
    j["pattern_function"] = cert.pattern_function;
  }
  return j;
}

void scalar_dims(const ExperimentConfig& c, const FunctionClass& cls, const std::string& suffix,
                 std::vector<std::pair<std::string, DimensionResult>>& rows) {
  if (cls.kind() == LabelKind::kBinary) {
    rows.emplace_back("vc" + suffix, vc(cls));
    rows.emplace_back("natarajan" + suffix, natarajan(cls));
    rows.emplace_back("littlestone" + suffix, littlestone(cls));
  } else {
    rows.emplace_back("natarajan" + suffix, natarajan(cls));
    rows.emplace_back("mc_littlestone" + suffix, mc_littlestone(cls));
    rows.emplace_back("fat_shattering" + suffix, fat_shattering(cls, c.scale));
    rows.emplace_back("seq_fat_shattering" + suffix, seq_fat_shattering(cls, c.scale, c.depth));
  }
}

// Scalar classes get every dimension of their kind. For K > 1 the label vectors are the classes
// of mc_littlestone, and the scalar dimensions are reported per coordinate with a _k<n> suffix.
RunResult run_dims(const ExperimentConfig& c, const FunctionClass& cls) {
  std::vector<std::pair<std::string, DimensionResult>> rows;
  if (cls.output_dim() == 1) {
    scalar_dims(c, cls, "", rows);
    if (cls.kind() == LabelKind::kBinary) rows.emplace_back("mc_littlestone", mc_littlestone(cls));
  } else {
    rows.emplace_back("mc_littlestone", mc_littlestone(cls));
    for (std::size_t k = 0; k < cls.output_dim(); ++k) {
      scalar_dims(c, restrict(cls, k), "_k" + std::to_string(k + 1), rows);
    }
  }
  RunResult run;
  std::ostringstream csv;
  csv << "kind,value,truncated,certificate\n";
  for (const auto& [name, res] : rows) {
    const std::string file = c.out.empty() ? "" : c.out + "." + name + ".json";
    csv << name << ',' << res.value << ',' << (res.truncated ? 1 : 0) << ',' << file << '\n';
    run.params[name] = static_cast<double>(res.value);
    if (!file.empty()) {
      run.attachments.emplace_back(file, certificate_json(res.certificate).dump(2) + "\n");
    }
  }
  run.csv = csv.str();
  return run;
}

// ------------------------------------------------------------- config fields

template <typename T>
T get_field(const json& j, const char* key, const std::string& origin, bool (json::*pred)() const,
            const char* what) {
  const json& v = j.at(key);
  if (!(v.*pred)()) bad_field(origin, std::string("/") + key, std::string("expected ") + what);
  return v.get<T>();
}

}  // namespace

// ---------------------------------------------------------------- problems

ProblemSpec parse_problem(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  if (!j.is_object()) bad_field(origin, "/", "expected an object");
  for (const char* key : {"domain", "K", "kind", "functions"}) {
    if (!j.contains(key)) bad_field(origin, std::string("/") + key, "missing");
  }
  std::vector<Instance> domain;
  for (std::size_t i = 0; i < j["domain"].size(); ++i) {
    if (!j["domain"][i].is_number_integer()) {
      bad_field(origin, "/domain/" + std::to_string(i), "expected an integer");
    }
    domain.push_back(j["domain"][i].get<Instance>());
  }
  if (!j["K"].is_number_unsigned()) bad_field(origin, "/K", "expected a positive integer");
  const auto K = j["K"].get<std::size_t>();
  const std::string kind_s = j["kind"].is_string() ? j["kind"].get<std::string>() : "";
  if (kind_s != "binary" && kind_s != "real") bad_field(origin, "/kind", "expected binary or real");
  const LabelKind kind = kind_s == "binary" ? LabelKind::kBinary : LabelKind::kReal;
  if (!j["functions"].is_object() || j["functions"].empty()) {
    bad_field(origin, "/functions", "expected a non-empty object");
  }
  std::vector<Predictor> fs;
  const auto dom = make_domain(domain);
  for (const auto& [name, table] : j["functions"].items()) {
    const std::string path = "/functions/" + name;
    if (!table.is_array() || table.size() != domain.size()) {
      bad_field(origin, path, "expected one label per domain point");
    }
    std::vector<LabelVector> values;
    for (std::size_t i = 0; i < table.size(); ++i) {
      values.push_back(label_from_json(table[i], origin, path + "/" + std::to_string(i)));
      try {
        validate_label(values.back(), kind, K);
      } catch (const Error& e) {
        bad_field(origin, path + "/" + std::to_string(i), e.what());
      }
    }
    fs.emplace_back(dom, std::move(values), name);
  }
  ProblemSpec out{FunctionClass(dom, kind, K, std::move(fs), origin), std::nullopt};
  if (j.contains("support")) {
    if (!j["support"].is_array() || !j.contains("weights") || !j["weights"].is_array() ||
        j["weights"].size() != j["support"].size()) {
      bad_field(origin, "/support", "support needs a weights array of the same length");
    }
    std::vector<Example> support;
    std::vector<double> weights;
    for (std::size_t i = 0; i < j["support"].size(); ++i) {
      const auto& e = j["support"][i];
      const std::string path = "/support/" + std::to_string(i);
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer()) {
        bad_field(origin, path, "expected [x, label]");
      }
      support.push_back({e[0].get<Instance>(), label_from_json(e[1], origin, path + "/1")});
      if (support.back().y.size() != K) bad_field(origin, path + "/1", "label has wrong arity");
      if (!j["weights"][i].is_number()) bad_field(origin, "/weights/" + std::to_string(i), "expected a number");
      weights.push_back(j["weights"][i].get<double>());
    }
    try {
      out.dist.emplace(std::move(support), std::move(weights));
    } catch (const Error& e) {
      bad_field(origin, "/weights", e.what());
    }
  }
  return out;
}

std::vector<std::string> builtin_problems() {
  std::vector<std::string> names;
  for (const auto& [n, t] : builtins()) names.push_back(n);
  return names;
}

ProblemSpec load_problem(const std::string& ref) {
  for (const auto& [n, t] : builtins()) {
    if (n == ref) return parse_problem(t, n);
  }
  return parse_problem(read_file(ref, true), ref);
}

LossSpec parse_loss(const std::string& name, std::size_t K) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  auto number = [&](const std::string& s) {
    if (s == "inf") return LossSpec::kInfinity;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw ConfigError("bad loss parameter in " + name);
      return v;
    } catch (const std::logic_error&) {
      throw ConfigError("bad loss parameter in " + name);
    }
  };
  if (head == "zero-one") return LossSpec::zero_one();
  if (head == "hamming") return LossSpec::hamming();
  if (head == "d1") return LossSpec::d1();
  if (head == "dp") return LossSpec::dp(number(arg));
  if (head == "lp") return LossSpec::lp(number(arg.empty() ? "1" : arg));
  if (head == "abs-sum") return LossSpec::decomposable_sum(std::vector<Psi>(K, Psi::identity()));
  if (head == "huber-sum") {
    return LossSpec::decomposable_sum(std::vector<Psi>(K, Psi::huber(number(arg))));
  }
  throw ConfigError("unknown loss: " + name);
}

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  if (!j.is_object()) bad_field(origin, "/", "expected an object");
  if (!j.contains("schema")) bad_field(origin, "/schema", "missing");
  if (!j["schema"].is_string() || j["schema"].get<std::string>() != kConfigSchema) {
    bad_field(origin, "/schema", std::string("expected \"") + kConfigSchema + "\"");
  }
  ExperimentConfig c;
  auto str = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = get_field<std::string>(j, key, origin, &json::is_string, "a string");
  };
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = get_field<double>(j, key, origin, &json::is_number, "a number");
  };
  auto count = [&](const char* key, std::size_t& dst) {
    if (j.contains(key)) {
      dst = get_field<std::size_t>(j, key, origin, &json::is_number_unsigned, "a non-negative integer");
    }
  };
  static const std::set<std::string> known{
      "schema", "scenario", "command", "class", "dist",  "loss",       "reduction", "feedback",
      "stream", "noise",    "eps",     "delta", "trials", "T",         "beta",      "alpha",
      "gamma",  "witness",  "scale",   "depth", "seeds", "expert_cap", "merge",     "k",
      "rbar_seeds", "streams", "seed", "out"};
  for (const auto& [key, v] : j.items()) {
    if (!known.count(key)) bad_field(origin, "/" + key, "unknown field");
  }
  str("scenario", c.scenario);
  str("command", c.command);
  str("class", c.cls);
  str("dist", c.dist);
  str("loss", c.loss);
  str("reduction", c.reduction);
  str("feedback", c.feedback);
  str("stream", c.stream);
  str("out", c.out);
  num("noise", c.noise);
  num("eps", c.eps);
  num("delta", c.delta);
  num("beta", c.beta);
  num("alpha", c.alpha);
  num("gamma", c.gamma);
  num("witness", c.witness);
  num("scale", c.scale);
  count("trials", c.trials);
  count("depth", c.depth);
  count("seeds", c.seeds);
  count("expert_cap", c.expert_cap);
  count("k", c.k);
  count("rbar_seeds", c.rbar_seeds);
  count("streams", c.streams);
  if (j.contains("seed")) {
    c.seed = get_field<std::uint64_t>(j, "seed", origin, &json::is_number_unsigned, "a non-negative integer");
  }
  if (j.contains("merge")) c.merge = get_field<bool>(j, "merge", origin, &json::is_boolean, "a boolean");
  if (j.contains("T")) {
    const auto& t = j["T"];
    c.T.clear();
    if (t.is_number_unsigned()) {
      c.T.push_back(t.get<std::size_t>());
    } else if (t.is_array()) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t[i].is_number_unsigned()) bad_field(origin, "/T/" + std::to_string(i), "expected a positive integer");
        c.T.push_back(t[i].get<std::size_t>());
      }
    } else {
      bad_field(origin, "/T", "expected an integer or an array of integers");
    }
  }
  static const std::set<std::string> commands{"dims", "batch", "online"};
  if (!commands.count(c.command)) bad_field(origin, "/command", "expected dims, batch or online");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_file(path, true), path);
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = kConfigSchema;
  j["scenario"] = c.scenario;
  j["command"] = c.command;
  j["class"] = c.cls;
  j["dist"] = c.dist;
  j["loss"] = c.loss;
  j["reduction"] = c.reduction;
  j["feedback"] = c.feedback;
  j["stream"] = c.stream;
  j["noise"] = c.noise;
  j["eps"] = c.eps;
  j["delta"] = c.delta;
  j["trials"] = c.trials;
  j["T"] = c.T;
  j["beta"] = c.beta;
  j["alpha"] = c.alpha;
  j["gamma"] = c.gamma;
  j["witness"] = c.witness;
  j["scale"] = c.scale;
  j["depth"] = c.depth;
  j["seeds"] = c.seeds;
  j["expert_cap"] = c.expert_cap;
  j["merge"] = c.merge;
  j["k"] = c.k;
  j["rbar_seeds"] = c.rbar_seeds;
  j["streams"] = c.streams;
  j["seed"] = c.seed;
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- stats and bounds

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}

double std_error_of(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double v : xs) ss += sqr(v - m);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

namespace {

struct BoundDef {
  std::vector<std::string> params;
  std::function<double(const std::map<std::string, double>&)> eval;
};

const std::map<std::string, BoundDef>& bound_table() {
  using P = std::map<std::string, double>;
  constexpr double e = std::numbers::e;
  static const std::map<std::string, BoundDef> table{
      {"rewa", {{"M", "T", "N"}, [](const P& p) {
         return p.at("M") * std::sqrt(2.0 * p.at("T") * std::log(p.at("N")));
       }}},
      {"exp4", {{"M", "T", "Y", "N"}, [](const P& p) {
         return e * p.at("M") * std::sqrt(2.0 * p.at("T") * p.at("Y") * std::log(p.at("N")));
       }}},
      {"online-conversion", {{"c", "T", "beta", "Rbar", "M", "image"}, [](const P& p) {
         const double T = p.at("T"), b = p.at("beta");
         return p.at("c") * T / std::pow(T, b) * p.at("Rbar") +
                p.at("M") * std::sqrt(2.0 * std::pow(T, 1.0 + b) * std::log(p.at("image")));
       }}},
      {"bandit-conversion", {{"c", "T", "beta", "Rbar", "M", "Y"}, [](const P& p) {
         const double T = p.at("T"), b = p.at("beta"), Y = p.at("Y");
         return p.at("c") * T / std::pow(T, b) * p.at("Rbar") +
                e * p.at("M") * std::sqrt(2.0 * std::pow(T, 1.0 + b) * Y * std::log(Y));
       }}},
      {"concat-conversion", {{"K", "c", "T", "beta", "Rbar", "M", "image"}, [](const P& p) {
         const double T = p.at("T"), b = p.at("beta");
         return p.at("K") * (p.at("c") * T / std::pow(T, b) * p.at("Rbar") +
                             p.at("M") * std::sqrt(2.0 * std::pow(T, 1.0 + b) * std::log(p.at("image"))));
       }}},
      {"online-regression", {{"T", "beta", "Rbar", "K", "L"}, [](const P& p) {
         const double T = p.at("T"), b = p.at("beta"), K = p.at("K");
         return 1.0 + T / std::pow(T, b) * p.at("Rbar") +
                std::sqrt(4.0 * std::pow(T, b + 1.0) * K * std::log(K * T * p.at("L")));
       }}},
      {"online-lp", {{"T", "beta", "Rbar", "K"}, [](const P& p) {
         const double T = p.at("T"), b = p.at("beta"), K = p.at("K");
         return 1.0 + T / std::pow(T, b) * p.at("Rbar") +
                K * std::sqrt(2.0 * std::pow(T, b + 1.0) * K * std::log(4.0 * K * T));
       }}},
      {"mistake-bound", {{"d", "M"}, [](const P& p) { return p.at("d") * p.at("M"); }}},
      {"batch-success", {{"delta"}, [](const P& p) { return 1.0 - p.at("delta"); }}},
  };
  return table;
}

const BoundDef& bound_def(const std::string& name) {
  const auto& t = bound_table();
  const auto it = t.find(name);
  if (it == t.end()) throw ReportSchemaError("unknown bound: " + name);
  return it->second;
}

}  // namespace

std::vector<std::string> bound_names() {
  std::vector<std::string> out;
  for (const auto& [n, d] : bound_table()) out.push_back(n);
  return out;
}

std::vector<std::string> bound_parameters(const std::string& name) { return bound_def(name).params; }

double bound_value(const std::string& name, const std::map<std::string, double>& params) {
  const auto& def = bound_def(name);
  for (const auto& p : def.params) {
    if (!params.count(p)) throw ReportSchemaError("bound " + name + " needs parameter " + p);
  }
  return def.eval(params);
}

BoundCheck verify_bound(const RunResult& run, const std::string& name, double tol) {
  BoundCheck c;
  c.name = name;
  c.tolerance = tol;
  c.bound = bound_value(name, run.params);
  if (name == "batch-success") {
    if (run.success.empty()) throw ReportSchemaError("batch-success needs per-trial outcomes");
    const double hits = static_cast<double>(std::count(run.success.begin(), run.success.end(), true));
    c.statistic = hits / static_cast<double>(run.success.size());
    c.pass = c.statistic + tol >= c.bound;
  } else {
    if (run.values.empty()) throw ReportSchemaError("report has no per-seed values");
    c.statistic = run.mean + 2.0 * run.std_error;
    c.pass = c.statistic <= c.bound + tol;
  }
  return c;
}

GrowthFit fit_growth_exponent(const std::vector<std::pair<double, double>>& points) {
  GrowthFit fit;
  std::vector<double> lx, ly;
  for (const auto& [T, R] : points) {
    if (!(T > 0.0) || !(R > 0.0) || !std::isfinite(R)) {
      fit.warnings.push_back("dropped non-positive point T=" + format_number(T) +
                             " R=" + format_number(R));
      continue;
    }
    lx.push_back(std::log(T));
    ly.push_back(std::log(R));
  }
  const std::size_t n = lx.size();
  if (n < 3) throw FitError("growth fit needs at least 3 positive points");
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += sqr(lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("growth fit needs distinct T values");
  fit.exponent = sxy / sxx;
  const double icpt = my - fit.exponent * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) rss += sqr(ly[i] - icpt - fit.exponent * lx[i]);
  fit.std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  fit.lo = fit.exponent - 1.96 * fit.std_error;
  fit.hi = fit.exponent + 1.96 * fit.std_error;
  return fit;
}

// ---------------------------------------------------------------- streams and traces

Stream make_stream(const FunctionClass& cls, const std::string& kind, double noise, std::size_t T,
                   std::uint64_t seed) {
  // Shorter horizons are prefixes of longer ones.
  Rng rng = Rng(seed).derive("stream");
  const auto& ids = cls.domain()->ids();
  const auto labels = image(cls);
  const std::size_t base = rng.below(cls.size());
  Stream s;
  for (std::size_t t = 0; t < T; ++t) {
    const Instance x = ids[rng.below(ids.size())];
    LabelVector y;
    if (kind == "realizable") {
      y = cls[base](x);
    } else if (kind == "noisy") {
      y = cls[base](x);
      if (rng.bernoulli(noise)) y = labels[rng.below(labels.size())];
    } else if (kind == "alternate") {
      y = cls[t % cls.size()](x);
    } else if (kind == "switch") {
      // First half follows one function, second half the last one.
      y = t < T / 2 ? cls[0](x) : cls[cls.size() - 1](x);
    } else {
      throw ConfigError("unknown stream kind: " + kind);
    }
    s.rounds.push_back({x, std::move(y)});
  }
  return s;
}

std::string trace_csv(const std::vector<GameTrace>& traces) {
  std::ostringstream out;
  out << "seed,t,x,yhat,y,loss,cum_loss,best_in_hindsight,regret\n";
  for (const auto& tr : traces) {
    for (const auto& r : tr.rounds) {
      out << tr.seed << ',' << r.t << ',' << r.x << ',' << format_label(r.yhat) << ','
          << (r.withheld ? std::string("NA") : format_label(r.y)) << ',' << format_number(r.loss)
          << ',' << format_number(r.cum_loss) << ',' << format_number(r.best_in_hindsight) << ','
          << format_number(r.regret) << '\n';
    }
  }
  return out.str();
}

std::vector<double> final_regrets_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ReportSchemaError("empty trace csv");
  std::vector<double> out;
  std::string last_seed;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const auto last = line.rfind(',');
    if (comma == std::string::npos) throw ReportSchemaError("malformed trace row: " + line);
    const std::string seed = line.substr(0, comma);
    const double regret = std::stod(line.substr(last + 1));
    if (out.empty() || seed != last_seed) {
      out.push_back(regret);
      last_seed = seed;
    } else {
      out.back() = regret;
    }
  }
  return out;
}

// ---------------------------------------------------------------- reports

bool Report::passed() const {
  for (const auto& r : runs) {
    for (const auto& c : r.checks) {
      if (!c.pass) return false;
    }
  }
  return true;
}

std::string Report::summary() const {
  std::ostringstream out;
  out << "scenario " << config.scenario << " (" << config.command;
  if (config.command != "dims") out << ", " << config.reduction;
  out << ")\n";
  for (const auto& r : runs) {
    if (config.command == "dims") {
      for (const auto& [k, v] : r.params) out << "  " << k << " = " << format_number(v) << '\n';
      continue;
    }
    if (r.T > 0) out << "  T=" << r.T;
    else out << "  trials=" << r.values.size();
    out << "  mean=" << format_number(r.mean) << "  stderr=" << format_number(r.std_error) << '\n';
    for (const auto& c : r.checks) {
      out << "    " << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << format_number(c.statistic)
          << (c.name == "batch-success" ? " >= " : " <= ") << format_number(c.bound) << '\n';
    }
  }
  if (fit) {
    out << "  growth exponent " << format_number(fit->exponent) << " [" << format_number(fit->lo)
        << ", " << format_number(fit->hi) << "]\n";
    for (const auto& w : fit->warnings) out << "  warning: " << w << '\n';
  }
  out << (passed() ? "all checks passed\n" : "some checks failed\n");
  return out.str();
}

std::string Report::to_json() const {
  json j;
  j["config"] = json::parse(config_to_json(config));
  json runs_j = json::array();
  for (const auto& r : runs) {
    json o;
    o["T"] = r.T;
    json p = json::object();
    for (const auto& [k, v] : r.params) p[k] = v;
    o["params"] = p;
    o["mean"] = r.mean;
    o["std_error"] = r.std_error;
    json checks = json::array();
    for (const auto& c : r.checks) {
      checks.push_back({{"name", c.name}, {"bound", c.bound}, {"statistic", c.statistic},
                        {"tolerance", c.tolerance}, {"pass", c.pass}});
    }
    o["checks"] = checks;
    runs_j.push_back(o);
  }
  j["runs"] = runs_j;
  if (fit) {
    j["fit"] = {{"exponent", fit->exponent}, {"std_error", fit->std_error}, {"lo", fit->lo},
                {"hi", fit->hi}, {"warnings", fit->warnings}};
  }
  j["passed"] = passed();
  return j.dump(2) + "\n";
}

Report run_experiment(const ExperimentConfig& config) {
  Report report;
  report.config = config;
  const ProblemSpec problem = load_problem(config.cls);
  if (config.command == "dims") {
    report.runs.push_back(run_dims(config, problem.cls));
  } else if (config.command == "batch") {
    if (config.trials == 0) throw ConfigError("trials must be positive");
    report.runs.push_back(run_batch(config, problem));
  } else if (config.command == "online") {
    if (config.seeds == 0 || config.T.empty()) throw ConfigError("seeds and T must be non-empty");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t T : config.T) {
      if (T == 0) throw ConfigError("T must be positive");
      report.runs.push_back(run_online(config, problem.cls, T));
      pts.emplace_back(static_cast<double>(T), report.runs.back().mean);
    }
    if (pts.size() >= 3) {
      try {
        report.fit = fit_growth_exponent(pts);
      } catch (const FitError&) {
        report.fit.reset();
      }
    }
  } else {
    throw ConfigError("unknown command: " + config.command);
  }
  return report;
}

std::vector<std::string> write_outputs(const Report& report, const std::string& out) {
  std::vector<std::string> paths;
  auto write = [&](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << text;
    paths.push_back(path);
  };
  std::string stem = out, ext;
  if (const auto dot = out.rfind('.'); dot != std::string::npos && out.find('/', dot) == std::string::npos) {
    stem = out.substr(0, dot);
    ext = out.substr(dot);
  }
  if (report.runs.size() == 1) {
    write(out, report.runs.front().csv);
  } else {
    for (const auto& r : report.runs) write(stem + "_T" + std::to_string(r.T) + ext, r.csv);
  }
  for (const auto& r : report.runs) {
    for (const auto& [path, text] : r.attachments) write(path, text);
  }
  write(stem + ".summary.json", report.to_json());
  return paths;
}

}  // namespace mor
