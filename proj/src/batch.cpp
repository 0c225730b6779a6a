#include "mor/batch.hpp"

#include <cmath>
#include <limits>
#include <algorithm>
#include <string>

#include "mor/errors.hpp"
#include "mor/rng.hpp"

namespace mor {

namespace {

std::size_t ceil_size(double v) {
  if (!(v > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(v - 1e-12));
}

void check_eps_delta(double eps, double delta) {
  if (!(eps > 0.0) || !(delta > 0.0) || delta >= 1.0) {
    throw ParameterError("eps must be positive and delta in (0,1)");
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0,1)");
}

// Appends g unless an identical table is already present.
void push_distinct(std::vector<Predictor>& out, Predictor g) {
  for (const auto& h : out) {
    if (h.same_table(g)) return;
  }
  out.push_back(std::move(g));
}

Sample labeled(const std::vector<Instance>& xs, const std::vector<LabelVector>& ys) {
  Sample s;
  s.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) s.push_back({xs[i], ys[i]});
  return s;
}

std::vector<Instance> instances(const Sample& s) {
  std::vector<Instance> xs;
  xs.reserve(s.size());
  for (const auto& e : s) xs.push_back(e.x);
  return xs;
}

CandidateSelection select(std::vector<Predictor> candidates, const Sample& S_L,
                          const LossSpec& loss) {
  const std::size_t i = erm_index(candidates, S_L, loss);
  CandidateSelection out{candidates[i], std::move(candidates), i};
  return out;
}

}  // namespace

std::optional<std::size_t> BatchLearner::sample_complexity(double, double, Setting) const {
  return std::nullopt;
}

namespace {

// Distinct examples with multiplicities, in order of first occurrence.
struct Tally {
  std::vector<const Example*> examples;
  std::vector<double> counts;
};

Tally tally(const Sample& sample) {
  Tally t;
  std::unordered_map<Instance, std::vector<std::size_t>> by_x;
  for (const auto& e : sample) {
    auto& slots = by_x[e.x];
    bool found = false;
    for (std::size_t i : slots) {
      if (t.examples[i]->y == e.y) {
        t.counts[i] += 1.0;
        found = true;
        break;
      }
    }
    if (!found) {
      slots.push_back(t.examples.size());
      t.examples.push_back(&e);
      t.counts.push_back(1.0);
    }
  }
  return t;
}

double tallied_loss(const Predictor& g, const Tally& t, const LossSpec& loss, double n) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.examples.size(); ++i) {
    s += t.counts[i] * loss(g(t.examples[i]->x), t.examples[i]->y);
  }
  return s / n;
}

}  // namespace

double empirical_loss(const Predictor& g, const Sample& sample, const LossSpec& loss) {
  if (sample.empty()) return 0.0;
  return tallied_loss(g, tally(sample), loss, static_cast<double>(sample.size()));
}

std::size_t erm_index(const std::vector<Predictor>& candidates, const Sample& sample,
                      const LossSpec& loss) {
  if (candidates.empty()) throw ParameterError("no candidates");
  if (sample.empty()) return 0;
  const Tally t = tally(sample);
  const double n = static_cast<double>(sample.size());
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double l = tallied_loss(candidates[i], t, loss, n);
    if (l < best_loss) {
      best_loss = l;
      best = i;
    }
  }
  return best;
}

// ------------------------------------------------------------------ ERM

Erm::Erm(FunctionClass cls, LossSpec loss)
    : cls_(std::move(cls)), loss_(std::move(loss)), distinct_(deduplicate(cls_)) {}

Predictor Erm::fit(const Sample& sample) const {
  // First occurrences keep their relative order, so the lowest index wins ties.
  return distinct_[erm_index(distinct_.functions(), sample, loss_)];
}

std::optional<std::size_t> Erm::sample_complexity(double eps, double delta,
                                                  Setting setting) const {
  check_eps_delta(eps, delta);
  const double M = loss_.bound(cls_.kind(), cls_.output_dim());
  const double F = static_cast<double>(distinct_.size());
  if (setting == Setting::kRealizable) return ceil_size((M / eps) * std::log(F / delta));
  return ceil_size((2.0 * M * M / (eps * eps)) * std::log(2.0 * F / delta));
}

LearnerPtr erm(const FunctionClass& cls, const LossSpec& loss) {
  return std::make_shared<Erm>(cls, loss);
}

// ------------------------------------------------- realizable -> agnostic

CandidateSelection realizable_to_agnostic(const BatchLearner& realizable, const FunctionClass& cls,
                                          const LossSpec& loss, const std::vector<Instance>& S_U,
                                          const Sample& S_L) {
  std::vector<Predictor> C;
  for (const auto& b : behaviors_on(cls, S_U)) push_distinct(C, realizable.fit(labeled(S_U, b)));
  return select(std::move(C), S_L, loss);
}

std::size_t alg1_labeled_size(double eps, double delta, double b, std::size_t candidates) {
  check_eps_delta(eps, delta);
  const double c = static_cast<double>(std::max<std::size_t>(candidates, 1));
  return ceil_size((8.0 * b * b / (eps * eps)) * std::log(2.0 * c / delta));
}

double alg1_sample_bound(double m_A, double eps, double delta, double b, double image_size) {
  check_eps_delta(eps, delta);
  return m_A + (8.0 * b * b / (eps * eps)) * (m_A * std::log(image_size) + std::log(2.0 / delta));
}

// ------------------------------------------------------------- concat

ConcatLearner::ConcatLearner(std::vector<LearnerPtr> learners) : learners_(std::move(learners)) {
  if (learners_.empty()) throw ParameterError("concat needs at least one learner");
  for (const auto& l : learners_) {
    if (l->output_dim() != 1) throw ArityError("concat expects scalar learners");
    if (!same_domain(l->domain(), learners_.front()->domain())) {
      throw DomainError("concat learners disagree on the domain");
    }
  }
}

Predictor ConcatLearner::fit(const Sample& sample) const {
  const std::size_t K = learners_.size();
  std::vector<Predictor> parts;
  parts.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    Sample Sk;
    Sk.reserve(sample.size());
    for (const auto& e : sample) {
      if (e.y.size() != K) throw ArityError("label arity differs from the learner count");
      Sk.push_back({e.x, LabelVector{e.y[k]}});
    }
    parts.push_back(learners_[k]->fit(Sk));
  }
  const auto& dom = domain();
  std::vector<LabelVector> values(dom->size());
  for (std::size_t p = 0; p < dom->size(); ++p) {
    values[p].v.reserve(K);
    for (const auto& h : parts) values[p].v.push_back(h(dom->id(p))[0]);
  }
  return Predictor(dom, std::move(values), "concat");
}

std::optional<std::size_t> ConcatLearner::sample_complexity(double eps, double delta,
                                                            Setting setting) const {
  const double K = static_cast<double>(learners_.size());
  std::size_t m = 0;
  for (const auto& l : learners_) {
    auto mk = l->sample_complexity(eps / K, delta / K, setting);
    if (!mk) return std::nullopt;
    m = std::max(m, *mk);
  }
  return m;
}

LearnerPtr concat_coordinates(std::vector<LearnerPtr> learners) {
  return std::make_shared<ConcatLearner>(std::move(learners));
}

// -------------------------------------------------- coordinate extraction

double ExtractCoordinateLearner::seeded_fill(std::uint64_t seed, std::uint64_t trial,
                                             std::size_t i, std::size_t j) {
  Rng r = Rng(seed).derive("augment").derive(trial).derive(static_cast<std::uint64_t>(i)).derive(
      static_cast<std::uint64_t>(j));
  return static_cast<double>(r.rademacher());
}

ExtractCoordinateLearner::ExtractCoordinateLearner(LearnerPtr multi, std::size_t k,
                                                   std::uint64_t seed, std::uint64_t trial)
    : ExtractCoordinateLearner(std::move(multi), k, [seed, trial](std::size_t i, std::size_t j) {
        return seeded_fill(seed, trial, i, j);
      }) {}

ExtractCoordinateLearner::ExtractCoordinateLearner(LearnerPtr multi, std::size_t k, Fill fill)
    : multi_(std::move(multi)), k_(k), fill_(std::move(fill)) {
  if (k_ >= multi_->output_dim()) throw CoordinateRangeError("coordinate out of range");
}

Sample ExtractCoordinateLearner::augment(const Sample& sample) const {
  const std::size_t K = multi_->output_dim();
  Sample out;
  out.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample[i].y.size() != 1) throw ArityError("extraction expects scalar labels");
    LabelVector y;
    y.v.resize(K);
    for (std::size_t j = 0; j < K; ++j) y.v[j] = j == k_ ? sample[i].y[0] : fill_(i, j);
    out.push_back({sample[i].x, std::move(y)});
  }
  return out;
}

Predictor ExtractCoordinateLearner::fit(const Sample& sample) const {
  return coordinate_predictor(multi_->fit(augment(sample)), k_);
}

LearnerPtr extract_coordinate_classification(LearnerPtr multi, std::size_t k, std::uint64_t seed,
                                             std::uint64_t trial) {
  return std::make_shared<ExtractCoordinateLearner>(std::move(multi), k, seed, trial);
}

FiniteDistribution augmented_distribution(const FiniteDistribution& d1, std::size_t K,
                                          std::size_t k) {
  if (k >= K) throw CoordinateRangeError("coordinate out of range");
  const auto fills = binary_labels(K - 1);
  const double share = 1.0 / static_cast<double>(fills.size());
  std::vector<Example> support;
  std::vector<double> weights;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    const auto& e = d1.support()[i];
    if (e.y.size() != 1) throw ArityError("augmentation expects scalar labels");
    for (const auto& f : fills) {
      support.push_back({e.x, insert_coordinate(f, k, e.y[0])});
      weights.push_back(d1.weights()[i] * share);
    }
  }
  return FiniteDistribution(std::move(support), std::move(weights));
}

Predictor coordinate_predictor(const Predictor& g, std::size_t k) {
  if (k >= g.output_dim()) throw CoordinateRangeError("coordinate out of range");
  std::vector<LabelVector> values;
  values.reserve(g.values().size());
  for (const auto& y : g.values()) values.push_back(LabelVector{y[k]});
  return Predictor(g.domain(), std::move(values), g.name() + "[" + std::to_string(k) + "]");
}

LabelVector insert_coordinate(const LabelVector& rest, std::size_t k, double y) {
  if (k > rest.size()) throw CoordinateRangeError("coordinate out of range");
  LabelVector out = rest;
  out.v.insert(out.v.begin() + static_cast<std::ptrdiff_t>(k), y);
  return out;
}

RegressionExtraction extract_coordinate_regression(const BatchLearner& multi,
                                                   const FunctionClass& cls, std::size_t k,
                                                   double alpha, const LossSpec& loss,
                                                   const Sample& S, const Sample& S_tilde) {
  check_alpha(alpha);
  if (cls.kind() != LabelKind::kReal) throw KindMismatchError("regression extraction needs real labels");
  if (k >= cls.output_dim()) throw CoordinateRangeError("coordinate out of range");
  if (!loss.is_decomposable()) throw ParameterError("loss must be decomposable");
  const LossSpec coord_loss = loss.coordinate_loss(k);

  const auto xs = instances(S);
  std::vector<std::vector<LabelVector>> augmentations;
  if (cls.output_dim() == 1) {
    augmentations.push_back(std::vector<LabelVector>(xs.size()));
  } else {
    augmentations = behaviors_on(discretize(drop_coordinate(cls, k), alpha), xs);
  }

  std::vector<Predictor> Ck;
  for (const auto& rest : augmentations) {
    Sample Sa;
    Sa.reserve(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (S[i].y.size() != 1) throw ArityError("extraction expects scalar labels");
      Sa.push_back({S[i].x, insert_coordinate(rest[i], k, S[i].y[0])});
    }
    push_distinct(Ck, coordinate_predictor(multi.fit(Sa), k));
  }
  const std::size_t i = erm_index(Ck, S_tilde, coord_loss);
  return RegressionExtraction{Ck[i], augmentations.size(), Ck.size()};
}

double default_regression_alpha(double eps, double L, std::size_t K) {
  return eps / (4.0 * L * static_cast<double>(K));
}

// ---------------------------------------------------------------- l_p

CandidateSelection lp_agnostic(const BatchLearner& agnostic_l1, const FunctionClass& cls, double p,
                               double alpha, const std::vector<Instance>& S_U, const Sample& S_L) {
  const LossSpec lp = LossSpec::lp(p);
  return realizable_to_agnostic(agnostic_l1, discretize(cls, alpha), lp, S_U, S_L);
}

double default_lp_alpha(double eps, std::size_t K) { return eps / (2.0 * static_cast<double>(K)); }

// ----------------------------------------------------------- threshold

Predictor threshold_predictor(const Predictor& f, const std::unordered_map<Instance, double>& r) {
  if (f.output_dim() != 1) throw ArityError("thresholding expects a scalar predictor");
  const auto& dom = f.domain();
  std::vector<LabelVector> values;
  values.reserve(dom->size());
  for (std::size_t p = 0; p < dom->size(); ++p) {
    auto it = r.find(dom->id(p));
    if (it == r.end()) throw DomainError("witness undefined at instance " + std::to_string(dom->id(p)));
    values.push_back(LabelVector{f.at_position(p)[0] >= it->second ? 1.0 : -1.0});
  }
  return Predictor(dom, std::move(values), "threshold(" + f.name() + ")");
}

CandidateSelection threshold_binary_reduction(const BatchLearner& psi_learner,
                                              const FunctionClass& cls,
                                              const std::unordered_map<Instance, double>& r,
                                              double alpha, const std::vector<Instance>& S_U,
                                              const Sample& S_L) {
  if (cls.output_dim() != 1) throw ArityError("thresholding expects a scalar class");
  std::vector<Predictor> C;
  for (const auto& b : behaviors_on(discretize(cls, alpha), S_U)) {
    push_distinct(C, threshold_predictor(psi_learner.fit(labeled(S_U, b)), r));
  }
  return select(std::move(C), S_L, LossSpec::zero_one());
}

// --------------------------------------------------------------- report

double ReductionReport::success_rate() const {
  if (success.empty()) return 0.0;
  std::size_t s = 0;
  for (bool b : success) s += b;
  return static_cast<double>(s) / static_cast<double>(success.size());
}

void ReductionReport::add(double excess, std::size_t n_total, std::size_t n_u, std::size_t n_l) {
  // Improper predictors can beat the class; the floor keeps the column non-negative.
  excess = std::max(excess, 0.0);
  excess_risk.push_back(excess);
  success.push_back(excess <= eps + 1e-12);
  n.push_back(n_total);
  unlabeled.push_back(n_u);
  labeled.push_back(n_l);
}

std::optional<std::size_t> doubling_search(const std::function<bool(std::size_t)>& succeeds,
                                           std::size_t start, std::size_t max_n) {
  for (std::size_t n = std::max<std::size_t>(start, 1); n <= max_n; n *= 2) {
    if (succeeds(n)) return n;
  }
  return std::nullopt;
}

}  // namespace mor
