#include "mor/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "mor/batch.hpp"
#include "mor/errors.hpp"

namespace mor {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::vector<double> normalized(const std::vector<ExpertNode>& nodes) {
  double top = kNegInf;
  for (const auto& n : nodes) top = std::max(top, n.log_mass);
  std::vector<double> w(nodes.size());
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    w[i] = std::exp(nodes[i].log_mass - top);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

}  // namespace

const char* to_string(Feedback feedback) {
  return feedback == Feedback::kFull ? "full" : "bandit";
}

void OnlineLearner::update_bandit(Instance, double) {
  throw UnsupportedFeedbackError("learner requires full-information feedback");
}

LearnerHandle constant_learner(const DomainPtr& domain, const LabelVector& y) {
  return std::make_unique<FixedFunctionLearner>(
      Predictor(domain, std::vector<LabelVector>(domain->size(), y), "constant"));
}

// ---------------------------------------------------------------- MCSOA

Mcsoa::Mcsoa(const FunctionClass& cls) : Mcsoa(std::make_shared<LittlestoneSearch>(cls)) {}

Mcsoa::Mcsoa(std::shared_ptr<LittlestoneSearch> search)
    : search_(std::move(search)), v_(Bitset::full(search_->cls().size())) {}

std::size_t Mcsoa::predict_id(std::size_t pos) {
  std::size_t best = 0;
  int best_d = -2;
  for (std::size_t l = 0; l < search_->labels().size(); ++l) {
    const Bitset part = search_->split(v_, pos, l);
    if (!part.any()) continue;
    const int d = search_->dimension(part);
    if (d > best_d) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

void Mcsoa::observe_id(std::size_t pos, std::size_t l) {
  if (l >= search_->labels().size()) return;
  Bitset part = search_->split(v_, pos, l);
  if (part.any()) v_ = std::move(part);
}

LabelVector Mcsoa::predict(Instance x) {
  return search_->labels()[predict_id(search_->cls().domain()->position(x))];
}

void Mcsoa::update_full(Instance x, const LabelVector& y) {
  observe_id(search_->cls().domain()->position(x), search_->label_id(y));
}

void Mcsoa::reset(std::uint64_t) { v_ = Bitset::full(search_->cls().size()); }

std::string Mcsoa::state_key() const {
  const auto& w = v_.words();
  return std::string(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(std::uint64_t));
}

OnlineFactory mcsoa_factory(const FunctionClass& cls) {
  auto search = std::make_shared<LittlestoneSearch>(cls);
  return [search] { return std::make_unique<Mcsoa>(search); };
}

CoverExpert::CoverExpert(std::shared_ptr<LittlestoneSearch> search,
                         std::vector<std::pair<std::size_t, std::size_t>> overrides)
    : soa_(std::move(search)), overrides_(std::move(overrides)) {
  std::sort(overrides_.begin(), overrides_.end());
}

std::size_t CoverExpert::choose(Instance x) {
  auto it = std::lower_bound(overrides_.begin(), overrides_.end(),
                             std::make_pair(t_, std::size_t{0}));
  if (it != overrides_.end() && it->first == t_) return it->second;
  return soa_.predict_id(soa_.search().cls().domain()->position(x));
}

LabelVector CoverExpert::predict(Instance x) { return soa_.search().labels()[choose(x)]; }

void CoverExpert::update_full(Instance x, const LabelVector&) {
  const std::size_t l = choose(x);
  soa_.observe_id(soa_.search().cls().domain()->position(x), l);
  ++t_;
}

void CoverExpert::reset(std::uint64_t seed) {
  soa_.reset(seed);
  t_ = 0;
}

std::vector<LearnerHandle> mcsoa_expert_cover(const FunctionClass& cls, std::size_t T,
                                              std::size_t d) {
  auto search = std::make_shared<LittlestoneSearch>(cls);
  const std::size_t L = search->labels().size();
  std::vector<LearnerHandle> out;
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  // Subsets in increasing size, then lexicographic rounds, then label ids.
  for (std::size_t j = 0; j <= std::min(d, T); ++j) {
    std::vector<std::size_t> rounds(j);
    for (std::size_t i = 0; i < j; ++i) rounds[i] = i;
    while (true) {
      std::vector<std::size_t> lab(j, 0);
      while (true) {
        cur.clear();
        for (std::size_t i = 0; i < j; ++i) cur.emplace_back(rounds[i], lab[i]);
        out.push_back(std::make_unique<CoverExpert>(search, cur));
        std::size_t i = j;
        while (i > 0 && lab[i - 1] + 1 == L) lab[--i] = 0;
        if (i == 0) break;
        ++lab[i - 1];
      }
      std::size_t i = j;
      while (i > 0 && rounds[i - 1] == T - j + i - 1) --i;
      if (i == 0) break;
      ++rounds[i - 1];
      for (std::size_t m = i; m < j; ++m) rounds[m] = rounds[m - 1] + 1;
    }
  }
  return out;
}

double cover_size(std::size_t T, std::size_t d, std::size_t image_size) {
  double total = 0.0, binom = 1.0;
  for (std::size_t j = 0; j <= std::min(d, T); ++j) {
    total += binom * std::pow(static_cast<double>(image_size), static_cast<double>(j));
    binom = binom * static_cast<double>(T - j) / static_cast<double>(j + 1);
  }
  return total;
}

// ---------------------------------------------------------------- forecaster

WeightedAverageForecaster::WeightedAverageForecaster(FunctionClass cls, LossSpec loss,
                                                     std::size_t T)
    : cls_(std::make_shared<const FunctionClass>(std::move(cls))), loss_(std::move(loss)) {
  if (cls_->kind() != LabelKind::kReal) {
    throw KindMismatchError("weighted average forecaster needs real labels");
  }
  if (T == 0) throw ParameterError("horizon must be positive");
  const double M = loss_.bound(LabelKind::kReal, cls_->output_dim());
  const double n = static_cast<double>(cls_->size());
  eta_ = n > 1 ? std::sqrt(8.0 * std::log(n) / static_cast<double>(T)) / M : 0.0;
  cum_.assign(cls_->size(), 0.0);
}

LabelVector WeightedAverageForecaster::predict(Instance x) {
  const double lo = *std::min_element(cum_.begin(), cum_.end());
  const std::size_t K = cls_->output_dim();
  std::vector<double> acc(K, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < cls_->size(); ++i) {
    const double w = std::exp(-eta_ * (cum_[i] - lo));
    const auto& y = (*cls_)[i](x);
    for (std::size_t k = 0; k < K; ++k) acc[k] += w * y[k];
    s += w;
  }
  for (double& v : acc) v = std::clamp(v / s, 0.0, 1.0);
  return LabelVector(std::move(acc));
}

void WeightedAverageForecaster::update_full(Instance x, const LabelVector& y) {
  for (std::size_t i = 0; i < cls_->size(); ++i) cum_[i] += loss_((*cls_)[i](x), y);
}

void WeightedAverageForecaster::reset(std::uint64_t) { std::fill(cum_.begin(), cum_.end(), 0.0); }

std::string WeightedAverageForecaster::state_key() const {
  std::string key;
  for (double c : cum_) key += std::to_string(std::llround(c * 1e9)) + ",";
  return key;
}

OnlineFactory forecaster_factory(const FunctionClass& cls, const LossSpec& loss, std::size_t T) {
  WeightedAverageForecaster proto(cls, loss, T);
  return [proto] { return proto.clone(); };
}

// ---------------------------------------------------------------- pools

ExpertPool::ExpertPool(const ExpertPool& o)
    : b_(o.b_),
      alphabet_(o.alphabet_),
      options_(o.options_),
      subsampled_(o.subsampled_),
      log_nominal_(o.log_nominal_),
      output_dim_(o.output_dim_),
      t_(o.t_),
      advice_(o.advice_),
      advised_(o.advised_) {
  nodes_.reserve(o.nodes_.size());
  for (const auto& n : o.nodes_) {
    nodes_.push_back({n.learner->clone(), n.log_mass, n.log_count, n.cum_loss, n.branching, n.phi});
  }
}

ExpertPool& ExpertPool::operator=(const ExpertPool& o) {
  if (this != &o) *this = ExpertPool(o);
  return *this;
}

ExpertPool ExpertPool::fixed(std::vector<LearnerHandle> experts) {
  if (experts.empty()) throw ParameterError("expert set is empty");
  ExpertPool pool;
  pool.output_dim_ = experts.front()->output_dim();
  pool.log_nominal_ = std::log(static_cast<double>(experts.size()));
  for (auto& e : experts) pool.nodes_.push_back({std::move(e), 0.0, 0.0, 0.0, false, {}});
  return pool;
}

ExpertPool ExpertPool::subsampled(const OnlineFactory& factory, std::vector<bool> b,
                                  std::vector<LabelVector> alphabet, SubsampleOptions options) {
  if (alphabet.empty()) throw ParameterError("augmentation alphabet is empty");
  ExpertPool pool;
  pool.subsampled_ = true;
  pool.options_ = options;
  const auto ones = static_cast<double>(std::count(b.begin(), b.end(), true));
  const double log_a = std::log(static_cast<double>(alphabet.size()));
  pool.log_nominal_ = ones > 0 ? log_add(ones * log_a, 0.0) : 0.0;
  if (!options.merge && pool.log_nominal_ > std::log(static_cast<double>(options.cap))) {
    throw ResourceError("expert count " + format_number(std::exp(pool.log_nominal_)) +
                        " exceeds the cap " + std::to_string(options.cap) +
                        "; use a smaller T or beta");
  }
  pool.b_ = std::move(b);
  pool.alphabet_ = std::move(alphabet);
  LearnerHandle e0 = factory();
  pool.output_dim_ = options.mode == AugmentMode::kRegression ? 1 : e0->output_dim();
  pool.nodes_.push_back({std::move(e0), 0.0, 0.0, 0.0, false, {}});
  if (ones > 0) {
    pool.nodes_.push_back({factory(), ones * log_a, ones * log_a, 0.0, true, {}});
  }
  return pool;
}

double ExpertPool::nominal_size() const { return std::exp(log_nominal_); }

const std::vector<LabelVector>& ExpertPool::advise(Instance x) {
  if (advised_ && *advised_ == x && advice_.size() == nodes_.size()) return advice_;
  advice_.clear();
  for (auto& n : nodes_) {
    LabelVector p = n.learner->predict(x);
    if (subsampled_ && options_.mode == AugmentMode::kRegression) {
      advice_.push_back(LabelVector{p[options_.k]});
    } else {
      advice_.push_back(std::move(p));
    }
  }
  advised_ = x;
  return advice_;
}

void ExpertPool::normalize() {
  double top = kNegInf;
  for (const auto& n : nodes_) top = std::max(top, n.log_mass);
  for (auto& n : nodes_) n.log_mass -= top;
}

void ExpertPool::advance(Instance x, const LabelVector* y) {
  advised_.reset();
  advice_.clear();
  if (!subsampled_) {
    for (auto& n : nodes_) {
      if (y != nullptr) {
        n.learner->update_full(x, *y);
      } else if (!n.learner->needs_label()) {
        n.learner->update_full(x, LabelVector{});
      }
    }
    ++t_;
    return;
  }
  const bool split = t_ < b_.size() && b_[t_];
  ++t_;
  if (!split) return;
  if (options_.mode == AugmentMode::kRegression && y == nullptr) {
    throw UnsupportedFeedbackError("regression experts need the revealed label");
  }
  const double log_a = std::log(static_cast<double>(alphabet_.size()));
  std::vector<ExpertNode> next;
  std::unordered_map<std::string, std::size_t> seen;
  for (auto& n : nodes_) {
    if (!n.branching) {
      next.push_back(std::move(n));
      continue;
    }
    for (std::size_t a = 0; a < alphabet_.size(); ++a) {
      LearnerHandle child = n.learner->clone();
      if (options_.mode == AugmentMode::kRegression) {
        child->update_full(x, insert_coordinate(alphabet_[a], options_.k, (*y)[0]));
      } else {
        child->update_full(x, alphabet_[a]);
      }
      const double mass = n.log_mass - log_a, count = n.log_count - log_a;
      if (options_.merge) {
        std::string key = child->state_key();
        if (!key.empty()) {
          auto [it, fresh] = seen.emplace(std::move(key), next.size());
          if (!fresh) {
            auto& into = next[it->second];
            into.log_mass = log_add(into.log_mass, mass);
            into.log_count = log_add(into.log_count, count);
            continue;
          }
        }
        next.push_back({std::move(child), mass, count, n.cum_loss, true, {}});
      } else {
        auto phi = n.phi;
        phi.push_back(a);
        next.push_back({std::move(child), mass, count, n.cum_loss, true, std::move(phi)});
      }
      if (next.size() > options_.cap) {
        throw ResourceError("more than " + std::to_string(options_.cap) +
                            " experts materialized at round " + std::to_string(t_) +
                            "; use a smaller T or beta, or raise the expert cap");
      }
    }
  }
  nodes_ = std::move(next);
}

// ---------------------------------------------------------------- REWA

Rewa::Rewa(ExpertPool pool, LossSpec loss, double M, std::size_t T, std::uint64_t seed)
    : initial_(pool), pool_(std::move(pool)), loss_(std::move(loss)), M_(M), rng_(seed) {
  if (pool_.size() == 0) throw ParameterError("expert set is empty");
  if (!(M_ > 0.0)) throw ParameterError("loss bound M must be positive");
  if (T == 0) throw ParameterError("horizon must be positive");
  eta_ = std::sqrt(8.0 * pool_.log_nominal_size() / static_cast<double>(T));
}

std::vector<double> Rewa::weights() const { return normalized(pool_.nodes()); }

LabelVector Rewa::predict(Instance x) {
  const auto& advice = pool_.advise(x);
  const auto w = weights();
  return advice[rng_.categorical(w)];
}

double Rewa::expected_loss(Instance x, const LabelVector& y) {
  const auto& advice = pool_.advise(x);
  const auto w = weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * loss_(advice[i], y);
  return s;
}

void Rewa::update_full(Instance x, const LabelVector& y) {
  const auto& advice = pool_.advise(x);
  auto& nodes = pool_.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double l = loss_(advice[i], y);
    nodes[i].log_mass -= eta_ * l / M_;
    nodes[i].cum_loss += l;
  }
  pool_.normalize();
  pool_.advance(x, &y);
}

void Rewa::reset(std::uint64_t seed) {
  pool_ = initial_;
  rng_ = Rng(seed);
}

// ---------------------------------------------------------------- EXP4

Exp4::Exp4(ExpertPool pool, std::vector<LabelVector> labels, LossSpec loss, double M,
           std::size_t T, std::uint64_t seed, double gamma)
    : initial_(pool),
      pool_(std::move(pool)),
      labels_(std::move(labels)),
      loss_(std::move(loss)),
      M_(M),
      gamma_(gamma),
      rng_(seed) {
  if (pool_.size() == 0) throw ParameterError("expert set is empty");
  if (labels_.empty()) throw ParameterError("label set is empty");
  if (!(M_ > 0.0)) throw ParameterError("loss bound M must be positive");
  if (T == 0) throw ParameterError("horizon must be positive");
  if (gamma_ < 0.0 || gamma_ > 1.0) throw ParameterError("exploration must lie in [0, 1]");
  eta_ = std::sqrt(2.0 * pool_.log_nominal_size() /
                   (static_cast<double>(T) * static_cast<double>(labels_.size())));
}

std::vector<double> Exp4::label_distribution(Instance x) {
  const auto& advice = pool_.advise(x);
  const auto w = normalized(pool_.nodes());
  advice_ids_.assign(advice.size(), 0);
  probs_.assign(labels_.size(), 0.0);
  for (std::size_t i = 0; i < advice.size(); ++i) {
    const auto it = std::find(labels_.begin(), labels_.end(), advice[i]);
    if (it == labels_.end()) {
      throw ProtocolError("expert advice " + format_label(advice[i]) + " is not in the label set");
    }
    advice_ids_[i] = static_cast<std::size_t>(it - labels_.begin());
    probs_[advice_ids_[i]] += w[i];
  }
  const double u = 1.0 / static_cast<double>(labels_.size());
  for (double& p : probs_) p = (1.0 - gamma_) * p + gamma_ * u;
  return probs_;
}

LabelVector Exp4::predict(Instance x) {
  label_distribution(x);
  chosen_ = rng_.categorical(probs_);
  return labels_[chosen_];
}

std::vector<double> Exp4::importance_estimates(const std::vector<std::size_t>& advice_ids,
                                               const std::vector<double>& probs,
                                               std::size_t chosen, double loss_value, double M) {
  std::vector<double> est(advice_ids.size(), 0.0);
  for (std::size_t i = 0; i < advice_ids.size(); ++i) {
    if (advice_ids[i] == chosen) est[i] = (loss_value / M) / probs[chosen];
  }
  return est;
}

void Exp4::apply(Instance x, double loss_value, const LabelVector* y) {
  if (probs_.empty()) throw ProtocolError("update before predict");
  const auto est = importance_estimates(advice_ids_, probs_, chosen_, loss_value, M_);
  auto& nodes = pool_.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].log_mass -= eta_ * est[i];
    nodes[i].cum_loss += est[i] * M_;
  }
  probs_.clear();
  pool_.normalize();
  pool_.advance(x, y);
}

void Exp4::update_bandit(Instance x, double loss) { apply(x, loss, nullptr); }

void Exp4::update_full(Instance x, const LabelVector& y) {
  if (probs_.empty()) throw ProtocolError("update before predict");
  apply(x, loss_(labels_[chosen_], y), &y);
}

void Exp4::reset(std::uint64_t seed) {
  pool_ = initial_;
  rng_ = Rng(seed);
  probs_.clear();
}

// ---------------------------------------------------------------- conversions

std::vector<bool> sample_subsample(std::size_t T, double beta, Rng rng) {
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0, 1)");
  if (T == 0) throw ParameterError("horizon must be positive");
  const double t = static_cast<double>(T);
  const double p = std::pow(t, beta) / t;
  std::vector<bool> b(T);
  for (std::size_t i = 0; i < T; ++i) b[i] = rng.bernoulli(p);
  return b;
}

double nominal_expert_count(std::size_t alphabet, std::size_t ones) {
  if (ones == 0) return 1.0;
  return std::pow(static_cast<double>(alphabet), static_cast<double>(ones)) + 1.0;
}

ExpertConversion::ExpertConversion(ConversionSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)) {
  if (!spec_.base) throw ParameterError("missing base learner");
  if (spec_.alphabet.empty()) throw ParameterError("augmentation alphabet is empty");
  if (spec_.feedback == Feedback::kBandit && spec_.labels.empty()) {
    throw ParameterError("bandit aggregation needs a label set");
  }
  reset(seed);
}

ExpertConversion::ExpertConversion(const ExpertConversion& o)
    : spec_(o.spec_), inner_(o.inner_->clone()) {}

void ExpertConversion::reset(std::uint64_t seed) {
  const Rng root(seed);
  auto b = sample_subsample(spec_.T, spec_.beta, root.derive("subsample"));
  auto pool = ExpertPool::subsampled(spec_.base, std::move(b), spec_.alphabet, spec_.options);
  const std::uint64_t agg = root.derive("aggregate").next_u64();
  if (spec_.feedback == Feedback::kFull) {
    inner_ = std::make_unique<Rewa>(std::move(pool), spec_.loss, spec_.M, spec_.T, agg);
  } else {
    inner_ = std::make_unique<Exp4>(std::move(pool), spec_.labels, spec_.loss, spec_.M, spec_.T,
                                    agg, spec_.gamma);
  }
}

const ExpertPool& ExpertConversion::pool() const {
  if (const auto* r = dynamic_cast<const Rewa*>(inner_.get())) return r->pool();
  return dynamic_cast<const Exp4&>(*inner_).pool();
}

std::size_t ExpertConversion::ones() const {
  const auto& b = bits();
  return static_cast<std::size_t>(std::count(b.begin(), b.end(), true));
}

LearnerHandle realizable_to_agnostic_online(const OnlineFactory& realizable,
                                            const FunctionClass& cls, const LossSpec& loss,
                                            std::size_t T, double beta, std::uint64_t seed,
                                            SubsampleOptions options) {
  ConversionSpec spec;
  spec.base = realizable;
  spec.alphabet = image(cls);
  spec.loss = loss;
  spec.M = loss.bound(cls.kind(), cls.output_dim());
  spec.T = T;
  spec.beta = beta;
  spec.options = options;
  return std::make_unique<ExpertConversion>(std::move(spec), seed);
}

LearnerHandle bandit_conversion(const OnlineFactory& realizable, const FunctionClass& cls,
                                std::vector<LabelVector> labels, const LossSpec& loss,
                                std::size_t T, double beta, std::uint64_t seed,
                                SubsampleOptions options, double gamma) {
  ConversionSpec spec;
  spec.base = realizable;
  spec.alphabet = image(cls);
  spec.loss = loss;
  spec.M = loss.bound(cls.kind(), cls.output_dim());
  spec.T = T;
  spec.beta = beta;
  spec.options = options;
  spec.feedback = Feedback::kBandit;
  spec.labels = labels.empty() ? spec.alphabet : std::move(labels);
  spec.gamma = gamma;
  return std::make_unique<ExpertConversion>(std::move(spec), seed);
}

ConcatOnline::ConcatOnline(std::vector<LearnerHandle> learners) : learners_(std::move(learners)) {
  if (learners_.empty()) throw ParameterError("no coordinate learners");
  for (const auto& l : learners_) {
    if (l->output_dim() != 1) throw ArityError("coordinate learners must be scalar");
  }
}

ConcatOnline::ConcatOnline(const ConcatOnline& o) {
  for (const auto& l : o.learners_) learners_.push_back(l->clone());
}

LabelVector ConcatOnline::predict(Instance x) {
  LabelVector y;
  for (auto& l : learners_) y.v.push_back(l->predict(x)[0]);
  return y;
}

void ConcatOnline::update_full(Instance x, const LabelVector& y) {
  if (y.size() != learners_.size()) throw ArityError("label arity differs from K");
  for (std::size_t k = 0; k < learners_.size(); ++k) learners_[k]->update_full(x, LabelVector{y[k]});
}

void ConcatOnline::update_bandit(Instance, double) {
  throw UnsupportedFeedbackError("concatenation needs per-coordinate labels");
}

void ConcatOnline::reset(std::uint64_t seed) {
  const Rng root(seed);
  for (std::size_t k = 0; k < learners_.size(); ++k) {
    learners_[k]->reset(root.derive(k).next_u64());
  }
}

LearnerHandle concat_online(std::vector<LearnerHandle> learners) {
  return std::make_unique<ConcatOnline>(std::move(learners));
}

ExtractCoordinateOnline::ExtractCoordinateOnline(LearnerHandle multi, std::size_t k,
                                                 std::uint64_t seed)
    : multi_(std::move(multi)), k_(k), K_(multi_->output_dim()), seed_(seed) {
  if (k_ >= K_) throw CoordinateRangeError("coordinate out of range");
}

ExtractCoordinateOnline::ExtractCoordinateOnline(LearnerHandle multi, std::size_t k, Fill fill)
    : ExtractCoordinateOnline(std::move(multi), k, std::uint64_t{0}) {
  fill_ = std::move(fill);
}

ExtractCoordinateOnline::ExtractCoordinateOnline(const ExtractCoordinateOnline& o)
    : multi_(o.multi_->clone()), k_(o.k_), K_(o.K_), seed_(o.seed_), fill_(o.fill_), t_(o.t_) {}

double ExtractCoordinateOnline::seeded_fill(std::uint64_t seed, std::size_t t, std::size_t j) {
  return Rng(seed).derive("online-augment").derive(t).derive(j).rademacher();
}

LabelVector ExtractCoordinateOnline::augmented_label(std::size_t t, double y) const {
  LabelVector out;
  for (std::size_t j = 0; j < K_; ++j) {
    if (j == k_) {
      out.v.push_back(y);
    } else {
      out.v.push_back(fill_ ? fill_(t, j) : seeded_fill(seed_, t, j));
    }
  }
  return out;
}

LabelVector ExtractCoordinateOnline::predict(Instance x) {
  return LabelVector{multi_->predict(x)[k_]};
}

void ExtractCoordinateOnline::update_full(Instance x, const LabelVector& y) {
  multi_->update_full(x, augmented_label(t_, y[0]));
  ++t_;
}

void ExtractCoordinateOnline::reset(std::uint64_t seed) {
  seed_ = seed;
  t_ = 0;
  multi_->reset(Rng(seed).derive("multi").next_u64());
}

LearnerHandle extract_coordinate_online_classification(LearnerHandle multi, std::size_t k,
                                                       std::uint64_t seed) {
  return std::make_unique<ExtractCoordinateOnline>(std::move(multi), k, seed);
}

double default_online_regression_alpha(std::size_t K, std::size_t T, double L) {
  return 1.0 / (static_cast<double>(K) * static_cast<double>(T) * L);
}

LearnerHandle extract_coordinate_online_regression(const OnlineFactory& multi,
                                                   const FunctionClass& cls, std::size_t k,
                                                   double alpha, double beta,
                                                   const LossSpec& loss, std::size_t T,
                                                   std::uint64_t seed, SubsampleOptions options) {
  const std::size_t K = cls.output_dim();
  if (k >= K) throw CoordinateRangeError("coordinate out of range");
  if (!loss.is_decomposable()) throw ParameterError("loss must be decomposable");
  const LossSpec coord = loss.coordinate_loss(k);
  const double L = coord.lipschitz().value_or(1.0);
  if (alpha <= 0.0) alpha = default_online_regression_alpha(K, T, L);
  if (alpha >= 1.0) throw ParameterError("alpha must lie in (0, 1)");
  ConversionSpec spec;
  spec.base = multi;
  spec.alphabet = K == 1 ? std::vector<LabelVector>{LabelVector{}}
                         : image(discretize(drop_coordinate(cls, k), alpha));
  spec.loss = coord;
  spec.M = coord.bound(LabelKind::kReal, 1);
  spec.T = T;
  spec.beta = beta;
  spec.options = options;
  spec.options.mode = AugmentMode::kRegression;
  spec.options.k = k;
  return std::make_unique<ExpertConversion>(std::move(spec), seed);
}

double default_lp_online_alpha(std::size_t K, std::size_t T) {
  return 1.0 / (2.0 * static_cast<double>(K) * static_cast<double>(T));
}

double lp_to_l1_alpha(std::size_t K, std::size_t T) {
  const double k = static_cast<double>(K);
  return 1.0 / ((k + k * k) * static_cast<double>(T));
}

LearnerHandle lp_online(const OnlineFactory& agnostic_l1, const FunctionClass& cls, double p,
                        double alpha, double beta, std::size_t T, std::uint64_t seed,
                        SubsampleOptions options) {
  const LossSpec loss = LossSpec::lp(p);
  if (alpha <= 0.0) alpha = default_lp_online_alpha(cls.output_dim(), T);
  return realizable_to_agnostic_online(agnostic_l1, discretize(cls, alpha), loss, T, beta, seed,
                                       options);
}

// ---------------------------------------------------------------- game

bool LabelSet::contains(const LabelVector& y) const {
  if (!is_valid_label(y, kind, K)) return false;
  return finite.empty() || std::find(finite.begin(), finite.end(), y) != finite.end();
}

GameTrace run_game(OnlineLearner& learner, const Stream& stream, const FunctionClass& comparator,
                   const LossSpec& loss, Feedback feedback, std::uint64_t seed,
                   const std::optional<LabelSet>& labels) {
  const LabelSet declared =
      labels.value_or(LabelSet{comparator.kind(), comparator.output_dim(), {}});
  learner.reset(seed);
  GameTrace trace;
  trace.seed = seed;
  trace.feedback = feedback;
  std::vector<double> cum_f(comparator.size(), 0.0);
  double cum = 0.0;
  for (std::size_t t = 0; t < stream.rounds.size(); ++t) {
    const auto& [x, y] = stream.rounds[t];
    LabelVector yhat = learner.predict(x);
    if (!declared.contains(yhat)) {
      throw ProtocolError("prediction " + format_label(yhat) + " at round " +
                          std::to_string(t + 1) + " is outside the label set");
    }
    const double l = loss(yhat, y);
    cum += l;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comparator.size(); ++i) {
      cum_f[i] += loss(comparator[i](x), y);
      best = std::min(best, cum_f[i]);
    }
    if (feedback == Feedback::kBandit) {
      learner.update_bandit(x, l);
    } else {
      learner.update_full(x, y);
    }
    trace.rounds.push_back(
        {t + 1, x, std::move(yhat), y, feedback == Feedback::kBandit, l, cum, best, cum - best});
  }
  return trace;
}

bool replay_trace(const GameTrace& trace, const FunctionClass& comparator, const LossSpec& loss) {
  std::vector<double> cum_f(comparator.size(), 0.0);
  double cum = 0.0;
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const auto& r = trace.rounds[t];
    if (r.t != t + 1) return false;
    const double l = loss(r.yhat, r.y);
    cum += l;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comparator.size(); ++i) {
      cum_f[i] += loss(comparator[i](r.x), r.y);
      best = std::min(best, cum_f[i]);
    }
    if (l != r.loss || cum != r.cum_loss || best != r.best_in_hindsight ||
        cum - best != r.regret) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- adversary

TreePath tree_path(const ShatterCertificate& cert, const std::vector<int>& sigma) {
  if (cert.nodes.empty()) throw ParameterError("certificate has no tree");
  const bool fat = cert.kind == DimensionKind::kSeqFatShattering;
  TreePath path;
  path.sigma = sigma;
  int node = 0;
  for (std::size_t t = 0; t < sigma.size(); ++t) {
    const auto& nd = cert.nodes[static_cast<std::size_t>(node)];
    if (nd.function >= 0) throw ParameterError("tree is shallower than the requested path");
    const int side = sigma[t] > 0 ? 1 : 0;
    path.stream.rounds.push_back(
        {nd.x, fat ? LabelVector{static_cast<double>(sigma[t])} : nd.label[side]});
    path.witness.push_back(nd.witness);
    node = nd.child[side];
  }
  while (cert.nodes[static_cast<std::size_t>(node)].function < 0) {
    node = cert.nodes[static_cast<std::size_t>(node)].child[0];
  }
  path.function = cert.nodes[static_cast<std::size_t>(node)].function;
  return path;
}

TreePath shattered_tree_adversary(const ShatterCertificate& cert, std::size_t T,
                                  std::uint64_t seed) {
  if (cert.dimension < T) {
    throw ParameterError("certificate depth " + std::to_string(cert.dimension) +
                         " is below the horizon " + std::to_string(T));
  }
  Rng rng = Rng(seed).derive("tree-path");
  std::vector<int> sigma(T);
  for (auto& s : sigma) s = rng.rademacher();
  return tree_path(cert, sigma);
}

std::vector<TreePath> all_tree_paths(const ShatterCertificate& cert, std::size_t T) {
  if (cert.dimension < T) throw ParameterError("certificate depth is below the horizon");
  std::vector<TreePath> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << T); ++mask) {
    std::vector<int> sigma(T);
    for (std::size_t t = 0; t < T; ++t) sigma[t] = ((mask >> (T - 1 - t)) & 1U) ? 1 : -1;
    out.push_back(tree_path(cert, sigma));
  }
  return out;
}

FunctionClass path_class(const ShatterCertificate& cert, std::size_t T) {
  const auto paths = all_tree_paths(cert, T);
  std::set<Instance> xs;
  bool binary = true;
  std::size_t K = 1;
  for (const auto& p : paths) {
    for (const auto& [x, y] : p.stream.rounds) {
      xs.insert(x);
      K = y.size();
      for (double v : y.v) binary = binary && (v == 1.0 || v == -1.0);
    }
  }
  std::vector<Instance> dom(xs.begin(), xs.end());
  auto domain = make_domain(dom);
  std::vector<std::vector<LabelVector>> tables;
  for (const auto& p : paths) {
    const LabelVector fallback =
        binary ? LabelVector(std::vector<double>(K, -1.0)) : p.stream.rounds.front().y;
    std::vector<LabelVector> table(dom.size(), fallback);
    for (const auto& [x, y] : p.stream.rounds) table[domain->position(x)] = y;
    tables.push_back(std::move(table));
  }
  return FunctionClass::from_tables(dom, binary ? LabelKind::kBinary : LabelKind::kReal, K,
                                    tables, "paths");
}

ThresholdLearner::ThresholdLearner(
    LearnerHandle inner, std::shared_ptr<const std::unordered_map<Instance, double>> witness)
    : inner_(std::move(inner)), witness_(std::move(witness)) {}

ThresholdLearner::ThresholdLearner(const ThresholdLearner& o)
    : inner_(o.inner_->clone()), witness_(o.witness_) {}

LabelVector ThresholdLearner::predict(Instance x) {
  const auto it = witness_->find(x);
  if (it == witness_->end()) throw DomainError("no witness for instance " + std::to_string(x));
  return LabelVector{inner_->predict(x)[0] >= it->second ? 1.0 : -1.0};
}

LearnerHandle threshold_tree_learner(const OnlineFactory& psi_learner, const FunctionClass& cls,
                                     const std::unordered_map<Instance, double>& witness,
                                     double alpha, double beta, std::size_t T,
                                     std::uint64_t seed, SubsampleOptions options) {
  auto shared = std::make_shared<const std::unordered_map<Instance, double>>(witness);
  ConversionSpec spec;
  spec.base = [psi_learner, shared] {
    return std::make_unique<ThresholdLearner>(psi_learner(), shared);
  };
  spec.alphabet = image(discretize(cls, alpha));
  spec.loss = LossSpec::zero_one();
  spec.M = 1.0;
  spec.T = T;
  spec.beta = beta;
  spec.options = options;
  return std::make_unique<ExpertConversion>(std::move(spec), seed);
}

// ---------------------------------------------------------------- regret curves

double ConcaveMajorant::operator()(double t) const {
  if (knots_.size() == 1) return knots_.front().second;
  auto line = [&](std::size_t i) {
    const auto& [x0, y0] = knots_[i];
    const auto& [x1, y1] = knots_[i + 1];
    return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
  };
  if (t <= knots_.front().first) return line(0);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (t <= knots_[i + 1].first) return line(i);
  }
  return line(knots_.size() - 2);
}

ConcaveMajorant concave_majorant(std::vector<std::pair<double, double>> samples) {
  if (samples.empty()) throw ParameterError("no regret samples");
  for (const auto& [t, r] : samples) {
    if (!std::isfinite(t) || !std::isfinite(r) || r < 0.0) {
      throw ParameterError("regret samples must be finite and non-negative");
    }
  }
  std::sort(samples.begin(), samples.end());
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : samples) {
    if (!pts.empty() && pts.back().first == s.first) {
      pts.back().second = std::max(pts.back().second, s.second);
    } else {
      pts.push_back(s);
    }
  }
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross =
          (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross < 0.0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }
  return ConcaveMajorant(std::move(hull));
}

std::vector<double> measure_regret_curve(const OnlineFactory& factory,
                                         const std::vector<Stream>& probes,
                                         const FunctionClass& comparator, const LossSpec& loss,
                                         std::size_t seeds, std::uint64_t seed) {
  if (probes.empty() || seeds == 0) throw ParameterError("need probes and seeds");
  std::size_t len = 0;
  for (const auto& p : probes) len = std::max(len, p.horizon());
  std::vector<double> curve(len, 0.0);
  const Rng root = Rng(seed).derive("regret-curve");
  for (std::size_t i = 0; i < probes.size(); ++i) {
    std::vector<double> sum(probes[i].horizon(), 0.0);
    for (std::size_t s = 0; s < seeds; ++s) {
      auto learner = factory();
      const auto trace = run_game(*learner, probes[i], comparator, loss, Feedback::kFull,
                                  root.derive(i).derive(s).next_u64());
      for (std::size_t t = 0; t < trace.rounds.size(); ++t) sum[t] += trace.rounds[t].regret;
    }
    for (std::size_t t = 0; t < sum.size(); ++t) {
      curve[t] = std::max(curve[t], sum[t] / static_cast<double>(seeds));
    }
  }
  return curve;
}

ConcaveMajorant regret_majorant(const std::vector<double>& curve) {
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (std::size_t t = 0; t < curve.size(); ++t) {
    pts.emplace_back(static_cast<double>(t + 1), curve[t]);
  }
  return concave_majorant(std::move(pts));
}

}  // namespace mor
