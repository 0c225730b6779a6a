#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mor/core.hpp"
#include "mor/dimensions.hpp"
#include "mor/losses.hpp"
#include "mor/rng.hpp"

namespace mor {

enum class Feedback { kFull, kBandit };

const char* to_string(Feedback feedback);

// Protocol per round: predict(x), then exactly one update call for the same x.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;

  virtual LabelVector predict(Instance x) = 0;
  virtual void update_full(Instance x, const LabelVector& y) = 0;
  // Default: UnsupportedFeedbackError.
  virtual void update_bandit(Instance x, double loss);
  virtual void reset(std::uint64_t seed) = 0;
  virtual std::unique_ptr<OnlineLearner> clone() const = 0;
  virtual std::size_t output_dim() const = 0;
  // Equal non-empty keys promise identical future behavior. Empty: never merged.
  virtual std::string state_key() const { return {}; }
  // False for experts whose update ignores the label.
  virtual bool needs_label() const { return true; }
};

using LearnerHandle = std::unique_ptr<OnlineLearner>;
using OnlineFactory = std::function<LearnerHandle()>;

// Predicts a fixed table; never changes.
class FixedFunctionLearner : public OnlineLearner {
 public:
  explicit FixedFunctionLearner(Predictor f) : f_(std::move(f)) {}

  LabelVector predict(Instance x) override { return f_(x); }
  void update_full(Instance, const LabelVector&) override {}
  void update_bandit(Instance, double) override {}
  void reset(std::uint64_t) override {}
  LearnerHandle clone() const override { return std::make_unique<FixedFunctionLearner>(*this); }
  std::size_t output_dim() const override { return f_.output_dim(); }
  std::string state_key() const override { return "fixed"; }
  bool needs_label() const override { return false; }

 private:
  Predictor f_;
};

LearnerHandle constant_learner(const DomainPtr& domain, const LabelVector& y);

// Multiclass standard optimal algorithm over a finite class (label vectors are the classes).
// Predicts the label whose version space has the largest Littlestone dimension, ties to the
// smallest label. Inconsistent updates leave the version space unchanged.
class Mcsoa : public OnlineLearner {
 public:
  explicit Mcsoa(const FunctionClass& cls);
  explicit Mcsoa(std::shared_ptr<LittlestoneSearch> search);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<Mcsoa>(*this); }
  std::size_t output_dim() const override { return search_->cls().output_dim(); }
  std::string state_key() const override;

  const Bitset& version_space() const { return v_; }
  LittlestoneSearch& search() const { return *search_; }
  std::size_t predict_id(std::size_t pos);
  // Restricts the version space to label id l at pos unless that empties it.
  void observe_id(std::size_t pos, std::size_t l);

 private:
  std::shared_ptr<LittlestoneSearch> search_;
  Bitset v_;
};

OnlineFactory mcsoa_factory(const FunctionClass& cls);

// Expert of the MCSOA cover: runs MCSOA on its own predictions, overriding the prediction with
// a fixed replacement label at the chosen rounds.
class CoverExpert : public OnlineLearner {
 public:
  CoverExpert(std::shared_ptr<LittlestoneSearch> search,
              std::vector<std::pair<std::size_t, std::size_t>> overrides);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void update_bandit(Instance x, double) override { update_full(x, {}); }
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<CoverExpert>(*this); }
  std::size_t output_dim() const override { return soa_.output_dim(); }
  bool needs_label() const override { return false; }

 private:
  std::size_t choose(Instance x);

  Mcsoa soa_;
  std::vector<std::pair<std::size_t, std::size_t>> overrides_;  // (round, label id), sorted
  std::size_t t_ = 0;
};

// All experts indexed by mistake-round subsets J of [T] with |J| <= d and replacement labels.
std::vector<LearnerHandle> mcsoa_expert_cover(const FunctionClass& cls, std::size_t T,
                                              std::size_t d);
// sum_{j<=d} C(T, j) |im|^j.
double cover_size(std::size_t T, std::size_t d, std::size_t image_size);

// Deterministic exponentially weighted average of the class's predictions (real labels).
// Rate sqrt(8 ln N / T) on losses scaled by 1/M.
class WeightedAverageForecaster : public OnlineLearner {
 public:
  WeightedAverageForecaster(FunctionClass cls, LossSpec loss, std::size_t T);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override {
    return std::make_unique<WeightedAverageForecaster>(*this);
  }
  std::size_t output_dim() const override { return cls_->output_dim(); }
  // Cumulative losses rounded to 1e-9.
  std::string state_key() const override;

 private:
  std::shared_ptr<const FunctionClass> cls_;
  LossSpec loss_;
  double eta_ = 0.0;
  std::vector<double> cum_;
};

OnlineFactory forecaster_factory(const FunctionClass& cls, const LossSpec& loss, std::size_t T);

// ---------------------------------------------------------------- experts

struct ExpertNode {
  LearnerHandle learner;
  double log_mass = 0.0;   // log of the summed weight of the experts represented
  double log_count = 0.0;  // log of the number of experts represented
  double cum_loss = 0.0;   // cumulative (estimated, under bandit feedback) loss
  bool branching = false;  // still receives augmentation labels
  std::vector<std::size_t> phi;  // alphabet indices used so far; empty when merging
};

enum class AugmentMode {
  kLabel,       // update with phi(t)
  kRegression,  // update with (y_t at coordinate k, phi(t) elsewhere); advice is coordinate k
};

struct SubsampleOptions {
  std::size_t cap = 20000;
  bool merge = true;
  AugmentMode mode = AugmentMode::kLabel;
  std::size_t k = 0;
};

class ExpertPool {
 public:
  ExpertPool() = default;
  ExpertPool(const ExpertPool& o);
  ExpertPool& operator=(const ExpertPool& o);
  ExpertPool(ExpertPool&&) = default;
  ExpertPool& operator=(ExpertPool&&) = default;

  // Every expert sees each revealed label (label-free experts advance regardless).
  static ExpertPool fixed(std::vector<LearnerHandle> experts);
  // E_b: E_0 plus one expert per map phi from {t : b_t = 1} to the alphabet.
  static ExpertPool subsampled(const OnlineFactory& factory, std::vector<bool> b,
                               std::vector<LabelVector> alphabet, SubsampleOptions options = {});

  std::size_t size() const { return nodes_.size(); }
  std::vector<ExpertNode>& nodes() { return nodes_; }
  const std::vector<ExpertNode>& nodes() const { return nodes_; }
  // ln N for the nominal expert count N.
  double log_nominal_size() const { return log_nominal_; }
  double nominal_size() const;
  std::size_t output_dim() const { return output_dim_; }
  std::size_t round() const { return t_; }
  const std::vector<bool>& bits() const { return b_; }
  const std::vector<LabelVector>& alphabet() const { return alphabet_; }

  const std::vector<LabelVector>& advise(Instance x);
  // y is null when the label is withheld.
  void advance(Instance x, const LabelVector* y);
  // Shifts log masses so that the largest is 0.
  void normalize();

 private:
  std::vector<ExpertNode> nodes_;
  std::vector<bool> b_;
  std::vector<LabelVector> alphabet_;
  SubsampleOptions options_;
  bool subsampled_ = false;
  double log_nominal_ = 0.0;
  std::size_t output_dim_ = 0;
  std::size_t t_ = 0;
  std::vector<LabelVector> advice_;
  std::optional<Instance> advised_;
};

// Randomized exponential weights: eta = sqrt(8 ln N / T), losses scaled by 1/M, one sampled
// expert per round.
class Rewa : public OnlineLearner {
 public:
  Rewa(ExpertPool pool, LossSpec loss, double M, std::size_t T, std::uint64_t seed);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<Rewa>(*this); }
  std::size_t output_dim() const override { return pool_.output_dim(); }

  double eta() const { return eta_; }
  const ExpertPool& pool() const { return pool_; }
  // Normalized node masses.
  std::vector<double> weights() const;
  // Mean loss of the sampling distribution on x against y (advice of the current round).
  double expected_loss(Instance x, const LabelVector& y);

 private:
  ExpertPool initial_, pool_;
  LossSpec loss_;
  double M_;
  double eta_;
  Rng rng_;
};

// EXP4 with importance-weighted loss estimates; gamma mixes in uniform exploration.
// eta = sqrt(2 ln N / (T |Y|)).
class Exp4 : public OnlineLearner {
 public:
  Exp4(ExpertPool pool, std::vector<LabelVector> labels, LossSpec loss, double M, std::size_t T,
       std::uint64_t seed, double gamma = 0.0);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void update_bandit(Instance x, double loss) override;
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<Exp4>(*this); }
  std::size_t output_dim() const override { return pool_.output_dim(); }

  double eta() const { return eta_; }
  const ExpertPool& pool() const { return pool_; }
  // Sampling distribution over labels for x.
  std::vector<double> label_distribution(Instance x);

  // Per-expert loss estimates after observing loss_value for label `chosen`.
  static std::vector<double> importance_estimates(const std::vector<std::size_t>& advice_ids,
                                                  const std::vector<double>& probs,
                                                  std::size_t chosen, double loss_value, double M);

 private:
  void apply(Instance x, double loss_value, const LabelVector* y);

  ExpertPool initial_, pool_;
  std::vector<LabelVector> labels_;
  LossSpec loss_;
  double M_, eta_, gamma_;
  Rng rng_;
  std::vector<std::size_t> advice_ids_;
  std::vector<double> probs_;
  std::size_t chosen_ = 0;
};

// B_t iid Bernoulli(T^beta / T).
std::vector<bool> sample_subsample(std::size_t T, double beta, Rng rng);
// |alphabet|^{|b|} + 1 when |b| >= 1, otherwise 1.
double nominal_expert_count(std::size_t alphabet, std::size_t ones);

struct ConversionSpec {
  OnlineFactory base;
  std::vector<LabelVector> alphabet;
  LossSpec loss;  // loss the aggregator plays against
  double M = 1.0;
  std::size_t T = 0;
  double beta = 0.5;
  SubsampleOptions options;
  Feedback feedback = Feedback::kFull;
  std::vector<LabelVector> labels;  // EXP4 label set
  double gamma = 0.0;
};

// Samples B on reset, builds E_B, and aggregates with REWA (full) or EXP4 (bandit).
class ExpertConversion : public OnlineLearner {
 public:
  ExpertConversion(ConversionSpec spec, std::uint64_t seed);
  ExpertConversion(const ExpertConversion& o);

  LabelVector predict(Instance x) override { return inner_->predict(x); }
  void update_full(Instance x, const LabelVector& y) override { inner_->update_full(x, y); }
  void update_bandit(Instance x, double loss) override { inner_->update_bandit(x, loss); }
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<ExpertConversion>(*this); }
  std::size_t output_dim() const override { return inner_->output_dim(); }

  const std::vector<bool>& bits() const { return pool().bits(); }
  std::size_t ones() const;
  const ExpertPool& pool() const;
  const OnlineLearner& aggregator() const { return *inner_; }
  const ConversionSpec& spec() const { return spec_; }

 private:
  ConversionSpec spec_;
  LearnerHandle inner_;
};

LearnerHandle realizable_to_agnostic_online(const OnlineFactory& realizable,
                                            const FunctionClass& cls, const LossSpec& loss,
                                            std::size_t T, double beta, std::uint64_t seed,
                                            SubsampleOptions options = {});

LearnerHandle bandit_conversion(const OnlineFactory& realizable, const FunctionClass& cls,
                                std::vector<LabelVector> labels, const LossSpec& loss,
                                std::size_t T, double beta, std::uint64_t seed,
                                SubsampleOptions options = {}, double gamma = 0.0);

// Coordinate-wise concatenation of scalar learners; full feedback only.
class ConcatOnline : public OnlineLearner {
 public:
  explicit ConcatOnline(std::vector<LearnerHandle> learners);
  ConcatOnline(const ConcatOnline& o);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void update_bandit(Instance x, double loss) override;
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<ConcatOnline>(*this); }
  std::size_t output_dim() const override { return learners_.size(); }

 private:
  std::vector<LearnerHandle> learners_;
};

LearnerHandle concat_online(std::vector<LearnerHandle> learners);

// Scalar learner from a K-output binary learner: label at coordinate k, Rademacher elsewhere.
class ExtractCoordinateOnline : public OnlineLearner {
 public:
  // fill(round, coordinate) -> +-1.
  using Fill = std::function<double(std::size_t, std::size_t)>;

  ExtractCoordinateOnline(LearnerHandle multi, std::size_t k, std::uint64_t seed);
  ExtractCoordinateOnline(LearnerHandle multi, std::size_t k, Fill fill);
  ExtractCoordinateOnline(const ExtractCoordinateOnline& o);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override;
  void reset(std::uint64_t seed) override;
  LearnerHandle clone() const override { return std::make_unique<ExtractCoordinateOnline>(*this); }
  std::size_t output_dim() const override { return 1; }

  LabelVector augmented_label(std::size_t t, double y) const;
  static double seeded_fill(std::uint64_t seed, std::size_t t, std::size_t j);

 private:
  LearnerHandle multi_;
  std::size_t k_;
  std::size_t K_;
  std::uint64_t seed_ = 0;
  Fill fill_;
  std::size_t t_ = 0;
};

LearnerHandle extract_coordinate_online_classification(LearnerHandle multi, std::size_t k,
                                                       std::uint64_t seed);

// alpha <= 0 selects 1/(K T L).
LearnerHandle extract_coordinate_online_regression(const OnlineFactory& multi,
                                                   const FunctionClass& cls, std::size_t k,
                                                   double alpha, double beta,
                                                   const LossSpec& loss, std::size_t T,
                                                   std::uint64_t seed,
                                                   SubsampleOptions options = {});
double default_online_regression_alpha(std::size_t K, std::size_t T, double L);

// alpha <= 0 selects 1/(2 K T).
LearnerHandle lp_online(const OnlineFactory& agnostic_l1, const FunctionClass& cls, double p,
                        double alpha, double beta, std::size_t T, std::uint64_t seed,
                        SubsampleOptions options = {});
double default_lp_online_alpha(std::size_t K, std::size_t T);
// Discretization scale when an l_p learner is turned into an l_1 learner.
double lp_to_l1_alpha(std::size_t K, std::size_t T);

// ---------------------------------------------------------------- game

struct LabelSet {
  LabelKind kind = LabelKind::kReal;
  std::size_t K = 1;
  std::vector<LabelVector> finite;  // empty: every valid label of this kind

  bool contains(const LabelVector& y) const;
};

struct GameRound {
  std::size_t t = 0;
  Instance x = 0;
  LabelVector yhat;
  LabelVector y;
  bool withheld = false;
  double loss = 0.0;
  double cum_loss = 0.0;
  double best_in_hindsight = 0.0;
  double regret = 0.0;
};

struct GameTrace {
  std::uint64_t seed = 0;
  Feedback feedback = Feedback::kFull;
  std::vector<GameRound> rounds;

  double cumulative_loss() const { return rounds.empty() ? 0.0 : rounds.back().cum_loss; }
  double best_in_hindsight() const {
    return rounds.empty() ? 0.0 : rounds.back().best_in_hindsight;
  }
  double regret() const { return rounds.empty() ? 0.0 : rounds.back().regret; }
};

GameTrace run_game(OnlineLearner& learner, const Stream& stream, const FunctionClass& comparator,
                   const LossSpec& loss, Feedback feedback, std::uint64_t seed,
                   const std::optional<LabelSet>& labels = std::nullopt);

// Recomputes every loss, prefix best and regret; true iff all match bit for bit.
bool replay_trace(const GameTrace& trace, const FunctionClass& comparator, const LossSpec& loss);

// ---------------------------------------------------------------- adversary

struct TreePath {
  std::vector<int> sigma;  // -1 / +1 per round
  Stream stream;
  std::vector<double> witness;  // witness values along the path (seq-fat trees)
  long function = -1;           // realizing function of the class that built the tree
};

// Follows sigma from the root for sigma.size() rounds.
TreePath tree_path(const ShatterCertificate& cert, const std::vector<int>& sigma);
// Uniformly random root-to-depth-T path. Depth below T: ParameterError.
TreePath shattered_tree_adversary(const ShatterCertificate& cert, std::size_t T,
                                  std::uint64_t seed);
// All 2^T paths in lexicographic sigma order (-1 before +1).
std::vector<TreePath> all_tree_paths(const ShatterCertificate& cert, std::size_t T);
// One function per path, labeling its instances along the path; realizes every path stream.
FunctionClass path_class(const ShatterCertificate& cert, std::size_t T);

// Binary prediction 2 * 1{A(x) >= r(x)} - 1 of a scalar real-valued learner.
class ThresholdLearner : public OnlineLearner {
 public:
  ThresholdLearner(LearnerHandle inner,
                   std::shared_ptr<const std::unordered_map<Instance, double>> witness);
  ThresholdLearner(const ThresholdLearner& o);

  LabelVector predict(Instance x) override;
  void update_full(Instance x, const LabelVector& y) override { inner_->update_full(x, y); }
  void reset(std::uint64_t seed) override { inner_->reset(seed); }
  LearnerHandle clone() const override { return std::make_unique<ThresholdLearner>(*this); }
  std::size_t output_dim() const override { return 1; }
  std::string state_key() const override { return inner_->state_key(); }

 private:
  LearnerHandle inner_;
  std::shared_ptr<const std::unordered_map<Instance, double>> witness_;
};

// Binary learner from a psi o d1 learner: experts over im(discretize(cls, alpha)) thresholded at
// the witnesses, aggregated by REWA under 0-1 loss.
LearnerHandle threshold_tree_learner(const OnlineFactory& psi_learner, const FunctionClass& cls,
                                     const std::unordered_map<Instance, double>& witness,
                                     double alpha, double beta, std::size_t T,
                                     std::uint64_t seed, SubsampleOptions options = {});

// ---------------------------------------------------------------- regret curves

// Least concave majorant of (t, R) points; linear between knots and beyond the ends.
class ConcaveMajorant {
 public:
  explicit ConcaveMajorant(std::vector<std::pair<double, double>> knots)
      : knots_(std::move(knots)) {}
  double operator()(double t) const;
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

// Empty or negative samples: ParameterError.
ConcaveMajorant concave_majorant(std::vector<std::pair<double, double>> samples);

// R(t) for t = 1..max length: max over probes of the mean (over seeds) prefix regret, floored
// at 0.
std::vector<double> measure_regret_curve(const OnlineFactory& factory,
                                         const std::vector<Stream>& probes,
                                         const FunctionClass& comparator, const LossSpec& loss,
                                         std::size_t seeds, std::uint64_t seed);
// Majorant of (0, 0) and (t, R(t)).
ConcaveMajorant regret_majorant(const std::vector<double>& curve);

}  // namespace mor
