#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mor/core.hpp"
#include "mor/losses.hpp"

namespace mor {

enum class Setting { kRealizable, kAgnostic };

class BatchLearner {
 public:
  virtual ~BatchLearner() = default;

  virtual Predictor fit(const Sample& sample) const = 0;
  // nullopt: no declared sample complexity ("empirical" mode).
  virtual std::optional<std::size_t> sample_complexity(double eps, double delta,
                                                       Setting setting) const;
  virtual bool proper() const { return false; }
  virtual const DomainPtr& domain() const = 0;
  virtual std::size_t output_dim() const = 0;
};

using LearnerPtr = std::shared_ptr<const BatchLearner>;

double empirical_loss(const Predictor& g, const Sample& sample, const LossSpec& loss);
// Lowest empirical loss, ties to the lowest index; empty sample gives index 0.
std::size_t erm_index(const std::vector<Predictor>& candidates, const Sample& sample,
                      const LossSpec& loss);

// Empirical risk minimizer over a finite class.
// Declared sample complexities:
//   realizable  ceil((M/eps) ln(|F|/delta))
//   agnostic    ceil((2M^2/eps^2) ln(2|F|/delta))
class Erm : public BatchLearner {
 public:
  Erm(FunctionClass cls, LossSpec loss);

  Predictor fit(const Sample& sample) const override;
  std::optional<std::size_t> sample_complexity(double eps, double delta,
                                               Setting setting) const override;
  bool proper() const override { return true; }
  const DomainPtr& domain() const override { return cls_.domain(); }
  std::size_t output_dim() const override { return cls_.output_dim(); }
  const FunctionClass& cls() const { return cls_; }
  const LossSpec& loss() const { return loss_; }

 private:
  FunctionClass cls_;
  LossSpec loss_;
  FunctionClass distinct_;
};

LearnerPtr erm(const FunctionClass& cls, const LossSpec& loss);

struct CandidateSelection {
  Predictor predictor;
  std::vector<Predictor> candidates;  // deduplicated, construction order
  std::size_t chosen = 0;
};

// Fits the realizable learner on every distinct labeling of S_U by the class, then picks
// the empirical minimizer on S_L.
CandidateSelection realizable_to_agnostic(const BatchLearner& realizable, const FunctionClass& cls,
                                          const LossSpec& loss, const std::vector<Instance>& S_U,
                                          const Sample& S_L);

// |S_L| = ceil((8 b^2 / eps^2) ln(2 |C| / delta)).
std::size_t alg1_labeled_size(double eps, double delta, double b, std::size_t candidates);
// m_A(eps/2c, delta/2) + (8 b^2/eps^2)(m_A ln|im| + ln(2/delta)).
double alg1_sample_bound(double m_A, double eps, double delta, double b, double image_size);

// Coordinate-wise concatenation of K scalar learners.
class ConcatLearner : public BatchLearner {
 public:
  explicit ConcatLearner(std::vector<LearnerPtr> learners);

  Predictor fit(const Sample& sample) const override;
  // max_k m_k(eps/K, delta/K).
  std::optional<std::size_t> sample_complexity(double eps, double delta,
                                               Setting setting) const override;
  const DomainPtr& domain() const override { return learners_.front()->domain(); }
  std::size_t output_dim() const override { return learners_.size(); }

 private:
  std::vector<LearnerPtr> learners_;
};

LearnerPtr concat_coordinates(std::vector<LearnerPtr> learners);

// Scalar learner: embeds labels at coordinate k, fills the rest with seeded uniform +-1.
class ExtractCoordinateLearner : public BatchLearner {
 public:
  // fill(example index, coordinate) -> +-1; defaults to the seeded Rademacher fill.
  using Fill = std::function<double(std::size_t, std::size_t)>;

  ExtractCoordinateLearner(LearnerPtr multi, std::size_t k, std::uint64_t seed,
                           std::uint64_t trial = 0);
  ExtractCoordinateLearner(LearnerPtr multi, std::size_t k, Fill fill);

  Predictor fit(const Sample& sample) const override;
  Sample augment(const Sample& sample) const;
  const DomainPtr& domain() const override { return multi_->domain(); }
  std::size_t output_dim() const override { return 1; }

  // Fill value for (seed, trial, example index, coordinate).
  static double seeded_fill(std::uint64_t seed, std::uint64_t trial, std::size_t i, std::size_t j);

 private:
  LearnerPtr multi_;
  std::size_t k_;
  Fill fill_;
};

// D1 with uniform +-1 labels appended at every coordinate other than k (exact product).
FiniteDistribution augmented_distribution(const FiniteDistribution& d1, std::size_t K,
                                          std::size_t k);

LearnerPtr extract_coordinate_classification(LearnerPtr multi, std::size_t k, std::uint64_t seed,
                                             std::uint64_t trial = 0);

// Keeps coordinate k of a K-valued predictor.
Predictor coordinate_predictor(const Predictor& g, std::size_t k);
// Inserts scalar y at coordinate k of the (K-1)-vector rest.
LabelVector insert_coordinate(const LabelVector& rest, std::size_t k, double y);

struct RegressionExtraction {
  Predictor predictor;
  std::size_t augmentations = 0;  // distinct behaviors of the discretized remaining coordinates
  std::size_t candidates = 0;     // distinct coordinate-k predictors
};

// Regression coordinate extraction. S holds scalar labels; selection uses psi_k o d1 on S_tilde.
RegressionExtraction extract_coordinate_regression(const BatchLearner& multi,
                                                   const FunctionClass& cls, std::size_t k,
                                                   double alpha, const LossSpec& loss,
                                                   const Sample& S, const Sample& S_tilde);
double default_regression_alpha(double eps, double L, std::size_t K);  // eps / (4LK)

// l_p reduction: the l1 learner is run as a realizable learner for discretize(cls, alpha).
CandidateSelection lp_agnostic(const BatchLearner& agnostic_l1, const FunctionClass& cls, double p,
                               double alpha, const std::vector<Instance>& S_U, const Sample& S_L);
double default_lp_alpha(double eps, std::size_t K);  // eps / (2K)

// h_f(x) = 2 * 1{f(x) >= r(x)} - 1.
Predictor threshold_predictor(const Predictor& f, const std::unordered_map<Instance, double>& r);

CandidateSelection threshold_binary_reduction(const BatchLearner& psi_learner,
                                              const FunctionClass& cls,
                                              const std::unordered_map<Instance, double>& r,
                                              double alpha, const std::vector<Instance>& S_U,
                                              const Sample& S_L);

struct ReductionReport {
  double eps = 0.0;
  double delta = 0.0;
  std::vector<double> excess_risk;
  std::vector<bool> success;
  std::vector<std::size_t> n, unlabeled, labeled;

  std::size_t trials() const { return excess_risk.size(); }
  double success_rate() const;
  // Records one trial; negative excess (improper outputs) is floored at 0.
  void add(double excess, std::size_t n_total, std::size_t n_u, std::size_t n_l);
};

// Smallest power-of-two multiple of start at which succeeds(n) holds; up to max_n.
std::optional<std::size_t> doubling_search(const std::function<bool(std::size_t)>& succeeds,
                                           std::size_t start, std::size_t max_n);

}  // namespace mor
