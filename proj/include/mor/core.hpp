#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mor/rng.hpp"

namespace mor {

class LossSpec;

using Instance = std::int64_t;

enum class LabelKind { kBinary, kReal };

const char* to_string(LabelKind kind);

// K-vector label. Binary components are stored as -1.0 / +1.0.
struct LabelVector {
  std::vector<double> v;

  LabelVector() = default;
  LabelVector(std::initializer_list<double> xs) : v(xs) {}
  explicit LabelVector(std::vector<double> xs) : v(std::move(xs)) {}

  std::size_t size() const { return v.size(); }
  double operator[](std::size_t i) const { return v[i]; }
  double& operator[](std::size_t i) { return v[i]; }

  auto operator<=>(const LabelVector&) const = default;
  bool operator==(const LabelVector&) const = default;
};

struct LabelVectorHash {
  std::size_t operator()(const LabelVector& y) const;
};

// Throws KindMismatchError / ArityError when y is not a valid label.
void validate_label(const LabelVector& y, LabelKind kind, std::size_t K);
bool is_valid_label(const LabelVector& y, LabelKind kind, std::size_t K);

// "+1;-1" for binary, "%.12g" components joined by ';' for real.
std::string format_label(const LabelVector& y);
std::string format_number(double v);

// All 2^K binary label vectors in lexicographic order (-1 before +1).
std::vector<LabelVector> binary_labels(std::size_t K);
// Product grid values^K.
std::vector<LabelVector> product_grid(const std::vector<double>& values, std::size_t K);

struct Example {
  Instance x;
  LabelVector y;
  bool operator==(const Example&) const = default;
};

using Sample = std::vector<Example>;

class Domain {
 public:
  explicit Domain(std::vector<Instance> ids);

  std::size_t size() const { return ids_.size(); }
  Instance id(std::size_t pos) const { return ids_[pos]; }
  bool contains(Instance x) const { return index_.count(x) != 0; }
  // Throws DomainError for unknown instances.
  std::size_t position(Instance x) const;
  const std::vector<Instance>& ids() const { return ids_; }

  bool operator==(const Domain& o) const { return ids_ == o.ids_; }

 private:
  std::vector<Instance> ids_;
  std::unordered_map<Instance, std::size_t> index_;
};

using DomainPtr = std::shared_ptr<const Domain>;

DomainPtr make_domain(std::vector<Instance> ids);
bool same_domain(const DomainPtr& a, const DomainPtr& b);

// Total map from the domain to label vectors.
class Predictor {
 public:
  Predictor(DomainPtr domain, std::vector<LabelVector> values, std::string name = "");

  const LabelVector& operator()(Instance x) const { return values_[domain_->position(x)]; }
  const LabelVector& at_position(std::size_t pos) const { return values_[pos]; }
  const std::vector<LabelVector>& values() const { return values_; }
  const DomainPtr& domain() const { return domain_; }
  const std::string& name() const { return name_; }
  std::size_t output_dim() const { return values_.empty() ? 0 : values_.front().size(); }
  bool same_table(const Predictor& o) const { return values_ == o.values_; }

 private:
  DomainPtr domain_;
  std::vector<LabelVector> values_;
  std::string name_;
};

class FunctionClass {
 public:
  FunctionClass(DomainPtr domain, LabelKind kind, std::size_t K, std::vector<Predictor> functions,
                std::string name = "");

  // Tables are given in domain order.
  static FunctionClass from_tables(std::vector<Instance> domain, LabelKind kind, std::size_t K,
                                   const std::vector<std::vector<LabelVector>>& tables,
                                   std::string name = "");

  const DomainPtr& domain() const { return domain_; }
  LabelKind kind() const { return kind_; }
  std::size_t output_dim() const { return K_; }
  std::size_t size() const { return functions_.size(); }
  const Predictor& operator[](std::size_t i) const { return functions_[i]; }
  const std::vector<Predictor>& functions() const { return functions_; }
  const std::string& name() const { return name_; }

 private:
  DomainPtr domain_;
  LabelKind kind_;
  std::size_t K_;
  std::vector<Predictor> functions_;
  std::string name_;
};

// Coordinate k (0-based) of every function, behaviors deduplicated.
FunctionClass restrict(const FunctionClass& cls, std::size_t k);
// All coordinates except k, one function per input function (no dedup).
FunctionClass drop_coordinate(const FunctionClass& cls, std::size_t k);
// floor(v / alpha) * alpha coordinate-wise, with a 1e-12 nudge before flooring.
double discretize_value(double v, double alpha);
LabelVector discretize_label(const LabelVector& y, double alpha);
FunctionClass discretize(const FunctionClass& cls, double alpha);
// Distinct realized outputs, sorted.
std::vector<LabelVector> image(const FunctionClass& cls);
// Indices of the first function of every distinct table.
std::vector<std::size_t> distinct_behaviors(const FunctionClass& cls);
FunctionClass deduplicate(const FunctionClass& cls);
// Distinct labelings of xs realized by the class, in order of first function index.
std::vector<std::vector<LabelVector>> behaviors_on(const FunctionClass& cls,
                                                   std::span<const Instance> xs);

class FiniteDistribution {
 public:
  FiniteDistribution(std::vector<Example> support, std::vector<double> weights);

  const std::vector<Example>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }
  std::size_t output_dim() const { return support_.front().y.size(); }

  Example sample(Rng& rng) const;
  Sample sample(Rng& rng, std::size_t n) const;

 private:
  std::vector<Example> support_;
  std::vector<double> weights_;
  std::vector<double> cdf_;
};

FiniteDistribution marginal(const FiniteDistribution& dist, std::size_t k);
// Uniform over the realizable pairs (x, f(x)) for the given instances.
FiniteDistribution realizable_distribution(const Predictor& f, const std::vector<Instance>& xs,
                                           const std::vector<double>& weights);

double exact_risk(const Predictor& g, const FiniteDistribution& dist, const LossSpec& loss);

struct BestRisk {
  double value;
  std::size_t index;
};

BestRisk best_risk(const FunctionClass& cls, const FiniteDistribution& dist, const LossSpec& loss);

struct Stream {
  std::vector<Example> rounds;
  std::size_t horizon() const { return rounds.size(); }
};

}  // namespace mor
