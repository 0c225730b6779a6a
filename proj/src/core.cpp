#include "mor/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>

#include "mor/errors.hpp"
#include "mor/losses.hpp"

namespace mor {

const char* to_string(LabelKind kind) { return kind == LabelKind::kBinary ? "binary" : "real"; }

std::size_t LabelVectorHash::operator()(const LabelVector& y) const {
  std::uint64_t h = 0x84222325CBF29CE4ULL;
  for (double d : y.v) {
    std::uint64_t bits;
    double z = d == 0.0 ? 0.0 : d;  // fold -0.0
    std::memcpy(&bits, &z, sizeof bits);
    h = mix64(h ^ bits);
  }
  return static_cast<std::size_t>(h);
}

bool is_valid_label(const LabelVector& y, LabelKind kind, std::size_t K) {
  if (y.size() != K) return false;
  for (double c : y.v) {
    if (kind == LabelKind::kBinary) {
      if (c != 1.0 && c != -1.0) return false;
    } else if (!(c >= 0.0 && c <= 1.0)) {
      return false;
    }
  }
  return true;
}

void validate_label(const LabelVector& y, LabelKind kind, std::size_t K) {
  if (y.size() != K) {
    throw ArityError("label " + format_label(y) + " has " + std::to_string(y.size()) +
                     " components, expected " + std::to_string(K));
  }
  if (!is_valid_label(y, kind, K)) {
    throw KindMismatchError("label " + format_label(y) + " is not a valid " + to_string(kind) +
                            " label");
  }
}

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_label(const LabelVector& y) {
  std::string out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i) out += ';';
    if (y[i] == 1.0) {
      out += "+1";
    } else {
      out += format_number(y[i]);
    }
  }
  return out;
}

std::vector<LabelVector> product_grid(const std::vector<double>& values, std::size_t K) {
  std::vector<LabelVector> out{LabelVector{}};
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<LabelVector> next;
    next.reserve(out.size() * values.size());
    for (const auto& prefix : out) {
      for (double v : values) {
        LabelVector y = prefix;
        y.v.push_back(v);
        next.push_back(std::move(y));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<LabelVector> binary_labels(std::size_t K) { return product_grid({-1.0, 1.0}, K); }

Domain::Domain(std::vector<Instance> ids) : ids_(std::move(ids)) {
  if (ids_.empty()) throw DomainError("domain must be non-empty");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw DomainError("duplicate instance id " + std::to_string(ids_[i]));
    }
  }
}

std::size_t Domain::position(Instance x) const {
  auto it = index_.find(x);
  if (it == index_.end()) throw DomainError("instance " + std::to_string(x) + " not in domain");
  return it->second;
}

DomainPtr make_domain(std::vector<Instance> ids) {
  return std::make_shared<const Domain>(std::move(ids));
}

bool same_domain(const DomainPtr& a, const DomainPtr& b) {
  return a == b || (a && b && *a == *b);
}

Predictor::Predictor(DomainPtr domain, std::vector<LabelVector> values, std::string name)
    : domain_(std::move(domain)), values_(std::move(values)), name_(std::move(name)) {
  if (!domain_) throw DomainError("predictor without domain");
  if (values_.size() != domain_->size()) {
    throw DomainError("predictor table has " + std::to_string(values_.size()) +
                      " entries for a domain of size " + std::to_string(domain_->size()));
  }
}

FunctionClass::FunctionClass(DomainPtr domain, LabelKind kind, std::size_t K,
                             std::vector<Predictor> functions, std::string name)
    : domain_(std::move(domain)),
      kind_(kind),
      K_(K),
      functions_(std::move(functions)),
      name_(std::move(name)) {
  if (functions_.empty()) throw ParameterError("function class must be non-empty");
  if (K_ == 0) throw ArityError("output dimension K must be positive");
  for (const auto& f : functions_) {
    if (!same_domain(f.domain(), domain_)) throw DomainError("function on a different domain");
    for (const auto& y : f.values()) validate_label(y, kind_, K_);
  }
}

FunctionClass FunctionClass::from_tables(std::vector<Instance> domain, LabelKind kind,
                                         std::size_t K,
                                         const std::vector<std::vector<LabelVector>>& tables,
                                         std::string name) {
  auto d = make_domain(std::move(domain));
  std::vector<Predictor> fs;
  fs.reserve(tables.size());
  for (std::size_t i = 0; i < tables.size(); ++i) {
    fs.emplace_back(d, tables[i], "f" + std::to_string(i));
  }
  return FunctionClass(d, kind, K, std::move(fs), std::move(name));
}

namespace {

void check_coordinate(const FunctionClass& cls, std::size_t k) {
  if (k >= cls.output_dim()) {
    throw CoordinateRangeError("coordinate " + std::to_string(k) + " out of range for K=" +
                               std::to_string(cls.output_dim()));
  }
}

}  // namespace

FunctionClass restrict(const FunctionClass& cls, std::size_t k) {
  check_coordinate(cls, k);
  std::vector<Predictor> fs;
  std::set<std::vector<LabelVector>> seen;
  for (const auto& f : cls.functions()) {
    std::vector<LabelVector> table;
    table.reserve(f.values().size());
    for (const auto& y : f.values()) table.push_back(LabelVector{y[k]});
    if (seen.insert(table).second) fs.emplace_back(cls.domain(), std::move(table), f.name());
  }
  return FunctionClass(cls.domain(), cls.kind(), 1, std::move(fs),
                       cls.name() + "|" + std::to_string(k));
}

FunctionClass drop_coordinate(const FunctionClass& cls, std::size_t k) {
  check_coordinate(cls, k);
  if (cls.output_dim() == 1) throw CoordinateRangeError("cannot drop the only coordinate");
  std::vector<Predictor> fs;
  for (const auto& f : cls.functions()) {
    std::vector<LabelVector> table;
    for (const auto& y : f.values()) {
      LabelVector z;
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (j != k) z.v.push_back(y[j]);
      }
      table.push_back(std::move(z));
    }
    fs.emplace_back(cls.domain(), std::move(table), f.name());
  }
  return FunctionClass(cls.domain(), cls.kind(), cls.output_dim() - 1, std::move(fs),
                       cls.name() + "-" + std::to_string(k));
}

double discretize_value(double v, double alpha) {
  double q = std::floor(v / alpha + 1e-12);
  double out = q * alpha;
  // The nudge may not lift v above itself by more than rounding noise.
  if (out > v + 1e-12) out = (q - 1.0) * alpha;
  if (out < 0.0) out = 0.0;
  return out;
}

LabelVector discretize_label(const LabelVector& y, double alpha) {
  LabelVector z = y;
  for (auto& c : z.v) c = discretize_value(c, alpha);
  return z;
}

FunctionClass discretize(const FunctionClass& cls, double alpha) {
  if (cls.kind() != LabelKind::kReal) throw KindMismatchError("discretize needs real labels");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("discretize: alpha must be in (0,1)");
  std::vector<Predictor> fs;
  for (const auto& f : cls.functions()) {
    std::vector<LabelVector> table;
    for (const auto& y : f.values()) table.push_back(discretize_label(y, alpha));
    fs.emplace_back(cls.domain(), std::move(table), f.name());
  }
  return FunctionClass(cls.domain(), cls.kind(), cls.output_dim(), std::move(fs),
                       cls.name() + "^a");
}

std::vector<LabelVector> image(const FunctionClass& cls) {
  std::set<LabelVector> s;
  for (const auto& f : cls.functions()) s.insert(f.values().begin(), f.values().end());
  return {s.begin(), s.end()};
}

std::vector<std::size_t> distinct_behaviors(const FunctionClass& cls) {
  std::vector<std::size_t> out;
  std::set<std::vector<LabelVector>> seen;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (seen.insert(cls[i].values()).second) out.push_back(i);
  }
  return out;
}

FunctionClass deduplicate(const FunctionClass& cls) {
  std::vector<Predictor> fs;
  for (std::size_t i : distinct_behaviors(cls)) fs.push_back(cls[i]);
  return FunctionClass(cls.domain(), cls.kind(), cls.output_dim(), std::move(fs), cls.name());
}

std::vector<std::vector<LabelVector>> behaviors_on(const FunctionClass& cls,
                                                   std::span<const Instance> xs) {
  // Deduplicate on the distinct positions, then expand the survivors.
  std::vector<std::size_t> pos;
  pos.reserve(xs.size());
  std::vector<std::size_t> distinct;
  std::vector<bool> used(cls.domain()->size(), false);
  for (Instance x : xs) {
    pos.push_back(cls.domain()->position(x));
    if (!used[pos.back()]) {
      used[pos.back()] = true;
      distinct.push_back(pos.back());
    }
  }
  std::vector<std::vector<LabelVector>> out;
  std::set<std::vector<LabelVector>> seen;
  for (const auto& f : cls.functions()) {
    std::vector<LabelVector> sig;
    sig.reserve(distinct.size());
    for (std::size_t p : distinct) sig.push_back(f.at_position(p));
    if (!seen.insert(std::move(sig)).second) continue;
    std::vector<LabelVector> b;
    b.reserve(pos.size());
    for (std::size_t p : pos) b.push_back(f.at_position(p));
    out.push_back(std::move(b));
  }
  return out;
}

FiniteDistribution::FiniteDistribution(std::vector<Example> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty()) throw ParameterError("distribution support is empty");
  if (support_.size() != weights_.size()) {
    throw ArityError("support and weights differ in length");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ParameterError("negative distribution weight");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw ParameterError("distribution weights sum to " + format_number(total));
  }
  std::set<std::pair<Instance, LabelVector>> seen;
  for (const auto& e : support_) {
    if (e.y.size() != support_.front().y.size()) throw ArityError("support labels differ in K");
    if (!seen.emplace(e.x, e.y).second) throw ParameterError("duplicate support entry");
  }
  cdf_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    cdf_[i] = acc;
  }
}

Example FiniteDistribution::sample(Rng& rng) const {
  double u = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i = it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
  while (weights_[i] == 0.0 && i > 0) --i;
  return support_[i];
}

Sample FiniteDistribution::sample(Rng& rng, std::size_t n) const {
  Sample s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.push_back(sample(rng));
  return s;
}

FiniteDistribution marginal(const FiniteDistribution& dist, std::size_t k) {
  if (k >= dist.output_dim()) {
    throw CoordinateRangeError("marginal: coordinate " + std::to_string(k) + " out of range");
  }
  std::vector<Example> support;
  std::vector<double> weights;
  std::map<std::pair<Instance, double>, std::size_t> where;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto& e = dist.support()[i];
    auto key = std::make_pair(e.x, e.y[k]);
    auto it = where.find(key);
    if (it == where.end()) {
      where.emplace(key, support.size());
      support.push_back(Example{e.x, LabelVector{e.y[k]}});
      weights.push_back(dist.weights()[i]);
    } else {
      weights[it->second] += dist.weights()[i];
    }
  }
  return FiniteDistribution(std::move(support), std::move(weights));
}

FiniteDistribution realizable_distribution(const Predictor& f, const std::vector<Instance>& xs,
                                           const std::vector<double>& weights) {
  std::vector<Example> support;
  for (Instance x : xs) support.push_back(Example{x, f(x)});
  return FiniteDistribution(std::move(support), weights);
}

double exact_risk(const Predictor& g, const FiniteDistribution& dist, const LossSpec& loss) {
  double r = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto& e = dist.support()[i];
    if (!g.domain()->contains(e.x)) {
      throw DomainError("predictor undefined on support instance " + std::to_string(e.x));
    }
    r += dist.weights()[i] * loss(g(e.x), e.y);
  }
  return r;
}

BestRisk best_risk(const FunctionClass& cls, const FiniteDistribution& dist, const LossSpec& loss) {
  BestRisk best{exact_risk(cls[0], dist, loss), 0};
  for (std::size_t i = 1; i < cls.size(); ++i) {
    double r = exact_risk(cls[i], dist, loss);
    if (r < best.value) best = {r, i};
  }
  return best;
}

}  // namespace mor
