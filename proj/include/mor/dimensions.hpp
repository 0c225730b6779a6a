#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mor/core.hpp"
#include "mor/losses.hpp"

namespace mor {

// Fixed-size bitset over function indices.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}
  static Bitset full(std::size_t n);

  std::size_t size() const { return n_; }
  void set(std::size_t i) { w_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(std::size_t i) { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1U; }
  std::size_t count() const;
  bool any() const;
  // Index of the lowest set bit; size() when empty.
  std::size_t first() const;
  std::vector<std::size_t> indices() const;

  Bitset operator&(const Bitset& o) const;
  Bitset operator|(const Bitset& o) const;
  bool operator==(const Bitset& o) const { return w_ == o.w_; }
  const std::vector<std::uint64_t>& words() const { return w_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const;
};

enum class DimensionKind {
  kVc,
  kNatarajan,
  kLittlestone,
  kMcLittlestone,
  kFatShattering,
  kSeqFatShattering
};

const char* to_string(DimensionKind kind);

struct ShatterTreeNode {
  Instance x = 0;
  // Edge labels: label[0] leads to child[0], label[1] to child[1].
  LabelVector label[2];
  double witness = 0.0;  // sequential fat-shattering only
  int child[2] = {-1, -1};
  // Realizing function index at a leaf; -1 for internal nodes.
  long function = -1;
};

struct ShatterCertificate {
  DimensionKind kind = DimensionKind::kVc;
  std::size_t dimension = 0;
  double gamma = 0.0;

  // Set-based dimensions.
  std::vector<Instance> set;
  std::vector<LabelVector> witness_f;  // natarajan f-side labels
  std::vector<LabelVector> witness_g;  // natarajan g-side labels
  std::vector<double> witness_r;       // fat-shattering witnesses
  // pattern_function[mask]: bit i set means "+1" / f-side / above witness at set[i].
  std::vector<std::size_t> pattern_function;
  std::vector<std::string> pattern_names;

  // Tree-based dimensions; nodes[0] is the root.
  std::vector<ShatterTreeNode> nodes;
};

// True iff the certificate shatters per its definition on this class.
bool replay(const ShatterCertificate& cert, const FunctionClass& cls);

struct DimensionResult {
  std::size_t value = 0;
  ShatterCertificate certificate;
  bool truncated = false;  // seq-fat only
};

DimensionResult vc(const FunctionClass& cls);
DimensionResult natarajan(const FunctionClass& cls);
DimensionResult littlestone(const FunctionClass& cls);
DimensionResult mc_littlestone(const FunctionClass& cls);
DimensionResult fat_shattering(const FunctionClass& cls, double gamma);
DimensionResult seq_fat_shattering(const FunctionClass& cls, double gamma, std::size_t max_depth = 4);

// Multiclass Littlestone search over version spaces, shared with MCSOA.
class LittlestoneSearch {
 public:
  explicit LittlestoneSearch(const FunctionClass& cls);

  const FunctionClass& cls() const { return cls_; }
  // Sorted distinct labels of the class.
  const std::vector<LabelVector>& labels() const { return labels_; }
  std::size_t label_id(const LabelVector& y) const;  // labels().size() if unknown
  std::size_t label_of(std::size_t function, std::size_t pos) const {
    return label_of_[pos][function];
  }
  // Functions in v taking label id l at position pos.
  Bitset split(const Bitset& v, std::size_t pos, std::size_t l) const;
  // -1 for an empty version space.
  int dimension(const Bitset& v);
  ShatterCertificate tree(const Bitset& v);

 private:
  int build(const Bitset& v, int depth, ShatterCertificate& cert);

  FunctionClass cls_;
  std::vector<LabelVector> labels_;
  std::vector<std::vector<std::uint32_t>> label_of_;  // [pos][function]
  std::vector<std::vector<Bitset>> with_label_;       // [pos][label]
  std::unordered_map<Bitset, int, BitsetHash> memo_;
};

struct RademacherEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo mean of sup_f (1/n) sum_i sigma_i loss(f(x_i), y_i) over fresh samples and signs.
RademacherEstimate rademacher_estimate(const FunctionClass& cls, const FiniteDistribution& dist,
                                       const LossSpec& loss, std::size_t n, std::size_t trials,
                                       std::uint64_t seed);

}  // namespace mor
