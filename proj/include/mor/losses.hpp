#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mor/core.hpp"

namespace mor {

// Scalar profile applied to |y1 - y2| in psi-based losses.
struct Psi {
  enum class Kind { kIdentity, kLinear, kPower, kHuber };

  Kind kind = Kind::kIdentity;
  double param = 1.0;  // slope (linear), exponent (power), delta (huber)

  static Psi identity() { return {Kind::kIdentity, 1.0}; }
  static Psi linear(double slope);
  static Psi power(double p);
  static Psi huber(double delta);

  double operator()(double z) const;
  // Lipschitz constant on [0, span].
  double lipschitz(double span = 1.0) const;
  std::string describe() const;
  bool operator==(const Psi&) const = default;
};

bool psi_satisfies_lipschitz(const Psi& psi, const std::vector<double>& grid);
bool psi_is_monotone(const Psi& psi, const std::vector<double>& grid);

enum class LossKind { kZeroOne, kHamming, kD1, kDp, kPsiD1, kDecomposableSum, kLp, kCustom };

class LossSpec {
 public:
  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  static LossSpec zero_one();
  static LossSpec hamming();
  static LossSpec d1();
  static LossSpec dp(double p);
  static LossSpec psi_d1(Psi psi);
  static LossSpec decomposable_sum(std::vector<Psi> psis);
  // p in [1, inf]; p = kInfinity is the max norm.
  static LossSpec lp(double p);
  using Table = std::map<std::pair<LabelVector, LabelVector>, double>;
  static LossSpec custom(Table table, std::string name = "custom");

  double operator()(const LabelVector& y1, const LabelVector& y2) const;

  LossKind kind() const { return kind_; }
  double p() const { return p_; }
  const std::vector<Psi>& psis() const { return psis_; }
  const Table& table() const { return table_; }

  // sup of the loss over labels of the given kind and dimension.
  double bound(LabelKind kind, std::size_t K) const;
  // Lipschitz constant of the per-coordinate profile, where one exists.
  std::optional<double> lipschitz() const;
  bool is_metric() const;
  // Sum of per-coordinate terms psi_k(|y1^k - y2^k|) (or 0-1 terms).
  bool is_decomposable() const;
  // Scalar loss on coordinate k of a decomposable loss.
  LossSpec coordinate_loss(std::size_t k) const;
  std::string describe() const;

 private:
  LossKind kind_ = LossKind::kHamming;
  double p_ = 1.0;
  std::vector<Psi> psis_;
  Table table_;
  std::string name_;
};

inline double evaluate(const LossSpec& loss, const LabelVector& y1, const LabelVector& y2) {
  return loss(y1, y2);
}

// Number of disagreeing coordinates.
double hamming_distance(const LabelVector& y1, const LabelVector& y2);

bool check_identity_of_indiscernibles(const LossSpec& loss, const std::vector<LabelVector>& labels);

// Minimal c with l(y1,y2) <= c l(y1,y) + l(y,y2) over all triples of labels.
double subadditivity_constant(const LossSpec& loss, const std::vector<LabelVector>& labels);

// a = min l/l_H, b = max l/l_H over distinct pairs.
std::pair<double, double> hamming_equivalence_constants(const LossSpec& loss,
                                                        const std::vector<LabelVector>& labels);

struct LossProperties {
  bool identity_of_indiscernibles = false;
  std::optional<double> subadditivity_c;
  std::optional<std::pair<double, double>> hamming_equivalence;
  double max_off_diagonal = 0.0;
  double min_off_diagonal = 0.0;
};

// Runs every check on the grid; constants stay empty when a check is degenerate.
LossProperties check_properties(const LossSpec& loss, const std::vector<LabelVector>& labels);

}  // namespace mor
