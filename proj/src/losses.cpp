#include "mor/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mor/errors.hpp"

namespace mor {

namespace {
constexpr double kTol = 1e-12;
}

Psi Psi::linear(double slope) {
  if (!(slope > 0.0)) throw ParameterError("linear psi needs a positive slope");
  return {Kind::kLinear, slope};
}

Psi Psi::power(double p) {
  if (!(p >= 1.0)) throw ParameterError("power psi needs p >= 1 to be Lipschitz");
  return {Kind::kPower, p};
}

Psi Psi::huber(double delta) {
  if (!(delta > 0.0)) throw ParameterError("huber psi needs delta > 0");
  return {Kind::kHuber, delta};
}

double Psi::operator()(double z) const {
  z = std::fabs(z);
  switch (kind) {
    case Kind::kIdentity:
      return z;
    case Kind::kLinear:
      return param * z;
    case Kind::kPower:
      return std::pow(z, param);
    case Kind::kHuber:
      return z <= param ? 0.5 * z * z : param * (z - 0.5 * param);
  }
  return 0.0;
}

double Psi::lipschitz(double span) const {
  switch (kind) {
    case Kind::kIdentity:
      return 1.0;
    case Kind::kLinear:
      return param;
    case Kind::kPower:
      return param * std::pow(span, param - 1.0);
    case Kind::kHuber:
      return std::min(param, span);
  }
  return 0.0;
}

std::string Psi::describe() const {
  switch (kind) {
    case Kind::kIdentity:
      return "identity";
    case Kind::kLinear:
      return "linear(" + format_number(param) + ")";
    case Kind::kPower:
      return "power(" + format_number(param) + ")";
    case Kind::kHuber:
      return "huber(" + format_number(param) + ")";
  }
  return "?";
}

bool psi_satisfies_lipschitz(const Psi& psi, const std::vector<double>& grid) {
  if (std::fabs(psi(0.0)) > kTol) return false;
  double L = psi.lipschitz(grid.empty() ? 1.0 : *std::max_element(grid.begin(), grid.end()));
  for (double a : grid) {
    for (double b : grid) {
      if (std::fabs(psi(a) - psi(b)) > L * std::fabs(a - b) + kTol) return false;
    }
  }
  return true;
}

bool psi_is_monotone(const Psi& psi, const std::vector<double>& grid) {
  for (double a : grid) {
    for (double b : grid) {
      if (a >= 0.0 && a <= b && psi(a) > psi(b) + kTol) return false;
    }
  }
  return true;
}

LossSpec LossSpec::zero_one() {
  LossSpec l;
  l.kind_ = LossKind::kZeroOne;
  return l;
}

LossSpec LossSpec::hamming() {
  LossSpec l;
  l.kind_ = LossKind::kHamming;
  return l;
}

LossSpec LossSpec::d1() {
  LossSpec l;
  l.kind_ = LossKind::kD1;
  return l;
}

LossSpec LossSpec::dp(double p) {
  if (!(p >= 1.0)) throw ParameterError("d_p needs p >= 1");
  LossSpec l;
  l.kind_ = LossKind::kDp;
  l.p_ = p;
  return l;
}

LossSpec LossSpec::psi_d1(Psi psi) {
  LossSpec l;
  l.kind_ = LossKind::kPsiD1;
  l.psis_ = {psi};
  return l;
}

LossSpec LossSpec::decomposable_sum(std::vector<Psi> psis) {
  if (psis.empty()) throw ArityError("decomposable loss needs at least one coordinate");
  LossSpec l;
  l.kind_ = LossKind::kDecomposableSum;
  l.psis_ = std::move(psis);
  return l;
}

LossSpec LossSpec::lp(double p) {
  if (!(p >= 1.0)) throw ParameterError("l_p needs p >= 1");
  LossSpec l;
  l.kind_ = LossKind::kLp;
  l.p_ = p;
  return l;
}

LossSpec LossSpec::custom(Table table, std::string name) {
  if (table.empty()) throw ParameterError("custom loss table is empty");
  for (const auto& [k, v] : table) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("custom loss values must be >= 0");
    if (k.first.size() != k.second.size()) throw ArityError("custom loss pair differs in K");
  }
  LossSpec l;
  l.kind_ = LossKind::kCustom;
  l.table_ = std::move(table);
  l.name_ = std::move(name);
  return l;
}

double hamming_distance(const LabelVector& y1, const LabelVector& y2) {
  if (y1.size() != y2.size()) throw ArityError("hamming: label lengths differ");
  double d = 0.0;
  for (std::size_t i = 0; i < y1.size(); ++i) d += (y1[i] != y2[i]) ? 1.0 : 0.0;
  return d;
}

double LossSpec::operator()(const LabelVector& y1, const LabelVector& y2) const {
  if (y1.size() != y2.size()) {
    throw ArityError("loss arguments differ in length: " + std::to_string(y1.size()) + " vs " +
                     std::to_string(y2.size()));
  }
  const std::size_t K = y1.size();
  switch (kind_) {
    case LossKind::kZeroOne:
      return y1 == y2 ? 0.0 : 1.0;
    case LossKind::kHamming: {
      double d = 0.0;
      for (std::size_t i = 0; i < K; ++i) d += (y1[i] != y2[i]) ? 1.0 : 0.0;
      return d;
    }
    case LossKind::kD1:
      if (K != 1) throw ArityError("d1 is a scalar loss");
      return std::fabs(y1[0] - y2[0]);
    case LossKind::kDp:
      if (K != 1) throw ArityError("d_p is a scalar loss");
      return std::pow(std::fabs(y1[0] - y2[0]), p_);
    case LossKind::kPsiD1:
      if (K != 1) throw ArityError("psi_d1 is a scalar loss");
      return psis_[0](y1[0] - y2[0]);
    case LossKind::kDecomposableSum: {
      if (K != psis_.size()) throw ArityError("decomposable loss arity mismatch");
      double s = 0.0;
      for (std::size_t i = 0; i < K; ++i) s += psis_[i](y1[i] - y2[i]);
      return s;
    }
    case LossKind::kLp: {
      if (std::isinf(p_)) {
        double m = 0.0;
        for (std::size_t i = 0; i < K; ++i) m = std::max(m, std::fabs(y1[i] - y2[i]));
        return m;
      }
      if (p_ == 1.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < K; ++i) s += std::fabs(y1[i] - y2[i]);
        return s;
      }
      double s = 0.0;
      for (std::size_t i = 0; i < K; ++i) s += std::pow(std::fabs(y1[i] - y2[i]), p_);
      return std::pow(s, 1.0 / p_);
    }
    case LossKind::kCustom: {
      auto it = table_.find({y1, y2});
      if (it == table_.end()) {
        if (y1 == y2) return 0.0;  // diagonal entries default to zero
        throw DomainError("custom loss undefined on (" + format_label(y1) + ", " +
                          format_label(y2) + ")");
      }
      return it->second;
    }
  }
  return 0.0;
}

double LossSpec::bound(LabelKind kind, std::size_t K) const {
  const double span = kind == LabelKind::kBinary ? 2.0 : 1.0;
  switch (kind_) {
    case LossKind::kZeroOne:
      return 1.0;
    case LossKind::kHamming:
      return static_cast<double>(K);
    case LossKind::kD1:
      return span;
    case LossKind::kDp:
      return std::pow(span, p_);
    case LossKind::kPsiD1:
      return psis_[0](span);
    case LossKind::kDecomposableSum: {
      double s = 0.0;
      for (const auto& psi : psis_) s += psi(span);
      return s;
    }
    case LossKind::kLp:
      return std::isinf(p_) ? span : span * std::pow(static_cast<double>(K), 1.0 / p_);
    case LossKind::kCustom: {
      double m = 0.0;
      for (const auto& [k, v] : table_) m = std::max(m, v);
      return m;
    }
  }
  return 0.0;
}

std::optional<double> LossSpec::lipschitz() const {
  switch (kind_) {
    case LossKind::kD1:
      return 1.0;
    case LossKind::kDp:
      return p_;
    case LossKind::kPsiD1:
    case LossKind::kDecomposableSum: {
      double L = 0.0;
      for (const auto& psi : psis_) L = std::max(L, psi.lipschitz());
      return L;
    }
    default:
      return std::nullopt;
  }
}

bool LossSpec::is_metric() const {
  auto all_identity = [this] {
    return std::all_of(psis_.begin(), psis_.end(), [](const Psi& p) {
      return p.kind == Psi::Kind::kIdentity || p.kind == Psi::Kind::kLinear;
    });
  };
  switch (kind_) {
    case LossKind::kZeroOne:
    case LossKind::kHamming:
    case LossKind::kD1:
    case LossKind::kLp:
      return true;
    case LossKind::kDp:
      return p_ == 1.0;
    case LossKind::kPsiD1:
    case LossKind::kDecomposableSum:
      return all_identity();
    case LossKind::kCustom:
      return false;
  }
  return false;
}

bool LossSpec::is_decomposable() const {
  switch (kind_) {
    case LossKind::kHamming:
    case LossKind::kD1:
    case LossKind::kDp:
    case LossKind::kPsiD1:
    case LossKind::kDecomposableSum:
      return true;
    case LossKind::kLp:
      return p_ == 1.0;
    default:
      return false;
  }
}

LossSpec LossSpec::coordinate_loss(std::size_t k) const {
  switch (kind_) {
    case LossKind::kHamming:
      return zero_one();
    case LossKind::kD1:
    case LossKind::kDp:
    case LossKind::kPsiD1:
      if (k != 0) throw CoordinateRangeError("scalar loss has a single coordinate");
      return *this;
    case LossKind::kDecomposableSum:
      if (k >= psis_.size()) throw CoordinateRangeError("coordinate out of range for loss");
      return psi_d1(psis_[k]);
    case LossKind::kLp:
      if (p_ == 1.0) return d1();
      break;
    default:
      break;
  }
  throw ParameterError("loss " + describe() + " is not decomposable");
}

std::string LossSpec::describe() const {
  switch (kind_) {
    case LossKind::kZeroOne:
      return "zero_one";
    case LossKind::kHamming:
      return "hamming";
    case LossKind::kD1:
      return "d1";
    case LossKind::kDp:
      return "d_p(" + format_number(p_) + ")";
    case LossKind::kPsiD1:
      return "psi_d1(" + psis_[0].describe() + ")";
    case LossKind::kDecomposableSum: {
      std::string s = "decomposable(";
      for (std::size_t i = 0; i < psis_.size(); ++i) s += (i ? "," : "") + psis_[i].describe();
      return s + ")";
    }
    case LossKind::kLp:
      return std::isinf(p_) ? "l_inf" : "l_" + format_number(p_);
    case LossKind::kCustom:
      return name_;
  }
  return "?";
}

bool check_identity_of_indiscernibles(const LossSpec& loss,
                                      const std::vector<LabelVector>& labels) {
  for (const auto& a : labels) {
    for (const auto& b : labels) {
      const bool zero = loss(a, b) == 0.0;
      if (zero != (a == b)) return false;
    }
  }
  return true;
}

namespace {

struct OffDiagonal {
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
};

OffDiagonal off_diagonal(const LossSpec& loss, const std::vector<LabelVector>& labels) {
  OffDiagonal o;
  for (const auto& a : labels) {
    for (const auto& b : labels) {
      if (a == b) continue;
      double v = loss(a, b);
      o.min = std::min(o.min, v);
      o.max = std::max(o.max, v);
    }
  }
  return o;
}

std::vector<std::vector<double>> loss_matrix(const LossSpec& loss,
                                             const std::vector<LabelVector>& labels) {
  std::vector<std::vector<double>> m(labels.size(), std::vector<double>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) m[i][j] = loss(labels[i], labels[j]);
  }
  return m;
}

}  // namespace

double subadditivity_constant(const LossSpec& loss, const std::vector<LabelVector>& labels) {
  if (labels.size() < 2) return 0.0;
  OffDiagonal o = off_diagonal(loss, labels);
  if (o.min == 0.0) {
    throw DegenerateLossError("loss " + loss.describe() +
                              " vanishes on a pair of distinct labels; no finite constant");
  }
  auto m = loss_matrix(loss, labels);
  const std::size_t n = labels.size();
  if (loss.is_metric()) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < n; ++c) {
          if (m[a][b] > m[a][c] + m[c][b] + kTol) {
            throw std::logic_error("metric loss " + loss.describe() + " violates the triangle");
          }
        }
      }
    }
    return 1.0;
  }
  double c = 0.0;
  for (std::size_t a = 0; a < n; ++a) {      // y1
    for (std::size_t b = 0; b < n; ++b) {    // y2
      for (std::size_t y = 0; y < n; ++y) {  // middle label
        const double need = m[a][b] - m[y][b];
        if (need <= 0.0) continue;
        if (m[a][y] == 0.0) {
          throw DegenerateLossError("no finite subadditivity constant for " + loss.describe());
        }
        c = std::max(c, need / m[a][y]);
      }
    }
  }
  return c;
}

std::pair<double, double> hamming_equivalence_constants(const LossSpec& loss,
                                                        const std::vector<LabelVector>& labels) {
  double a = std::numeric_limits<double>::infinity();
  double b = 0.0;
  bool any = false;
  for (const auto& y1 : labels) {
    for (const auto& y2 : labels) {
      if (y1 == y2) continue;
      const double h = hamming_distance(y1, y2);
      const double v = loss(y1, y2);
      if (v == 0.0) {
        throw DegenerateLossError("loss " + loss.describe() + " vanishes off the diagonal");
      }
      a = std::min(a, v / h);
      b = std::max(b, v / h);
      any = true;
    }
  }
  if (!any) throw DegenerateLossError("label set has fewer than two labels");
  return {a, b};
}

LossProperties check_properties(const LossSpec& loss, const std::vector<LabelVector>& labels) {
  LossProperties p;
  p.identity_of_indiscernibles = check_identity_of_indiscernibles(loss, labels);
  if (labels.size() >= 2) {
    OffDiagonal o = off_diagonal(loss, labels);
    p.min_off_diagonal = o.min;
    p.max_off_diagonal = o.max;
  }
  try {
    p.subadditivity_c = subadditivity_constant(loss, labels);
    if (labels.size() >= 2) p.hamming_equivalence = hamming_equivalence_constants(loss, labels);
  } catch (const DegenerateLossError&) {
  }
  return p;
}

}  // namespace mor
