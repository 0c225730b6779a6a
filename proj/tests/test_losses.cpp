#include <cmath>

#include "doctest.h"
#include "mor/errors.hpp"
#include "mor/losses.hpp"

using namespace mor;

namespace {

// Minimal c straight from the definition, independent of the library's search.
double triple_oracle(const LossSpec& l, const std::vector<LabelVector>& Y) {
  double c = 0.0;
  for (const auto& a : Y) {
    for (const auto& b : Y) {
      for (const auto& y : Y) {
        const double d = l(a, y);
        if (d > 0.0) c = std::max(c, (l(a, b) - l(y, b)) / d);
      }
    }
  }
  return c;
}

bool violated(const LossSpec& l, const std::vector<LabelVector>& Y, double c) {
  for (const auto& a : Y) {
    for (const auto& b : Y) {
      for (const auto& y : Y) {
        if (l(a, b) > c * l(a, y) + l(y, b) + 1e-12) return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST_CASE("evaluate examples") {
  CHECK(LossSpec::hamming()(LabelVector{-1, 1, 1}, LabelVector{-1, -1, 1}) == 1.0);
  CHECK(LossSpec::lp(2)(LabelVector{0.3, 0.4}, LabelVector{0, 0}) == doctest::Approx(0.5));
  CHECK(LossSpec::lp(LossSpec::kInfinity)(LabelVector{0.2, 0.9}, LabelVector{0.0, 0.1}) ==
        doctest::Approx(0.8));
  CHECK_THROWS_AS(LossSpec::hamming()(LabelVector{1}, LabelVector{1, 1}), ArityError);
  CHECK_THROWS_AS(LossSpec::lp(0.5), ParameterError);
  CHECK(LossSpec::zero_one()(LabelVector{1}, LabelVector{-1}) == 1.0);
  CHECK(LossSpec::d1()(LabelVector{0.2}, LabelVector{0.7}) == doctest::Approx(0.5));
  CHECK(LossSpec::dp(2)(LabelVector{0.2}, LabelVector{0.7}) == doctest::Approx(0.25));
}

TEST_CASE("huber psi") {
  const Psi h = Psi::huber(0.5);
  CHECK(h(0.0) == 0.0);
  CHECK(h(0.4) == doctest::Approx(0.08));
  CHECK(h(1.0) == doctest::Approx(0.5 * (1.0 - 0.25)));
  // Both branches agree at the knee.
  CHECK(std::fabs(0.5 * 0.25 - 0.5 * (0.5 - 0.25)) < 1e-12);
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  CHECK(psi_is_monotone(h, grid));
  CHECK(psi_satisfies_lipschitz(h, grid));
  CHECK(psi_satisfies_lipschitz(Psi::power(2), grid));
  CHECK(h.lipschitz() == doctest::Approx(0.5));
}

TEST_CASE("decomposable sum equals the coordinate sum") {
  auto l = LossSpec::decomposable_sum({Psi::identity(), Psi::huber(0.3), Psi::power(2)});
  const auto grid = product_grid({0.0, 0.25, 0.6, 1.0}, 3);
  for (const auto& a : grid) {
    for (const auto& b : grid) {
      const double want = std::fabs(a[0] - b[0]) + Psi::huber(0.3)(a[1] - b[1]) +
                          std::pow(std::fabs(a[2] - b[2]), 2.0);
      CHECK(l(a, b) == doctest::Approx(want).epsilon(1e-15));
    }
  }
}

TEST_CASE("identity of indiscernibles") {
  CHECK(check_identity_of_indiscernibles(LossSpec::hamming(), binary_labels(2)));
  const auto grid = product_grid({0.0, 0.25, 0.5}, 2);
  CHECK(check_identity_of_indiscernibles(LossSpec::lp(3), grid));
  LossSpec::Table t;
  t[{LabelVector{0}, LabelVector{1}}] = 0.0;
  t[{LabelVector{1}, LabelVector{0}}] = 1.0;
  auto bad = LossSpec::custom(t);
  CHECK_FALSE(check_identity_of_indiscernibles(bad, {LabelVector{0}, LabelVector{1}}));
  CHECK_THROWS_AS(subadditivity_constant(bad, {LabelVector{0}, LabelVector{1}}),
                  DegenerateLossError);
}

TEST_CASE("subadditivity constant") {
  CHECK(subadditivity_constant(LossSpec::hamming(), binary_labels(3)) == 1.0);
  // Two-label custom loss with values {1, 5}.
  LossSpec::Table t;
  const LabelVector a{0}, b{1};
  t[{a, b}] = 1.0;
  t[{b, a}] = 5.0;
  auto l = LossSpec::custom(t);
  const std::vector<LabelVector> Y{a, b};
  const double c = subadditivity_constant(l, Y);
  CHECK(c == doctest::Approx(triple_oracle(l, Y)));
  CHECK(c <= 5.0 + 1e-12);
  CHECK_FALSE(violated(l, Y, c));
  CHECK(violated(l, Y, c - 1e-9));
  // Three labels, asymmetric costs.
  LossSpec::Table u;
  const LabelVector z{0.5};
  u[{a, b}] = 4.0;
  u[{b, a}] = 1.0;
  u[{a, z}] = 1.0;
  u[{z, a}] = 2.0;
  u[{b, z}] = 3.0;
  u[{z, b}] = 1.0;
  auto m = LossSpec::custom(u);
  const std::vector<LabelVector> Z{a, b, z};
  const double cm = subadditivity_constant(m, Z);
  CHECK(cm == doctest::Approx(triple_oracle(m, Z)));
  CHECK_FALSE(violated(m, Z, cm));
  CHECK(violated(m, Z, cm - 1e-9));
  CHECK(cm <= 4.0 + 1e-12);
}

TEST_CASE("hamming equivalence constants") {
  auto [a, b] = hamming_equivalence_constants(LossSpec::hamming(), binary_labels(2));
  CHECK(a == 1.0);
  CHECK(b == 1.0);
  LossSpec::Table t;
  for (const auto& y1 : binary_labels(2)) {
    for (const auto& y2 : binary_labels(2)) t[{y1, y2}] = 3.0 * hamming_distance(y1, y2);
  }
  auto [a3, b3] = hamming_equivalence_constants(LossSpec::custom(t), binary_labels(2));
  CHECK(a3 == 3.0);
  CHECK(b3 == 3.0);
  const auto grid = product_grid({0.0, 0.5, 1.0}, 2);
  auto [a1, b1] = hamming_equivalence_constants(LossSpec::lp(1), grid);
  double lo = 1e9, hi = 0.0;
  for (const auto& y1 : grid) {
    for (const auto& y2 : grid) {
      if (y1 == y2) continue;
      const double r = LossSpec::lp(1)(y1, y2) / hamming_distance(y1, y2);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  CHECK(a1 == lo);
  CHECK(b1 == hi);
  CHECK(a1 == 0.5);
  CHECK(b1 == 1.0);
}

TEST_CASE("norm chain on grids") {
  for (std::size_t K = 1; K <= 3; ++K) {
    const auto grid = product_grid({0.0, 0.2, 0.5, 0.9, 1.0}, K);
    auto l1 = LossSpec::lp(1);
    for (double p : {1.5, 2.0, 3.0, LossSpec::kInfinity}) {
      auto lp = LossSpec::lp(p);
      for (const auto& a : grid) {
        for (const auto& b : grid) {
          CHECK(lp(a, b) <= l1(a, b) + 1e-12);
          CHECK(l1(a, b) <= static_cast<double>(K) * lp(a, b) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("bounds") {
  CHECK(LossSpec::hamming().bound(LabelKind::kBinary, 3) == 3.0);
  CHECK(LossSpec::lp(2).bound(LabelKind::kReal, 4) == doctest::Approx(2.0));
  CHECK(LossSpec::lp(LossSpec::kInfinity).bound(LabelKind::kReal, 4) == 1.0);
  CHECK(LossSpec::decomposable_sum({Psi::identity(), Psi::identity()}).bound(LabelKind::kReal, 2) ==
        2.0);
  CHECK(LossSpec::decomposable_sum({Psi::identity(), Psi::huber(0.5)}).coordinate_loss(1)(
            LabelVector{0.0}, LabelVector{1.0}) == doctest::Approx(0.375));
}
