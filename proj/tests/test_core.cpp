#include <cmath>
#include <set>

#include "doctest.h"
#include "mor/core.hpp"
#include "mor/errors.hpp"
#include "mor/losses.hpp"
#include "mor/rng.hpp"
#include "oracles.hpp"

using namespace mor;

namespace {

FunctionClass two_constants() {
  return FunctionClass::from_tables({1}, LabelKind::kBinary, 2,
                                    {{LabelVector{1, 1}}, {LabelVector{1, -1}}});
}

}  // namespace

TEST_CASE("rng: identical seed and path give identical draws") {
  SeedSpec a{42, {"exp", "trial"}};
  SeedSpec b{42, {"exp", "trial"}};
  Rng ra = a.rng(), rb = b.rng();
  for (int i = 0; i < 100; ++i) CHECK(ra.next_u64() == rb.next_u64());
  Rng rc = SeedSpec{42, {"exp", "other"}}.rng();
  CHECK(a.rng().next_u64() != rc.next_u64());
}

TEST_CASE("rng: documented output function") {
  // First draw of the root generator for seed 0.
  const std::uint64_t key = mix64(0);
  Rng r(0);
  CHECK(r.next_u64() == mix64(key + 0x9E3779B97F4A7C15ULL));
  CHECK(r.next_u64() == mix64(key + 2 * 0x9E3779B97F4A7C15ULL));
  CHECK(Rng(7).derive("x").key() == mix64(mix64(7) ^ fnv1a64("x")));
}

TEST_CASE("rng: rademacher and bernoulli frequencies") {
  Rng r(3);
  int plus = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) plus += r.rademacher() > 0;
  CHECK(std::abs(plus - n / 2) <= 3 * std::sqrt(n / 4.0));
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += r.bernoulli(0.2);
  CHECK(std::abs(hits - 2000) <= 3 * std::sqrt(n * 0.16));
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
}

TEST_CASE("restrict") {
  auto F = two_constants();
  auto F1 = restrict(F, 0);
  CHECK(F1.size() == 1);
  CHECK(F1.output_dim() == 1);
  CHECK(F1[0](1) == LabelVector{1});
  auto F2 = restrict(F, 1);
  CHECK(F2.size() == 2);
  CHECK_THROWS_AS(restrict(F, 2), CoordinateRangeError);
  // K=1: unchanged up to dedup, and idempotent.
  auto again = restrict(F2, 0);
  CHECK(again.size() == F2.size());
  CHECK(restrict(again, 0).size() == again.size());
}

TEST_CASE("discretize examples") {
  CHECK(discretize_value(0.9, 0.25) == doctest::Approx(0.75));
  CHECK(discretize_value(1.0, 0.25) == 1.0);
  auto F = FunctionClass::from_tables({1, 2, 3, 4, 5}, LabelKind::kReal, 1,
                                      {{LabelVector{0.0}, LabelVector{0.3}, LabelVector{0.55},
                                        LabelVector{0.8}, LabelVector{1.0}}});
  auto Fa = discretize(F, 0.25);
  std::set<double> vals;
  for (const auto& y : image(Fa)) vals.insert(y[0]);
  CHECK(vals.size() <= 5);
  for (double v : vals) CHECK(std::fabs(v / 0.25 - std::round(v / 0.25)) < 1e-9);
  CHECK_THROWS_AS(discretize(two_constants(), 0.25), KindMismatchError);
  CHECK_THROWS_AS(discretize(F, 0.0), ParameterError);
  CHECK_THROWS_AS(discretize(F, 1.0), ParameterError);
}

TEST_CASE("discretize properties on random classes") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> values;
    for (int i = 0; i < 7; ++i) values.push_back(rng.uniform());
    values.push_back(1.0);
    values.push_back(0.0);
    auto F = oracle::random_class(rng, 4, 5, LabelKind::kReal, 2, values);
    for (double alpha : {0.1, 0.25, 1.0 / 3.0, 0.07}) {
      auto Fa = discretize(F, alpha);
      auto Faa = discretize(Fa, alpha);
      for (std::size_t i = 0; i < F.size(); ++i) {
        CHECK(Fa[i].values() == Faa[i].values());
        for (std::size_t p = 0; p < 4; ++p) {
          for (std::size_t k = 0; k < 2; ++k) {
            const double v = F[i].at_position(p)[k];
            const double w = Fa[i].at_position(p)[k];
            CHECK(std::fabs(v - w) <= alpha + 1e-12);
            CHECK(w <= v + 1e-12);
          }
        }
      }
      const double per_coord = 1.0 + std::floor(1.0 / alpha);
      CHECK(static_cast<double>(image(Fa).size()) <= per_coord * per_coord);
    }
  }
}

TEST_CASE("image") {
  auto F = FunctionClass::from_tables({1}, LabelKind::kBinary, 2,
                                      {{LabelVector{1, 1}}, {LabelVector{-1, -1}}});
  CHECK(image(F).size() == 2);
  std::vector<std::vector<LabelVector>> tables;
  for (const auto& y : binary_labels(2)) tables.push_back({y});
  CHECK(image(FunctionClass::from_tables({1}, LabelKind::kBinary, 2, tables)).size() == 4);
}

TEST_CASE("marginal") {
  FiniteDistribution point({{5, LabelVector{1, -1}}}, {1.0});
  auto m = marginal(point, 1);
  REQUIRE(m.size() == 1);
  CHECK(m.support()[0].y == LabelVector{-1});
  FiniteDistribution two({{5, LabelVector{1, 1}}, {5, LabelVector{1, -1}}}, {0.5, 0.5});
  auto m1 = marginal(two, 0);
  REQUIRE(m1.size() == 1);
  CHECK(m1.weights()[0] == doctest::Approx(1.0));
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    auto F = oracle::random_class(rng, 3, 2, LabelKind::kBinary, 3, {-1.0, 1.0});
    auto D = oracle::random_distribution(rng, F, 6, {-1.0, 1.0});
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0.0;
      const auto m = marginal(D, k);
      for (double w : m.weights()) s += w;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact_risk and best_risk") {
  auto F = two_constants();
  FiniteDistribution point({{1, LabelVector{1, -1}}}, {1.0});
  CHECK(exact_risk(F[1], point, LossSpec::hamming()) == 0.0);
  auto G = FunctionClass::from_tables({1, 2}, LabelKind::kBinary, 2,
                                      {{LabelVector{1, 1}, LabelVector{1, 1}}});
  FiniteDistribution two({{1, LabelVector{1, 1}}, {2, LabelVector{1, -1}}}, {0.5, 0.5});
  CHECK(exact_risk(G[0], two, LossSpec::hamming()) == doctest::Approx(0.5));
  FiniteDistribution elsewhere({{9, LabelVector{1, 1}}}, {1.0});
  CHECK_THROWS_AS(exact_risk(G[0], elsewhere, LossSpec::hamming()), DomainError);

  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    auto H = oracle::random_class(rng, 4, 6, LabelKind::kBinary, 2, {-1.0, 1.0});
    auto D = oracle::random_distribution(rng, H, 5, {-1.0, 1.0});
    double brute = 1e9;
    for (const auto& f : H.functions()) {
      double r = 0.0;
      for (std::size_t i = 0; i < D.size(); ++i) {
        r += D.weights()[i] * hamming_distance(f(D.support()[i].x), D.support()[i].y);
      }
      brute = std::min(brute, r);
    }
    auto best = best_risk(H, D, LossSpec::hamming());
    CHECK(best.value == doctest::Approx(brute).epsilon(1e-12));
    CHECK(best.value >= 0.0);
    CHECK(best.value <= 2.0);
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(FunctionClass::from_tables({1}, LabelKind::kBinary, 1, {{LabelVector{0.5}}}),
                  KindMismatchError);
  CHECK_THROWS_AS(FunctionClass::from_tables({1}, LabelKind::kReal, 1, {{LabelVector{1.5}}}),
                  KindMismatchError);
  CHECK_THROWS_AS(FunctionClass::from_tables({1}, LabelKind::kReal, 1, {}), ParameterError);
  CHECK_THROWS_AS(FiniteDistribution({{1, LabelVector{1}}}, {0.5}), ParameterError);
  CHECK_THROWS_AS(make_domain({1, 1}), DomainError);
}

TEST_CASE("behaviors_on") {
  auto F = FunctionClass::from_tables(
      {1, 2}, LabelKind::kBinary, 1,
      {{LabelVector{1}, LabelVector{1}}, {LabelVector{1}, LabelVector{-1}},
       {LabelVector{-1}, LabelVector{1}}});
  std::vector<Instance> xs{1};
  CHECK(behaviors_on(F, xs).size() == 2);
  std::vector<Instance> both{1, 2};
  CHECK(behaviors_on(F, both).size() == 3);
  std::vector<Instance> none;
  CHECK(behaviors_on(F, none).size() == 1);
}
