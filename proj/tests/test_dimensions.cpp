#include <cmath>

#include "doctest.h"
#include "mor/dimensions.hpp"
#include "mor/errors.hpp"
#include "oracles.hpp"

using namespace mor;

namespace {

FunctionClass constants(std::size_t n_x, std::vector<double> values, LabelKind kind) {
  std::vector<Instance> dom;
  for (std::size_t i = 0; i < n_x; ++i) dom.push_back(static_cast<Instance>(i));
  std::vector<std::vector<LabelVector>> tables;
  for (double v : values) tables.push_back(std::vector<LabelVector>(n_x, LabelVector{v}));
  return FunctionClass::from_tables(dom, kind, 1, tables);
}

// All functions X -> values.
FunctionClass full_class(std::size_t n_x, const std::vector<double>& values, LabelKind kind) {
  std::vector<Instance> dom;
  for (std::size_t i = 0; i < n_x; ++i) dom.push_back(static_cast<Instance>(i));
  std::vector<std::vector<LabelVector>> tables;
  for (const auto& y : product_grid(values, n_x)) {
    std::vector<LabelVector> t;
    for (std::size_t i = 0; i < n_x; ++i) t.push_back(LabelVector{y[i]});
    tables.push_back(t);
  }
  return FunctionClass::from_tables(dom, kind, 1, tables);
}

}  // namespace

TEST_CASE("vc hand cases") {
  auto pm = constants(3, {-1, 1}, LabelKind::kBinary);
  auto r = vc(pm);
  CHECK(r.value == 1);
  CHECK(replay(r.certificate, pm));
  auto full = full_class(3, {-1, 1}, LabelKind::kBinary);
  CHECK(vc(full).value == 3);
  CHECK(replay(vc(full).certificate, full));
  CHECK(vc(constants(3, {1}, LabelKind::kBinary)).value == 0);
  CHECK_THROWS_AS(vc(constants(2, {0.5}, LabelKind::kReal)), KindMismatchError);
}

TEST_CASE("natarajan hand cases") {
  auto full3 = full_class(2, {0.0, 0.5, 1.0}, LabelKind::kReal);
  auto r = natarajan(full3);
  CHECK(r.value == 2);
  CHECK(replay(r.certificate, full3));
  auto pm = constants(3, {-1, 1}, LabelKind::kBinary);
  CHECK(natarajan(pm).value == vc(pm).value);
  CHECK(natarajan(constants(2, {0.5}, LabelKind::kReal)).value == 0);
}

TEST_CASE("littlestone hand cases") {
  auto full = full_class(2, {-1, 1}, LabelKind::kBinary);
  auto r = littlestone(full);
  CHECK(r.value == 2);
  CHECK(replay(r.certificate, full));
  CHECK(littlestone(constants(2, {-1, 1}, LabelKind::kBinary)).value == 1);
  CHECK(mc_littlestone(full).value == 2);
  // Thresholds on 7 points: Ldim = floor(log2(8)) = 3, VC = 1.
  std::vector<std::vector<LabelVector>> tables;
  for (int t = 0; t <= 7; ++t) {
    std::vector<LabelVector> row;
    for (int i = 0; i < 7; ++i) row.push_back(LabelVector{i < t ? 1.0 : -1.0});
    tables.push_back(row);
  }
  auto thr = FunctionClass::from_tables({0, 1, 2, 3, 4, 5, 6}, LabelKind::kBinary, 1, tables);
  CHECK(littlestone(thr).value == 3);
  CHECK(vc(thr).value == 1);
}

TEST_CASE("fat-shattering hand cases") {
  auto c01 = constants(3, {0.0, 1.0}, LabelKind::kReal);
  auto r = fat_shattering(c01, 0.4);
  CHECK(r.value == 1);
  CHECK(r.certificate.witness_r[0] == doctest::Approx(0.5));
  CHECK(replay(r.certificate, c01));
  CHECK(fat_shattering(c01, 0.6).value == 0);
  auto s = seq_fat_shattering(c01, 0.4, 2);
  CHECK(s.value == 1);
  CHECK_FALSE(s.truncated);
  CHECK(replay(s.certificate, c01));
  CHECK(seq_fat_shattering(constants(2, {0.5}, LabelKind::kReal), 0.1).value == 0);
}

TEST_CASE("fat_gamma is non-increasing in gamma") {
  Rng rng(21);
  auto F = oracle::random_class(rng, 4, 12, LabelKind::kReal, 1, {0.0, 0.2, 0.45, 0.7, 1.0});
  std::size_t prev = 100;
  for (double g : {0.05, 0.1, 0.2, 0.3, 0.4, 0.49}) {
    auto d = fat_shattering(F, g).value;
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("dimensions agree with brute-force oracles on random classes") {
  Rng rng(2024);
  for (int t = 0; t < 25; ++t) {
    const std::size_t nx = 2 + rng.below(4);
    const std::size_t nf = 2 + rng.below(15);
    auto B = oracle::random_class(rng, nx, nf, LabelKind::kBinary, 1, {-1.0, 1.0});
    auto rv = vc(B);
    CHECK(rv.value == oracle::vc(B));
    CHECK(replay(rv.certificate, B));
    auto rn = natarajan(B);
    CHECK(rn.value == rv.value);
    auto rl = littlestone(B);
    CHECK(static_cast<int>(rl.value) == oracle::mc_littlestone(B));
    CHECK(rl.value >= rv.value);
    CHECK(replay(rl.certificate, B));

    auto M = oracle::random_class(rng, nx, nf, LabelKind::kReal, 1, {0.0, 0.5, 1.0});
    auto mn = natarajan(M);
    CHECK(mn.value == oracle::natarajan(M));
    CHECK(replay(mn.certificate, M));
    auto ml = mc_littlestone(M);
    CHECK(static_cast<int>(ml.value) == oracle::mc_littlestone(M));
    CHECK(replay(ml.certificate, M));

    auto R = oracle::random_class(rng, nx, nf, LabelKind::kReal, 1, {0.0, 0.3, 0.5, 0.8, 1.0});
    for (double g : {0.1, 0.2, 0.35}) {
      auto rf = fat_shattering(R, g);
      CHECK(rf.value == oracle::fat(R, g));
      CHECK(replay(rf.certificate, R));
      auto rs = seq_fat_shattering(R, g, 4);
      CHECK(static_cast<int>(rs.value) == oracle::seq_fat(R, g, 4));
      CHECK(rs.value >= rf.value);
      CHECK(replay(rs.certificate, R));
    }
  }
}

TEST_CASE("rademacher estimate") {
  auto one = FunctionClass::from_tables({1}, LabelKind::kBinary, 1, {{LabelVector{1}}});
  FiniteDistribution D({{1, LabelVector{1}}, {1, LabelVector{-1}}}, {0.5, 0.5});
  auto e = rademacher_estimate(one, D, LossSpec::zero_one(), 20, 4000, 1);
  CHECK(std::fabs(e.mean) <= 4 * e.std_error + 1e-9);
  CHECK(e.mean >= -1.0);

  // Two functions on one point with a fixed label: E sup = gap * E|mean sigma| / 2.
  auto two = FunctionClass::from_tables({1}, LabelKind::kReal, 1,
                                        {{LabelVector{0.2}}, {LabelVector{0.9}}});
  FiniteDistribution P({{1, LabelVector{0.0}}}, {1.0});
  const auto loss = LossSpec::d1();
  for (std::size_t n : {4u, 9u, 12u}) {
    double abs_mean = 0.0;
    for (unsigned s = 0; s < (1U << n); ++s) {
      int sum = 0;
      for (std::size_t i = 0; i < n; ++i) sum += ((s >> i) & 1U) ? 1 : -1;
      abs_mean += std::fabs(static_cast<double>(sum) / static_cast<double>(n));
    }
    abs_mean /= static_cast<double>(1U << n);
    const double exact = 0.7 * abs_mean / 2.0;
    auto est = rademacher_estimate(two, P, loss, n, 20000, 7);
    CHECK(std::fabs(est.mean - exact) <= 4 * est.std_error);
    CHECK(est.mean >= 0.0);
    CHECK(est.mean <= 0.9);
  }
}
