#include <cmath>
#include <unordered_map>

#include "doctest.h"
#include "mor/batch.hpp"
#include "mor/dimensions.hpp"
#include "mor/errors.hpp"
#include "oracles.hpp"

using namespace mor;

namespace {

bool contains_table(const std::vector<Predictor>& C, const Predictor& g) {
  for (const auto& h : C) {
    if (h.same_table(g)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("erm hand cases") {
  auto F = FunctionClass::from_tables({1, 2}, LabelKind::kBinary, 1,
                                      {{LabelVector{1}, LabelVector{1}},
                                       {LabelVector{1}, LabelVector{-1}}});
  Erm A(F, LossSpec::zero_one());
  CHECK(A.fit({}).same_table(F[0]));
  Sample favor2{{1, LabelVector{1}}, {2, LabelVector{-1}}, {2, LabelVector{-1}}};
  CHECK(A.fit(favor2).same_table(F[1]));
  Sample realizable{{2, LabelVector{1}}};
  CHECK(empirical_loss(A.fit(realizable), realizable, LossSpec::zero_one()) == 0.0);
  // Equal losses: lowest index.
  Sample tie{{2, LabelVector{1}}, {2, LabelVector{-1}}};
  CHECK(A.fit(tie).same_table(F[0]));
  CHECK(*A.sample_complexity(0.1, 0.1, Setting::kRealizable) ==
        static_cast<std::size_t>(std::ceil(1.0 / 0.1 * std::log(2.0 / 0.1))));
  CHECK(*A.sample_complexity(0.1, 0.1, Setting::kAgnostic) ==
        static_cast<std::size_t>(std::ceil(2.0 / 0.01 * std::log(4.0 / 0.1))));
}

TEST_CASE("erm output minimizes empirical loss among class members") {
  Rng rng(77);
  for (int t = 0; t < 40; ++t) {
    auto F = oracle::random_class(rng, 4, 6, LabelKind::kReal, 2, {0.0, 0.3, 0.6, 1.0});
    auto D = oracle::random_distribution(rng, F, 5, {0.0, 0.5, 1.0});
    Rng draw = rng.derive(static_cast<std::uint64_t>(t));
    const auto S = D.sample(draw, 12);
    const auto loss = LossSpec::lp(2);
    const auto g = Erm(F, loss).fit(S);
    const double lg = empirical_loss(g, S, loss);
    std::size_t first_best = F.size();
    for (std::size_t i = 0; i < F.size(); ++i) {
      const double li = empirical_loss(F[i], S, loss);
      CHECK(lg <= li);
      if (first_best == F.size() && li == lg) first_best = i;
    }
    REQUIRE(first_best < F.size());
    CHECK(g.same_table(F[first_best]));
  }
}

TEST_CASE("realizable_to_agnostic contracts") {
  // One behavior: output is the fit on that labeling.
  auto one = FunctionClass::from_tables({1, 2}, LabelKind::kBinary, 1,
                                        {{LabelVector{1}, LabelVector{-1}}});
  Erm A1(one, LossSpec::zero_one());
  Sample S_L{{1, LabelVector{-1}}, {2, LabelVector{1}}};
  auto r = realizable_to_agnostic(A1, one, LossSpec::zero_one(), {1, 2, 2}, S_L);
  CHECK(r.candidates.size() == 1);
  CHECK(r.predictor.same_table(one[0]));

  // Empty S_U and empty S_L.
  auto empty = realizable_to_agnostic(A1, one, LossSpec::zero_one(), {}, {});
  CHECK(empty.candidates.size() == 1);
  CHECK(empty.chosen == 0);

  Rng rng(31);
  for (int t = 0; t < 40; ++t) {
    auto F = oracle::random_class(rng, 4, 8, LabelKind::kBinary, 2, {-1.0, 1.0});
    auto D = oracle::random_distribution(rng, F, 6, {-1.0, 1.0});
    Rng draw = rng.derive(static_cast<std::uint64_t>(t));
    std::vector<Instance> S_U;
    for (int i = 0; i < 3; ++i) S_U.push_back(D.sample(draw).x);
    const auto S_L = D.sample(draw, 10);
    const auto loss = LossSpec::hamming();
    Erm A(F, loss);
    auto res = realizable_to_agnostic(A, F, loss, S_U, S_L);
    CHECK(res.candidates.size() <= behaviors_on(F, S_U).size());
    CHECK(static_cast<double>(res.candidates.size()) <= std::pow(image(F).size(), S_U.size()));
    CHECK(contains_table(res.candidates, res.predictor));
    const double chosen = empirical_loss(res.predictor, S_L, loss);
    for (std::size_t i = 0; i < res.candidates.size(); ++i) {
      const double li = empirical_loss(res.candidates[i], S_L, loss);
      CHECK(chosen <= li);
      if (i < res.chosen) CHECK(li > chosen);
    }
  }
}

TEST_CASE("realizable-to-agnostic sample-size bookkeeping") {
  // |S_L| from the realized candidate count never exceeds the a-priori bound.
  const double eps = 0.1, delta = 0.1, b = 1.0;
  const double m_A = 20.0, im = 4.0;
  const double C_max = std::pow(im, m_A);
  const double via_C = m_A + (8.0 * b * b / (eps * eps)) * std::log(2.0 * C_max / delta);
  CHECK(alg1_sample_bound(m_A, eps, delta, b, im) == doctest::Approx(via_C).epsilon(1e-12));
  for (std::size_t c : {1u, 5u, 100u, 1000000u}) {
    CHECK(static_cast<double>(alg1_labeled_size(eps, delta, b, c)) <=
          alg1_sample_bound(m_A, eps, delta, b, im) - m_A + 1.0);
  }
  CHECK(alg1_labeled_size(0.1, 0.1, 1.0, 1) ==
        static_cast<std::size_t>(std::ceil(800.0 * std::log(20.0))));
  CHECK_THROWS_AS(alg1_labeled_size(0.0, 0.1, 1.0, 1), ParameterError);
}

TEST_CASE("concat: K=1 matches the single learner") {
  Rng rng(4);
  auto F = oracle::random_class(rng, 3, 5, LabelKind::kBinary, 1, {-1.0, 1.0});
  auto A = erm(F, LossSpec::zero_one());
  auto C = concat_coordinates({A});
  auto D = oracle::random_distribution(rng, F, 4, {-1.0, 1.0});
  Rng draw(9);
  const auto S = D.sample(draw, 15);
  CHECK(C->fit(S).same_table(A->fit(S)));
  CHECK(*C->sample_complexity(0.1, 0.1, Setting::kAgnostic) ==
        *A->sample_complexity(0.1, 0.1, Setting::kAgnostic));
}

TEST_CASE("concat: hamming excess is at most the sum of coordinate excesses") {
  Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    const std::size_t K = 2 + rng.below(2);
    auto F = oracle::random_class(rng, 3, 2 + rng.below(6), LabelKind::kBinary, K, {-1.0, 1.0});
    auto D = oracle::random_distribution(rng, F, 5, {-1.0, 1.0});
    std::vector<LearnerPtr> parts;
    for (std::size_t k = 0; k < K; ++k) parts.push_back(erm(restrict(F, k), LossSpec::zero_one()));
    auto C = concat_coordinates(parts);
    Rng draw = rng.derive(static_cast<std::uint64_t>(t));
    const auto S = D.sample(draw, 1 + draw.below(20));
    const auto h = C->fit(S);
    const double excess = exact_risk(h, D, LossSpec::hamming()) -
                          best_risk(F, D, LossSpec::hamming()).value;
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto Dk = marginal(D, k);
      sum += exact_risk(coordinate_predictor(h, k), Dk, LossSpec::zero_one()) -
             best_risk(restrict(F, k), Dk, LossSpec::zero_one()).value;
    }
    CHECK(excess <= sum + 1e-12);
  }
}

TEST_CASE("concat: mismatched domains") {
  auto a = FunctionClass::from_tables({1}, LabelKind::kBinary, 1, {{LabelVector{1}}});
  auto b = FunctionClass::from_tables({2}, LabelKind::kBinary, 1, {{LabelVector{1}}});
  CHECK_THROWS_AS(concat_coordinates({erm(a, LossSpec::zero_one()), erm(b, LossSpec::zero_one())}),
                  DomainError);
}

TEST_CASE("extract classification: K=1 passes through") {
  Rng rng(8);
  auto F = oracle::random_class(rng, 3, 4, LabelKind::kBinary, 1, {-1.0, 1.0});
  auto A = erm(F, LossSpec::zero_one());
  auto E = extract_coordinate_classification(A, 0, 5);
  auto D = oracle::random_distribution(rng, F, 4, {-1.0, 1.0});
  Rng draw(1);
  const auto S = D.sample(draw, 10);
  CHECK(E->fit(S).same_table(A->fit(S)));
}

TEST_CASE("extract classification: augmented coordinates are fair coins") {
  const std::size_t n = 10000;
  int plus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plus += ExtractCoordinateLearner::seeded_fill(13, 2, i, 1) > 0;
  }
  const double sigma = std::sqrt(n * 0.25);
  CHECK(std::fabs(plus - n / 2.0) <= 3 * sigma);
  // Independent across coordinates: agreement rate also near 1/2.
  int agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    agree += ExtractCoordinateLearner::seeded_fill(13, 2, i, 1) ==
             ExtractCoordinateLearner::seeded_fill(13, 2, i, 2);
  }
  CHECK(std::fabs(agree - n / 2.0) <= 3 * sigma);
  CHECK(ExtractCoordinateLearner::seeded_fill(13, 2, 5, 1) ==
        ExtractCoordinateLearner::seeded_fill(13, 2, 5, 1));
}

TEST_CASE("extract classification: every predictor has risk 1/2 on augmented coordinates") {
  Rng rng(55);
  for (int t = 0; t < 20; ++t) {
    auto F = oracle::random_class(rng, 3, 4, LabelKind::kBinary, 3, {-1.0, 1.0});
    auto D1 = marginal(oracle::random_distribution(rng, F, 4, {-1.0, 1.0}), 0);
    const auto Dt = augmented_distribution(D1, 3, 0);
    for (const auto& f : F.functions()) {
      for (std::size_t k = 1; k < 3; ++k) {
        CHECK(exact_risk(coordinate_predictor(f, k), marginal(Dt, k), LossSpec::zero_one()) ==
              doctest::Approx(0.5).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("extract classification: excess 0-1 risk bounded by multi excess, all fills") {
  Rng rng(202);
  for (int t = 0; t < 15; ++t) {
    const std::size_t K = 2;
    const std::size_t k = rng.below(K);
    auto F = oracle::random_class(rng, 3, 5, LabelKind::kBinary, K, {-1.0, 1.0});
    auto D1 = marginal(oracle::random_distribution(rng, F, 4, {-1.0, 1.0}), k);
    const auto Dt = augmented_distribution(D1, K, k);
    Rng draw = rng.derive(static_cast<std::uint64_t>(t));
    const auto S = D1.sample(draw, 6);
    auto multi = erm(F, LossSpec::hamming());
    const double best_k = best_risk(restrict(F, k), D1, LossSpec::zero_one()).value;
    const double best_multi = best_risk(F, Dt, LossSpec::hamming()).value;
    // Enumerate every fill of the n(K-1) augmented labels.
    const std::size_t bits = S.size() * (K - 1);
    for (unsigned sigma = 0; sigma < (1U << bits); ++sigma) {
      ExtractCoordinateLearner E(multi, k, [&](std::size_t i, std::size_t) {
        return ((sigma >> i) & 1U) ? 1.0 : -1.0;
      });
      const auto h = multi->fit(E.augment(S));
      const double excess_multi = exact_risk(h, Dt, LossSpec::hamming()) - best_multi;
      const double excess_k =
          exact_risk(E.fit(S), D1, LossSpec::zero_one()) - best_k;
      CHECK(excess_k <= excess_multi + 1e-12);
      CHECK(excess_k == doctest::Approx(excess_multi).epsilon(1e-12));
    }
  }
}

TEST_CASE("extract regression: K=1 and candidate counts") {
  auto F1 = FunctionClass::from_tables({1, 2}, LabelKind::kReal, 1,
                                       {{LabelVector{0.1}, LabelVector{0.9}},
                                        {LabelVector{0.5}, LabelVector{0.5}}});
  Erm A1(F1, LossSpec::d1());
  Sample S{{1, LabelVector{0.2}}, {2, LabelVector{0.8}}};
  auto r1 = extract_coordinate_regression(A1, F1, 0, 0.1, LossSpec::d1(), S, S);
  CHECK(r1.augmentations == 1);
  CHECK(r1.predictor.same_table(A1.fit(S)));
  CHECK_THROWS_AS(extract_coordinate_regression(A1, F1, 0, 1.0, LossSpec::d1(), S, S),
                  ParameterError);

  Rng rng(66);
  for (int t = 0; t < 25; ++t) {
    const std::size_t K = 2 + rng.below(2);
    auto F = oracle::random_class(rng, 3, 5, LabelKind::kReal, K, {0.0, 0.15, 0.5, 0.72, 1.0});
    auto D = oracle::random_distribution(rng, F, 5, {0.0, 0.4, 1.0});
    const std::size_t k = rng.below(K);
    const auto Dk = marginal(D, k);
    Rng draw = rng.derive(static_cast<std::uint64_t>(t));
    const auto Sk = Dk.sample(draw, 3);
    const auto St = Dk.sample(draw, 5);
    const double alpha = 0.2;
    const auto loss = LossSpec::lp(1);
    Erm A(F, loss);
    auto res = extract_coordinate_regression(A, F, k, alpha, loss, Sk, St);
    const double cap = std::pow(1.0 + std::floor(1.0 / alpha), (K - 1) * Sk.size());
    CHECK(static_cast<double>(res.augmentations) <= cap);
    std::vector<Instance> xs;
    for (const auto& e : Sk) xs.push_back(e.x);
    CHECK(res.augmentations == behaviors_on(discretize(drop_coordinate(F, k), alpha), xs).size());
    CHECK(res.candidates <= res.augmentations);
  }
}

TEST_CASE("extract regression: point mass, proof alpha, excess within eps") {
  // Three functions, K = 2, decomposable loss with a Huber coordinate.
  auto F = FunctionClass::from_tables({1, 2}, LabelKind::kReal, 2,
                                      {{LabelVector{0.2, 0.9}, LabelVector{0.7, 0.1}},
                                       {LabelVector{0.6, 0.3}, LabelVector{0.4, 0.8}},
                                       {LabelVector{0.9, 0.5}, LabelVector{0.1, 0.45}}});
  const auto loss = LossSpec::decomposable_sum({Psi::identity(), Psi::huber(0.5)});
  const double eps = 0.1, delta = 0.1;
  const double L = *loss.lipschitz();
  const double alpha = default_regression_alpha(eps, L, 2);
  Erm A(F, loss);
  for (std::size_t k = 0; k < 2; ++k) {
    FiniteDistribution D1({{2, LabelVector{0.55}}}, {1.0});
    const auto coord = loss.coordinate_loss(k);
    const double best = best_risk(restrict(F, k), D1, coord).value;
    Rng draw(k);
    const auto S = D1.sample(draw, 10);
    const auto St = D1.sample(draw, alg1_labeled_size(eps, delta, L, 3));
    auto res = extract_coordinate_regression(A, F, k, alpha, loss, S, St);
    CHECK(exact_risk(res.predictor, D1, coord) <= best + eps + 1e-12);
  }
}

TEST_CASE("lp pipeline") {
  // l_p <= l_1 <= K l_p pointwise.
  const auto grid = product_grid({0.0, 0.3, 0.7, 1.0}, 2);
  for (double p : {1.0, 2.0, LossSpec::kInfinity}) {
    for (const auto& a : grid) {
      for (const auto& b : grid) {
        CHECK(LossSpec::lp(p)(a, b) <= LossSpec::lp(1)(a, b) + 1e-12);
        CHECK(LossSpec::lp(1)(a, b) <= 2.0 * LossSpec::lp(p)(a, b) + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(lp_agnostic(Erm(FunctionClass::from_tables({1}, LabelKind::kReal, 1,
                                                             {{LabelVector{0.5}}}),
                                  LossSpec::lp(1)),
                              FunctionClass::from_tables({1}, LabelKind::kReal, 1,
                                                         {{LabelVector{0.5}}}),
                              0.5, 0.1, {}, {}),
                  ParameterError);

  // Discretization shifts every l_p risk by at most alpha K.
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    auto F = oracle::random_class(rng, 3, 4, LabelKind::kReal, 2, {0.0, 0.33, 0.61, 0.97});
    auto D = oracle::random_distribution(rng, F, 5, {0.0, 0.5, 1.0});
    const double alpha = 0.05;
    auto Fa = discretize(F, alpha);
    for (double p : {1.0, 2.0, 3.0}) {
      for (std::size_t i = 0; i < F.size(); ++i) {
        const double diff = exact_risk(F[i], D, LossSpec::lp(p)) -
                            exact_risk(Fa[i], D, LossSpec::lp(p));
        CHECK(std::fabs(diff) <= alpha * 2.0 + 1e-12);
      }
    }
  }

  // p = 1 on a two-function class: excess <= eps.
  auto G = FunctionClass::from_tables({1, 2}, LabelKind::kReal, 2,
                                      {{LabelVector{0.1, 0.2}, LabelVector{0.8, 0.9}},
                                       {LabelVector{0.6, 0.4}, LabelVector{0.3, 0.35}}});
  FiniteDistribution D({{1, LabelVector{0.5, 0.5}}, {2, LabelVector{0.7, 0.8}}}, {0.5, 0.5});
  const double eps = 0.2, delta = 0.1;
  const double alpha = default_lp_alpha(eps, 2);
  Erm A(discretize(G, alpha), LossSpec::lp(1));
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng draw(s);
    std::vector<Instance> S_U;
    for (int i = 0; i < 4; ++i) S_U.push_back(D.sample(draw).x);
    const auto S_L = D.sample(draw, alg1_labeled_size(eps / 2, delta / 2, 2.0, 2));
    auto res = lp_agnostic(A, G, 1.0, alpha, S_U, S_L);
    const double excess = exact_risk(res.predictor, D, LossSpec::lp(1)) -
                          best_risk(G, D, LossSpec::lp(1)).value;
    ok += excess <= eps + 1e-12;
  }
  CHECK(ok >= 18);
}

TEST_CASE("threshold reduction") {
  auto f = Predictor(make_domain({1, 2}), {LabelVector{0.9}, LabelVector{0.8}});
  std::unordered_map<Instance, double> r{{1, 0.5}, {2, 0.3}};
  auto h = threshold_predictor(f, r);
  CHECK(h(1) == LabelVector{1});
  CHECK(h(2) == LabelVector{1});
  CHECK_THROWS_AS(threshold_predictor(f, {{1, 0.5}}), DomainError);

  // h_f != h_g and g gamma-far from r implies |f - g| >= gamma.
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  for (double gamma : {0.1, 0.25}) {
    for (double rv : grid) {
      for (double fv : grid) {
        for (double gv : grid) {
          const bool differ = (fv >= rv) != (gv >= rv);
          const bool far = std::fabs(gv - rv) >= gamma - 1e-12;
          if (differ && far) CHECK(std::fabs(fv - gv) >= gamma - 1e-12);
        }
      }
    }
  }

  // Singleton class: output is its own threshold.
  auto one = FunctionClass::from_tables({1, 2}, LabelKind::kReal, 1,
                                        {{LabelVector{0.9}, LabelVector{0.1}}});
  Erm A1(one, LossSpec::psi_d1(Psi::huber(0.5)));
  Sample S_L{{1, LabelVector{-1}}, {2, LabelVector{1}}};
  auto res1 = threshold_binary_reduction(A1, one, {{1, 0.5}, {2, 0.5}}, 0.1, {1, 2}, S_L);
  CHECK(res1.predictor.same_table(threshold_predictor(one[0], {{1, 0.5}, {2, 0.5}})));

  // Shattered pair: the reduction recovers the Bayes labeling.
  std::vector<std::vector<LabelVector>> tables;
  for (double a : {0.1, 0.9}) {
    for (double b : {0.15, 0.85}) tables.push_back({LabelVector{a}, LabelVector{b}});
  }
  auto G = FunctionClass::from_tables({1, 2}, LabelKind::kReal, 1, tables);
  auto cert = fat_shattering(G, 0.35);
  REQUIRE(cert.value == 2);
  std::unordered_map<Instance, double> w;
  for (std::size_t i = 0; i < cert.certificate.set.size(); ++i) {
    w[cert.certificate.set[i]] = cert.certificate.witness_r[i];
  }
  FiniteDistribution D({{1, LabelVector{1}}, {1, LabelVector{-1}}, {2, LabelVector{-1}},
                        {2, LabelVector{1}}},
                       {0.4, 0.1, 0.35, 0.15});
  Erm A(G, LossSpec::psi_d1(Psi::huber(0.5)));
  const auto bayes = Predictor(G.domain(), {LabelVector{1}, LabelVector{-1}});
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng draw(s);
    const auto S_U = std::vector<Instance>{1, 2};
    const auto S_L = D.sample(draw, 200);
    auto res = threshold_binary_reduction(A, G, w, 0.35 / 2, S_U, S_L);
    CHECK(res.predictor.same_table(bayes));
  }
}

TEST_CASE("report and doubling") {
  ReductionReport rep;
  rep.eps = 0.1;
  rep.add(0.05, 10, 4, 6);
  rep.add(0.2, 10, 4, 6);
  rep.add(-1e-15, 10, 4, 6);
  CHECK(rep.trials() == 3);
  CHECK(rep.success_rate() == doctest::Approx(2.0 / 3.0));
  CHECK(rep.excess_risk[2] >= 0.0);
  auto n = doubling_search([](std::size_t m) { return m >= 37; }, 5, 1000);
  REQUIRE(n.has_value());
  CHECK(*n == 40);
  CHECK_FALSE(doubling_search([](std::size_t) { return false; }, 1, 64).has_value());
}
