#include <catch2/catch_amalgamated.hpp>

#include <cstdint>

#include "phi/exact.hpp"
#include "phi/model.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using phi::CountSummary;
using phi::ExactHypothesis;
using phi::ExactPrior;
using phi::Rational;

namespace {

Rational r(std::int64_t p, std::int64_t q = 1) { return Rational(p, q); }

const phi::DistanceKind kAbs = phi::DistanceKind::parse("abs");
const phi::DistanceKind kSq = phi::DistanceKind::parse("sq");

}  // namespace

TEST_CASE("exact evidence telescopes to factorial ratios", "[exact]") {
  auto uni = ExactPrior::uniform();
  CHECK(phi::exact_evidence(uni, {0, 0}) == r(1));
  CHECK(phi::exact_evidence(uni, {1, 0}) == r(1, 2));
  CHECK(phi::exact_evidence(uni, {1, 1}) == r(1, 6));
  CHECK(phi::exact_evidence(uni, {2, 2}) == r(1, 30));
  CHECK(phi::exact_evidence(uni, {3, 1}) == r(1, 20));

  // against the floating-point path, including a non-uniform prior
  auto beta25 = ExactPrior::parse("beta:2,5");
  CHECK(phi::exact_evidence(beta25, {4, 3}).to_double() ==
        Approx(phi::bernoulli_evidence(phi::Prior::beta(2.0, 5.0), {4, 3}))
            .epsilon(1e-13));
  CHECK(phi::exact_evidence(ExactPrior::parse("jeffreys"), {3, 2}).to_double() ==
        Approx(phi::bernoulli_evidence(phi::Prior::jeffreys(), {3, 2}))
            .epsilon(1e-13));
}

TEST_CASE("exact predictive reproduces the two-step table", "[exact]") {
  auto uni = ExactPrior::uniform();

  // per-sequence rows for m = 2, futures grouped by their count of ones
  struct Row {
    CountSummary data;
    Rational t0, t1, t2;
  };
  const Row rows[] = {
      {{0, 0}, r(1, 3), r(1, 6), r(1, 3)},
      {{1, 1}, r(3, 10), r(1, 5), r(3, 10)},
      {{2, 2}, r(2, 7), r(3, 14), r(2, 7)},
  };
  for (const auto& row : rows) {
    CHECK(phi::exact_predictive(uni, row.data, {0, 2}) == row.t0);
    CHECK(phi::exact_predictive(uni, row.data, {1, 1}) == row.t1);
    CHECK(phi::exact_predictive(uni, row.data, {2, 0}) == row.t2);
  }

  // one-step Laplace rule
  CHECK(phi::exact_predictive(uni, {2, 1}, {1, 0}) == r(3, 5));

  // long-run data stays representable: products never build factorials
  CHECK(phi::exact_predictive(uni, {500, 500}, {1, 0}) == r(501, 1002));
  CHECK(phi::exact_predictive(uni, {500, 500}, {2, 0}) ==
        r(501, 1002) * r(502, 1003));
}

TEST_CASE("exact composite likelihoods: points, intervals, mixtures", "[exact]") {
  auto uni = ExactPrior::uniform();

  auto fair = ExactHypothesis::parse("point:1/2");
  CHECK(phi::exact_composite_likelihood(fair, uni, {0, 2}) == r(1, 4));
  CHECK(phi::exact_composite_likelihood(fair, uni, {1, 1}) == r(1, 4));

  // the vacuous interval predicts with the prior evidence of the future
  auto vac = ExactHypothesis::interval(r(0), r(1));
  CHECK(phi::exact_composite_likelihood(vac, uni, {0, 2}) == r(1, 3));
  CHECK(phi::exact_composite_likelihood(vac, uni, {1, 1}) == r(1, 6));
  CHECK(phi::exact_composite_likelihood(vac, uni, {7, 4}) ==
        phi::exact_evidence(uni, {7, 4}));

  // single-bit prediction of an interval is its midpoint
  auto iv = ExactHypothesis::parse("interval:1/4,3/4");
  CHECK(phi::exact_composite_likelihood(iv, uni, {1, 0}) == r(1, 2));
  auto iv2 = ExactHypothesis::parse("interval:0.2,0.6");
  CHECK(phi::exact_composite_likelihood(iv2, uni, {1, 0}) == r(2, 5));

  // decimal literals parse exactly
  CHECK(ExactHypothesis::parse("point:0.25").theta == r(1, 4));

  // mixtures: exact weighted sum with exact weight normalization
  auto mix = ExactHypothesis::parse("mixture:1@1/4,3@3/4");
  CHECK(mix.weights[0] == r(1, 4));
  CHECK(mix.weights[1] == r(3, 4));
  Rational expect = r(1, 4) * r(1, 4) * r(3, 4) + r(3, 4) * r(3, 4) * r(1, 4);
  CHECK(phi::exact_composite_likelihood(mix, uni, {1, 1}) == expect);

  // segment unions against the floating-point path
  auto un = ExactHypothesis::parse("interval:1/10,3/10;3/5,9/10");
  auto un_f = phi::Hypothesis::parse("interval:0.1,0.3;0.6,0.9");
  CHECK(phi::exact_composite_likelihood(un, uni, {3, 1}).to_double() ==
        Approx(phi::composite_likelihood(un_f, phi::Prior::uniform(), {3, 1}))
            .epsilon(1e-11));

  // integer beta prior through the expansion path
  auto beta23 = ExactPrior::parse("beta:2,3");
  auto seg = ExactHypothesis::parse("interval:1/4,3/4");
  CHECK(phi::exact_composite_likelihood(seg, beta23, {2, 2}).to_double() ==
        Approx(phi::composite_likelihood(phi::Hypothesis::interval(0.25, 0.75),
                                         phi::Prior::beta(2.0, 3.0), {2, 2}))
            .epsilon(1e-10));

  CHECK_THROWS_WITH(
      phi::exact_composite_likelihood(iv, ExactPrior::parse("jeffreys"), {1, 0}),
      ContainsSubstring("integer prior shapes"));
}

TEST_CASE("exact hat losses reproduce the two-step error table", "[exact]") {
  auto uni = ExactPrior::uniform();
  auto fair = ExactHypothesis::parse("point:1/2");
  auto vac = ExactHypothesis::interval(r(0), r(1));

  // no data: the vacuous hypothesis predicts exactly the predictive
  CHECK(phi::exact_hat_loss(fair, uni, {0, 0}, 2, kAbs) == r(1, 3));
  CHECK(phi::exact_hat_loss(vac, uni, {0, 0}, 2, kAbs) == r(0));

  CHECK(phi::exact_hat_loss(fair, uni, {1, 1}, 2, kAbs) == r(1, 5));
  CHECK(phi::exact_hat_loss(vac, uni, {1, 1}, 2, kAbs) == r(2, 15));

  CHECK(phi::exact_hat_loss(fair, uni, {2, 2}, 2, kAbs) == r(1, 7));
  CHECK(phi::exact_hat_loss(vac, uni, {2, 2}, 2, kAbs) == r(4, 21));

  // strong evidence for fairness: the point hypothesis finally wins
  CHECK(phi::exact_hat_loss(fair, uni, {20, 20}, 2, kAbs) == r(1, 43));
  CHECK(phi::exact_hat_loss(vac, uni, {20, 20}, 2, kAbs) == r(40, 129));

  // long horizon with weak data: the vacuous hypothesis wins
  Rational lf = phi::exact_hat_loss(fair, uni, {1, 1}, 12, kAbs);
  Rational lv = phi::exact_hat_loss(vac, uni, {1, 1}, 12, kAbs);
  CHECK(lv < lf);

  // squared distance against an independent floating-point accumulation
  Rational sq = phi::exact_hat_loss(fair, uni, {1, 1}, 3, kSq);
  double oracle = 0.0;
  for (std::int64_t t = 0; t <= 3; ++t) {
    double ph = std::pow(0.5, 3.0);
    double pd = phi::bernoulli_predictive(phi::Prior::uniform(), {1, 1}, {t, 3 - t});
    oracle += double(phi::binomial_exact(3, t)) * (ph - pd) * (ph - pd);
  }
  CHECK(sq.to_double() == Approx(oracle).epsilon(1e-13));

  CHECK_THROWS_WITH(
      phi::exact_hat_loss(fair, uni, {1, 1}, 2, phi::DistanceKind::parse("kl")),
      ContainsSubstring("abs and sq"));
  CHECK_THROWS_WITH(phi::exact_hat_loss(fair, uni, {1, 1}, 70, kAbs),
                    ContainsSubstring("0 <= m <= 62"));
}

TEST_CASE("exact mode fails loudly outside its envelope", "[exact]") {
  auto uni = ExactPrior::uniform();
  // bare evidence at n = 1000 needs factorials beyond 128 bits
  CHECK_THROWS_AS(phi::exact_evidence(uni, {500, 500}), phi::RationalError);
  // interval integrals cap the expansion exponent
  auto iv = ExactHypothesis::parse("interval:1/4,3/4");
  CHECK_THROWS_WITH(phi::exact_composite_likelihood(iv, uni, {10, 70}),
                    ContainsSubstring("exponents <= 62"));

  // hypothesis validation matches the floating-point rules
  CHECK_THROWS_AS(ExactHypothesis::parse("point:3/2"), phi::ModelError);
  CHECK_THROWS_AS(ExactHypothesis::parse("interval:3/4,1/4"), phi::ModelError);
  CHECK_THROWS_AS(ExactHypothesis::parse("interval:0,1/2;1/4,3/4"), phi::ModelError);
  CHECK_THROWS_AS(ExactHypothesis::parse("mixture:0@1/2"), phi::ModelError);
  CHECK_THROWS_AS(ExactHypothesis::parse("gauss:1/2"), phi::ParseError);
}
