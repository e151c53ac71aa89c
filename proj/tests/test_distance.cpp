#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "phi/distance.hpp"

using Catch::Approx;
using phi::DistanceKind;
using phi::DistanceTag;
using phi::eval_pointwise;
using phi::scaling_exponent;

namespace {
const std::vector<std::string> kAllNames = {"abs", "hellinger", "chi2", "kl",
                                            "rkl", "sq", "alpha:0.75"};
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("distance kernels match their closed forms", "[distance]") {
  CHECK(eval_pointwise(DistanceKind::parse("abs"), 0.5, 0.25) == 0.25);
  CHECK(eval_pointwise(DistanceKind::parse("hellinger"), 0.25, 0.25) == 0.0);
  const double h = eval_pointwise(DistanceKind::parse("hellinger"), 0.5, 0.125);
  const double hs = std::sqrt(0.5) - std::sqrt(0.125);
  CHECK(h == hs * hs);
  CHECK(eval_pointwise(DistanceKind::parse("chi2"), 0.5, 0.25) ==
        Approx(0.0625 / 0.25).epsilon(1e-15));
  CHECK(eval_pointwise(DistanceKind::parse("kl"), 0.5, 0.25) ==
        Approx(0.5 * std::log(2.0)).epsilon(1e-15));
  // rkl kernel is q*ln(q/p)
  CHECK(eval_pointwise(DistanceKind::parse("rkl"), 0.5, 0.25) ==
        Approx(0.25 * std::log(0.25 / 0.5)).margin(2e-16));
  CHECK(eval_pointwise(DistanceKind::parse("sq"), 0.2, 0.7) ==
        Approx(0.25).epsilon(1e-15));
}

TEST_CASE("distance scaling exponents", "[distance]") {
  CHECK(scaling_exponent(DistanceKind::parse("hellinger")) == 1.0);
  CHECK(scaling_exponent(DistanceKind::parse("abs")) == 1.0);
  CHECK(scaling_exponent(DistanceKind::parse("chi2")) == 1.0);
  CHECK(scaling_exponent(DistanceKind::parse("kl")) == 1.0);
  CHECK(scaling_exponent(DistanceKind::parse("rkl")) == 1.0);
  CHECK(scaling_exponent(DistanceKind::parse("alpha:0.3")) == 1.0);
  CHECK(scaling_exponent(DistanceKind::parse("sq")) == 2.0);

  // squared kernel scales by sigma^2: the 9x example
  const auto sq = DistanceKind::parse("sq");
  CHECK(eval_pointwise(sq, 3 * 0.2, 3 * 0.7) ==
        Approx(9.0 * eval_pointwise(sq, 0.2, 0.7)).epsilon(1e-14));
}

TEST_CASE("distance scaling law holds across the catalog", "[distance]") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> sig(0.01, 4.0);
  std::uniform_real_distribution<double> val(0.01, 2.0);
  for (const auto& name : kAllNames) {
    const auto kind = DistanceKind::parse(name);
    const double beta = scaling_exponent(kind);
    for (int trial = 0; trial < 50; ++trial) {
      const double s = sig(rng);
      const double p = val(rng);
      const double q = val(rng);
      const double lhs = eval_pointwise(kind, s * p, s * q);
      const double rhs = std::pow(s, beta) * eval_pointwise(kind, p, q);
      REQUIRE(lhs == Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("distance zero conventions produce inf, never NaN", "[distance]") {
  const auto kl = DistanceKind::parse("kl");
  CHECK(eval_pointwise(kl, 0.0, 0.5) == 0.0);
  CHECK(eval_pointwise(kl, 0.0, 0.0) == 0.0);
  CHECK(eval_pointwise(kl, 0.5, 0.0) == kInf);

  const auto rkl = DistanceKind::parse("rkl");
  CHECK(eval_pointwise(rkl, 0.5, 0.0) == 0.0);
  CHECK(eval_pointwise(rkl, 0.0, 0.0) == 0.0);
  CHECK(eval_pointwise(rkl, 0.0, 0.5) == kInf);

  const auto chi2 = DistanceKind::parse("chi2");
  CHECK(eval_pointwise(chi2, 0.0, 0.0) == 0.0);
  CHECK(eval_pointwise(chi2, 0.3, 0.0) == kInf);

  for (const auto& name : kAllNames) {
    const auto kind = DistanceKind::parse(name);
    for (double p : {0.0, 0.3}) {
      for (double q : {0.0, 0.7}) {
        REQUIRE_FALSE(std::isnan(eval_pointwise(kind, p, q)));
      }
    }
  }
}

TEST_CASE("distance identity of indiscernibles", "[distance]") {
  // The raw kl/rkl integrands (pinned by their closed-form values and zero
  // conventions) are sign-indefinite pointwise; their nonnegativity is a
  // property of the integrated loss.  The other kernels are pointwise >= 0
  // and vanish only at p = q.
  for (const auto& name : kAllNames) {
    const auto kind = DistanceKind::parse(name);
    for (double v : {0.1, 0.25, 1.0, 1.7}) {
      REQUIRE(eval_pointwise(kind, v, v) == Approx(0.0).margin(1e-16));
    }
    REQUIRE(eval_pointwise(kind, 0.3, 0.31) != 0.0);
  }
  for (const auto& name : {"abs", "hellinger", "chi2", "sq", "alpha:0.75"}) {
    const auto kind = DistanceKind::parse(name);
    for (double p = 0.0; p <= 1.0; p += 0.09) {
      for (double q = 0.0; q <= 1.0; q += 0.07) {
        REQUIRE(eval_pointwise(kind, p, q) >= 0.0);
      }
    }
  }
}

TEST_CASE("alpha distance special cases match bit-for-bit", "[distance]") {
  const auto a1 = DistanceKind::parse("alpha:1");
  const auto ah = DistanceKind::parse("alpha:0.5");
  const auto abs = DistanceKind::parse("abs");
  const auto hel = DistanceKind::parse("hellinger");
  for (double p = 0.0; p <= 2.0; p += 0.11) {
    for (double q = 0.0; q <= 2.0; q += 0.13) {
      REQUIRE(eval_pointwise(a1, p, q) == eval_pointwise(abs, p, q));
      REQUIRE(eval_pointwise(ah, p, q) == eval_pointwise(hel, p, q));
    }
  }
  // generic alpha agrees with its definition
  const auto a075 = DistanceKind::parse("alpha:0.75");
  const double v = eval_pointwise(a075, 0.9, 0.2);
  CHECK(v == Approx(std::pow(std::abs(std::pow(0.9, 0.75) - std::pow(0.2, 0.75)),
                             1.0 / 0.75))
                 .epsilon(1e-15));
}

TEST_CASE("distance parsing round-trips and rejects junk", "[distance]") {
  for (const auto& name : kAllNames) {
    CHECK(DistanceKind::parse(name).name() == name);
  }
  CHECK(DistanceKind::parse("alpha:0.5").tag == DistanceTag::alpha);
  CHECK_THROWS_AS(DistanceKind::parse("euclid"), phi::ParseError);
  CHECK_THROWS_AS(DistanceKind::parse("alpha:0"), phi::ParseError);
  CHECK_THROWS_AS(DistanceKind::parse("alpha:1.5"), phi::ParseError);
  CHECK_THROWS_AS(DistanceKind::parse("alpha:x"), phi::ParseError);
  CHECK_THROWS_AS(DistanceKind::parse(""), phi::ParseError);
}
