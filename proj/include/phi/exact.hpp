#pragma once

// Exact rational evaluation of the small-count Bernoulli quantities:
// evidence, predictive and composite likelihoods, and absolute/squared
// predictive losses. Everything is computed in 128-bit rationals; inputs
// outside the representable envelope raise RationalError rather than
// degrade silently. Intended for n + m up to about 40.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phi/distance.hpp"
#include "phi/model.hpp"
#include "phi/rational.hpp"

namespace phi {

struct ExactPrior {
  Rational a{1};
  Rational b{1};

  static ExactPrior uniform() { return {Rational(1), Rational(1)}; }

  static ExactPrior parse(const std::string& s) {
    if (s == "uniform") return uniform();
    if (s == "jeffreys") return {Rational(1, 2), Rational(1, 2)};
    if (s.rfind("beta:", 0) == 0) {
      auto parts = detail::split(s.substr(5), ',');
      if (parts.size() != 2)
        throw ParseError("bad prior spec: '" + s + "' (want beta:a,b)");
      ExactPrior p{Rational::parse(parts[0]), Rational::parse(parts[1])};
      if (!(p.a > Rational(0)) || !(p.b > Rational(0)))
        throw ParseError("bad prior spec: '" + s + "' (shapes must be > 0)");
      return p;
    }
    throw ParseError("unknown prior: '" + s + "'");
  }

  bool integer_shapes() const { return a.den() == 1 && b.den() == 1; }
};

class ExactHypothesis {
 public:
  enum class Kind { point, intervals, mixture };

  Kind kind = Kind::point;
  Rational theta;                                      // point
  std::vector<std::pair<Rational, Rational>> segments; // intervals
  std::vector<Rational> points;                        // mixture
  std::vector<Rational> weights;

  static ExactHypothesis point(Rational t) {
    ExactHypothesis h;
    h.kind = Kind::point;
    h.theta = t;
    h.validate();
    return h;
  }

  static ExactHypothesis interval(Rational lo, Rational hi) {
    ExactHypothesis h;
    h.kind = Kind::intervals;
    h.segments.push_back({lo, hi});
    h.validate();
    return h;
  }

  // same literals as Hypothesis::parse, with exact rational numbers
  static ExactHypothesis parse(const std::string& s) {
    std::size_t pos = s.find(':');
    if (pos == std::string::npos)
      throw ParseError("unknown hypothesis: '" + s + "'");
    const std::string head = s.substr(0, pos);
    const std::string rest = s.substr(pos + 1);
    ExactHypothesis h;
    if (head == "point") {
      h.kind = Kind::point;
      h.theta = Rational::parse(rest);
    } else if (head == "interval") {
      h.kind = Kind::intervals;
      for (const auto& seg : detail::split(rest, ';')) {
        auto ends = detail::split(seg, ',');
        if (ends.size() != 2)
          throw ParseError("bad hypothesis literal: '" + s + "' (want interval:lo,hi)");
        h.segments.push_back({Rational::parse(ends[0]), Rational::parse(ends[1])});
      }
    } else if (head == "mixture") {
      h.kind = Kind::mixture;
      for (const auto& comp : detail::split(rest, ',')) {
        auto parts = detail::split(comp, '@');
        if (parts.size() != 2)
          throw ParseError("bad hypothesis literal: '" + s + "' (want mixture:w@p,...)");
        h.weights.push_back(Rational::parse(parts[0]));
        h.points.push_back(Rational::parse(parts[1]));
      }
    } else {
      throw ParseError("unknown hypothesis: '" + s + "'");
    }
    h.validate();
    return h;
  }

 private:
  void validate() {
    const Rational zero(0), one(1);
    switch (kind) {
      case Kind::point:
        if (theta < zero || theta > one)
          throw ModelError("point hypothesis needs theta in [0,1]");
        return;
      case Kind::intervals: {
        if (segments.empty())
          throw ModelError("interval hypothesis needs at least one segment");
        for (const auto& seg : segments)
          if (seg.first < zero || !(seg.first < seg.second) || seg.second > one)
            throw ModelError("interval hypothesis needs 0 <= lo < hi <= 1");
        for (std::size_t i = 0; i + 1 < segments.size(); ++i)
          if (segments[i + 1].first < segments[i].second)
            throw ModelError("interval hypothesis segments must be disjoint and ascending");
        return;
      }
      case Kind::mixture: {
        if (points.empty() || points.size() != weights.size())
          throw ModelError("mixture hypothesis needs matching nonempty points and weights");
        Rational sum(0);
        for (std::size_t i = 0; i < points.size(); ++i) {
          if (points[i] < zero || points[i] > one)
            throw ModelError("mixture hypothesis needs points in [0,1]");
          if (weights[i] < zero)
            throw ModelError("mixture hypothesis needs nonnegative weights");
          sum += weights[i];
        }
        if (!(sum > zero))
          throw ModelError("mixture hypothesis needs positive total weight");
        for (auto& w : weights) w /= sum;
        return;
      }
    }
  }
};

namespace detail {

inline Rational rational_pow(Rational base, std::int64_t e) {
  Rational r(1);
  for (std::int64_t i = 0; i < e; ++i) r *= base;
  return r;
}

// integral over [lo,hi] of theta^p1 (1-theta)^p0, by binomial expansion
inline Rational exact_power_integral(const Rational& lo, const Rational& hi,
                                     std::int64_t p1, std::int64_t p0) {
  if (p0 > 62)
    throw ModelError("exact interval integrals need exponents <= 62");
  Rational total(0);
  for (std::int64_t j = 0; j <= p0; ++j) {
    Rational c(std::int64_t(binomial_exact(p0, j)));
    if (j % 2 == 1) c = -c;
    std::int64_t e = p1 + j + 1;
    Rational piece = (rational_pow(hi, e) - rational_pow(lo, e)) / Rational(e);
    total += c * piece;
  }
  return total;
}

}  // namespace detail

// p(D) under a Beta(a,b) prior, as a telescoping product of one-step
// predictive probabilities.
inline Rational exact_evidence(const ExactPrior& prior, const CountSummary& d) {
  if (d.ones < 0 || d.zeros < 0) throw ModelError("counts must be nonnegative");
  Rational p(1);
  const Rational ab = prior.a + prior.b;
  for (std::int64_t i = 0; i < d.ones; ++i)
    p *= (prior.a + Rational(i)) / (ab + Rational(i));
  for (std::int64_t j = 0; j < d.zeros; ++j)
    p *= (prior.b + Rational(j)) / (ab + Rational(d.ones + j));
  return p;
}

// per-sequence p(x|D) for a future with the given counts
inline Rational exact_predictive(const ExactPrior& prior, const CountSummary& data,
                                 const CountSummary& future) {
  ExactPrior shifted{prior.a + Rational(data.ones), prior.b + Rational(data.zeros)};
  return exact_evidence(shifted, future);
}

// per-sequence p(x|Theta), prior-restricted as in the floating-point path
inline Rational exact_composite_likelihood(const ExactHypothesis& h,
                                           const ExactPrior& prior,
                                           const CountSummary& future) {
  if (future.ones < 0 || future.zeros < 0)
    throw ModelError("counts must be nonnegative");
  switch (h.kind) {
    case ExactHypothesis::Kind::point:
      return detail::rational_pow(h.theta, future.ones) *
             detail::rational_pow(Rational(1) - h.theta, future.zeros);
    case ExactHypothesis::Kind::mixture: {
      Rational total(0);
      for (std::size_t i = 0; i < h.points.size(); ++i)
        total += h.weights[i] *
                 detail::rational_pow(h.points[i], future.ones) *
                 detail::rational_pow(Rational(1) - h.points[i], future.zeros);
      return total;
    }
    case ExactHypothesis::Kind::intervals: {
      if (!prior.integer_shapes())
        throw ModelError("exact interval hypotheses need integer prior shapes");
      const std::int64_t a = std::int64_t(prior.a.num());
      const std::int64_t b = std::int64_t(prior.b.num());
      Rational num(0), den(0);
      for (const auto& seg : h.segments) {
        num += detail::exact_power_integral(seg.first, seg.second,
                                            future.ones + a - 1,
                                            future.zeros + b - 1);
        den += detail::exact_power_integral(seg.first, seg.second, a - 1, b - 1);
      }
      if (!(den > Rational(0))) throw ModelError("hypothesis has zero prior mass");
      return num / den;
    }
  }
  throw ModelError("unreachable hypothesis kind");
}

// sum over all length-m futures of d(p(x|Theta), p(x|D)), for the absolute
// and squared distances where the result is itself rational
inline Rational exact_hat_loss(const ExactHypothesis& h, const ExactPrior& prior,
                               const CountSummary& data, std::int64_t m,
                               const DistanceKind& kind) {
  if (kind.tag != DistanceTag::absolute && kind.tag != DistanceTag::squared)
    throw ModelError("exact losses support the abs and sq distances only");
  if (m < 0 || m > 62) throw ModelError("exact losses need 0 <= m <= 62");
  Rational total(0);
  for (std::int64_t t = 0; t <= m; ++t) {
    const CountSummary future{t, m - t};
    Rational diff = exact_composite_likelihood(h, prior, future) -
                    exact_predictive(prior, data, future);
    if (diff.sign() < 0) diff = -diff;
    if (kind.tag == DistanceTag::squared) diff *= diff;
    total += Rational(std::int64_t(binomial_exact(m, t))) * diff;
  }
  return total;
}

}  // namespace phi
