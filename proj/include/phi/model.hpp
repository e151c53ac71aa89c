#pragma once

// Bernoulli-centric model layer: observed-count summaries, priors over the
// bias, hypotheses (points, interval unions, mixtures), and the closed-form
// Bayesian quantities everything downstream consumes (evidence, predictive,
// composite likelihood, posterior densities and moments, Fisher information).
//
// Composite likelihood convention: p(x|Theta) averages the likelihood over
// the prior restricted to Theta. It never conditions on the observed data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "phi/numerics.hpp"
#include "phi/textio.hpp"

namespace phi {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// c * log(v) with the convention 0 * log(0) = 0.
inline double xlogy(double c, double v) {
  if (c == 0.0) return 0.0;
  return c * std::log(v);
}

inline double parse_full_double(const std::string& s, const char* what) {
  if (s.empty()) throw ParseError(std::string(what) + ": empty number");
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size() || !std::isfinite(v))
    throw ParseError(std::string(what) + ": bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// observed data

struct CountSummary {
  std::int64_t ones = 0;
  std::int64_t zeros = 0;

  std::int64_t total() const { return ones + zeros; }
  CountSummary mirrored() const { return {zeros, ones}; }

  CountSummary operator+(const CountSummary& o) const {
    return {ones + o.ones, zeros + o.zeros};
  }
  bool operator==(const CountSummary& o) const {
    return ones == o.ones && zeros == o.zeros;
  }

  // Accepts a binary string ("", "0101") or explicit counts ("n1=2,n0=2").
  static CountSummary parse(const std::string& s) {
    CountSummary d;
    if (s.rfind("n1=", 0) == 0) {
      auto parts = detail::split(s, ',');
      if (parts.size() != 2 || parts[1].rfind("n0=", 0) != 0)
        throw ParseError("bad data spec: '" + s + "' (want n1=<k>,n0=<k>)");
      for (int i = 0; i < 2; ++i) {
        const std::string num = parts[i].substr(3);
        if (num.empty() ||
            num.find_first_not_of("0123456789") != std::string::npos)
          throw ParseError("bad data spec: '" + s + "' (counts must be nonnegative integers)");
        (i == 0 ? d.ones : d.zeros) = std::strtoll(num.c_str(), nullptr, 10);
      }
      return d;
    }
    for (char c : s) {
      if (c == '1') ++d.ones;
      else if (c == '0') ++d.zeros;
      else throw ParseError("bad data spec: '" + s + "' (binary string may contain only 0 and 1)");
    }
    return d;
  }

  std::string to_string() const {
    return "n1=" + std::to_string(ones) + ",n0=" + std::to_string(zeros);
  }
};

// ---------------------------------------------------------------------------
// priors over the Bernoulli bias

// Probability that theta lies in [lo,hi] under Beta(a,b). Queries centered in
// the upper half of [0,1] are evaluated through their mirror image so that
// 0<->1 relabeling with exactly representable endpoints is bit-stable.
inline double beta_interval_mass(double lo, double hi, double a, double b) {
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
    throw ModelError("interval mass needs 0 <= lo <= hi <= 1");
  const double mid = 0.5 * (lo + hi);
  if (mid < 0.5 || (mid == 0.5 && a >= b))
    return regularized_incomplete_beta(hi, a, b) -
           regularized_incomplete_beta(lo, a, b);
  return regularized_incomplete_beta(1.0 - lo, b, a) -
         regularized_incomplete_beta(1.0 - hi, b, a);
}

class Prior {
 public:
  enum class Kind { uniform, beta, jeffreys, table };

  static Prior uniform() { return Prior(Kind::uniform, 1.0, 1.0); }

  static Prior beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw ModelError("beta prior needs finite shape parameters > 0");
    return Prior(Kind::beta, a, b);
  }

  static Prior jeffreys() { return Prior(Kind::jeffreys, 0.5, 0.5); }

  // Piecewise-linear density on [0,1] given as ascending (theta, density)
  // knots covering the full interval; must integrate to 1 within 1e-8.
  static Prior table(std::vector<std::pair<double, double>> pts) {
    if (pts.size() < 2) throw ModelError("table prior needs at least two knots");
    if (pts.front().first != 0.0 || pts.back().first != 1.0)
      throw ModelError("table prior must cover [0,1]");
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (!(pts[i].first < pts[i + 1].first))
        throw ModelError("table prior knots must be strictly ascending");
      if (pts[i].second < 0.0 || pts[i + 1].second < 0.0)
        throw ModelError("table prior density must be nonnegative");
      integral += 0.5 * (pts[i].second + pts[i + 1].second) *
                  (pts[i + 1].first - pts[i].first);
    }
    if (std::fabs(integral - 1.0) > 1e-8)
      throw ModelError("table prior must integrate to 1 within 1e-8, got " +
                       format_g12(integral));
    Prior p(Kind::table, 0.0, 0.0);
    p.table_ = std::move(pts);
    return p;
  }

  static Prior parse(const std::string& s) {
    if (s == "uniform") return uniform();
    if (s == "jeffreys") return jeffreys();
    if (s.rfind("beta:", 0) == 0) {
      auto parts = detail::split(s.substr(5), ',');
      if (parts.size() != 2)
        throw ParseError("bad prior spec: '" + s + "' (want beta:a,b)");
      double a = detail::parse_full_double(parts[0], "prior");
      double b = detail::parse_full_double(parts[1], "prior");
      if (!(a > 0.0) || !(b > 0.0))
        throw ParseError("bad prior spec: '" + s + "' (shapes must be > 0)");
      return beta(a, b);
    }
    throw ParseError("unknown prior: '" + s + "'");
  }

  Kind kind() const { return kind_; }
  bool conjugate() const { return kind_ != Kind::table; }
  double shape_a() const { return a_; }
  double shape_b() const { return b_; }

  std::string name() const {
    switch (kind_) {
      case Kind::uniform: return "uniform";
      case Kind::jeffreys: return "jeffreys";
      case Kind::beta: return "beta:" + format_g12(a_) + "," + format_g12(b_);
      case Kind::table: return "table:" + std::to_string(table_.size()) + "knots";
    }
    return "?";
  }

  // Density at theta; omtheta = 1-theta is passed separately so conjugate
  // evaluations stay bit-symmetric under 0<->1 relabeling.
  double log_density(double theta, double omtheta) const {
    if (kind_ == Kind::table) {
      double d = table_density(theta);
      return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
    }
    double t = 0.0;
    if (a_ != 1.0) t += (a_ - 1.0) * std::log(theta);
    if (b_ != 1.0) t += (b_ - 1.0) * std::log(omtheta);
    return t - log_beta(a_, b_);
  }

  double density(double theta, double omtheta) const {
    return std::exp(log_density(theta, omtheta));
  }

  // P[lo <= theta <= hi]; exact piecewise-quadratic integral for tables.
  double interval_mass(double lo, double hi) const {
    if (conjugate()) return beta_interval_mass(lo, hi, a_, b_);
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
      throw ModelError("interval mass needs 0 <= lo <= hi <= 1");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < table_.size(); ++i) {
      double x0 = std::max(table_[i].first, lo);
      double x1 = std::min(table_[i + 1].first, hi);
      if (x0 >= x1) continue;
      total += 0.5 * (table_density(x0) + table_density(x1)) * (x1 - x0);
    }
    return total;
  }

  double table_density(double theta) const {
    if (kind_ != Kind::table)
      throw ModelError("table_density needs a table prior");
    if (theta <= 0.0) return table_.front().second;
    if (theta >= 1.0) return table_.back().second;
    auto it = std::upper_bound(
        table_.begin(), table_.end(), theta,
        [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    double t = (theta - lo.first) / (hi.first - lo.first);
    return lo.second + t * (hi.second - lo.second);
  }

  Prior mirrored() const {
    if (conjugate()) {
      Prior p(kind_, b_, a_);
      return p;
    }
    std::vector<std::pair<double, double>> pts(table_.rbegin(), table_.rend());
    for (auto& pt : pts) pt.first = 1.0 - pt.first;
    return table(std::move(pts));
  }

 private:
  Prior(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
  std::vector<std::pair<double, double>> table_;
};

// ---------------------------------------------------------------------------
// hypotheses

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct Simple {
  double theta = 0.5;
};

struct IntervalUnion {
  std::vector<Interval> segments;  // ascending, pairwise disjoint
};

struct Mixture {
  std::vector<double> points;
  std::vector<double> weights;  // normalized to sum 1
};

class Hypothesis {
 public:
  using Value = std::variant<Simple, IntervalUnion, Mixture>;

  explicit Hypothesis(Simple s) : v_(s) { validate(); }
  explicit Hypothesis(IntervalUnion u) : v_(std::move(u)) { validate(); }
  explicit Hypothesis(Mixture m) : v_(std::move(m)) { validate(); }

  static Hypothesis point(double theta) { return Hypothesis(Simple{theta}); }
  static Hypothesis interval(double lo, double hi) {
    return Hypothesis(IntervalUnion{{Interval{lo, hi}}});
  }

  // "point:0.5" | "interval:0.2,0.6" | "interval:0.1,0.2;0.5,0.7"
  // | "mixture:0.3@0.5,0.7@0.5" (weight@point, weights renormalized)
  static Hypothesis parse(const std::string& s) {
    std::size_t pos = s.find(':');
    if (pos == std::string::npos)
      throw ParseError("unknown hypothesis: '" + s + "'");
    const std::string head = s.substr(0, pos);
    const std::string rest = s.substr(pos + 1);
    if (head == "point")
      return point(detail::parse_full_double(rest, "hypothesis"));
    if (head == "interval") {
      IntervalUnion u;
      for (const auto& seg : detail::split(rest, ';')) {
        auto ends = detail::split(seg, ',');
        if (ends.size() != 2)
          throw ParseError("bad hypothesis literal: '" + s + "' (want interval:lo,hi)");
        u.segments.push_back({detail::parse_full_double(ends[0], "hypothesis"),
                              detail::parse_full_double(ends[1], "hypothesis")});
      }
      return Hypothesis(std::move(u));
    }
    if (head == "mixture") {
      Mixture m;
      for (const auto& comp : detail::split(rest, ',')) {
        auto parts = detail::split(comp, '@');
        if (parts.size() != 2)
          throw ParseError("bad hypothesis literal: '" + s + "' (want mixture:w@p,...)");
        m.weights.push_back(detail::parse_full_double(parts[0], "hypothesis"));
        m.points.push_back(detail::parse_full_double(parts[1], "hypothesis"));
      }
      return Hypothesis(std::move(m));
    }
    throw ParseError("unknown hypothesis: '" + s + "'");
  }

  const Value& value() const { return v_; }
  bool is_simple() const { return std::holds_alternative<Simple>(v_); }
  bool is_interval_union() const { return std::holds_alternative<IntervalUnion>(v_); }
  bool is_mixture() const { return std::holds_alternative<Mixture>(v_); }

  std::string describe() const {
    if (auto* s = std::get_if<Simple>(&v_))
      return "point:" + format_g12(s->theta);
    if (auto* u = std::get_if<IntervalUnion>(&v_)) {
      std::string out = "interval:";
      for (std::size_t i = 0; i < u->segments.size(); ++i) {
        if (i) out += ';';
        out += format_g12(u->segments[i].lo) + "," + format_g12(u->segments[i].hi);
      }
      return out;
    }
    const auto& m = std::get<Mixture>(v_);
    std::string out = "mixture:";
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      if (i) out += ',';
      out += format_g12(m.weights[i]) + "@" + format_g12(m.points[i]);
    }
    return out;
  }

  // 0<->1 relabeling; exact when the parameters are exactly representable
  // mirror pairs (e.g. dyadics).
  Hypothesis mirrored() const {
    if (auto* s = std::get_if<Simple>(&v_))
      return point(1.0 - s->theta);
    if (auto* u = std::get_if<IntervalUnion>(&v_)) {
      IntervalUnion out;
      for (auto it = u->segments.rbegin(); it != u->segments.rend(); ++it)
        out.segments.push_back({1.0 - it->hi, 1.0 - it->lo});
      return Hypothesis(std::move(out));
    }
    const auto& m = std::get<Mixture>(v_);
    Mixture out = m;
    for (auto& p : out.points) p = 1.0 - p;
    return Hypothesis(std::move(out));
  }

 private:
  void validate() {
    if (auto* s = std::get_if<Simple>(&v_)) {
      if (!(s->theta >= 0.0 && s->theta <= 1.0))
        throw ModelError("point hypothesis needs theta in [0,1]");
      return;
    }
    if (auto* u = std::get_if<IntervalUnion>(&v_)) {
      if (u->segments.empty())
        throw ModelError("interval hypothesis needs at least one segment");
      for (const auto& seg : u->segments)
        if (!(0.0 <= seg.lo && seg.lo < seg.hi && seg.hi <= 1.0))
          throw ModelError("interval hypothesis needs 0 <= lo < hi <= 1");
      for (std::size_t i = 0; i + 1 < u->segments.size(); ++i)
        if (!(u->segments[i].hi <= u->segments[i + 1].lo))
          throw ModelError("interval hypothesis segments must be disjoint and ascending");
      return;
    }
    auto& m = std::get<Mixture>(v_);
    if (m.points.empty() || m.points.size() != m.weights.size())
      throw ModelError("mixture hypothesis needs matching nonempty points and weights");
    double sum = 0.0;
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      if (!(m.points[i] >= 0.0 && m.points[i] <= 1.0))
        throw ModelError("mixture hypothesis needs points in [0,1]");
      if (!(m.weights[i] >= 0.0))
        throw ModelError("mixture hypothesis needs nonnegative weights");
      sum += m.weights[i];
    }
    if (!(sum > 0.0))
      throw ModelError("mixture hypothesis needs positive total weight");
    for (auto& w : m.weights) w /= sum;
  }

  Value v_;
};

// ---------------------------------------------------------------------------
// evidence and predictive

namespace detail {

// log of sum_i exp(lw_i) over grid terms, max-shifted.
class LogAccumulator {
 public:
  void add(double lw) {
    if (lw == -std::numeric_limits<double>::infinity()) return;
    terms_.push_back(lw);
    if (lw > max_) max_ = lw;
  }
  double value() const {
    if (terms_.empty()) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double lw : terms_) s += std::exp(lw - max_);
    return max_ + std::log(s);
  }

 private:
  std::vector<double> terms_;
  double max_ = -std::numeric_limits<double>::infinity();
};

// log integral of prior(theta) * theta^n1 * (1-theta)^n0 for table priors,
// refined until two successive grid levels agree.
inline double table_log_evidence(const Prior& prior, const CountSummary& d) {
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int level = 3; level <= 12; ++level) {
    const ThetaGrid& g = theta_grid(level);
    LogAccumulator acc;
    for (const auto& node : g.nodes) {
      double lw = std::log(node.weight) + prior.log_density(node.theta, node.omtheta) +
                  xlogy(double(d.ones), node.theta) +
                  xlogy(double(d.zeros), node.omtheta);
      acc.add(lw);
    }
    double cur = acc.value();
    if (std::isfinite(prev) && std::fabs(cur - prev) <= 1e-12 * (1.0 + std::fabs(cur)))
      return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace detail

// log p(D) under the prior.
inline double log_evidence(const Prior& prior, const CountSummary& d) {
  if (d.ones < 0 || d.zeros < 0) throw ModelError("counts must be nonnegative");
  if (prior.conjugate())
    return log_beta(prior.shape_a() + double(d.ones), prior.shape_b() + double(d.zeros)) -
           log_beta(prior.shape_a(), prior.shape_b());
  return detail::table_log_evidence(prior, d);
}

inline double bernoulli_evidence(const Prior& prior, const CountSummary& d) {
  return std::exp(log_evidence(prior, d));
}

// log p(x|D) for one specific future sequence with the given count summary.
inline double log_predictive(const Prior& prior, const CountSummary& data,
                             const CountSummary& future) {
  if (future.ones < 0 || future.zeros < 0)
    throw ModelError("counts must be nonnegative");
  return log_evidence(prior, data + future) - log_evidence(prior, data);
}

inline double bernoulli_predictive(const Prior& prior, const CountSummary& data,
                                   const CountSummary& future) {
  return std::exp(log_predictive(prior, data, future));
}

// ---------------------------------------------------------------------------
// composite likelihood p(x|Theta), prior-restricted

namespace detail {

inline double union_prior_mass(const Prior& prior, const IntervalUnion& u) {
  const std::size_t n = u.segments.size();
  return symmetric_pair_sum(n, [&](std::size_t i) {
    return prior.interval_mass(u.segments[i].lo, u.segments[i].hi);
  });
}

// log of sum_seg integral over seg of theta^(m1+a-1), (1-theta)^(m0+b-1)
// relative to B(a,b): used with the future counts folded into the shapes.
inline double log_union_beta_mass(const IntervalUnion& u, double a, double b) {
  const std::size_t n = u.segments.size();
  double s = symmetric_pair_sum(n, [&](std::size_t i) {
    return beta_interval_mass(u.segments[i].lo, u.segments[i].hi, a, b);
  });
  return s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
}

inline double table_segment_integral(const Prior& prior, const Interval& seg,
                                     const CountSummary& future) {
  auto f = [&](double t) {
    return prior.table_density(t) * std::exp(xlogy(double(future.ones), t) +
                                             xlogy(double(future.zeros), 1.0 - t));
  };
  QuadratureSettings cfg;
  cfg.rel_tol = 1e-12;
  return integrate(f, seg.lo, seg.hi, cfg);
}

}  // namespace detail

// P[Theta] of an interval-union hypothesis under the prior.
inline double hypothesis_prior_mass(const Prior& prior, const Hypothesis& h) {
  if (auto* u = std::get_if<IntervalUnion>(&h.value()))
    return detail::union_prior_mass(prior, *u);
  return 0.0;  // points and mixtures carry no mass under a continuous prior
}

// log p(x|Theta) for one future sequence with the given counts.
inline double log_composite_likelihood(const Hypothesis& h, const Prior& prior,
                                       const CountSummary& future) {
  if (future.ones < 0 || future.zeros < 0)
    throw ModelError("counts must be nonnegative");
  const double m1 = double(future.ones);
  const double m0 = double(future.zeros);

  if (auto* s = std::get_if<Simple>(&h.value()))
    return detail::xlogy(m1, s->theta) + detail::xlogy(m0, 1.0 - s->theta);

  if (auto* mix = std::get_if<Mixture>(&h.value())) {
    detail::LogAccumulator acc;
    for (std::size_t i = 0; i < mix->points.size(); ++i) {
      if (mix->weights[i] == 0.0) continue;
      acc.add(std::log(mix->weights[i]) + detail::xlogy(m1, mix->points[i]) +
              detail::xlogy(m0, 1.0 - mix->points[i]));
    }
    return acc.value();
  }

  const auto& u = std::get<IntervalUnion>(h.value());
  if (prior.conjugate()) {
    const double a = prior.shape_a();
    const double b = prior.shape_b();
    double log_prior_mass = detail::log_union_beta_mass(u, a, b);
    if (log_prior_mass == -std::numeric_limits<double>::infinity())
      throw ModelError("hypothesis has zero prior mass");
    double log_post_mass = detail::log_union_beta_mass(u, a + m1, b + m0);
    return log_beta(a + m1, b + m0) - log_beta(a, b) + log_post_mass -
           log_prior_mass;
  }

  double mass = detail::union_prior_mass(prior, u);
  if (!(mass > 0.0)) throw ModelError("hypothesis has zero prior mass");
  double num = 0.0;
  for (const auto& seg : u.segments)
    num += detail::table_segment_integral(prior, seg, future);
  return num > 0.0 ? std::log(num) - std::log(mass)
                   : -std::numeric_limits<double>::infinity();
}

inline double composite_likelihood(const Hypothesis& h, const Prior& prior,
                                   const CountSummary& future) {
  return std::exp(log_composite_likelihood(h, prior, future));
}

// ---------------------------------------------------------------------------
// posterior

struct Posterior {
  Prior prior = Prior::uniform();
  CountSummary data;
  bool conjugate = true;
  double a = 1.0;  // Beta(n1+a0, n0+b0) when conjugate
  double b = 1.0;
  double log_norm = 0.0;  // table path: log evidence

  double log_density(double theta, double omtheta) const {
    if (conjugate) {
      double t = 0.0;
      if (a != 1.0) t += (a - 1.0) * std::log(theta);
      if (b != 1.0) t += (b - 1.0) * std::log(omtheta);
      return t - log_beta(a, b);
    }
    return prior.log_density(theta, omtheta) +
           detail::xlogy(double(data.ones), theta) +
           detail::xlogy(double(data.zeros), omtheta) - log_norm;
  }

  double density(double theta, double omtheta) const {
    return std::exp(log_density(theta, omtheta));
  }

  // P[lo <= theta <= hi | D]
  double interval_mass(double lo, double hi) const {
    if (conjugate) return beta_interval_mass(lo, hi, a, b);
    auto f = [&](double t) { return density(t, 1.0 - t); };
    QuadratureSettings cfg;
    cfg.rel_tol = 1e-12;
    return integrate(f, lo, hi, cfg);
  }
};

inline Posterior make_posterior(const Prior& prior, const CountSummary& d) {
  if (d.ones < 0 || d.zeros < 0) throw ModelError("counts must be nonnegative");
  Posterior p;
  p.prior = prior;
  p.data = d;
  if (prior.conjugate()) {
    p.conjugate = true;
    p.a = prior.shape_a() + double(d.ones);
    p.b = prior.shape_b() + double(d.zeros);
  } else {
    p.conjugate = false;
    p.log_norm = detail::table_log_evidence(prior, d);
  }
  return p;
}

// P[Theta | D] of an interval-union hypothesis.
inline double hypothesis_posterior_mass(const Posterior& post, const Hypothesis& h) {
  if (auto* u = std::get_if<IntervalUnion>(&h.value())) {
    const std::size_t n = u->segments.size();
    return symmetric_pair_sum(n, [&](std::size_t i) {
      return post.interval_mass(u->segments[i].lo, u->segments[i].hi);
    });
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// moments

struct Moments {
  double mean = 0.0;
  std::vector<double> central;  // central[k] for k = 0..kmax; [0]=1, [1]=0
};

namespace detail {

constexpr int kMaxMomentOrder = 30;

// central moments from raw moments via binomial expansion around the mean;
// long double accumulation tames cancellation, exact zeros are forced for
// odd orders of symmetric distributions.
inline Moments central_from_raw(const std::vector<double>& raw, int kmax,
                                bool symmetric) {
  Moments m;
  m.mean = kmax >= 1 ? raw[1] : 0.0;
  m.central.assign(std::size_t(kmax) + 1, 0.0);
  m.central[0] = 1.0;
  const long double mu = m.mean;
  for (int k = 2; k <= kmax; ++k) {
    if (symmetric && (k % 2) == 1) continue;
    long double sum = 0.0L;
    long double mu_pow = 1.0L;
    for (int j = k; j >= 0; --j) {
      // term j contributes C(k,j) raw[j] (-mu)^(k-j); iterate j descending
      // so mu_pow tracks (-mu)^(k-j) starting from 1.
      sum += (long double)(binomial_exact(k, j)) * (long double)raw[std::size_t(j)] *
             mu_pow;
      mu_pow *= -mu;
    }
    m.central[std::size_t(k)] = double(sum);
  }
  return m;
}

// exact mirror symmetry of a segment union about 1/2
inline bool symmetric_union(const IntervalUnion& u) {
  const std::size_t n = u.segments.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Interval& a = u.segments[i];
    const Interval& b = u.segments[n - 1 - i];
    if (a.lo != 1.0 - b.hi || a.hi != 1.0 - b.lo) return false;
  }
  return true;
}

inline void check_moment_order(int kmax) {
  if (kmax < 0 || kmax > kMaxMomentOrder)
    throw ModelError("moment order must be between 0 and 30");
}

inline std::vector<double> grid_raw_moments(
    const std::function<double(double, double)>& density, int kmax, int level) {
  const ThetaGrid& g = theta_grid(level);
  std::vector<double> raw(std::size_t(kmax) + 1, 0.0);
  for (const auto& node : g.nodes) {
    double w = node.weight * density(node.theta, node.omtheta);
    double p = 1.0;
    for (int k = 0; k <= kmax; ++k) {
      raw[std::size_t(k)] += w * p;
      p *= node.theta;
    }
  }
  double z = raw[0];
  for (auto& r : raw) r /= z;
  return raw;
}

}  // namespace detail

// Central moments of the posterior over theta.
inline Moments posterior_moments(const Prior& prior, const CountSummary& d,
                                 int kmax) {
  detail::check_moment_order(kmax);
  if (prior.conjugate()) {
    const double a = prior.shape_a() + double(d.ones);
    const double b = prior.shape_b() + double(d.zeros);
    std::vector<double> raw(std::size_t(kmax) + 1, 1.0);
    for (int j = 1; j <= kmax; ++j)
      raw[std::size_t(j)] =
          raw[std::size_t(j - 1)] * (a + double(j - 1)) / (a + b + double(j - 1));
    return detail::central_from_raw(raw, kmax, a == b);
  }
  Posterior post = make_posterior(prior, d);
  auto density = [&](double t, double om) { return post.density(t, om); };
  return detail::central_from_raw(detail::grid_raw_moments(density, kmax, 8),
                                  kmax, false);
}

// Central moments of theta under the prior restricted to the hypothesis.
inline Moments hypothesis_moments(const Hypothesis& h, const Prior& prior,
                                  int kmax) {
  detail::check_moment_order(kmax);

  if (auto* s = std::get_if<Simple>(&h.value())) {
    Moments m;
    m.mean = s->theta;
    m.central.assign(std::size_t(kmax) + 1, 0.0);
    m.central[0] = 1.0;
    return m;
  }

  if (auto* mix = std::get_if<Mixture>(&h.value())) {
    std::vector<double> raw(std::size_t(kmax) + 1, 0.0);
    raw[0] = 1.0;
    for (int j = 1; j <= kmax; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < mix->points.size(); ++i)
        s += mix->weights[i] * std::pow(mix->points[i], double(j));
      raw[std::size_t(j)] = s;
    }
    return detail::central_from_raw(raw, kmax, false);
  }

  const auto& u = std::get<IntervalUnion>(h.value());

  if (prior.kind() == Prior::Kind::uniform) {
    // restricted-uniform raw moments are exact polynomial integrals
    std::vector<double> raw(std::size_t(kmax) + 1, 0.0);
    double len = 0.0;
    for (const auto& seg : u.segments) len += seg.hi - seg.lo;
    raw[0] = 1.0;
    for (int j = 1; j <= kmax; ++j) {
      double s = 0.0;
      for (const auto& seg : u.segments)
        s += (std::pow(seg.hi, double(j + 1)) - std::pow(seg.lo, double(j + 1))) /
             double(j + 1);
      raw[std::size_t(j)] = s / len;
    }
    return detail::central_from_raw(raw, kmax, detail::symmetric_union(u));
  }

  if (prior.conjugate()) {
    const double a = prior.shape_a();
    const double b = prior.shape_b();
    std::vector<double> num(std::size_t(kmax) + 1, 0.0);
    for (int j = 0; j <= kmax; ++j) {
      double scale = std::exp(log_beta(a + double(j), b) - log_beta(a, b));
      double mass = 0.0;
      for (const auto& seg : u.segments)
        mass += beta_interval_mass(seg.lo, seg.hi, a + double(j), b);
      num[std::size_t(j)] = scale * mass;
    }
    if (!(num[0] > 0.0)) throw ModelError("hypothesis has zero prior mass");
    std::vector<double> raw(std::size_t(kmax) + 1);
    for (int j = 0; j <= kmax; ++j) raw[std::size_t(j)] = num[std::size_t(j)] / num[0];
    return detail::central_from_raw(raw, kmax,
                                    a == b && detail::symmetric_union(u));
  }

  double mass = detail::union_prior_mass(prior, u);
  if (!(mass > 0.0)) throw ModelError("hypothesis has zero prior mass");
  std::vector<double> raw(std::size_t(kmax) + 1, 0.0);
  QuadratureSettings cfg;
  cfg.rel_tol = 1e-12;
  for (int j = 0; j <= kmax; ++j) {
    double s = 0.0;
    for (const auto& seg : u.segments)
      s += integrate([&](double t) { return prior.table_density(t) *
                                            std::pow(t, double(j)); },
                     seg.lo, seg.hi, cfg);
    raw[std::size_t(j)] = s / mass;
  }
  return detail::central_from_raw(raw, kmax, false);
}

// ---------------------------------------------------------------------------
// parametric models and Fisher information

struct ParametricModel {
  std::string name;
  double omega_lo = 0.0;
  double omega_hi = 1.0;
  int alphabet = 2;  // >= 2 finite symbols; 0 marks a continuous alphabet

  // log p(x|theta); omtheta = 1-theta is passed alongside so binary models
  // can stay bit-symmetric under relabeling. Other models may ignore it.
  std::function<double(int, double, double)> log_lik;

  std::function<double(double)> fisher;  // analytic I1(theta), optional

  // sufficient-statistic kernel for horizon m: statistic values t in
  // [0, t_count(m)), per-sequence log g(t|theta), and log multiplicity
  // weight h_beta(t).
  struct Kernel {
    std::function<std::int64_t(std::int64_t)> t_count;
    std::function<double(std::int64_t, std::int64_t, double, double)> log_g;
    std::function<double(std::int64_t, std::int64_t, double)> log_h;
    bool unit_h = true;
  };
  std::optional<Kernel> kernel;
};

namespace detail {

inline void check_interior(const ParametricModel& model, double theta, double h) {
  if (!(theta > model.omega_lo && theta < model.omega_hi))
    throw ModelError("Fisher information needs theta in the interior of the parameter space");
  if (theta - h <= model.omega_lo || theta + h >= model.omega_hi)
    throw ModelError("Fisher information: theta too close to the boundary for finite differences");
}

}  // namespace detail

// Score form E[(d/dtheta log p)^2] by central differences, h = 1e-5 (1+|theta|).
inline double fisher_information_fd(const ParametricModel& model, double theta) {
  if (model.alphabet < 2)
    throw ModelError("finite-difference Fisher information needs a finite alphabet");
  const double h = 1e-5 * (1.0 + std::fabs(theta));
  detail::check_interior(model, theta, h);
  double total = 0.0;
  for (int x = 0; x < model.alphabet; ++x) {
    double lp = model.log_lik(x, theta, 1.0 - theta);
    double score = (model.log_lik(x, theta + h, 1.0 - (theta + h)) -
                    model.log_lik(x, theta - h, 1.0 - (theta - h))) /
                   (2.0 * h);
    total += std::exp(lp) * score * score;
  }
  return total;
}

// Curvature form -E[d^2/dtheta^2 log p] by central differences.
inline double fisher_information_curvature(const ParametricModel& model,
                                           double theta) {
  if (model.alphabet < 2)
    throw ModelError("finite-difference Fisher information needs a finite alphabet");
  const double h = 1e-4 * (1.0 + std::fabs(theta));
  detail::check_interior(model, theta, h);
  double total = 0.0;
  for (int x = 0; x < model.alphabet; ++x) {
    double lp = model.log_lik(x, theta, 1.0 - theta);
    double second = (model.log_lik(x, theta + h, 1.0 - (theta + h)) - 2.0 * lp +
                     model.log_lik(x, theta - h, 1.0 - (theta - h))) /
                    (h * h);
    total -= std::exp(lp) * second;
  }
  return total;
}

inline double fisher_information(const ParametricModel& model, double theta) {
  if (model.fisher) {
    if (!(theta > model.omega_lo && theta < model.omega_hi))
      throw ModelError("Fisher information needs theta in the interior of the parameter space");
    return model.fisher(theta);
  }
  return fisher_information_fd(model, theta);
}

// Integral of sqrt(I1) over the parameter space (pi for a Bernoulli bias).
inline double jeffreys_normalizer(const ParametricModel& model) {
  // boundary evaluations report +inf so the quadrature falls back to its
  // endpoint-singularity substitution instead of aborting
  auto f = [&](double t) {
    if (!(t > model.omega_lo && t < model.omega_hi))
      return std::numeric_limits<double>::infinity();
    return std::sqrt(fisher_information(model, t));
  };
  return integrate(f, model.omega_lo, model.omega_hi);
}

inline ParametricModel bernoulli_model() {
  ParametricModel m;
  m.name = "bernoulli";
  m.alphabet = 2;
  m.log_lik = [](int x, double theta, double omtheta) {
    return x == 1 ? std::log(theta) : std::log(omtheta);
  };
  m.fisher = [](double theta) { return 1.0 / (theta * (1.0 - theta)); };
  ParametricModel::Kernel k;
  k.t_count = [](std::int64_t horizon) { return horizon + 1; };
  k.log_g = [](std::int64_t t, std::int64_t horizon, double theta, double omtheta) {
    return detail::xlogy(double(t), theta) +
           detail::xlogy(double(horizon - t), omtheta);
  };
  k.log_h = [](std::int64_t t, std::int64_t horizon, double) {
    return log_binomial(horizon, t);
  };
  k.unit_h = true;
  m.kernel = k;
  return m;
}

}  // namespace phi
