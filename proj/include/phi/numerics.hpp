#pragma once

// Deterministic scalar numerics: adaptive Gauss-Kronrod quadrature, bracketed
// 1-d maximization, and the special functions the rest of the library needs.
// Everything here is pure; identical inputs give bit-identical results.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace phi {

inline constexpr double kPi = 3.14159265358979323846;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when adaptive subdivision exhausts its depth budget before meeting
// the requested tolerance; carries the best estimate and its error bound.
class QuadratureError : public NumericError {
 public:
  QuadratureError(const std::string& what, double estimate, double error_bound)
      : NumericError(what), estimate_(estimate), error_bound_(error_bound) {}
  double estimate() const { return estimate_; }
  double error_bound() const { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

struct QuadratureSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_depth = 60;
};

struct IntegralEstimate {
  double value = 0.0;
  double error_bound = 0.0;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes on [-1,1], positive half, descending.  Odd indices
// (plus the center) form the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodX = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr std::array<double, 8> kKronrodW = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGaussW = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct GkPanel {
  double integral;
  double error;
};

template <class F>
GkPanel gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  if (!std::isfinite(fc))
    throw NumericError("non-finite integrand at x=" + std::to_string(c));
  double resk = kKronrodW[7] * fc;
  double resg = kGaussW[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kKronrodX[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    if (!std::isfinite(f1) || !std::isfinite(f2))
      throw NumericError("non-finite integrand at x=" +
                         std::to_string(std::isfinite(f1) ? c + dx : c - dx));
    const double fs = f1 + f2;
    resk += kKronrodW[j] * fs;
    if (j % 2 == 1) resg += kGaussW[j / 2] * fs;
  }
  return {resk * h, std::abs(resk - resg) * h};
}

// Global adaptive refinement: always split the segment with the largest
// error estimate until the summed error meets max(abs_tol, rel_tol*|I|).
// Worst-first refinement keeps interior singularities from cascading
// subdivision into their smooth neighbors.
template <class F>
IntegralEstimate integrate_plain(F&& f, double a, double b,
                                 const QuadratureSettings& cfg) {
  struct Seg {
    double a, b, value, error;
    int depth;
    bool capped;
  };
  // total order on (error, position) keeps the refinement deterministic
  auto worse = [](const Seg& x, const Seg& y) {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;
  };
  std::vector<Seg> segs;
  {
    const GkPanel p = gk15(f, a, b);
    segs.push_back({a, b, p.integral, p.error, 0, false});
  }
  bool hit_cap = false;
  constexpr std::size_t kMaxSegments = std::size_t(1) << 18;
  while (true) {
    // totals are recomputed every pass: transient huge panel values (from a
    // node grazing a spike) would otherwise wreck incremental sums
    double total_value = 0.0, total_error = 0.0, capped_error = 0.0;
    std::size_t worst = segs.size();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total_value += segs[i].value;
      total_error += segs[i].error;
      if (segs[i].capped) {
        capped_error += segs[i].error;
        continue;
      }
      if (worst == segs.size() || worse(segs[worst], segs[i])) worst = i;
    }
    const double target =
        std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total_value));
    if (total_error <= target) break;
    if (capped_error > target) break;  // unreachable tolerance; report below
    if (worst == segs.size()) break;   // every remaining segment is capped
    Seg& s = segs[worst];
    if (s.depth >= cfg.max_depth || segs.size() >= kMaxSegments) {
      s.capped = true;
      hit_cap = true;
      continue;
    }
    const double mid = 0.5 * (s.a + s.b);
    const GkPanel pl = gk15(f, s.a, mid);
    const GkPanel pr = gk15(f, mid, s.b);
    const Seg right{mid, s.b, pr.integral, pr.error, s.depth + 1, false};
    s = Seg{s.a, mid, pl.integral, pl.error, s.depth + 1, false};
    segs.push_back(right);
  }
  // re-sum in ascending position for a reproducible, cancellation-stable total
  std::sort(segs.begin(), segs.end(),
            [](const Seg& x, const Seg& y) { return x.a < y.a; });
  double value = 0.0, error = 0.0;
  for (const Seg& s : segs) {
    value += s.value;
    error += s.error;
  }
  if (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value)) && hit_cap)
    throw QuadratureError("quadrature depth exhausted before tolerance", value,
                          error);
  return {value, error};
}

}  // namespace detail

// Integrates f over [a,b].  Endpoint values are probed first: an infinite or
// NaN endpoint switches to the substitution x = a + (b-a) sin^2 u, which
// removes x^{-1/2}-type endpoint singularities.  Non-finite values in the
// interior are an error.
template <class F>
IntegralEstimate integrate_detail(F&& f, double a, double b,
                                  const QuadratureSettings& cfg = {}) {
  if (!(cfg.rel_tol > 0) || !(cfg.abs_tol > 0) || cfg.max_depth < 1)
    throw NumericError("integrate: tolerances must be positive, depth >= 1");
  if (!std::isfinite(a) || !std::isfinite(b))
    throw NumericError("integrate: bounds must be finite");
  if (a > b) throw NumericError("integrate: need a <= b");
  if (a == b) return {0.0, 0.0};
  const double fa = f(a);
  const double fb = f(b);
  if (std::isfinite(fa) && std::isfinite(fb))
    return detail::integrate_plain(f, a, b, cfg);
  const double w = b - a;
  auto g = [&](double u) {
    const double s = std::sin(u);
    const double c = std::cos(u);
    return f(a + w * (s * s)) * (w * 2.0 * s * c);
  };
  return detail::integrate_plain(g, 0.0, kPi / 2.0, cfg);
}

template <class F>
double integrate(F&& f, double a, double b, const QuadratureSettings& cfg = {}) {
  return integrate_detail(std::forward<F>(f), a, b, cfg).value;
}

struct OptimResult {
  double argument = 0.0;
  double value = 0.0;
  double bracket_width = 0.0;
  bool on_boundary = false;
};

// Maximizes f on [lo,hi]: a 64-point uniform pre-scan locates the best
// bracket, golden-section search shrinks it below tol, and a short parabolic
// polish sharpens interior maxima well past the golden-section noise floor.
template <class F>
OptimResult maximize_1d(F&& f, double lo, double hi, double tol = 1e-9) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw NumericError("maximize_1d: need finite lo < hi");
  if (!(tol > 0)) throw NumericError("maximize_1d: tolerance must be positive");
  constexpr int kScan = 64;
  std::array<double, kScan> xs{}, vs{};
  for (int i = 0; i < kScan; ++i) {
    xs[i] = lo + (hi - lo) * (double(i) / (kScan - 1));
    vs[i] = f(xs[i]);
    if (!std::isfinite(vs[i]))
      throw NumericError("maximize_1d: non-finite objective at x=" +
                         std::to_string(xs[i]));
  }
  int best = 0;
  for (int i = 1; i < kScan; ++i)
    if (vs[i] > vs[best]) best = i;

  double a = xs[std::max(0, best - 1)];
  double b = xs[std::min(kScan - 1, best + 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double invphi2 = 1.0 - invphi;
  double x1 = a + invphi2 * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = a + invphi2 * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  double x = (f1 >= f2) ? x1 : x2;
  double v = std::max(f1, f2);
  if (vs[0] > v) {
    x = lo;
    v = vs[0];
  } else if (vs[kScan - 1] > v) {
    x = hi;
    v = vs[kScan - 1];
  }

  const bool interior = (x - lo) > tol && (hi - x) > tol;
  if (interior) {
    for (int round = 0; round < 3; ++round) {
      const double h = 6e-6 * (1.0 + std::abs(x));
      if (x - h <= lo || x + h >= hi) break;
      const double fm = f(x - h);
      const double fp = f(x + h);
      const double d2 = fp - 2.0 * v + fm;
      if (!(d2 < 0)) break;
      const double step = 0.5 * h * (fm - fp) / d2;
      if (!std::isfinite(step) || std::abs(step) > (b - a) + h) break;
      const double xn = x + step;
      const double vn = f(xn);
      if (vn >= v) {
        x = xn;
        v = vn;
      }
      if (std::abs(step) < 1e-3 * h) break;
    }
  }
  OptimResult r;
  r.argument = x;
  r.value = v;
  r.bracket_width = b - a;
  r.on_boundary = (x - lo) <= tol || (hi - x) <= tol;
  return r;
}

// Error function, |error| <= 1e-14; odd symmetry is exact by construction.
inline double erf(double x) {
  if (std::isnan(x)) throw NumericError("erf: non-finite argument");
  return std::copysign(std::erf(std::abs(x)), x);
}

// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
inline double regularized_gamma_p(double a, double x) {
  if (!std::isfinite(a) || !(a > 0))
    throw NumericError("lower_incomplete_gamma: a must be > 0");
  if (!std::isfinite(x) || x < 0)
    throw NumericError("lower_incomplete_gamma: x must be >= 0");
  if (x == 0) return 0.0;
  const double lpre = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < 100000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-17)
        return sum * std::exp(lpre);
    }
    throw NumericError("lower_incomplete_gamma: series failed to converge");
  }
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) return 1.0 - std::exp(lpre) * h;
  }
  throw NumericError("lower_incomplete_gamma: continued fraction failed");
}

inline double lower_incomplete_gamma(double a, double x) {
  return regularized_gamma_p(a, x) * std::exp(std::lgamma(a));
}

// log of the lower incomplete gamma; stays finite where the regularized
// form underflows (tiny x with large a).
inline double log_lower_incomplete_gamma(double a, double x) {
  if (!std::isfinite(a) || !(a > 0))
    throw NumericError("lower_incomplete_gamma: a must be > 0");
  if (!std::isfinite(x) || x < 0)
    throw NumericError("lower_incomplete_gamma: x must be >= 0");
  if (x == 0) return -std::numeric_limits<double>::infinity();
  if (x < a + 1.0) {
    // same series as regularized_gamma_p, recombined without leaving
    // log scale: log gamma(a,x) = -x + a log x + log sum
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < 100000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-17)
        return -x + a * std::log(x) + std::log(sum);
    }
    throw NumericError("lower_incomplete_gamma: series failed to converge");
  }
  return std::log(regularized_gamma_p(a, x)) + std::lgamma(a);
}

// Exact binomial coefficient; valid for m <= 62 (fits in 64 bits with the
// stepwise-exact multiplicative scheme).
inline std::uint64_t binomial_exact(int m, int t) {
  if (m < 0 || t < 0 || t > m)
    throw NumericError("binomial_exact: need 0 <= t <= m");
  if (m > 62) throw NumericError("binomial_exact: m too large for 64 bits");
  const int k = std::min(t, m - t);
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) c = c * std::uint64_t(m - k + i) / std::uint64_t(i);
  return c;
}

// ln C(m,t).  Exact integer path for m <= 60; log-gamma beyond, grouped so
// that the value is symmetric in t <-> m-t at the bit level.
inline double log_binomial(std::int64_t m, std::int64_t t) {
  if (m < 0 || t < 0 || t > m)
    throw NumericError("log_binomial: need 0 <= t <= m");
  if (m <= 60) return std::log(double(binomial_exact(int(m), int(t))));
  return std::lgamma(double(m) + 1.0) -
         (std::lgamma(double(t) + 1.0) + std::lgamma(double(m - t) + 1.0));
}

inline double log_beta(double a, double b) {
  return (std::lgamma(a) + std::lgamma(b)) - std::lgamma(a + b);
}

namespace detail {

inline double ibeta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < 1e-300) d = 1e-300;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 20000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = 1.0 + aa / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = 1.0 + aa / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-16) return h;
  }
  throw NumericError("incomplete beta: continued fraction failed to converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a,b).
inline double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0) || !(b > 0))
    throw NumericError("incomplete beta: need a, b > 0");
  if (std::isnan(x)) throw NumericError("incomplete beta: x is NaN");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double lbt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(lbt) * detail::ibeta_cf(a, b, x) / a;
  return 1.0 - std::exp(lbt) * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

// Least-squares slope of log(y) against log(x); both inputs must be
// positive. Used to read off empirical convergence rates.
inline double loglog_slope(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw NumericError("loglog_slope: need two matching samples or more");
  const std::size_t n = xs.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw NumericError("loglog_slope: samples must be positive");
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = double(n) * sxx - sx * sx;
  if (!(std::fabs(denom) > 0.0))
    throw NumericError("loglog_slope: abscissae must not coincide");
  return (double(n) * sxy - sx * sy) / denom;
}

// Gauss-Legendre rule on [-1,1], nodes ascending, exactly symmetric.
struct GaussLegendreRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline const GaussLegendreRule& gauss_legendre(int n) {
  static std::map<int, GaussLegendreRule> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw NumericError("gauss_legendre: order must be >= 1");
  GaussLegendreRule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    if (n % 2 == 1 && i == half - 1) z = 0.0;
    const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = wi;
    r.w[n - 1 - i] = wi;
  }
  return cache.emplace(n, std::move(r)).first->second;
}

// Composite Gauss-Legendre grid on theta in [0,1] built through the
// substitution theta = sin^2 u, which absorbs Beta-type endpoint behavior.
// Node i and node N-1-i are mirror partners: the partner's (theta, omtheta)
// pair is this node's pair swapped, bit for bit, so integrands written in
// terms of both coordinates mirror exactly under 0 <-> 1 relabeling.
struct ThetaNode {
  double theta;
  double omtheta;  // the exact mirror coordinate paired with theta
  double weight;
};

struct ThetaGrid {
  int level = 0;
  int order = 0;
  std::vector<ThetaNode> nodes;
};

inline const ThetaGrid& theta_grid(int level, int order = 201) {
  static std::map<std::pair<int, int>, ThetaGrid> cache;
  const auto key = std::make_pair(level, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (level < 0 || level > 16) throw NumericError("theta_grid: bad level");
  const GaussLegendreRule& rule = gauss_legendre(order);
  const int panels = 1 << level;
  const std::size_t n = std::size_t(panels) * order;
  ThetaGrid g;
  g.level = level;
  g.order = order;
  g.nodes.assign(n, ThetaNode{});
  const double half = (kPi / 2.0) / panels * 0.5;
  for (std::size_t i = 0; i < n / 2; ++i) {
    const int k = int(i) / order;
    const int j = int(i) % order;
    const double center = (2.0 * k + 1.0) * (kPi / 2.0) / (2.0 * panels);
    const double u = center + half * rule.x[j];
    const double s = std::sin(u);
    const double c = std::cos(u);
    const ThetaNode node{s * s, c * c, rule.w[j] * half * 2.0 * s * c};
    g.nodes[i] = node;
    g.nodes[n - 1 - i] = ThetaNode{node.omtheta, node.theta, node.weight};
  }
  if (n % 2 == 1) {
    const int j = order / 2;
    g.nodes[n / 2] = ThetaNode{0.5, 0.5, rule.w[j] * half};
  }
  return cache.emplace(key, std::move(g)).first->second;
}

// Sums term(0..n-1) pairing index i with n-1-i; a mirror-reversed term
// sequence therefore produces a bit-identical total.
template <class Term>
double symmetric_pair_sum(std::size_t n, Term&& term) {
  if (n == 0) return 0.0;
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = n - 1;
  for (; i < j; ++i, --j) s += term(i) + term(j);
  if (i == j) s += term(i);
  return s;
}

}  // namespace phi
