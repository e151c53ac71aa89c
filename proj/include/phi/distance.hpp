#pragma once

// Pointwise distance kernels between two density/probability values, with
// their scaling exponents.  Integration or summation over the observation
// space is the caller's job.

#include <cmath>
#include <limits>
#include <string>

#include "phi/textio.hpp"

namespace phi {

enum class DistanceTag {
  absolute,
  hellinger,
  chi_square,
  kl,
  reverse_kl,
  squared,
  alpha,
};

struct DistanceKind {
  DistanceTag tag = DistanceTag::absolute;
  double alpha = 1.0;  // only meaningful when tag == alpha

  // Accepted names: abs, hellinger, chi2, kl, rkl, sq, alpha:<value in (0,1]>.
  static DistanceKind parse(const std::string& name) {
    if (name == "abs") return {DistanceTag::absolute, 1.0};
    if (name == "hellinger") return {DistanceTag::hellinger, 0.5};
    if (name == "chi2") return {DistanceTag::chi_square, 1.0};
    if (name == "kl") return {DistanceTag::kl, 1.0};
    if (name == "rkl") return {DistanceTag::reverse_kl, 1.0};
    if (name == "sq") return {DistanceTag::squared, 1.0};
    if (name.rfind("alpha:", 0) == 0) {
      const std::string v = name.substr(6);
      char* end = nullptr;
      const double a = std::strtod(v.c_str(), &end);
      if (v.empty() || end != v.c_str() + v.size() || !(a > 0.0) || a > 1.0)
        throw ParseError("alpha distance needs a value in (0,1]: " + name);
      return {DistanceTag::alpha, a};
    }
    throw ParseError("unknown distance: " + name);
  }

  std::string name() const {
    switch (tag) {
      case DistanceTag::absolute:
        return "abs";
      case DistanceTag::hellinger:
        return "hellinger";
      case DistanceTag::chi_square:
        return "chi2";
      case DistanceTag::kl:
        return "kl";
      case DistanceTag::reverse_kl:
        return "rkl";
      case DistanceTag::squared:
        return "sq";
      case DistanceTag::alpha:
        return "alpha:" + format_g12(alpha);
    }
    return "?";
  }
};

// beta in d(sigma*p, sigma*q) = sigma^beta * d(p, q): 2 for squared, 1 for
// the f-divergence family.
inline double scaling_exponent(const DistanceKind& kind) {
  return kind.tag == DistanceTag::squared ? 2.0 : 1.0;
}

// Kernel value at a pair of nonnegative density values.  Zero-argument
// conventions: kl uses 0*ln(0/q) = 0 and p>0,q=0 gives +infinity; rkl gives
// 0 whenever q = 0.  Infinities are IEEE +inf, never NaN.
inline double eval_pointwise(const DistanceKind& kind, double p, double q) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  switch (kind.tag) {
    case DistanceTag::absolute:
      return std::abs(p - q);
    case DistanceTag::hellinger: {
      const double d = std::sqrt(p) - std::sqrt(q);
      return d * d;
    }
    case DistanceTag::chi_square: {
      if (q == 0.0) return p == 0.0 ? 0.0 : kInf;
      const double d = p - q;
      return d * d / q;
    }
    case DistanceTag::kl:
      if (p == 0.0) return 0.0;
      if (q == 0.0) return kInf;
      return p * std::log(p / q);
    case DistanceTag::reverse_kl:
      if (q == 0.0) return 0.0;
      if (p == 0.0) return kInf;
      return q * std::log(q / p);
    case DistanceTag::squared: {
      const double d = p - q;
      return d * d;
    }
    case DistanceTag::alpha: {
      if (kind.alpha == 1.0) return eval_pointwise({DistanceTag::absolute}, p, q);
      if (kind.alpha == 0.5)
        return eval_pointwise({DistanceTag::hellinger}, p, q);
      const double d =
          std::abs(std::pow(p, kind.alpha) - std::pow(q, kind.alpha));
      return std::pow(d, 1.0 / kind.alpha);
    }
  }
  return 0.0;
}

}  // namespace phi
