#pragma once

// Large-horizon machinery built on top of the loss layer.
//
// For point hypotheses the long-run selector reduces to maximizing the
// posterior density deflated by the square root of Fisher information, a
// reparametrization-invariant cousin of MAP (imap). For composite
// hypotheses it reduces to maximizing posterior mass over the square root
// of prior mass (mlxmap_objective), whose unrestricted maximizers are
// level sets of the likelihood (level_set_search). The remaining pieces
// quantify these limits: a two-part code-length display whose minimizer
// is the ML point (mdl_objective), the optimal radius of the Gaussian
// level-set ball per dimension (ellipsoid_rho, erf_ratio_maximizer), and
// numeric verification of the predictive Hellinger asymptotics for point
// and composite hypotheses against their closed-form exact values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phi/loss.hpp"
#include "phi/model.hpp"
#include "phi/numerics.hpp"

namespace phi {

class AsymptoticsError : public std::runtime_error {
 public:
  explicit AsymptoticsError(const std::string& what) : std::runtime_error(what) {}
};

// Point estimate maximizing posterior density / sqrt(Fisher information).
struct ImapEstimate {
  double theta = 0.0;
  double objective = 0.0;  // log posterior density - 0.5 log I1 at theta
  bool on_boundary = false;
};

// Custom-objective form: log_posterior may be unnormalized (a constant
// offset does not move the argmax). Exposed separately so transformed
// parametrizations can be fed in directly.
template <typename FPost, typename FFisher>
ImapEstimate imap_custom(FPost&& log_posterior, FFisher&& fisher, double lo,
                         double hi, double tol = 1e-9) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw AsymptoticsError("imap needs a finite search interval with lo < hi");
  auto objective = [&](double t) {
    const double info = fisher(t);
    if (!(info > 0.0))
      throw AsymptoticsError("imap needs positive Fisher information");
    return log_posterior(t) - 0.5 * std::log(info);
  };
  // keep the scan off the exact boundary, where density and information
  // are often singular; a maximizer this close to the edge is reported
  // through on_boundary anyway
  const double inset = 1e-12 * (hi - lo);
  const OptimResult r = maximize_1d(objective, lo + inset, hi - inset, tol);
  return {r.argument, r.value, r.on_boundary};
}

inline ImapEstimate imap(const ParametricModel& model, const Prior& prior,
                         const CountSummary& data, double tol = 1e-9) {
  const Posterior post = make_posterior(prior, data);
  // Conjugate Bernoulli: deflating Beta(a,b) by sqrt(1/(theta(1-theta)))
  // leaves exponents a-1/2 and b-1/2, so the interior maximizer is exact.
  // A value-comparison scan is flat to machine precision within ~1e-8 of
  // it and cannot certify tighter placements. Edge-peaked shapes
  // (a or b <= 1/2) keep the scan and its boundary reporting.
  if (post.conjugate && model.name == "bernoulli" && post.a > 0.5 &&
      post.b > 0.5) {
    const double theta = (post.a - 0.5) / (post.a + post.b - 1.0);
    const double value = post.log_density(theta, 1.0 - theta) -
                         0.5 * std::log(fisher_information(model, theta));
    return {theta, value, false};
  }
  return imap_custom([&](double t) { return post.log_density(t, 1.0 - t); },
                     [&](double t) { return fisher_information(model, t); },
                     model.omega_lo, model.omega_hi, tol);
}

// Likelihood maximizer for binary counts; undefined on an empty sample.
inline double ml_estimate(const CountSummary& data) {
  if (data.total() < 1)
    throw AsymptoticsError("ml estimate needs at least one observation");
  return double(data.ones) / double(data.total());
}

// Plain posterior-density maximizer; ties resolve to the leftmost argmax.
inline double map_estimate(const Prior& prior, const CountSummary& data,
                           double tol = 1e-9) {
  if (prior.conjugate()) {
    const double a = prior.shape_a() + double(data.ones);
    const double b = prior.shape_b() + double(data.zeros);
    if (a > 1.0 && b > 1.0) return (a - 1.0) / (a + b - 2.0);
    if (a <= 1.0 && b > 1.0) return 0.0;
    if (a > 1.0) return 1.0;
    // both shapes <= 1: density peaks at whichever edge has the smaller
    // shape; the flat and the symmetric-bimodal cases go left
    return a > b ? 1.0 : 0.0;
  }
  const Posterior post = make_posterior(prior, data);
  const OptimResult r = maximize_1d(
      [&](double t) { return post.log_density(t, 1.0 - t); }, 1e-12,
      1.0 - 1e-12, tol);
  return r.argument;
}

// Add-one smoothing of the observed frequency, the 1-step predictive of a
// uniform prior.
inline double laplace_estimate(const CountSummary& data) {
  return double(data.ones + 1) / double(data.total() + 2);
}

namespace detail {

// Ascending-order summation makes the total independent of segment
// orientation, so mirrored unions sum to bitwise-identical masses.
inline double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

// Posterior mass over the square root of prior mass, the long-horizon
// score of a composite hypothesis. Computed per segment and combined in
// log space; exactly invariant under the 0<->1 relabeling of data, prior,
// and a mirrored segment union (conjugate priors).
inline double mlxmap_objective(const Prior& prior, const CountSummary& data,
                               const IntervalUnion& u) {
  const Hypothesis h{IntervalUnion{u}};  // validates the segments
  double prior_mass = 0.0;
  double post_mass = 0.0;
  if (prior.conjugate()) {
    const Posterior post = make_posterior(prior, data);
    std::vector<double> pm, qm;
    pm.reserve(u.segments.size());
    qm.reserve(u.segments.size());
    for (const auto& seg : u.segments) {
      pm.push_back(
          beta_interval_mass(seg.lo, seg.hi, prior.shape_a(), prior.shape_b()));
      qm.push_back(beta_interval_mass(seg.lo, seg.hi, post.a, post.b));
    }
    prior_mass = detail::sorted_sum(pm);
    post_mass = detail::sorted_sum(qm);
  } else {
    prior_mass = hypothesis_prior_mass(prior, h);
    post_mass = hypothesis_posterior_mass(make_posterior(prior, data), h);
  }
  if (!(prior_mass > 0.0))
    throw AsymptoticsError(
        "composite objective needs a hypothesis with positive prior mass");
  if (!(post_mass > 0.0)) return 0.0;
  return std::exp(std::log(post_mass) - 0.5 * std::log(prior_mass));
}

struct LevelSetResult {
  double gamma = 0.0;      // threshold on the level function's own scale
  IntervalUnion set;       // {theta : level(theta) >= gamma}
  double objective = 0.0;  // posterior mass / sqrt(prior mass) of the set
  bool plateau = false;    // level function flat at gamma on positive measure
};

// Sweeps thresholds of the likelihood (uniform prior) or of
// p(D|theta)*sqrt(prior density / Fisher information) (any other prior),
// builds each superlevel set by bisection on the crossings, and keeps the
// threshold whose set scores best under mlxmap_objective. A log-spaced
// sweep of gamma_resolution candidates brackets the winner; golden-section
// refinement sharpens it. Thresholds with a flat stretch of the level
// function are resolved by comparing the open and closed variants.
inline LevelSetResult level_set_search(const ParametricModel& model,
                                       const Prior& prior,
                                       const CountSummary& data,
                                       int gamma_resolution = 200) {
  if (gamma_resolution < 8)
    throw AsymptoticsError("level-set search needs a gamma resolution >= 8");
  if (model.alphabet != 2 || model.omega_lo != 0.0 || model.omega_hi != 1.0)
    throw AsymptoticsError("level-set search needs a binary model on [0,1]");
  const bool uniform = prior.kind() == Prior::Kind::uniform;
  const double kInf = std::numeric_limits<double>::infinity();

  auto level = [&](double t) -> double {
    const double om = 1.0 - t;
    double v = detail::xlogy(double(data.ones), t) +
               detail::xlogy(double(data.zeros), om);
    if (!uniform) {
      // the information term diverges at the edge for any positive shape
      if (!(t > 0.0 && t < 1.0)) return -kInf;
      v += 0.5 * (prior.log_density(t, om) -
                  std::log(fisher_information(model, t)));
    }
    return v;
  };

  // one shared scan of the level function; candidates reuse it and only
  // pay for bisection refinements near their crossings
  const int scan_n = 4097;
  const OptimResult peak = maximize_1d(level, 1e-9, 1.0 - 1e-9, 1e-12);
  std::vector<double> nodes;
  nodes.reserve(std::size_t(scan_n) + 1);
  for (int i = 0; i < scan_n; ++i)
    nodes.push_back(double(i) / double(scan_n - 1));
  nodes.push_back(peak.argument);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<double> values;
  values.reserve(nodes.size());
  double ell_peak = -kInf;
  double ell_floor = kInf;
  for (double t : nodes) {
    const double v = level(t);
    values.push_back(v);
    ell_peak = std::max(ell_peak, v);
    if (std::isfinite(v)) ell_floor = std::min(ell_floor, v);
  }
  if (!std::isfinite(ell_peak))
    throw AsymptoticsError("level function has no finite values");

  // superlevel set at threshold ell; strict membership gives the open
  // variant, which differs from the closed one only across a plateau
  auto build_set = [&](double ell, bool strict) -> IntervalUnion {
    auto member = [&](double v) { return strict ? v > ell : v >= ell; };
    auto refine = [&](double x_in, double x_out) {
      for (int i = 0; i < 64 && std::fabs(x_out - x_in) > 1e-14; ++i) {
        const double mid = 0.5 * (x_in + x_out);
        if (member(level(mid)))
          x_in = mid;
        else
          x_out = mid;
      }
      return 0.5 * (x_in + x_out);
    };
    IntervalUnion u;
    bool inside = member(values[0]);
    double lo = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const bool next = member(values[i + 1]);
      if (inside == next) continue;
      const double x = inside ? refine(nodes[i], nodes[i + 1])
                              : refine(nodes[i + 1], nodes[i]);
      if (inside) {
        if (x - lo > 1e-13) u.segments.push_back({lo, x});
      } else {
        lo = x;
      }
      inside = next;
    }
    if (inside && 1.0 - lo > 1e-13) u.segments.push_back({lo, 1.0});
    return u;
  };

  auto score = [&](const IntervalUnion& u) -> double {
    if (u.segments.empty()) return -kInf;
    try {
      return mlxmap_objective(prior, data, u);
    } catch (const AsymptoticsError&) {
      return -kInf;  // candidate set with underflowed prior mass
    }
  };

  // candidate offsets below the peak; offset 0 covers flat level functions
  // where the whole support sits at the top value
  std::vector<double> offsets{0.0};
  const double drop_lo = 1e-3;
  const double drop_hi = std::max(ell_peak - ell_floor, 1.0);
  for (int k = 0; k < gamma_resolution; ++k) {
    const double f = double(k) / double(gamma_resolution - 1);
    offsets.push_back(
        std::exp(std::log(drop_lo) + f * (std::log(drop_hi) - std::log(drop_lo))));
  }

  std::size_t best_i = 0;
  double best_obj = -kInf;
  IntervalUnion best_set;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    IntervalUnion u = build_set(ell_peak - offsets[i], false);
    const double obj = score(u);
    if (obj > best_obj) {
      best_obj = obj;
      best_i = i;
      best_set = std::move(u);
    }
  }
  if (!(best_obj > 0.0))
    throw AsymptoticsError("no level set with positive mass was found");

  // golden-section refinement between the sweep neighbors of the winner
  const double bracket_lo = offsets[best_i > 0 ? best_i - 1 : 0];
  const double bracket_hi =
      offsets[std::min(best_i + 1, offsets.size() - 1)];
  double best_offset = offsets[best_i];
  if (bracket_hi > bracket_lo) {
    const OptimResult r = maximize_1d(
        [&](double s) { return score(build_set(ell_peak - s, false)); },
        bracket_lo, bracket_hi, 1e-9);
    IntervalUnion u = build_set(ell_peak - r.argument, false);
    const double obj = score(u);
    if (obj > best_obj) {
      best_obj = obj;
      best_offset = r.argument;
      best_set = std::move(u);
    }
  }

  LevelSetResult out;
  out.gamma = std::exp(ell_peak - best_offset);
  out.set = best_set;
  out.objective = best_obj;

  // plateau check at the winning threshold: if the open variant differs
  // in mass, the level function is flat there; keep the better variant
  IntervalUnion open = build_set(ell_peak - best_offset, true);
  const double open_obj = score(open);
  double closed_mass = 0.0, open_mass = 0.0;
  const Hypothesis closed_h{IntervalUnion{best_set}};
  closed_mass = hypothesis_prior_mass(prior, closed_h);
  if (!open.segments.empty())
    open_mass = hypothesis_prior_mass(prior, Hypothesis{IntervalUnion{open}});
  if (std::fabs(closed_mass - open_mass) > 1e-12) {
    out.plateau = true;
    if (open_obj > best_obj) {
      out.set = open;
      out.objective = open_obj;
    }
  }
  return out;
}

// Two-part code length for a point parameter: data fit plus a theta-free
// complexity charge that grows with the horizon. The argmin over theta is
// therefore the maximum-likelihood point.
inline double mdl_objective(const ParametricModel& model,
                            const CountSummary& data, double theta,
                            std::int64_t m) {
  if (m < 1) throw AsymptoticsError("code length needs a horizon m >= 1");
  if (model.alphabet != 2)
    throw AsymptoticsError("code length display needs a binary model");
  if (!(theta >= 0.0 && theta <= 1.0))
    throw AsymptoticsError("code length needs theta in [0,1]");
  const double om = 1.0 - theta;
  double loglik = 0.0;
  if (data.ones > 0) loglik += double(data.ones) * model.log_lik(1, theta, om);
  if (data.zeros > 0) loglik += double(data.zeros) * model.log_lik(0, theta, om);
  const double dim = 1.0;
  return -loglik + 0.5 * dim * std::log(double(m) / (8.0 * kPi)) +
         std::log(jeffreys_normalizer(model));
}

// Radius of the best superlevel ball of a standard d-dimensional Gaussian
// under the mass-over-root-volume tradeoff: maximizes the lower incomplete
// gamma of (d/2, rho^2/2) against rho^(d/2).
struct EllipsoidRadius {
  double rho = 0.0;
  double scaled = 0.0;  // rho / sqrt(d), decreasing toward 1/sqrt(2)
};

inline EllipsoidRadius ellipsoid_rho(int d) {
  if (d < 1) throw AsymptoticsError("ellipsoid radius needs dimension >= 1");
  const double a = 0.5 * double(d);
  auto objective = [&](double rho) {
    return log_lower_incomplete_gamma(a, 0.5 * rho * rho) - a * std::log(rho);
  };
  // the maximizer sits near sqrt(d/2) for large d; 3d + 40 brackets it
  // comfortably for every d >= 1
  const OptimResult r = maximize_1d(objective, 1e-6, std::sqrt(3.0 * double(d) + 40.0), 1e-10);
  if (r.on_boundary)
    throw AsymptoticsError("ellipsoid radius maximizer hit the search bracket");
  return {r.argument, r.argument / std::sqrt(double(d))};
}

// Maximizer of erf(x)/sqrt(x). The optimal symmetric interval around the
// posterior mean has half-width sqrt(2) * sd * (this point); it also pins
// ellipsoid_rho(1) to sqrt(2) times this value.
inline double erf_ratio_maximizer() {
  auto objective = [](double x) { return std::log(erf(x)) - 0.5 * std::log(x); };
  return maximize_1d(objective, 1e-6, 8.0, 1e-12).argument;
}

// One horizon of the point-hypothesis predictive Hellinger asymptote:
// exact closed-form loss against 2 - 2 sqrt(8 pi / m) * p(theta|D)/sqrt(I1).
// evidence_ratio uses the equivalent likelihood-over-evidence form
// p(D|theta)/(J p(D)), which matches ratio exactly under the Jeffreys prior.
struct PointAsymptoteRow {
  std::int64_t m = 0;
  double exact = 0.0;
  double asymptotic = 0.0;
  double ratio = 0.0;
  double evidence_ratio = 0.0;
};

inline std::vector<PointAsymptoteRow> verify_point_hellinger_asymptote(
    const ParametricModel& model, const Prior& prior, const CountSummary& data,
    double theta, const std::vector<std::int64_t>& m_list) {
  if (model.alphabet != 2)
    throw AsymptoticsError("the Hellinger asymptote checks need a binary model");
  if (!(theta > 0.0 && theta < 1.0))
    throw AsymptoticsError("the point asymptote needs theta in (0,1)");
  const Posterior post = make_posterior(prior, data);
  const double dens = post.density(theta, 1.0 - theta);
  const double info = fisher_information(model, theta);
  const double jeff = jeffreys_normalizer(model);
  const double om = 1.0 - theta;
  const double loglik = double(data.ones) * model.log_lik(1, theta, om) +
                        double(data.zeros) * model.log_lik(0, theta, om);
  const double log_ev = log_evidence(prior, data);
  const Hypothesis h = Hypothesis::point(theta);
  std::vector<PointAsymptoteRow> rows;
  rows.reserve(m_list.size());
  for (std::int64_t m : m_list) {
    LossSpec spec;
    spec.which = LossWhich::tilde;
    spec.m = m;
    spec.distance = DistanceKind::parse("hellinger");
    spec.method = LossMethod::hellinger_closed_form;
    const double exact = loss(prior, data, h, spec);
    const double scale = 2.0 * std::sqrt(8.0 * kPi / double(m));
    const double factor = scale * dens / std::sqrt(info);
    const double efactor = scale * std::exp(loglik - log_ev) / jeff;
    rows.push_back(
        {m, exact, 2.0 - factor, (2.0 - exact) / factor, (2.0 - exact) / efactor});
  }
  return rows;
}

// One horizon of the composite predictive Hellinger asymptote: exact
// closed-form loss against
//   2 - 2 (8 pi / m)^(1/4) / sqrt(P[set]) *
//       integral over the set of p(theta|D) sqrt(p(theta)/sqrt(I1)).
struct CompositeAsymptoteRow {
  std::int64_t m = 0;
  double exact = 0.0;
  double asymptotic = 0.0;
  double ratio = 0.0;
};

inline std::vector<CompositeAsymptoteRow> verify_composite_hellinger_asymptote(
    const ParametricModel& model, const Prior& prior, const CountSummary& data,
    const IntervalUnion& u, const std::vector<std::int64_t>& m_list) {
  if (model.alphabet != 2)
    throw AsymptoticsError("the Hellinger asymptote checks need a binary model");
  const Hypothesis h{IntervalUnion{u}};
  const double pmass = hypothesis_prior_mass(prior, h);
  if (!(pmass > 0.0))
    throw AsymptoticsError(
        "the composite asymptote needs a hypothesis with positive prior mass");
  const Posterior post = make_posterior(prior, data);
  // boundary evaluations report +inf so the quadrature falls back to its
  // endpoint-singularity substitution instead of aborting
  auto integrand = [&](double t) -> double {
    if (!(t > 0.0 && t < 1.0)) return std::numeric_limits<double>::infinity();
    const double om = 1.0 - t;
    return post.density(t, om) *
           std::sqrt(prior.density(t, om) /
                     std::sqrt(fisher_information(model, t)));
  };
  double integral = 0.0;
  for (const auto& seg : u.segments)
    integral += integrate(integrand, seg.lo, seg.hi);

  std::vector<CompositeAsymptoteRow> rows;
  rows.reserve(m_list.size());
  for (std::int64_t m : m_list) {
    LossSpec spec;
    spec.which = LossWhich::tilde;
    spec.m = m;
    spec.distance = DistanceKind::parse("hellinger");
    spec.method = LossMethod::hellinger_closed_form;
    const double exact = loss(prior, data, h, spec);
    const double factor = 2.0 * std::pow(8.0 * kPi / double(m), 0.25) *
                          integral / std::sqrt(pmass);
    rows.push_back({m, exact, 2.0 - factor, (2.0 - exact) / factor});
  }
  return rows;
}

}  // namespace phi
