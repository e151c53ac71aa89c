#pragma once

// Predictive loss evaluation. The hat loss compares a hypothesis's
// prior-restricted prediction against the full-Bayes predictive; the tilde
// loss averages the distance to each candidate truth over the posterior.
// Three interchangeable methods: brute-force enumeration over futures,
// the sufficient-statistic count reduction, and Hellinger closed forms.
//
// Everything runs in signed log magnitudes internally so horizons up to
// 10^6 neither underflow the per-sequence probabilities nor overflow the
// multiplicity factors.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "phi/distance.hpp"
#include "phi/model.hpp"
#include "phi/numerics.hpp"

namespace phi {

struct LossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LossWhich { hat, tilde };
enum class LossMode { batch, offline };
enum class LossMethod { automatic, brute_force, sufficient_stat, hellinger_closed_form };

struct LossSpec {
  LossWhich which = LossWhich::hat;
  std::int64_t m = 1;
  LossMode mode = LossMode::batch;
  DistanceKind distance;
  LossMethod method = LossMethod::automatic;
  // >= 0 pins the theta-grid refinement level for tilde quadrature and
  // offline expansions; -1 refines until two levels agree to 1e-9
  int grid_level = -1;
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log(1 - exp(-d)) for d > 0, accurate at both ends
inline double log1m_exp(double d) {
  if (d <= 0.0) return kNegInf;
  if (d > 0.6931471805599453) return std::log1p(-std::exp(-d));
  return std::log(-std::expm1(-d));
}

struct SignedLog {
  double sign = 1.0;
  double logmag = kNegInf;  // value = sign * exp(logmag)
};

inline SignedLog to_signed_log(double v) {
  if (v == 0.0) return {1.0, kNegInf};
  if (v > 0.0) return {1.0, std::log(v)};
  return {-1.0, std::log(-v)};
}

// distance kernel evaluated on log-scale arguments p = e^lp, q = e^lq;
// falls back to the direct kernel whenever both values are representable,
// so small-horizon results match the plain evaluation bit for bit
inline SignedLog kernel_signed_log(const DistanceKind& kind, double lp, double lq) {
  if (lp > -700.0 && lq > -700.0)
    return to_signed_log(eval_pointwise(kind, std::exp(lp), std::exp(lq)));

  const double hi = std::max(lp, lq);
  const double gap = std::fabs(lp - lq);  // +inf when exactly one side is 0
  switch (kind.tag) {
    case DistanceTag::absolute:
      if (lp == kNegInf && lq == kNegInf) return {1.0, kNegInf};
      return {1.0, hi + log1m_exp(gap)};
    case DistanceTag::hellinger:
      if (lp == kNegInf && lq == kNegInf) return {1.0, kNegInf};
      return {1.0, hi + 2.0 * log1m_exp(0.5 * gap)};
    case DistanceTag::chi_square:
      if (lq == kNegInf) return lp == kNegInf ? SignedLog{1.0, kNegInf}
                                              : SignedLog{1.0, kPosInf};
      return {1.0, 2.0 * (hi + log1m_exp(gap)) - lq};
    case DistanceTag::kl:
      if (lp == kNegInf) return {1.0, kNegInf};
      if (lq == kNegInf) return {1.0, kPosInf};
      return {lp >= lq ? 1.0 : -1.0, lp + std::log(std::fabs(lp - lq))};
    case DistanceTag::reverse_kl:
      if (lq == kNegInf) return {1.0, kNegInf};
      if (lp == kNegInf) return {1.0, kPosInf};
      return {lq >= lp ? 1.0 : -1.0, lq + std::log(std::fabs(lq - lp))};
    case DistanceTag::squared:
      if (lp == kNegInf && lq == kNegInf) return {1.0, kNegInf};
      return {1.0, 2.0 * (hi + log1m_exp(gap))};
    case DistanceTag::alpha: {
      if (lp == kNegInf && lq == kNegInf) return {1.0, kNegInf};
      const double a = kind.alpha;
      return {1.0, hi + log1m_exp(a * gap) / a};
    }
  }
  return {1.0, kNegInf};
}

// log per-sequence p(x|D) for every future count t = 0..m
inline std::vector<double> predictive_log_table(const Prior& prior,
                                                const CountSummary& data,
                                                std::int64_t m) {
  std::vector<double> lp(std::size_t(m) + 1);
  if (prior.conjugate()) {
    const double a = prior.shape_a() + double(data.ones);
    const double b = prior.shape_b() + double(data.zeros);
    const double base = log_beta(a, b);
    for (std::int64_t t = 0; t <= m; ++t)
      lp[std::size_t(t)] = log_beta(a + double(t), b + double(m - t)) - base;
    return lp;
  }
  for (std::int64_t t = 0; t <= m; ++t)
    lp[std::size_t(t)] = log_predictive(prior, data, {t, m - t});
  return lp;
}

// log per-sequence p(x|Theta) for every future count t = 0..m
inline std::vector<double> composite_log_table(const Hypothesis& h,
                                               const Prior& prior,
                                               std::int64_t m) {
  std::vector<double> lp(std::size_t(m) + 1);
  if (auto* s = std::get_if<Simple>(&h.value())) {
    for (std::int64_t t = 0; t <= m; ++t)
      lp[std::size_t(t)] = xlogy(double(t), s->theta) +
                           xlogy(double(m - t), 1.0 - s->theta);
    return lp;
  }
  if (auto* u = std::get_if<IntervalUnion>(&h.value());
      u != nullptr && prior.conjugate()) {
    const double a = prior.shape_a();
    const double b = prior.shape_b();
    const double log_prior_mass = log_union_beta_mass(*u, a, b);
    if (log_prior_mass == kNegInf)
      throw ModelError("hypothesis has zero prior mass");
    const double base = log_beta(a, b) + log_prior_mass;
    for (std::int64_t t = 0; t <= m; ++t)
      lp[std::size_t(t)] = log_beta(a + double(t), b + double(m - t)) +
                           log_union_beta_mass(*u, a + double(t), b + double(m - t)) -
                           base;
    return lp;
  }
  for (std::int64_t t = 0; t <= m; ++t)
    lp[std::size_t(t)] = log_composite_likelihood(h, prior, {t, m - t});
  return lp;
}

// sum over t of C(m,t) * kernel(exp(la[t]), exp(lb[t])), paired
// symmetrically so 0<->1 relabeling is bit-exact
inline double weighted_kernel_sum(const DistanceKind& kind,
                                  const std::vector<double>& la,
                                  const std::vector<double>& lb,
                                  std::int64_t m) {
  return symmetric_pair_sum(std::size_t(m) + 1, [&](std::size_t i) {
    const SignedLog d = kernel_signed_log(kind, la[i], lb[i]);
    return d.sign * std::exp(log_binomial(m, std::int64_t(i)) + d.logmag);
  });
}

inline void check_spec(const LossSpec& spec) {
  if (spec.m < 1) throw LossError("loss horizon m must be >= 1");
  if (spec.method == LossMethod::hellinger_closed_form &&
      spec.distance.tag != DistanceTag::hellinger)
    throw LossError("hellinger_closed_form requires the hellinger distance");
  if (spec.method == LossMethod::brute_force && spec.m > 24)
    throw LossError("brute force needs |X|^m <= 2^24 (m <= 24 for binary data)");
}

// ---- hat loss methods ----

inline double hat_sufficient_stat(const Prior& prior, const CountSummary& data,
                                  const Hypothesis& h, const LossSpec& spec) {
  const auto lpT = composite_log_table(h, prior, spec.m);
  const auto lpD = predictive_log_table(prior, data, spec.m);
  return weighted_kernel_sum(spec.distance, lpT, lpD, spec.m);
}

inline double hat_brute_force(const Prior& prior, const CountSummary& data,
                              const Hypothesis& h, const LossSpec& spec) {
  const auto lpT = composite_log_table(h, prior, spec.m);
  const auto lpD = predictive_log_table(prior, data, spec.m);
  double total = 0.0;
  const std::uint64_t count = std::uint64_t(1) << unsigned(spec.m);
  for (std::uint64_t x = 0; x < count; ++x) {
    const auto t = std::size_t(__builtin_popcountll(x));
    total += eval_pointwise(spec.distance, std::exp(lpT[t]), std::exp(lpD[t]));
  }
  return total;
}

inline double hat_hellinger_closed(const Prior& prior, const CountSummary& data,
                                   const Hypothesis& h, const LossSpec& spec) {
  // 2 - 2 * Bhattacharyya affinity between prediction and predictive
  const auto lpT = composite_log_table(h, prior, spec.m);
  const auto lpD = predictive_log_table(prior, data, spec.m);
  const double affinity =
      symmetric_pair_sum(std::size_t(spec.m) + 1, [&](std::size_t i) {
        return std::exp(log_binomial(spec.m, std::int64_t(i)) +
                        0.5 * (lpT[i] + lpD[i]));
      });
  return 2.0 - 2.0 * affinity;
}

// ---- tilde loss methods ----

// evaluate at a fixed grid level: sum over nodes of w * posterior * inner
template <typename Inner>
double posterior_grid_sum(const Posterior& post, int level, Inner&& inner) {
  const ThetaGrid& g = theta_grid(level);
  return symmetric_pair_sum(g.nodes.size(), [&](std::size_t i) {
    const ThetaNode& node = g.nodes[i];
    const double rho = post.density(node.theta, node.omtheta);
    if (rho == 0.0) return 0.0;
    return node.weight * rho * inner(node);
  });
}

// run fn at increasing refinement levels until stable to 1e-9, or at the
// pinned level when the caller fixed one
inline double refine_grid(const LossSpec& spec,
                          const std::function<double(int)>& fn) {
  if (spec.grid_level >= 0) return fn(spec.grid_level);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int level = 2; level <= 8; ++level) {
    const double cur = fn(level);
    if (std::isfinite(prev) &&
        std::fabs(cur - prev) <= 1e-9 * (1.0 + std::fabs(cur)))
      return cur;
    if (std::isinf(cur) && cur == prev) return cur;
    prev = cur;
  }
  return prev;
}

inline double tilde_sufficient_stat(const Prior& prior, const CountSummary& data,
                                    const Hypothesis& h, const LossSpec& spec) {
  const auto lpT = composite_log_table(h, prior, spec.m);
  const Posterior post = make_posterior(prior, data);
  const std::int64_t m = spec.m;
  return refine_grid(spec, [&](int level) {
    return posterior_grid_sum(post, level, [&](const ThetaNode& node) {
      return symmetric_pair_sum(std::size_t(m) + 1, [&](std::size_t i) {
        const double lg = xlogy(double(i), node.theta) +
                          xlogy(double(m - std::int64_t(i)), node.omtheta);
        const SignedLog d = kernel_signed_log(spec.distance, lpT[i], lg);
        return d.sign * std::exp(log_binomial(m, std::int64_t(i)) + d.logmag);
      });
    });
  });
}

inline double tilde_brute_force(const Prior& prior, const CountSummary& data,
                                const Hypothesis& h, const LossSpec& spec) {
  const auto lpT = composite_log_table(h, prior, spec.m);
  const Posterior post = make_posterior(prior, data);
  const std::int64_t m = spec.m;
  return refine_grid(spec, [&](int level) {
    return posterior_grid_sum(post, level, [&](const ThetaNode& node) {
      double inner = 0.0;
      const std::uint64_t count = std::uint64_t(1) << unsigned(m);
      for (std::uint64_t x = 0; x < count; ++x) {
        const auto t = std::size_t(__builtin_popcountll(x));
        const double lg = xlogy(double(t), node.theta) +
                          xlogy(double(m - std::int64_t(t)), node.omtheta);
        inner += eval_pointwise(spec.distance, std::exp(lpT[t]), std::exp(lg));
      }
      return inner;
    });
  });
}

inline double tilde_hellinger_closed(const Prior& prior, const CountSummary& data,
                                     const Hypothesis& h, const LossSpec& spec) {
  const std::int64_t m = spec.m;
  const Posterior post = make_posterior(prior, data);

  if (auto* s = std::get_if<Simple>(&h.value())) {
    // 2 - 2 integral of (sqrt(theta theta') + sqrt((1-theta)(1-theta')))^m
    // over the posterior
    const double st = std::sqrt(s->theta);
    const double somt = std::sqrt(1.0 - s->theta);
    const double affinity = refine_grid(spec, [&](int level) {
      return posterior_grid_sum(post, level, [&](const ThetaNode& node) {
        const double root = st * std::sqrt(node.theta) +
                            somt * std::sqrt(node.omtheta);
        return std::pow(root, double(m));
      });
    });
    return 2.0 - 2.0 * affinity;
  }

  // composite hypotheses: the posterior integral of sqrt(g(t|theta')) has a
  // Beta closed form at half-integer shifts, leaving a single t-sum
  if (!post.conjugate)
    throw LossError("hellinger_closed_form needs a conjugate (beta) posterior for composite hypotheses");
  const auto lpT = composite_log_table(h, prior, m);
  const double base = log_beta(post.a, post.b);
  const double affinity =
      symmetric_pair_sum(std::size_t(m) + 1, [&](std::size_t i) {
        const double t = double(std::int64_t(i));
        const double lroot =
            log_beta(post.a + 0.5 * t, post.b + 0.5 * double(m - std::int64_t(i))) -
            base;
        return std::exp(log_binomial(m, std::int64_t(i)) + 0.5 * lpT[i] + lroot);
      });
  return 2.0 - 2.0 * affinity;
}

}  // namespace detail

// Evaluate the loss named by spec for one hypothesis.
inline double loss(const Prior& prior, const CountSummary& data,
                   const Hypothesis& h, const LossSpec& spec);

namespace detail {

inline double loss_batch(const Prior& prior, const CountSummary& data,
                         const Hypothesis& h, const LossSpec& spec) {
  LossMethod method = spec.method;
  if (method == LossMethod::automatic) {
    // the count statistic is always available for binary data; Hellinger
    // tilde losses get the closed form, which stays cheap for huge m
    if (spec.which == LossWhich::tilde &&
        spec.distance.tag == DistanceTag::hellinger)
      method = LossMethod::hellinger_closed_form;
    else
      method = LossMethod::sufficient_stat;
  }
  if (spec.which == LossWhich::hat) {
    switch (method) {
      case LossMethod::brute_force: return hat_brute_force(prior, data, h, spec);
      case LossMethod::sufficient_stat: return hat_sufficient_stat(prior, data, h, spec);
      case LossMethod::hellinger_closed_form: return hat_hellinger_closed(prior, data, h, spec);
      case LossMethod::automatic: break;
    }
  } else {
    switch (method) {
      case LossMethod::brute_force: return tilde_brute_force(prior, data, h, spec);
      case LossMethod::sufficient_stat: return tilde_sufficient_stat(prior, data, h, spec);
      case LossMethod::hellinger_closed_form: return tilde_hellinger_closed(prior, data, h, spec);
      case LossMethod::automatic: break;
    }
  }
  throw LossError("unresolved loss method");
}

inline double loss_offline_impl(const Prior& prior, const CountSummary& data,
                                const Hypothesis& h, const LossSpec& spec) {
  if (spec.m > 10000)
    throw LossError("offline mode needs m <= 10^4 for binary data");

  LossSpec step = spec;
  step.mode = LossMode::batch;
  step.m = 1;
  if (spec.which == LossWhich::tilde && spec.grid_level < 0) {
    // pin one refinement level for every intermediate posterior so the
    // expectation telescopes at machine precision
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int level = 2; level <= 8; ++level) {
      step.grid_level = level;
      const double cur = loss_batch(prior, data, h, step);
      if (std::isfinite(prev) &&
          std::fabs(cur - prev) <= 1e-9 * (1.0 + std::fabs(cur)))
        break;
      prev = cur;
    }
  }

  double total = 0.0;
  for (std::int64_t s = 0; s < spec.m; ++s) {
    for (std::int64_t i = 0; i <= s; ++i) {
      const double lw = log_binomial(s, i) +
                        log_predictive(prior, data, {i, s - i});
      const double w = std::exp(lw);
      if (w == 0.0) continue;
      total += w * loss_batch(prior, data + CountSummary{i, s - i}, h, step);
    }
  }
  return total;
}

}  // namespace detail

inline double loss(const Prior& prior, const CountSummary& data,
                   const Hypothesis& h, const LossSpec& spec) {
  detail::check_spec(spec);
  double v = spec.mode == LossMode::offline
                 ? detail::loss_offline_impl(prior, data, h, spec)
                 : detail::loss_batch(prior, data, h, spec);
  // the kl and rkl kernels are sign-indefinite termwise; a sum that is zero
  // analytically may round just below it
  if (v < 0.0 && v >= -1e-12) v = 0.0;
  return v;
}

inline double loss_hat(const Prior& prior, const CountSummary& data,
                       const Hypothesis& h, LossSpec spec) {
  spec.which = LossWhich::hat;
  return loss(prior, data, h, spec);
}

inline double loss_tilde(const Prior& prior, const CountSummary& data,
                         const Hypothesis& h, LossSpec spec) {
  spec.which = LossWhich::tilde;
  return loss(prior, data, h, spec);
}

// ---------------------------------------------------------------------------
// point-class sweeps
//
// Selecting over 10^5 point hypotheses re-derives the same posterior grid
// and per-node future table for every member. This engine builds them once.
// For the kernels whose pointwise form is linear in member-free functions
// of the candidate density (rkl, kl, sq, hellinger) the theta-integral
// collapses to per-t aggregates, making one member evaluation O(m); the
// remaining kernels keep the node loop over shared tables.

class TildePointSweep {
 public:
  TildePointSweep(const Prior& prior, const CountSummary& data, std::int64_t m,
                  const DistanceKind& kind, int level)
      : m_(m), kind_(kind) {
    if (m < 1) throw LossError("loss horizon m must be >= 1");
    const Posterior post = make_posterior(prior, data);
    const ThetaGrid& grid = theta_grid(level);
    const std::size_t n = grid.nodes.size();
    const std::size_t width = std::size_t(m) + 1;

    switch (kind.tag) {
      case DistanceTag::reverse_kl:
      case DistanceTag::kl:
      case DistanceTag::squared:
      case DistanceTag::hellinger:
        aggregated_ = true;
        break;
      default:
        aggregated_ = false;
        break;
    }

    std::vector<double> wrho(n);
    for (std::size_t i = 0; i < n; ++i) {
      const ThetaNode& node = grid.nodes[i];
      wrho[i] = node.weight * post.density(node.theta, node.omtheta);
    }
    total_mass_ = symmetric_pair_sum(n, [&](std::size_t i) { return wrho[i]; });

    coeff_.resize(width);
    for (std::size_t t = 0; t < width; ++t)
      coeff_[t] = std::exp(log_binomial(m, std::int64_t(t)));

    if (aggregated_) {
      // per-t sums of wrho times g, g^2, sqrt(g), g ln g, ln g
      agg_a_.assign(width, 0.0);
      agg_b_.assign(width, 0.0);
      for (std::size_t t = 0; t < width; ++t) {
        agg_a_[t] = symmetric_pair_sum(n, [&](std::size_t i) {
          const double lg = node_log_g(grid.nodes[i], t);
          switch (kind.tag) {
            case DistanceTag::reverse_kl: return wrho[i] * std::exp(lg) * lg;
            case DistanceTag::kl: return wrho[i] * lg;
            case DistanceTag::squared: {
              const double g = std::exp(lg);
              return wrho[i] * g * g;
            }
            default: return wrho[i] * std::exp(0.5 * lg);  // hellinger
          }
        });
        if (kind.tag != DistanceTag::kl)
          agg_b_[t] = symmetric_pair_sum(n, [&](std::size_t i) {
            return wrho[i] * std::exp(node_log_g(grid.nodes[i], t));
          });
      }
    } else {
      node_w_ = std::move(wrho);
      node_g_.assign(width, std::vector<double>(n));
      for (std::size_t t = 0; t < width; ++t)
        for (std::size_t i = 0; i < n; ++i)
          node_g_[t][i] = std::exp(node_log_g(grid.nodes[i], t));
    }
  }

  double eval(double theta) const {
    double total = 0.0;
    for (std::size_t t = 0; t <= std::size_t(m_); ++t) {
      const double lp = detail::xlogy(double(t), theta) +
                        detail::xlogy(double(m_ - std::int64_t(t)), 1.0 - theta);
      const double p = std::exp(lp);
      double term;
      if (aggregated_) {
        switch (kind_.tag) {
          case DistanceTag::reverse_kl:
            // sum wrho (g ln g - g lp); lp = -inf with positive g mass -> +inf
            term = p == 0.0 && agg_b_[t] > 0.0
                       ? detail::kPosInf
                       : agg_a_[t] - agg_b_[t] * lp;
            break;
          case DistanceTag::kl:
            term = p == 0.0 ? 0.0 : p * (lp * total_mass_ - agg_a_[t]);
            break;
          case DistanceTag::squared:
            term = p * p * total_mass_ - 2.0 * p * agg_b_[t] + agg_a_[t];
            break;
          default:  // hellinger
            term = p * total_mass_ - 2.0 * std::sqrt(p) * agg_a_[t] + agg_b_[t];
            break;
        }
      } else {
        const auto& g = node_g_[t];
        term = symmetric_pair_sum(g.size(), [&](std::size_t i) {
          return node_w_[i] * eval_pointwise(kind_, p, g[i]);
        });
      }
      total += coeff_[t] * term;
    }
    if (total < 0.0 && total >= -1e-12) total = 0.0;
    return total;
  }

 private:
  double node_log_g(const ThetaNode& node, std::size_t t) const {
    return detail::xlogy(double(t), node.theta) +
           detail::xlogy(double(m_ - std::int64_t(t)), node.omtheta);
  }

  std::int64_t m_;
  DistanceKind kind_;
  bool aggregated_ = false;
  double total_mass_ = 1.0;
  std::vector<double> coeff_;
  std::vector<double> agg_a_;  // kernel-specific, see constructor
  std::vector<double> agg_b_;
  std::vector<double> node_w_;
  std::vector<std::vector<double>> node_g_;
};

// ---------------------------------------------------------------------------
// generic finite-alphabet models: brute force vs sufficient statistic
//
// Both methods share one fixed quadrature level, so their agreement tests
// the count reduction itself rather than quadrature error. Data enters as
// per-symbol counts.

namespace detail {

struct GenericGrid {
  std::vector<double> theta;
  std::vector<double> omtheta;
  std::vector<double> post_w;   // posterior node weights, sum 1
  std::vector<double> hyp_w;    // prior-restricted hypothesis weights, sum 1
  bool simple = false;
  double simple_theta = 0.0;
};

inline GenericGrid generic_grid(const ParametricModel& model, const Prior& prior,
                                const std::vector<std::int64_t>& counts,
                                const Hypothesis& h, int level) {
  if (model.alphabet < 2)
    throw LossError("generic losses need a finite alphabet");
  if (std::size_t(model.alphabet) != counts.size())
    throw LossError("per-symbol counts must match the model alphabet");
  if (model.omega_lo != 0.0 || model.omega_hi != 1.0)
    throw LossError("generic losses need a model on [0,1]");

  const ThetaGrid& g = theta_grid(level);
  GenericGrid out;
  out.theta.reserve(g.nodes.size());
  double post_total = 0.0, hyp_total = 0.0;

  const IntervalUnion* u = std::get_if<IntervalUnion>(&h.value());
  if (auto* s = std::get_if<Simple>(&h.value())) {
    out.simple = true;
    out.simple_theta = s->theta;
  } else if (u == nullptr) {
    throw LossError("generic losses support point and interval hypotheses");
  }

  for (const auto& node : g.nodes) {
    double ll = 0.0;
    for (int x = 0; x < model.alphabet; ++x)
      if (counts[std::size_t(x)] != 0)
        ll += double(counts[std::size_t(x)]) *
              model.log_lik(x, node.theta, node.omtheta);
    const double prior_w = node.weight * prior.density(node.theta, node.omtheta);
    const double post_w = prior_w * std::exp(ll);
    out.theta.push_back(node.theta);
    out.omtheta.push_back(node.omtheta);
    out.post_w.push_back(post_w);
    post_total += post_w;
    double hyp_w = 0.0;
    if (u != nullptr) {
      for (const auto& seg : u->segments)
        if (node.theta >= seg.lo && node.theta <= seg.hi) {
          hyp_w = prior_w;
          break;
        }
    }
    out.hyp_w.push_back(hyp_w);
    hyp_total += hyp_w;
  }
  if (!(post_total > 0.0)) throw LossError("posterior mass vanished on the grid");
  if (u != nullptr && !(hyp_total > 0.0))
    throw ModelError("hypothesis has zero prior mass");
  for (auto& w : out.post_w) w /= post_total;
  if (u != nullptr)
    for (auto& w : out.hyp_w) w /= hyp_total;
  return out;
}

}  // namespace detail

// hat loss for a generic finite-alphabet model by full enumeration of
// length-m futures
inline double generic_loss_hat_brute(const ParametricModel& model,
                                     const Prior& prior,
                                     const std::vector<std::int64_t>& counts,
                                     const Hypothesis& h,
                                     const DistanceKind& kind, std::int64_t m,
                                     int level = 4) {
  double seq_count = std::pow(double(model.alphabet), double(m));
  if (seq_count > double(1 << 24))
    throw LossError("brute force needs |X|^m <= 2^24");
  const auto grid = detail::generic_grid(model, prior, counts, h, level);
  const std::size_t nodes = grid.theta.size();

  std::vector<int> digits(std::size_t(m), 0);
  double total = 0.0;
  while (true) {
    double pD = 0.0, pT = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      double lp = 0.0;
      for (std::int64_t k = 0; k < m; ++k)
        lp += model.log_lik(digits[std::size_t(k)], grid.theta[i], grid.omtheta[i]);
      const double p = std::exp(lp);
      pD += grid.post_w[i] * p;
      if (!grid.simple) pT += grid.hyp_w[i] * p;
    }
    if (grid.simple) {
      double lp = 0.0;
      for (std::int64_t k = 0; k < m; ++k)
        lp += model.log_lik(digits[std::size_t(k)], grid.simple_theta,
                            1.0 - grid.simple_theta);
      pT = std::exp(lp);
    }
    total += eval_pointwise(kind, pT, pD);

    std::int64_t pos = m - 1;
    while (pos >= 0 && digits[std::size_t(pos)] == model.alphabet - 1)
      digits[std::size_t(pos--)] = 0;
    if (pos < 0) break;
    ++digits[std::size_t(pos)];
  }
  return total;
}

// hat loss via the model's sufficient-statistic kernel: sum over statistic
// values of h_beta(t) * kernel(g(t|Theta), g(t|D))
inline double generic_loss_hat_tsum(const ParametricModel& model,
                                    const Prior& prior,
                                    const std::vector<std::int64_t>& counts,
                                    const Hypothesis& h,
                                    const DistanceKind& kind, std::int64_t m,
                                    int level = 4) {
  if (!model.kernel)
    throw LossError("sufficient-statistic method needs a model kernel");
  const auto& kernel = *model.kernel;
  if (!kernel.unit_h && !kernel.log_h)
    throw LossError("the distance scaling path needs the kernel weight h, which the model does not supply");
  const double beta = scaling_exponent(kind);
  const auto grid = detail::generic_grid(model, prior, counts, h, level);
  const std::size_t nodes = grid.theta.size();

  double total = 0.0;
  for (std::int64_t t = 0; t < kernel.t_count(m); ++t) {
    double gD = 0.0, gT = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      const double g = std::exp(kernel.log_g(t, m, grid.theta[i], grid.omtheta[i]));
      gD += grid.post_w[i] * g;
      if (!grid.simple) gT += grid.hyp_w[i] * g;
    }
    if (grid.simple)
      gT = std::exp(kernel.log_g(t, m, grid.simple_theta, 1.0 - grid.simple_theta));
    total += std::exp(kernel.log_h(t, m, beta)) * eval_pointwise(kind, gT, gD);
  }
  return total;
}

// ---------------------------------------------------------------------------
// cross-method verification helpers

// method agreement between the count reduction and brute-force enumeration
struct MethodAgreementRow {
  std::string distance;
  std::int64_t m = 0;
  CountSummary data;
  std::string hypothesis;
  double sufficient_stat = 0.0;
  double brute_force = 0.0;
  double abs_diff = 0.0;
};

inline std::vector<MethodAgreementRow> verify_sufficient_stat(
    const Prior& prior, const std::vector<CountSummary>& datasets,
    const std::vector<Hypothesis>& hypotheses,
    const std::vector<DistanceKind>& kinds, std::int64_t max_m) {
  std::vector<MethodAgreementRow> rows;
  for (const auto& kind : kinds)
    for (std::int64_t m = 1; m <= max_m; ++m)
      for (std::size_t i = 0; i < datasets.size() && i < hypotheses.size(); ++i) {
        LossSpec spec;
        spec.which = LossWhich::hat;
        spec.m = m;
        spec.distance = kind;
        spec.method = LossMethod::sufficient_stat;
        const double fast = loss(prior, datasets[i], hypotheses[i], spec);
        spec.method = LossMethod::brute_force;
        const double slow = loss(prior, datasets[i], hypotheses[i], spec);
        MethodAgreementRow row;
        row.distance = kind.name();
        row.m = m;
        row.data = datasets[i];
        row.hypothesis = hypotheses[i].describe();
        row.sufficient_stat = fast;
        row.brute_force = slow;
        row.abs_diff = std::fabs(fast - slow);
        rows.push_back(row);
      }
  return rows;
}

// hat and tilde losses differ by a hypothesis-independent constant for the
// squared and reverse-KL distances
struct ConstantGapReport {
  std::vector<std::string> hypotheses;
  std::vector<double> hat;
  std::vector<double> tilde;
  std::vector<double> gap;
  double gap_mean = 0.0;
  double gap_stddev = 0.0;
  bool argmin_agree = false;
};

inline ConstantGapReport verify_constant_gap(const Prior& prior,
                                             const CountSummary& data,
                                             const std::vector<Hypothesis>& hs,
                                             const DistanceKind& kind,
                                             std::int64_t m, int grid_level = 5) {
  ConstantGapReport rep;
  LossSpec spec;
  spec.m = m;
  spec.distance = kind;
  spec.method = LossMethod::sufficient_stat;
  spec.grid_level = grid_level;
  std::size_t amin_hat = 0, amin_tilde = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    spec.which = LossWhich::hat;
    const double lh = loss(prior, data, hs[i], spec);
    spec.which = LossWhich::tilde;
    const double lt = loss(prior, data, hs[i], spec);
    rep.hypotheses.push_back(hs[i].describe());
    rep.hat.push_back(lh);
    rep.tilde.push_back(lt);
    rep.gap.push_back(lh - lt);
    if (lh < rep.hat[amin_hat]) amin_hat = i;
    if (lt < rep.tilde[amin_tilde]) amin_tilde = i;
  }
  for (double g : rep.gap) rep.gap_mean += g;
  rep.gap_mean /= double(rep.gap.size());
  for (double g : rep.gap)
    rep.gap_stddev += (g - rep.gap_mean) * (g - rep.gap_mean);
  rep.gap_stddev = std::sqrt(rep.gap_stddev / double(rep.gap.size()));
  rep.argmin_agree = amin_hat == amin_tilde;
  return rep;
}

// offline tilde losses are m times the 1-batch tilde loss
struct OfflineScalingRow {
  std::int64_t m = 0;
  double offline = 0.0;
  double m_times_single = 0.0;
  double abs_diff = 0.0;
};

inline std::vector<OfflineScalingRow> verify_offline_scaling(
    const Prior& prior, const CountSummary& data, const Hypothesis& h,
    const DistanceKind& kind, const std::vector<std::int64_t>& horizons,
    int grid_level = 4) {
  LossSpec single;
  single.which = LossWhich::tilde;
  single.m = 1;
  single.distance = kind;
  single.grid_level = grid_level;
  const double one = loss(prior, data, h, single);

  std::vector<OfflineScalingRow> rows;
  for (std::int64_t m : horizons) {
    LossSpec spec = single;
    spec.mode = LossMode::offline;
    spec.m = m;
    OfflineScalingRow row;
    row.m = m;
    row.offline = loss(prior, data, h, spec);
    row.m_times_single = double(m) * one;
    row.abs_diff = std::fabs(row.offline - row.m_times_single);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace phi
