#pragma once

// Hypothesis-class enumeration and argmin/argmax selection. Classes
// materialize eagerly (capped at 10^6 members) so the loss table in the
// report is a complete audit trail. Ties are reported, the winner is the
// first materialized member among them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "phi/loss.hpp"
#include "phi/model.hpp"

namespace phi {

struct SelectError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::int64_t kClassCap = 1000000;

struct ExplicitClass {
  std::vector<Hypothesis> members;
};

struct PointGridClass {
  std::int64_t resolution = 1;  // points k/resolution, k = 0..resolution
};

struct IntervalGridClass {
  std::int64_t center_resolution = 1;
  std::int64_t width_resolution = 1;
  double min_width = 0.0;  // must be > 0 so members keep positive prior mass
};

struct MixtureGridClass {
  std::int64_t components = 2;       // equal-weight points per member
  std::int64_t point_resolution = 1;
};

class HypothesisClass {
 public:
  using Value = std::variant<ExplicitClass, PointGridClass, IntervalGridClass,
                             MixtureGridClass>;

  HypothesisClass(Value v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static HypothesisClass explicit_list(std::vector<Hypothesis> members) {
    return HypothesisClass(ExplicitClass{std::move(members)});
  }
  static HypothesisClass point_grid(std::int64_t resolution) {
    return HypothesisClass(PointGridClass{resolution});
  }
  static HypothesisClass interval_grid(std::int64_t center_res,
                                       std::int64_t width_res,
                                       double min_width) {
    return HypothesisClass(IntervalGridClass{center_res, width_res, min_width});
  }
  static HypothesisClass mixture_grid(std::int64_t components,
                                      std::int64_t point_res) {
    return HypothesisClass(MixtureGridClass{components, point_res});
  }

  // "point:0.5|interval:0,1" explicit list, or one grid spec:
  // "pointgrid:R", "intervalgrid:CR,WR,MINW", "mixturegrid:L,R"
  static HypothesisClass parse(const std::string& text) {
    if (text.rfind("pointgrid:", 0) == 0)
      return point_grid(std::stoll(text.substr(10)));
    if (text.rfind("intervalgrid:", 0) == 0) {
      const auto parts = detail::split(text.substr(13), ',');
      if (parts.size() != 3)
        throw SelectError("intervalgrid needs center res, width res, min width");
      return interval_grid(std::stoll(parts[0]), std::stoll(parts[1]),
                           detail::parse_full_double(parts[2], "min width"));
    }
    if (text.rfind("mixturegrid:", 0) == 0) {
      const auto parts = detail::split(text.substr(12), ',');
      if (parts.size() != 2)
        throw SelectError("mixturegrid needs component count and point res");
      return mixture_grid(std::stoll(parts[0]), std::stoll(parts[1]));
    }
    std::vector<Hypothesis> members;
    for (const auto& piece : detail::split(text, '|'))
      members.push_back(Hypothesis::parse(piece));
    return explicit_list(std::move(members));
  }

  std::vector<Hypothesis> materialize() const;

  const Value& value() const { return v_; }

 private:
  Value v_;
};

namespace detail {

inline void check_class_size(double projected) {
  if (projected > double(kClassCap))
    throw SelectError("hypothesis class materializes to more than 10^6 members");
}

}  // namespace detail

inline std::vector<Hypothesis> HypothesisClass::materialize() const {
  std::vector<Hypothesis> out;
  if (auto* e = std::get_if<ExplicitClass>(&v_)) {
    detail::check_class_size(double(e->members.size()));
    out = e->members;
  } else if (auto* p = std::get_if<PointGridClass>(&v_)) {
    if (p->resolution < 1) throw SelectError("point grid resolution must be >= 1");
    detail::check_class_size(double(p->resolution) + 1.0);
    out.reserve(std::size_t(p->resolution) + 1);
    for (std::int64_t k = 0; k <= p->resolution; ++k)
      out.push_back(Hypothesis::point(double(k) / double(p->resolution)));
  } else if (auto* g = std::get_if<IntervalGridClass>(&v_)) {
    if (g->center_resolution < 1 || g->width_resolution < 1)
      throw SelectError("interval grid resolutions must be >= 1");
    if (!(g->min_width > 0.0))
      throw SelectError("interval grid min width must be > 0");
    detail::check_class_size(double(g->center_resolution + 1) *
                             double(g->width_resolution));
    std::set<std::pair<double, double>> seen;
    for (std::int64_t j = 0; j <= g->center_resolution; ++j) {
      const double c = double(j) / double(g->center_resolution);
      for (std::int64_t i = 1; i <= g->width_resolution; ++i) {
        const double w = double(i) / double(g->width_resolution);
        if (w < g->min_width) continue;
        const double lo = std::max(0.0, c - w / 2.0);
        const double hi = std::min(1.0, c + w / 2.0);
        if (!(hi > lo)) continue;
        if (!seen.insert({lo, hi}).second) continue;
        out.push_back(Hypothesis::interval(lo, hi));
      }
    }
  } else if (auto* x = std::get_if<MixtureGridClass>(&v_)) {
    if (x->components < 1 || x->point_resolution < 1)
      throw SelectError("mixture grid needs components >= 1 and resolution >= 1");
    const std::int64_t points = x->point_resolution + 1;
    if (x->components > points)
      throw SelectError("mixture grid components exceed the point grid size");
    double projected = 1.0;
    for (std::int64_t i = 0; i < x->components; ++i)
      projected *= double(points - i) / double(i + 1);
    detail::check_class_size(projected);

    std::vector<std::int64_t> idx(std::size_t(x->components));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = std::int64_t(i);
    const double w = 1.0 / double(x->components);
    while (true) {
      Mixture mix;
      for (std::int64_t k : idx) {
        mix.points.push_back(double(k) / double(x->point_resolution));
        mix.weights.push_back(w);
      }
      out.push_back(Hypothesis(mix));
      // next lexicographic combination
      std::int64_t pos = x->components - 1;
      while (pos >= 0 && idx[std::size_t(pos)] == points - x->components + pos)
        --pos;
      if (pos < 0) break;
      ++idx[std::size_t(pos)];
      for (std::int64_t q = pos + 1; q < x->components; ++q)
        idx[std::size_t(q)] = idx[std::size_t(q - 1)] + 1;
    }
  }
  if (out.empty()) throw SelectError("hypothesis class is empty");
  return out;
}

struct SelectionReport {
  std::vector<Hypothesis> members;  // materialization order
  std::vector<double> losses;       // aligned with members
  std::size_t winner_index = 0;
  std::vector<std::size_t> tie_indices;  // all members within tie tolerance

  const Hypothesis& winner() const { return members[winner_index]; }
  double winner_loss() const { return losses[winner_index]; }
};

struct SelectOptions {
  double tie_rel = 1e-10;
  int threads = 1;
};

namespace detail {

inline bool is_tie(double v, double best, double rel) {
  if (std::isinf(best)) return std::isinf(v) && v == best;
  return std::fabs(v - best) <= rel * std::fabs(best);
}

// evaluate members[lo, hi) into losses; any member failure is recorded and
// rethrown with its description by the caller
template <typename Eval>
void eval_range(const std::vector<Hypothesis>& members, std::vector<double>& losses,
                std::size_t lo, std::size_t hi, const Eval& eval,
                std::string& error) {
  for (std::size_t i = lo; i < hi; ++i) {
    try {
      losses[i] = eval(members[i], i);
    } catch (const std::exception& e) {
      if (error.empty())
        error = "evaluating " + members[i].describe() + ": " + e.what();
      return;
    }
  }
}

template <typename Eval>
SelectionReport run_selection(std::vector<Hypothesis> members, const Eval& eval,
                              const SelectOptions& opt) {
  SelectionReport rep;
  rep.members = std::move(members);
  rep.losses.assign(rep.members.size(),
                    std::numeric_limits<double>::quiet_NaN());

  const int threads =
      std::max(1, std::min<int>(opt.threads, int(rep.members.size())));
  std::vector<std::string> errors{std::size_t(threads), std::string{}};
  if (threads == 1) {
    eval_range(rep.members, rep.losses, 0, rep.members.size(), eval, errors[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (rep.members.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = std::size_t(t) * chunk;
      const std::size_t hi = std::min(rep.members.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi, t] {
        eval_range(rep.members, rep.losses, lo, hi, eval, errors[std::size_t(t)]);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw SelectError(e);

  rep.winner_index = 0;
  for (std::size_t i = 1; i < rep.losses.size(); ++i)
    if (rep.losses[i] < rep.losses[rep.winner_index]) rep.winner_index = i;
  const double best = rep.losses[rep.winner_index];
  for (std::size_t i = 0; i < rep.losses.size(); ++i)
    if (is_tie(rep.losses[i], best, opt.tie_rel)) rep.tie_indices.push_back(i);
  return rep;
}

}  // namespace detail

// PHI selection: exact argmin of the specified loss over the materialized
// class, with the full loss table and tie set
inline SelectionReport phi_select(const Prior& prior, const CountSummary& data,
                                  const HypothesisClass& cls, const LossSpec& spec,
                                  const SelectOptions& opt = {}) {
  std::vector<Hypothesis> members = cls.materialize();

  // point-only tilde sweeps share the posterior grid across members
  bool all_points = spec.which == LossWhich::tilde &&
                    spec.mode == LossMode::batch &&
                    (spec.method == LossMethod::automatic ||
                     spec.method == LossMethod::sufficient_stat);
  if (all_points)
    for (const auto& h : members)
      if (!std::holds_alternative<Simple>(h.value())) {
        all_points = false;
        break;
      }

  if (all_points) {
    std::vector<double> thetas(members.size());
    for (std::size_t i = 0; i < members.size(); ++i)
      thetas[i] = std::get<Simple>(members[i].value()).theta;

    auto sweep_all = [&](int level) {
      const TildePointSweep sweep(prior, data, spec.m, spec.distance, level);
      std::vector<double> out(thetas.size());
      for (std::size_t i = 0; i < thetas.size(); ++i) out[i] = sweep.eval(thetas[i]);
      return out;
    };
    std::vector<double> vals;
    if (spec.grid_level >= 0) {
      vals = sweep_all(spec.grid_level);
    } else {
      std::vector<double> prev;
      for (int level = 2; level <= 8; ++level) {
        vals = sweep_all(level);
        if (!prev.empty()) {
          bool settled = true;
          for (std::size_t i = 0; i < vals.size() && settled; ++i) {
            if (std::isinf(vals[i]) && vals[i] == prev[i]) continue;
            settled = std::fabs(vals[i] - prev[i]) <=
                      1e-9 * (1.0 + std::fabs(vals[i]));
          }
          if (settled) break;
        }
        prev = vals;
      }
    }
    return detail::run_selection(
        std::move(members),
        [&](const Hypothesis&, std::size_t i) { return vals[i]; }, opt);
  }

  return detail::run_selection(
      std::move(members),
      [&](const Hypothesis& h, std::size_t) { return loss(prior, data, h, spec); },
      opt);
}

// argmax of posterior mass; an all-Simple class compares posterior densities
// instead, since every point carries zero mass
inline Hypothesis map_select(const Prior& prior, const CountSummary& data,
                             const HypothesisClass& cls) {
  const std::vector<Hypothesis> members = cls.materialize();
  bool any_union = false, any_simple = false, any_mixture = false;
  for (const auto& h : members) {
    if (std::holds_alternative<IntervalUnion>(h.value())) any_union = true;
    else if (std::holds_alternative<Simple>(h.value())) any_simple = true;
    else any_mixture = true;
  }

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  if (!any_union && any_simple && !any_mixture) {
    const Posterior post = make_posterior(prior, data);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const double theta = std::get<Simple>(members[i].value()).theta;
      const double score = post.density(theta, 1.0 - theta);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return members[best];
  }
  if (!any_union)
    throw SelectError("MAP undefined across densities and masses");

  const Posterior post = make_posterior(prior, data);
  for (std::size_t i = 0; i < members.size(); ++i) {
    // points and finite mixtures are null sets under the posterior
    const double score = std::holds_alternative<IntervalUnion>(members[i].value())
                             ? hypothesis_posterior_mass(post, members[i])
                             : 0.0;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return members[best];
}

// argmax of the composite likelihood of the observed data
inline Hypothesis ml_select(const Prior& prior, const CountSummary& data,
                            const HypothesisClass& cls) {
  const std::vector<Hypothesis> members = cls.materialize();
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double score = log_composite_likelihood(members[i], prior, data);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return members[best];
}

}  // namespace phi
