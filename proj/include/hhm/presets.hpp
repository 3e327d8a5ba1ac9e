#pragma once

#include "analytic.hpp"
#include "elliptic.hpp"
#include "flow.hpp"
#include "grid.hpp"
#include "metric.hpp"
#include "operators.hpp"
#include "target.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace hhm {

// Everything a map experiment needs on its full grid.
struct MapPreset {
  std::string id;
  ChartMetric metric;
  TargetManifold target;
  MapField h;                               // initial/boundary map on the full grid
  std::function<double(double)> barrier;    // decay barrier for V and rho
  ExhaustionSchedule schedule;
  ExhaustionSchedule schedule_alt;          // uniqueness cross-check
  double flow_level = 0;                    // level domain of the flow runs
  double mu = 0, mu_p = 0;
};

// Grid refinement k halves every spacing.
struct TwoEndsParams {
  int m = 2;
  double delta = 0.25;
  double mu = 5.5;          // sigma(h) in C^0_mu, delta (mu - 2) < 1
  double q1 = 0.6, q2 = 0.3;
  int refine = 0;
  int halvings = 22;
  int levels = 22;
  int flow_level = 3;
};

// h(s) = (q1 s, q2 (1 - s^2)) into the unit ball with metric (1-r^2)^{-2}
inline MapField twoends_initial_map(GridPtr g, double q1, double q2) {
  Mat v(2, long(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double s = (*g)[i];
    v(0, long(i)) = q1 * s;
    v(1, long(i)) = q2 * (1 - s * s);
  }
  return MapField(g, MapKind::curve, 2, std::move(v));
}

inline MapPreset twoends_poincare_preset(const TwoEndsParams& p = {}) {
  if (!(p.delta * (p.mu - 2) < 1) || !(p.mu > 2)) throw std::invalid_argument("two-ends preset: need mu > 2, delta(mu-2) < 1");
  MapPreset P{"two-ends",
              ChartMetric::two_ends(p.m, p.delta),
              TargetManifold::poincare_ball(2, 1.0),
              {},
              {},
              {},
              {},
              0,
              p.mu,
              p.mu - 2};
  const double h = 1.0 / (32 << p.refine);
  const GridPtr g = make_grid(Grid1D::interval_graded(h, 4 << p.refine, p.halvings));
  P.h = twoends_initial_map(g, p.q1, p.q2);
  P.barrier = twoends_barrier(P.mu_p, p.delta);
  P.schedule = twoends_schedule(p.levels);
  P.schedule_alt = twoends_schedule(p.levels - 1, 0.5);
  P.flow_level = 1 - std::exp2(-p.flow_level - 1);
  return P;
}

struct ConformalParams {
  int refine = 0;
  double R_max = std::exp2(24);
  int levels = 23;
  double flow_level = 32;
  double alpha = 1;         // log barrier exponent
};

// conformal-Cm, m = 2, outside the unit ball, into the warped planes,
// h(z) = z/(1+|z|^2) in the equivariant form a(r) = 1/(1+r^2)
inline MapPreset conformal_g0_preset(const ConformalParams& p = {}) {
  MapPreset P{"conformal-Cm",
              ChartMetric::conformal(2),
              TargetManifold::warped_planes(2),
              {},
              {},
              {},
              {},
              p.flow_level,
              p.alpha + 2,
              p.alpha};
  const double h = 1.0 / (16 << p.refine);
  const GridPtr g = make_grid(Grid1D::radial_graded(1.0, 2.0, p.R_max, h, 8 << p.refine, 4));
  Mat a(1, long(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) a(0, long(i)) = 1.0 / (1 + (*g)[i] * (*g)[i]);
  P.h = MapField(g, MapKind::equivariant, 4, std::move(a));
  P.barrier = log_barrier(log_barrier_A(4, p.alpha), p.alpha);
  P.schedule = radial_schedule(2.0, p.levels);
  P.schedule.reference = 2.0;
  P.schedule_alt = radial_schedule(2.0, p.levels - 1, 0.5);
  P.schedule_alt.reference = 2.0;
  return P;
}

// V from 4 ||sigma(h)||
inline ExhaustionResult preset_comparison(const MapPreset& P) {
  const ScalarField s = tension_norm(P.metric, P.target, P.h);
  std::vector<double> src(s.v);
  for (double& x : src) x *= 4;
  return comparison_function(P.metric, ScalarField(s.grid, std::move(src)), P.barrier, P.schedule);
}

// Dirichlet problem of the flow level with V restricted
inline MapProblem preset_level_problem(const MapPreset& P, const ScalarField& V, double level) {
  const Grid1D& G = *P.h.grid;
  const auto [lo, hi] = level_range(G, level);
  const GridPtr sub = make_grid(G.slice(lo, hi));
  return MapProblem{P.metric, P.target, slice_map(P.h, sub, lo),
                    ScalarField(sub, std::vector<double>(V.v.begin() + long(lo), V.v.begin() + long(hi) + 1))};
}

// conformal-Cm decay experiment: M = C^m with the origin, flat target R,
// h tabulated so that its discrete tension is (1 + ln(1+r^2))^{-mu}
struct DecayParams {
  int m = 2;
  double mu = 2;
  double log_R = 60;
  int refine = 0;
};

inline MapProblem conformal_decay_problem(const DecayParams& p = {}) {
  const ChartMetric M = ChartMetric::conformal(p.m);
  const double h = 1.0 / (32 << p.refine);
  const GridPtr g = make_grid(Grid1D::radial_graded(0.0, 2.0, std::exp(p.log_R), h, 16 << p.refine, 2 * p.m));
  // 1/4 Lap~ u = tau with u = 0 at the outer node
  const DiscreteOperator op = assemble_operator(M, g);
  std::vector<double> rhs(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double r = (*g)[i];
    rhs[i] = -4 * std::pow(1 + std::log1p(r * r), -p.mu);
  }
  const ScalarField u = solve_dirichlet(op, ScalarField(g, rhs));
  Mat vals(1, long(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) vals(0, long(i)) = u[i];
  return MapProblem{M, TargetManifold::flat(1), MapField(g, MapKind::radial, 1, std::move(vals)), std::nullopt};
}

} // namespace hhm
