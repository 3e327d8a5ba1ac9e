#include <hhm/parabolic.hpp>
#include <hhm/presets.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace hhm;

namespace {

MapProblem flat_radial_problem(int cells) {
  const GridPtr g = make_grid(Grid1D::radial_graded(1, 2, 64, 1.0 / cells, 8, 4));
  Mat v(2, long(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double r = (*g)[i];
    v(0, long(i)) = std::cos(r);
    v(1, long(i)) = r / (1 + r * r);
  }
  return {ChartMetric::conformal(2), TargetManifold::flat(2), MapField(g, MapKind::radial, 2, v), std::nullopt};
}

MapProblem twoends_flow_problem(int refine) {
  TwoEndsParams p;
  p.refine = refine;
  const MapPreset P = twoends_poincare_preset(p);
  const ExhaustionResult V = preset_comparison(P);
  return preset_level_problem(P, V.limit, P.flow_level);
}

} // namespace

TEST(FlowStep, AffineDataIsFixed) {
  const GridPtr g = make_grid(Grid1D::interval_graded(1.0 / 16, 4, 6));
  Mat v(2, long(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) {
    v(0, long(i)) = 0.1 * (*g)[i];
    v(1, long(i)) = 0.2;
  }
  const MapProblem P{ChartMetric::two_ends(2, 0.25), TargetManifold::flat(2), MapField(g, MapKind::curve, 2, v),
                     std::nullopt};
  FlowState s = flow_init(P);
  EXPECT_LT(s.mon.velocity, 1e-12);
  for (int k = 0; k < 5; ++k) s = flow_step(P, s);
  EXPECT_LT((s.u.vals - v).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(FlowStep, FlatTargetIsBackwardEuler) {
  // (I - dt/4 Lap~) u1 = u0  <=>  (-Lap~ + 4/dt) u1 = (4/dt) u0
  const MapProblem P = flat_radial_problem(16);
  FlowOptions o;
  o.dt0 = 0.05;
  const FlowState s1 = flow_step(P, flow_init(P, o), o);
  ASSERT_NEAR(s1.t, 0.05, 1e-15);
  const GridPtr g = P.h.grid;
  const DiscreteOperator op = assemble_operator(P.metric, g, 4 / 0.05);
  for (long c = 0; c < 2; ++c) {
    std::vector<double> rhs(g->size()), bc(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
      rhs[i] = 4 / 0.05 * P.h.vals(c, long(i));
      bc[i] = P.h.vals(c, long(i));
    }
    const ScalarField u = solve_dirichlet(op, ScalarField(g, rhs), ScalarField(g, bc));
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(s1.u.vals(c, long(i)), u[i], 1e-12);
  }
}

TEST(FlowStep, InitialMonitorIsTensionOfData) {
  const MapProblem P = twoends_flow_problem(0);
  const FlowState s = flow_init(P);
  const ScalarField tn = tension_norm(P.metric, P.target, P.h);
  double m = 0;
  for (double x : tn.v) m = std::max(m, x);
  EXPECT_DOUBLE_EQ(s.mon.velocity, m);
  EXPECT_EQ(s.mon.rho_over_V, 0.0);
}

TEST(FlowStep, StepClipsToStopTime) {
  const MapProblem P = twoends_flow_problem(0);
  FlowOptions o;
  o.dt0 = 1;
  const FlowState s = flow_step(P, flow_init(P, o), o, 1e-4);
  EXPECT_EQ(s.t, 1e-4);
}

TEST(Trajectory, VelocityNonincreasingAndRhoBelowV) {
  for (int refine = 0; refine < 3; ++refine) {
    const MapProblem P = twoends_flow_problem(refine);
    IntegrateOptions o;
    o.T = 40;
    const FlowTrajectory tr = integrate(P, o);
    EXPECT_LE(tr.max_velocity_ratio, 1 + 1e-8) << refine;
    EXPECT_EQ(tr.max_velocity_increase, 0.0) << refine;
    // ρ ≤ V up to O(h^2); observed margin is large
    EXPECT_LE(tr.max_rho_over_V, 1 + 1e-3) << refine;
    EXPECT_GE(tr.slabs.size(), 19u);
    EXPECT_TRUE(slabs_bounded(tr.slabs));
  }
}

TEST(Trajectory, ConformalPresetMonitors) {
  const MapPreset Pr = conformal_g0_preset();
  const ExhaustionResult V = preset_comparison(Pr);
  const MapProblem P = preset_level_problem(Pr, V.limit, Pr.flow_level);
  IntegrateOptions o;
  o.T = 40;
  const FlowTrajectory tr = integrate(P, o);
  EXPECT_LE(tr.max_velocity_ratio, 1 + 1e-8);
  EXPECT_LE(tr.max_rho_over_V, 1.0);
  EXPECT_TRUE(slabs_bounded(tr.slabs));
}

TEST(Trajectory, StationaryLimitIsEllipticSolution) {
  const MapProblem P = twoends_flow_problem(0);
  IntegrateOptions o;
  o.T = 1e6;
  o.stationary_tol = 1e-8;
  const FlowTrajectory tr = integrate(P, o);
  const StationarityReport st = stationarity(P, tr, 1e-8);
  EXPECT_TRUE(st.converged);
  EXPECT_LT(st.elliptic_diff, 1e-7);  // 10x tol
}

TEST(Trajectory, StationaryStartIsFlagged) {
  const GridPtr g = make_grid(Grid1D::interval_graded(1.0 / 16, 4, 6));
  const Mat v = Mat::Constant(1, long(g->size()), 0.25);
  const MapProblem P{ChartMetric::two_ends(2, 0.25), TargetManifold::flat(1), MapField(g, MapKind::curve, 1, v),
                     std::nullopt};
  const FlowTrajectory tr = integrate(P);
  EXPECT_TRUE(tr.stationary);
  EXPECT_EQ(tr.steps, 0);
  const DecayFit f = fit_decay(tr.rows, 0);
  EXPECT_TRUE(f.constant_zero);
  EXPECT_TRUE(std::isnan(f.exponent));
}

TEST(Decay, FitRecoversSyntheticPowerLaw) {
  std::vector<TrajectoryRow> rows;
  for (int k = 0; k < 40; ++k) {
    const double t = 0.5 * std::exp2(k / 4.0);
    rows.push_back({t, 3 * std::pow(t, -1.7), 0, 0, 0});
  }
  const DecayFit f = fit_decay(rows, 1, 100);
  EXPECT_NEAR(f.exponent, 1.7, 1e-12);
  EXPECT_NEAR(f.constant, 3, 1e-11);
  EXPECT_TRUE(f.enough);
  EXPECT_FALSE(f.constant_zero);
}

TEST(Decay, ConformalVelocityDecaysAtMu) {
  DecayParams d;
  const MapProblem P = conformal_decay_problem(d);
  IntegrateOptions o;
  o.T = 100;
  o.flow.dt_rel = 0.05;
  o.flow.t_floor = 0.2;
  o.flow.dt_max = 1;
  o.fit_t_min = 10;
  o.fit_t_max = 100;
  const FlowTrajectory tr = integrate(P, o);
  EXPECT_TRUE(tr.fit.enough);
  EXPECT_NEAR(tr.fit.exponent, d.mu, 0.3);
  EXPECT_LE(tr.max_velocity_ratio, 1 + 1e-8);
}

TEST(Decay, SlabsBoundedRule) {
  EXPECT_TRUE(slabs_bounded({1, 2, 1.5, 1}));
  EXPECT_FALSE(slabs_bounded({1, 1, 1, 3}));
  EXPECT_FALSE(slabs_bounded({1}));
}
