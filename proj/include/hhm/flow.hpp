#pragma once

#include "elliptic.hpp"
#include "operators.hpp"
#include "target.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

// ------------------------------------------------------------ field helpers

inline ScalarField slice_field(const ScalarField& f, std::size_t lo, std::size_t hi) {
  return ScalarField(make_grid(f.grid->slice(lo, hi)),
                     std::vector<double>(f.v.begin() + long(lo), f.v.begin() + long(hi) + 1));
}

inline MapField slice_map(const MapField& u, GridPtr sub, std::size_t lo) {
  return MapField(sub, u.kind, u.target_dim, u.vals.middleCols(long(lo), long(sub->size())));
}

// integral over the level domain with respect to dvol = f^m dx:
// radial |S^{n-1}| r^{n-1} f^m dr, two-ends f^m ds (unit lattice volume)
inline double volume_integral(const ChartMetric& metric, const ScalarField& e) {
  const Grid1D& g = *e.grid;
  const int m = metric.m();
  const bool radial = g.topology() == Topology::radial;
  const double n = metric.real_dim();
  const double sphere = radial ? 2 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n) : 1.0;
  auto w = [&](std::size_t i) {
    const double x = g[i];
    double v = std::pow(metric.f(x), m) * e[i];
    if (radial) v *= sphere * std::pow(x, n - 1);
    return v;
  };
  double s = 0;
  for (std::size_t i = 1; i < g.size(); ++i) s += 0.5 * (g[i] - g[i - 1]) * (w(i) + w(i - 1));
  return s;
}

// ------------------------------------------------------------ problem and state

// Dirichlet problem for maps on one level domain: boundary values from h.
struct MapProblem {
  ChartMetric metric;
  TargetManifold target;
  MapField h;
  std::optional<ScalarField> V;  // comparison function on the same grid

  GridPtr grid() const { return h.grid; }
};

struct FlowMonitors {
  double velocity = 0;      // max_x ||sigma(u)||_g
  double rho_over_V = 0;    // sup rho(u, h) / V, NaN without V
  double energy = 0;        // int_Omega e(u) dvol
};

struct FlowOptions {
  double dt0 = 1e-3;
  double growth = 1.1;      // geometric dt growth per step
  double theta = 0.5;       // safeguard factor of the explicit part
  double dt_max = std::numeric_limits<double>::infinity();
  double dt_rel = std::numeric_limits<double>::infinity();  // dt <= dt_rel max(t, t_floor)
  double t_floor = 1;
};

struct FlowState {
  double t = 0;
  double dt = 0;            // next candidate step
  long steps = 0;
  MapField u;
  MapField sigma;           // cached sigma(u)
  FlowMonitors mon;
};

namespace detail {

inline int linear_dim(const MapField& u) {
  const Grid1D& g = *u.grid;
  if (u.kind == MapKind::equivariant) return g.real_dim() + 2;
  return g.topology() == Topology::radial ? g.real_dim() : 1;
}

// explicit part (4f)^{-1} Gamma(u)(du, du), zero on boundary nodes
inline Mat explicit_part(const MapProblem& P, const MapField& u) {
  const Grid1D& g = *u.grid;
  Mat G = Mat::Zero(u.vals.rows(), u.vals.cols());
  if (P.target.kind() == TargetKind::flat) return G;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    G.col(long(i)) = christoffel_part(P.target, u, i) / (4.0 * P.metric.f(g[i]));
  }
  return G;
}

inline FlowMonitors monitors(const MapProblem& P, const MapField& u, const MapField& sigma) {
  FlowMonitors m;
  const ScalarField vn = vector_norm(P.target, u, sigma);
  for (double x : vn.v) m.velocity = std::max(m.velocity, x);
  m.rho_over_V = std::numeric_limits<double>::quiet_NaN();
  if (P.V) {
    const ScalarField r = rho(P.target, u, P.h);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] == 0.0) continue;
      const double v = (*P.V)[i];
      s = std::max(s, v > 0 ? r[i] / v : std::numeric_limits<double>::infinity());
    }
    m.rho_over_V = s;
  }
  m.energy = volume_integral(P.metric, energy_density(P.metric, P.target, u));
  return m;
}

// Jacobian of a nodewise 3-point residual by finite differences with
// 3 x comps colours. Rows and columns ordered node-major (i * comps + c).
template <class Residual>
SpMat colour_jacobian(const MapField& u, const Mat& R0, Residual&& R, const std::vector<bool>& frozen) {
  const long C = u.vals.rows(), N = u.vals.cols();
  std::vector<Triplet> t;
  for (long c = 0; c < C; ++c)
    for (long colour = 0; colour < 3; ++colour) {
      MapField w = u;
      std::vector<double> eps(std::size_t(N), 0.0);
      for (long j = colour; j < N; j += 3) {
        if (frozen[std::size_t(j)]) continue;
        eps[std::size_t(j)] = 1e-7 * std::max(1.0, std::abs(u.vals(c, j)));
        w.vals(c, j) += eps[std::size_t(j)];
      }
      const Mat Rp = R(w);
      for (long i = 0; i < N; ++i)
        for (long j = std::max(0L, i - 1); j <= std::min(N - 1, i + 1); ++j) {
          if ((j - colour) % 3 != 0 || eps[std::size_t(j)] == 0.0) continue;
          for (long r = 0; r < C; ++r) {
            const double d = (Rp(r, i) - R0(r, i)) / eps[std::size_t(j)];
            if (d != 0.0) t.emplace_back(i * C + r, j * C + c, d);
          }
        }
    }
  SpMat J(N * C, N * C);
  J.setFromTriplets(t.begin(), t.end());
  return J;
}

inline std::vector<bool> boundary_mask(const Grid1D& g) {
  std::vector<bool> b(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) b[i] = g.is_boundary(i);
  return b;
}

} // namespace detail

inline FlowState flow_init(const MapProblem& P, const FlowOptions& opt = {}) {
  check_map(P.metric, P.target, P.h);
  if (P.V && P.V->size() != P.h.size()) throw std::invalid_argument("flow_init: V on a different grid");
  FlowState s;
  s.u = P.h;
  s.dt = opt.dt0;
  s.sigma = tension_field(P.metric, P.target, s.u);
  s.mon = detail::monitors(P, s.u, s.sigma);
  return s;
}

// dt <= theta min(2D/|b|^2, 1/|c|): b the first-order and c the zeroth-order
// coefficient of the linearised explicit part, D = (4f)^{-1}
inline double explicit_dt_cap(const MapProblem& P, const MapField& u, double theta) {
  if (P.target.kind() == TargetKind::flat) return std::numeric_limits<double>::infinity();
  const Grid1D& g = *u.grid;
  const Mat G0 = detail::explicit_part(P, u);
  const SpMat J = detail::colour_jacobian(
      u, G0, [&](const MapField& w) { return detail::explicit_part(P, w); }, detail::boundary_mask(g));
  const long C = u.vals.rows();
  auto block = [&](long I, long Jn) {
    Mat B(C, C);
    for (long r = 0; r < C; ++r)
      for (long c = 0; c < C; ++c) B(r, c) = J.coeff(I * C + r, Jn * C + c);
    return B;
  };
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    const long I = long(i);
    Mat lo = Mat::Zero(C, C);
    const Mat di = block(I, I), up = block(I, I + 1);
    double hm = 0;
    const double hp = g[i + 1] - g[i];
    if (i > 0) {
      lo = block(I, I - 1);
      hm = g[i] - g[i - 1];
    }
    const double b = ((up - lo) * (0.5 * (hm + hp))).lpNorm<Eigen::Infinity>() * C;
    const double c = (lo + di + up).cwiseAbs().rowwise().sum().maxCoeff();
    const double D = 1.0 / (4.0 * P.metric.f(g[i]));
    if (b > 0) cap = std::min(cap, 2 * D / (b * b));
    if (c > 0) cap = std::min(cap, 1 / c);
  }
  return theta * cap;
}

// One linearly implicit step: backward Euler on (4f)^{-1} Lap_e, explicit
// Christoffel term. The step ends at t_stop if that comes first.
inline FlowState flow_step(const MapProblem& P, const FlowState& s, const FlowOptions& opt = {},
                           double t_stop = std::numeric_limits<double>::infinity()) {
  const Grid1D& g = *s.u.grid;
  const std::size_t N = g.size();
  double dt = std::min({s.dt, opt.dt_max, opt.dt_rel * std::max(s.t, opt.t_floor)});
  dt = std::min(dt, explicit_dt_cap(P, s.u, opt.theta));
  const bool clipped = t_stop - s.t < dt;
  if (clipped) dt = t_stop - s.t;
  if (!(dt > 0)) throw std::invalid_argument("flow_step: nonpositive step");

  const Stencil3 L = fv_laplacian(g, detail::linear_dim(s.u));
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < N; ++i) {
    const long r = long(i);
    if (g.is_boundary(i)) {
      t.emplace_back(r, r, 1.0);
      continue;
    }
    const double c = dt / (4.0 * P.metric.f(g[i]));
    t.emplace_back(r, r, 1 - c * L.di[i]);
    if (L.lo[i] != 0.0) t.emplace_back(r, r - 1, -c * L.lo[i]);
    if (L.up[i] != 0.0) t.emplace_back(r, r + 1, -c * L.up[i]);
  }
  SpMat A(static_cast<long>(N), static_cast<long>(N));
  A.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("flow_step: singular step matrix");

  const Mat G = detail::explicit_part(P, s.u);
  Mat next(s.u.vals.rows(), s.u.vals.cols());
  for (long c = 0; c < s.u.vals.rows(); ++c) {
    Eigen::VectorXd b(static_cast<long>(N));
    for (std::size_t i = 0; i < N; ++i)
      b(long(i)) = g.is_boundary(i) ? P.h.vals(c, long(i)) : s.u.vals(c, long(i)) + dt * G(c, long(i));
    next.row(c) = lu.solve(b).transpose();
    for (std::size_t i = 0; i < N; ++i)
      if (g.is_boundary(i)) next(c, long(i)) = P.h.vals(c, long(i));
  }
  FlowState out;
  out.t = clipped ? t_stop : s.t + dt;
  out.steps = s.steps + 1;
  out.dt = clipped ? s.dt : std::min(dt * opt.growth, opt.dt_max);
  if (!next.allFinite()) throw std::domain_error("flow_step: non-finite values at t = " + std::to_string(out.t));
  out.u = MapField(s.u.grid, s.u.kind, s.u.target_dim, std::move(next));
  for (std::size_t i = 0; i < N; ++i)
    if (!P.target.in_chart(out.u.point(i)))
      throw std::domain_error("flow_step: target-chart escape at node " + std::to_string(i) + " (x = " +
                              std::to_string(g[i]) + ", t = " + std::to_string(out.t) + ")");
  out.sigma = tension_field(P.metric, P.target, out.u);
  out.mon = detail::monitors(P, out.u, out.sigma);
  return out;
}

// size of rounding noise in sigma: 1e3 eps |u| max |diagonal of (4f)^{-1} Lap_e|
inline double sigma_rounding_floor(const MapProblem& P) {
  const Grid1D& g = *P.h.grid;
  const Stencil3 L = fv_laplacian(g, detail::linear_dim(P.h));
  double d = 0;
  for (std::size_t i = 0; i < g.size(); ++i) d = std::max(d, std::abs(L.di[i]) / (4.0 * P.metric.f(g[i])));
  double u = 0;
  for (std::size_t i = 0; i < g.size(); ++i) u = std::max(u, P.h.point(i).cwiseAbs().maxCoeff());
  return 1e3 * std::numeric_limits<double>::epsilon() * d * std::max(u, 1.0);
}

inline double monitor_velocity(const FlowState& s) { return s.mon.velocity; }
inline double monitor_rho(const FlowState& s) { return s.mon.rho_over_V; }

// ------------------------------------------------------------ Newton polish

struct NewtonReport {
  int iterations = 0;
  double residual = 0;      // max |4 f sigma| (euclidean components)
  double last_step = 0;
};

// damped Newton on 4 f sigma(u) = 0 with u = h on the boundary
inline NewtonReport newton_polish(const MapProblem& P, MapField& u, int max_iter = 50) {
  const Grid1D& g = *u.grid;
  const auto frozen = detail::boundary_mask(g);
  auto R = [&](const MapField& w) {
    Mat s = tension_field(P.metric, P.target, w).vals;
    for (std::size_t i = 0; i < g.size(); ++i) s.col(long(i)) *= 4.0 * P.metric.f(g[i]);
    return s;
  };
  auto merit = [](const Mat& r) { return r.cwiseAbs().maxCoeff(); };
  NewtonReport rep;
  Mat r = R(u);
  rep.residual = merit(r);
  const long C = u.vals.rows(), N = u.vals.cols();
  for (rep.iterations = 0; rep.iterations < max_iter; ++rep.iterations) {
    if (rep.residual == 0.0) break;
    SpMat J = detail::colour_jacobian(u, r, R, frozen);
    // boundary rows: identity (their residual is zero)
    std::vector<Triplet> t;
    for (int k = 0; k < J.outerSize(); ++k)
      for (SpMat::InnerIterator it(J, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (long i = 0; i < N; ++i)
      if (frozen[std::size_t(i)])
        for (long c = 0; c < C; ++c) t.emplace_back(i * C + c, i * C + c, 1.0);
    SpMat A(N * C, N * C);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) break;
    Eigen::VectorXd rhs(N * C);
    for (long i = 0; i < N; ++i)
      for (long c = 0; c < C; ++c) rhs(i * C + c) = -r(c, i);
    const Eigen::VectorXd du = lu.solve(rhs);
    if (!du.allFinite()) break;
    double lam = 1;
    bool moved = false;
    for (int b = 0; b < 30; ++b, lam *= 0.5) {
      MapField w = u;
      for (long i = 0; i < N; ++i)
        for (long c = 0; c < C; ++c) w.vals(c, i) += lam * du(i * C + c);
      bool inside = true;
      for (std::size_t i = 0; i < g.size() && inside; ++i) inside = P.target.in_chart(w.point(i));
      if (!inside) continue;
      const Mat rw = R(w);
      if (merit(rw) < rep.residual || (lam == 1 && merit(rw) <= rep.residual)) {
        u = std::move(w);
        r = rw;
        rep.residual = merit(rw);
        rep.last_step = lam * du.cwiseAbs().maxCoeff();
        moved = true;
        break;
      }
    }
    if (!moved) break;
    if (rep.last_step < 1e-14 * std::max(1.0, u.vals.cwiseAbs().maxCoeff())) {
      ++rep.iterations;
      break;
    }
  }
  return rep;
}

// ------------------------------------------------------------ Hermitian-harmonic Dirichlet solve

struct HarmonicOptions {
  double tol = 1e-8;            // max ||sigma(u)||_g
  double newton_switch = 1e-4;  // relative velocity at which the flow hands over
  long max_steps = 20000;
  bool newton = true;
  FlowOptions flow;
};

struct HarmonicResult {
  MapField u;
  double max_sigma = 0;
  double sup_rho_over_V = std::numeric_limits<double>::quiet_NaN();
  long flow_steps = 0;
  double flow_time = 0;
  int newton_iterations = 0;
  bool converged = false;
};

inline HarmonicResult hermitian_harmonic_solve(const MapProblem& P, const HarmonicOptions& opt = {}) {
  FlowState s = flow_init(P, opt.flow);
  HarmonicResult res;
  const double v0 = s.mon.velocity;
  const double hand_over = opt.newton ? std::max(opt.tol, opt.newton_switch * v0) : opt.tol;
  while (s.mon.velocity >= hand_over && s.steps < opt.max_steps) s = flow_step(P, s, opt.flow);
  res.flow_steps = s.steps;
  res.flow_time = s.t;
  res.u = s.u;
  if (opt.newton && s.mon.velocity >= opt.tol) {
    const NewtonReport nr = newton_polish(P, res.u);
    res.newton_iterations = nr.iterations;
  }
  const MapField sig = tension_field(P.metric, P.target, res.u);
  const FlowMonitors m = detail::monitors(P, res.u, sig);
  res.max_sigma = m.velocity;
  res.sup_rho_over_V = m.rho_over_V;
  res.converged = res.max_sigma < opt.tol;
  if (!res.converged)
    throw std::runtime_error("hermitian_harmonic_solve: no convergence (max sigma " + std::to_string(res.max_sigma) +
                             ")");
  return res;
}

// ------------------------------------------------------------ exhaustion for maps

struct HarmonicLevel {
  int level = 0;
  double radius = 0;
  double sup_rho_over_V = 0;
  double energy_L1 = 0;     // int e(u_k) dvol over the reference compact
  double interlevel_sup_diff = std::numeric_limits<double>::quiet_NaN();
  double barrier_C = 0;     // sup rho(u_k, h) / v
};

struct HarmonicExhaustion {
  MapField limit;           // full grid; h outside the last level
  std::vector<HarmonicLevel> log;
  bool converged = false;
};

// h and V on the full grid; every level is a Dirichlet problem with data h
inline HarmonicExhaustion exhaustion_harmonic(const ChartMetric& metric, const TargetManifold& target, const MapField& h,
                                              const ScalarField& V, const std::function<double(double)>& barrier,
                                              const ExhaustionSchedule& sched, const HarmonicOptions& opt = {}) {
  sched.validate();
  const Grid1D& G = *h.grid;
  HarmonicExhaustion res;
  MapField prev;
  const int nlev = std::min<int>(sched.max_levels, int(sched.levels.size()));
  for (int k = 0; k < nlev; ++k) {
    const auto [lo, hi] = level_range(G, sched.levels[k]);
    const GridPtr sub = make_grid(G.slice(lo, hi));
    MapProblem P{metric, target, slice_map(h, sub, lo),
                 ScalarField(sub, std::vector<double>(V.v.begin() + long(lo), V.v.begin() + long(hi) + 1))};
    const HarmonicResult hr = hermitian_harmonic_solve(P, opt);

    MapField full = h;
    full.vals.middleCols(long(lo), long(sub->size())) = hr.u.vals;
    HarmonicLevel L;
    L.level = k;
    L.radius = sched.levels[k];
    L.sup_rho_over_V = hr.sup_rho_over_V;
    const ScalarField r = rho(target, hr.u, P.h);
    for (std::size_t i = 0; i < sub->size(); ++i) L.barrier_C = std::max(L.barrier_C, r[i] / barrier((*sub)[i]));
    // energy over the reference compact
    std::size_t rlo = lo, rhi = hi;
    while (!in_reference(G, rlo, sched.reference) && rlo < rhi) ++rlo;
    while (!in_reference(G, rhi, sched.reference) && rhi > rlo) --rhi;
    if (rhi >= rlo + 2) {
      const GridPtr ref = make_grid(G.slice(rlo, rhi));
      const ScalarField e = energy_density(metric, target, full);
      L.energy_L1 = volume_integral(metric, ScalarField(ref, std::vector<double>(e.v.begin() + long(rlo),
                                                                                  e.v.begin() + long(rhi) + 1)));
    }
    if (k > 0) {
      double d = 0;
      for (std::size_t i = 0; i < G.size(); ++i)
        if (in_reference(G, i, sched.reference)) d = std::max(d, (full.point(i) - prev.point(i)).cwiseAbs().maxCoeff());
      L.interlevel_sup_diff = d;
    }
    res.log.push_back(L);
    prev = std::move(full);
    if (k > 0 && L.interlevel_sup_diff < sched.tol) {
      res.converged = true;
      break;
    }
  }
  res.limit = prev;
  return res;
}

// sup chart distance of two limits on the reference compact
inline double reference_sup_diff(const MapField& a, const MapField& b, double reference) {
  const Grid1D& G = *a.grid;
  if (b.size() != a.size()) throw std::invalid_argument("reference_sup_diff: grid mismatch");
  double d = 0;
  for (std::size_t i = 0; i < G.size(); ++i)
    if (in_reference(G, i, reference)) d = std::max(d, (a.point(i) - b.point(i)).cwiseAbs().maxCoeff());
  return d;
}

} // namespace hhm
