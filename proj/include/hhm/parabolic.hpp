#pragma once

#include "flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

struct TrajectoryRow {
  double t = 0;
  double max_velocity = 0;
  double sup_rho_over_V = 0;
  double slab_energy = std::numeric_limits<double>::quiet_NaN();  // last completed slab
  double dt = 0;
};

struct DecayFit {
  double exponent = std::numeric_limits<double>::quiet_NaN();  // v ~ C t^{-p}
  double constant = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();  // rms in log v
  int samples = 0;
  bool constant_zero = false;
  bool enough = false;      // >= 10 samples in the window
};

struct IntegrateOptions {
  double T = 20;                // final time
  double stationary_tol = 0;    // stop once max velocity < tol (0: run to T)
  double sample_t0 = 1.0 / 64;  // samples at t0 2^{k/4}
  double slab = 2;              // slab width of the energy integrals
  double fit_t_min = 1;
  double fit_t_max = std::numeric_limits<double>::infinity();
  long max_steps = 1000000;
  FlowOptions flow;
};

struct FlowTrajectory {
  std::vector<TrajectoryRow> rows;
  std::vector<double> slabs;          // int_T^{T+2} int_Omega e(u)
  double initial_velocity = 0;        // max ||sigma(h)||
  double max_velocity_ratio = 0;      // max over steps of velocity / initial
  double max_velocity_increase = 0;   // max over steps of (v_{n+1} - v_n) / v_n, above the rounding floor
  double max_rho_over_V = 0;
  double noise_floor = 0;
  long steps = 0;
  bool stationary = false;
  FlowState final_state;
  DecayFit fit;
};

// log-log regression of the velocity samples in [t_min, t_max]
inline DecayFit fit_decay(const std::vector<TrajectoryRow>& rows, double t_min,
                          double t_max = std::numeric_limits<double>::infinity()) {
  DecayFit f;
  std::vector<double> x, y;
  bool all_zero = true;
  for (const auto& r : rows) {
    if (r.t < t_min || r.t > t_max) continue;
    if (r.max_velocity != 0.0) all_zero = false;
    if (!(r.max_velocity > 0)) continue;
    x.push_back(std::log(r.t));
    y.push_back(std::log(r.max_velocity));
  }
  f.samples = int(x.size());
  f.constant_zero = all_zero;
  f.enough = f.samples >= 10;
  if (x.size() < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) mx += x[k], my += y[k];
  mx /= double(x.size());
  my /= double(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  f.exponent = -slope;
  f.constant = std::exp(my - slope * mx);
  double ss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (my + slope * (x[k] - mx));
    ss += e * e;
  }
  f.residual = std::sqrt(ss / double(x.size()));
  return f;
}

// Advances flow_step from u = h, recording monitors at t0 2^{k/4} and the
// energy of every completed slab [2j, 2j+2].
inline FlowTrajectory integrate(const MapProblem& P, const IntegrateOptions& opt = {}) {
  if (!(opt.T > 0) || !(opt.sample_t0 > 0) || !(opt.slab > 0)) throw std::invalid_argument("integrate: bad options");
  FlowTrajectory tr;
  FlowState s = flow_init(P, opt.flow);
  tr.initial_velocity = s.mon.velocity;
  tr.max_velocity_ratio = tr.initial_velocity > 0 ? 1.0 : 0.0;
  tr.max_rho_over_V = std::isnan(s.mon.rho_over_V) ? 0.0 : s.mon.rho_over_V;
  // increases below this are rounding noise of the monitor
  const double noise = sigma_rounding_floor(P);
  tr.noise_floor = noise;
  int k = 0;
  double next_sample = opt.sample_t0;
  double next_slab = opt.slab, slab_acc = 0, last_slab = std::numeric_limits<double>::quiet_NaN();
  double E_prev = s.mon.energy, t_prev = 0;
  auto record = [&](const FlowState& st) {
    tr.rows.push_back({st.t, st.mon.velocity, st.mon.rho_over_V, last_slab, st.dt});
  };
  if (tr.initial_velocity == 0.0) {
    tr.stationary = true;
    record(s);
  }
  while (!tr.stationary && s.t < opt.T && s.steps < opt.max_steps) {
    const double stop = std::min({next_sample, next_slab, opt.T});
    const double v_prev = s.mon.velocity;
    s = flow_step(P, s, opt.flow, stop);
    // monitors
    if (tr.initial_velocity > 0) tr.max_velocity_ratio = std::max(tr.max_velocity_ratio, s.mon.velocity / tr.initial_velocity);
    if (v_prev > 0 && s.mon.velocity > noise)
      tr.max_velocity_increase = std::max(tr.max_velocity_increase, (s.mon.velocity - v_prev) / v_prev);
    if (!std::isnan(s.mon.rho_over_V)) tr.max_rho_over_V = std::max(tr.max_rho_over_V, s.mon.rho_over_V);
    slab_acc += 0.5 * (s.t - t_prev) * (s.mon.energy + E_prev);
    E_prev = s.mon.energy;
    t_prev = s.t;
    if (s.t >= next_slab) {
      tr.slabs.push_back(slab_acc);
      last_slab = slab_acc;
      slab_acc = 0;
      next_slab += opt.slab;
    }
    if (s.t >= next_sample) {
      record(s);
      ++k;
      next_sample = opt.sample_t0 * std::exp2(k / 4.0);
    }
    if (opt.stationary_tol > 0 && s.mon.velocity < opt.stationary_tol) {
      tr.stationary = true;
      if (tr.rows.empty() || tr.rows.back().t != s.t) record(s);
    }
  }
  tr.steps = s.steps;
  tr.final_state = s;
  tr.fit = fit_decay(tr.rows, opt.fit_t_min, opt.fit_t_max);
  return tr;
}

struct StationarityReport {
  bool converged = false;
  MapField u;
  DecayFit fit;
  double elliptic_diff = std::numeric_limits<double>::quiet_NaN();  // sup |u - u_elliptic|
};

// convergence by velocity < tol; cross-check against the Newton-polished
// elliptic solve on the same level domain
inline StationarityReport stationarity(const MapProblem& P, const FlowTrajectory& tr, double tol,
                                       bool cross_check = true) {
  StationarityReport r;
  r.u = tr.final_state.u;
  r.fit = tr.fit;
  r.converged = tr.final_state.mon.velocity < tol;
  if (cross_check) {
    HarmonicOptions ho;
    ho.tol = std::min(tol, 1e-8);
    const HarmonicResult e = hermitian_harmonic_solve(P, ho);
    double d = 0;
    for (std::size_t i = 0; i < r.u.size(); ++i) d = std::max(d, (r.u.point(i) - e.u.point(i)).cwiseAbs().maxCoeff());
    r.elliptic_diff = d;
  }
  return r;
}

// slab energies bounded: the last slab does not exceed the running maximum of
// the first half by more than rel
inline bool slabs_bounded(const std::vector<double>& slabs, double rel = 1e-3) {
  if (slabs.size() < 2) return false;
  double first = 0;
  for (std::size_t j = 0; j < slabs.size() / 2; ++j) first = std::max(first, slabs[j]);
  double all = first;
  for (double s : slabs) {
    if (!std::isfinite(s)) return false;
    all = std::max(all, s);
  }
  return all <= first * (1 + rel) + 1e-300;
}

} // namespace hhm
