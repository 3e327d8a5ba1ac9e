#pragma once

#include "grid.hpp"
#include "metric.hpp"
#include "target.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hhm {

// Three-point finite-volume Laplacian on a 1-D reduction:
//   (L u)_i = lo_i u_{i-1} + di_i u_i + up_i u_{i+1}
// radial weight r^{n-1} (volume r^n/n), interval weight 1. Rows of boundary
// nodes are zero. Off-diagonals are >= 0 by construction.
struct Stencil3 {
  std::vector<double> lo, di, up;
  int n_eff = 1;
  std::size_t size() const { return di.size(); }
};

inline Stencil3 fv_laplacian(const Grid1D& g, int n_eff) {
  const std::size_t N = g.size();
  Stencil3 s;
  s.n_eff = n_eff;
  s.lo.assign(N, 0.0);
  s.di.assign(N, 0.0);
  s.up.assign(N, 0.0);
  const bool radial = g.topology() == Topology::radial;
  for (std::size_t i = 0; i < N; ++i) {
    if (g.is_boundary(i)) continue;
    const double x = g[i];
    const double hp = g[i + 1] - x;
    if (radial && i == 0) {
      // centre: volume rp^n/n, flux area rp^{n-1}
      const double rp = 0.5 * hp;
      s.up[i] = double(n_eff) / (rp * hp);
      s.di[i] = -s.up[i];
      continue;
    }
    const double hm = x - g[i - 1];
    const double xp = x + 0.5 * hp, xm = x - 0.5 * hm;
    double wp = 1, wm = 1, V = xp - xm;
    if (radial) {
      const double n = n_eff;
      const double ap = xp / x, am = xm / x;
      wp = std::pow(ap, n - 1);
      wm = std::pow(am, n - 1);
      V = x / n * (std::pow(ap, n) - std::pow(am, n));
    }
    s.up[i] = wp / (hp * V);
    s.lo[i] = wm / (hm * V);
    s.di[i] = -(s.up[i] + s.lo[i]);
  }
  return s;
}

inline std::vector<double> apply_stencil(const Stencil3& s, const std::vector<double>& u) {
  const std::size_t N = s.size();
  std::vector<double> out(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    // difference form, exact on constants
    double v = 0;
    if (s.lo[i] != 0.0) v += s.lo[i] * (u[i - 1] - u[i]);
    if (s.up[i] != 0.0) v += s.up[i] * (u[i + 1] - u[i]);
    out[i] = v;
  }
  return out;
}

// Second-order first derivative; even symmetry at a radial centre.
inline double d1_at(const Grid1D& g, const double* u, std::size_t stride, std::size_t i) {
  const std::size_t N = g.size();
  auto U = [&](std::size_t k) { return u[k * stride]; };
  if (i == 0 && g.has_center()) return 0.0;
  if (i == 0) {
    const double h1 = g[1] - g[0], h2 = g[2] - g[1];
    const double c0 = -(2 * h1 + h2) / (h1 * (h1 + h2)), c1 = (h1 + h2) / (h1 * h2),
                 c2 = -h1 / (h2 * (h1 + h2));
    return c0 * U(0) + c1 * U(1) + c2 * U(2);
  }
  if (i + 1 == N) {
    const double h1 = g[N - 1] - g[N - 2], h2 = g[N - 2] - g[N - 3];
    const double c0 = (2 * h1 + h2) / (h1 * (h1 + h2)), c1 = -(h1 + h2) / (h1 * h2),
                 c2 = h1 / (h2 * (h1 + h2));
    return c0 * U(N - 1) + c1 * U(N - 2) + c2 * U(N - 3);
  }
  const double hm = g[i] - g[i - 1], hp = g[i + 1] - g[i];
  return (hm * hm * U(i + 1) - hp * hp * U(i - 1) + (hp * hp - hm * hm) * U(i)) / (hm * hp * (hm + hp));
}

inline void check_compatible(const ChartMetric& metric, const Grid1D& g) {
  const bool radial_grid = g.topology() == Topology::radial;
  if (radial_grid != metric.radial()) throw std::invalid_argument("grid/metric mismatch: topology");
  if (radial_grid && g.real_dim() != metric.real_dim())
    throw std::invalid_argument("grid/metric mismatch: real dimension");
  if (!metric.in_domain(g[0]) || !metric.in_domain(g[g.size() - 1]))
    throw std::invalid_argument("grid/metric mismatch: nodes outside the metric domain");
  if (g.interior_count() < 3) throw std::invalid_argument("fewer than 3 interior nodes");
}

// Lap~ u = 4 gamma^{a b} d_a dbar_b u = f^{-1} Lap_e u. Boundary entries are 0.
inline ScalarField holomorphic_laplacian(const ChartMetric& metric, const ScalarField& u) {
  const Grid1D& g = *u.grid;
  check_compatible(metric, g);
  const Stencil3 L = fv_laplacian(g, g.topology() == Topology::radial ? g.real_dim() : 1);
  std::vector<double> out = apply_stencil(L, u.v);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= metric.f(g[i]);
  return ScalarField(u.grid, std::move(out));
}

// Full box grid version: f(|x|)^{-1} times the (2d+1)-point Laplacian,
// interior nodes only (boundary entries 0).
inline std::vector<double> holomorphic_laplacian_box(const ChartMetric& metric, const BoxGrid& B,
                                                     const std::vector<double>& u) {
  if (!metric.radial() || B.dim != metric.real_dim()) throw std::invalid_argument("box grid/metric mismatch");
  std::vector<double> out(B.size(), 0.0);
  std::vector<int> c;
  const double h2 = B.h() * B.h();
  for (std::size_t idx = 0; idx < B.size(); ++idx) {
    B.coords(idx, c);
    bool bnd = false;
    for (int k = 0; k < B.dim; ++k)
      if (c[k] == 0 || c[k] == B.n - 1) bnd = true;
    if (bnd) continue;
    double lap = 0, r2 = 0;
    std::size_t stride = 1;
    for (int k = 0; k < B.dim; ++k) {
      lap += (u[idx + stride] - 2 * u[idx] + u[idx - stride]) / h2;
      r2 += B.x(c[k]) * B.x(c[k]);
      stride *= std::size_t(B.n);
    }
    out[idx] = lap / metric.f(std::sqrt(r2));
  }
  return out;
}

// ---------------------------------------------------------------- maps

// equivariant: u(z) = z a(|z|), one profile value per node (target dim 2m)
// radial:      u(z) = U(|z|) in R^n
// curve:       u(s) in R^n on an interval grid
enum class MapKind { equivariant, radial, curve };

struct MapField {
  GridPtr grid;
  MapKind kind = MapKind::curve;
  int target_dim = 0;
  Mat vals; // comps x nodes

  MapField() = default;
  MapField(GridPtr g, MapKind k, int n, Mat values)
      : grid(std::move(g)), kind(k), target_dim(n), vals(std::move(values)) {
    if (!grid) throw std::invalid_argument("MapField: null grid");
    if (vals.cols() != long(grid->size()) || vals.rows() != comps())
      throw std::invalid_argument("MapField: value shape mismatch");
    if ((k == MapKind::curve) != (grid->topology() == Topology::interval))
      throw std::invalid_argument("MapField: kind/topology mismatch");
    if (k == MapKind::equivariant && n != grid->real_dim())
      throw std::invalid_argument("MapField: equivariant map needs target dimension 2m");
    if (!vals.allFinite()) throw std::domain_error("MapField: non-finite value");
  }
  int comps() const { return kind == MapKind::equivariant ? 1 : target_dim; }
  std::size_t size() const { return grid->size(); }

  // target point at the representative node (r, 0, ..., 0) or s
  Vec point(std::size_t i) const {
    if (kind == MapKind::equivariant) {
      Vec p = Vec::Zero(target_dim);
      p(0) = (*grid)[i] * vals(0, long(i));
      return p;
    }
    return vals.col(long(i));
  }
};

inline void check_map(const ChartMetric& metric, const TargetManifold& N, const MapField& u) {
  check_compatible(metric, *u.grid);
  if (u.target_dim != N.dim()) throw std::invalid_argument("map/target dimension mismatch");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!N.in_chart(u.point(i))) throw std::domain_error("map value escapes the target chart");
}

namespace detail {

// directional derivatives at the representative node, one entry per real
// direction of the source that carries a nonzero derivative
inline void node_derivatives(const MapField& u, std::size_t i, std::vector<Vec>& d) {
  const Grid1D& g = *u.grid;
  const int n = u.target_dim;
  d.clear();
  if (u.kind == MapKind::equivariant) {
    const double r = g[i], a = u.vals(0, long(i));
    const double ap = d1_at(g, u.vals.data(), 1, i);
    Vec e = Vec::Zero(n);
    e(0) = a + r * ap;
    d.push_back(e);
    for (int c = 1; c < n; ++c) {
      Vec w = Vec::Zero(n);
      w(c) = a;
      d.push_back(w);
    }
    return;
  }
  Vec w(n);
  for (int c = 0; c < n; ++c) w(c) = d1_at(g, u.vals.data() + c, std::size_t(u.vals.rows()), i);
  d.push_back(w);
}

} // namespace detail

// Euclidean Laplacian of the components, in the representation of u
// (equivariant: Lap of a in dimension 2m+2).
inline Mat euclidean_laplacian(const MapField& u) {
  const Grid1D& g = *u.grid;
  const bool radial = g.topology() == Topology::radial;
  const int n_eff = u.kind == MapKind::equivariant ? g.real_dim() + 2 : (radial ? g.real_dim() : 1);
  const Stencil3 L = fv_laplacian(g, n_eff);
  Mat out = Mat::Zero(u.vals.rows(), u.vals.cols());
  for (long c = 0; c < u.vals.rows(); ++c) {
    std::vector<double> row(u.vals.cols());
    for (long i = 0; i < u.vals.cols(); ++i) row[i] = u.vals(c, i);
    const std::vector<double> l = apply_stencil(L, row);
    for (long i = 0; i < u.vals.cols(); ++i) out(c, i) = l[i];
  }
  return out;
}

// Christoffel part sum_a Gamma(u)(d_a u, d_a u) in representation units
// (equivariant: divided by r, with the r -> 0 limit at a centre).
inline Vec christoffel_part(const TargetManifold& N, const MapField& u, std::size_t i) {
  std::vector<Vec> d;
  const Grid1D& g = *u.grid;
  if (u.kind == MapKind::equivariant) {
    const double r = g[i];
    if (r == 0.0) {
      const double a = u.vals(0, long(i)), eps = 1e-6;
      Vec p = Vec::Zero(u.target_dim);
      p(0) = eps * a;
      const Christoffel G = N.christoffel(p);
      double s = 0;
      for (int c = 0; c < u.target_dim; ++c) {
        Vec w = Vec::Zero(u.target_dim);
        w(c) = a;
        s += G.contract(w, w)(0);
      }
      Vec out(1);
      out(0) = s / eps;
      return out;
    }
    detail::node_derivatives(u, i, d);
    const Christoffel G = N.christoffel(u.point(i));
    Vec s = Vec::Zero(u.target_dim);
    for (const Vec& w : d) s += G.contract(w, w);
    Vec out(1);
    out(0) = s(0) / r;
    return out;
  }
  detail::node_derivatives(u, i, d);
  const Christoffel G = N.christoffel(u.point(i));
  Vec s = Vec::Zero(u.target_dim);
  for (const Vec& w : d) s += G.contract(w, w);
  return s;
}

// sigma(u) = (4f)^{-1} (Lap_e u + sum_a Gamma(u)(d_a u, d_a u)), in the
// representation of u. Boundary nodes are 0 (Dirichlet data).
inline MapField tension_field(const ChartMetric& metric, const TargetManifold& N, const MapField& u) {
  check_map(metric, N, u);
  const Grid1D& g = *u.grid;
  const Mat lap = euclidean_laplacian(u);
  Mat s = Mat::Zero(u.vals.rows(), u.vals.cols());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (g.is_boundary(i)) continue;
    const Vec gp = christoffel_part(N, u, i);
    s.col(long(i)) = (lap.col(long(i)) + gp) / (4.0 * metric.f(g[i]));
  }
  return MapField(u.grid, u.kind, u.target_dim, std::move(s));
}

// tension as a target vector at the representative node
inline Vec tension_vector(const MapField& sigma, std::size_t i) {
  if (sigma.kind == MapKind::equivariant) {
    Vec v = Vec::Zero(sigma.target_dim);
    v(0) = (*sigma.grid)[i] * sigma.vals(0, long(i));
    return v;
  }
  return sigma.vals.col(long(i));
}

// ||v||_g at u for a field v given in the representation of u
inline ScalarField vector_norm(const TargetManifold& N, const MapField& u, const MapField& v) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = N.norm(u.point(i), tension_vector(v, i));
  return ScalarField(u.grid, std::move(out));
}

inline ScalarField tension_norm(const ChartMetric& metric, const TargetManifold& N, const MapField& u) {
  return vector_norm(N, u, tension_field(metric, N, u));
}

// e(u) = (4f)^{-1} sum_a g(d_a u, d_a u)
inline ScalarField energy_density(const ChartMetric& metric, const TargetManifold& N, const MapField& u) {
  check_map(metric, N, u);
  const Grid1D& g = *u.grid;
  std::vector<double> out(u.size());
  std::vector<Vec> d;
  for (std::size_t i = 0; i < u.size(); ++i) {
    detail::node_derivatives(u, i, d);
    const Mat G = N.metric(u.point(i));
    double s = 0;
    for (const Vec& w : d) s += w.dot(G * w);
    out[i] = s / (4.0 * metric.f(g[i]));
  }
  return ScalarField(u.grid, std::move(out));
}

// rho(u, v) = d_N(u(z), v(z)) at every node
inline ScalarField rho(const TargetManifold& N, const MapField& u, const MapField& v) {
  if (u.grid->size() != v.grid->size() || u.kind != v.kind) throw std::invalid_argument("rho: map mismatch");
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = N.distance(u.point(i), v.point(i));
  return ScalarField(u.grid, std::move(out));
}

inline Christoffel christoffel(const TargetManifold& N, const Vec& x) { return N.christoffel(x); }

inline double target_distance(const TargetManifold& N, const Vec& p, const Vec& q) { return N.distance(p, q); }

// |d omega| for omega = f sum dx_a ^ dy_a, coefficient norm over a<b<c
inline double kahler_form_differential(const ChartMetric& metric, const Vec& z) {
  const int n = metric.real_dim();
  if (n < 3) return 0.0;
  const Vec df = metric.grad_f(z);
  // omega_{bc}: +1 on (x_a, y_a) pairs
  auto om = [](int b, int c) -> double {
    if (b / 2 != c / 2 || b == c) return 0.0;
    return (b % 2 == 0) ? 1.0 : -1.0;
  };
  double s = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        const double v = df(a) * om(b, c) + df(b) * om(c, a) + df(c) * om(a, b);
        s += v * v;
      }
  return std::sqrt(s);
}

// ---------------------------------------------------------------- decay

// C^0_mu weight data: distance profile d(x) from the base point
struct DecaySpace {
  double mu = 1;
  std::function<double(double)> distance;

  static DecaySpace poincare(double mu) {
    return {mu, [](double r) { return 2.0 * std::atanh(r); }};
  }
  // log-equivalent distance of the (1+r^2)^{-1} metric
  static DecaySpace logarithmic(double mu) {
    return {mu, [](double r) { return std::log1p(r * r); }};
  }
  static DecaySpace two_ends(double mu, double delta) {
    return {mu, [delta](double s) { return std::pow(1 - std::abs(s), -delta) - 1; }};
  }
  static DecaySpace euclidean(double mu) {
    return {mu, [](double r) { return r; }};
  }
};

struct DecayNorm {
  double value = 0;
  bool diverges = false;
};

// sup |f| (1+d)^mu; divergence when the running sup increases strictly over
// every node of the outer 25% (ordered by distance from the base point)
inline DecayNorm decay_norm(const ScalarField& f, const DecaySpace& sp) {
  const Grid1D& g = *f.grid;
  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = sp.distance(g[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  DecayNorm out;
  const std::size_t N = order.size();
  const std::size_t outer = N - N / 4;
  bool strict = true;
  double run = 0;
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t i = order[k];
    const double w = std::abs(f.v[i]) * std::pow(1.0 + d[i], sp.mu);
    const double prev = run;
    run = std::max(run, w);
    if (k >= outer && k > 0 && !(run > prev * (1 + 1e-12))) strict = false;
  }
  out.value = run;
  out.diverges = strict && N >= 8;
  return out;
}

} // namespace hhm
