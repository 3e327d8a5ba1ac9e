#pragma once

#include "grid.hpp"
#include "metric.hpp"
#include "operators.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// -Lap~ + lambda on a 1-D reduction, Dirichlet rows at boundary nodes.
// Complex lambda: unknowns (Re u, Im u) stacked, 2N x 2N.
struct DiscreteOperator {
  GridPtr grid;
  Stencil3 L;              // euclidean FV Laplacian
  std::vector<double> finv;  // 1/f per node
  std::complex<double> lambda{0, 0};
  SpMat A;

  bool is_complex() const { return lambda.imag() != 0.0; }
  std::size_t size() const { return grid->size(); }
};

struct MMatrixReport {
  bool ok = true;
  long row = -1;
  std::string reason;
};

// nonpositive off-diagonals, weak diagonal dominance, strict on rows that
// touch a boundary node (real part only)
inline MMatrixReport check_m_matrix(const DiscreteOperator& op) {
  MMatrixReport rep;
  const Grid1D& g = *op.grid;
  const std::size_t N = g.size();
  const double lr = op.lambda.real();
  for (std::size_t i = 0; i < N; ++i) {
    if (g.is_boundary(i)) continue;
    const double off_lo = -op.finv[i] * op.L.lo[i], off_up = -op.finv[i] * op.L.up[i];
    const double diag = -op.finv[i] * op.L.di[i] + lr;
    if (off_lo > 0 || off_up > 0) return {false, long(i), "positive off-diagonal"};
    const double sum = std::abs(off_lo) + std::abs(off_up);
    if (diag < sum * (1 - 1e-12)) return {false, long(i), "not diagonally dominant"};
    double interior_sum = 0;
    if (i > 0 && !g.is_boundary(i - 1)) interior_sum += std::abs(off_lo);
    if (i + 1 < N && !g.is_boundary(i + 1)) interior_sum += std::abs(off_up);
    const bool touches = (i > 0 && g.is_boundary(i - 1)) || (i + 1 < N && g.is_boundary(i + 1));
    if (touches && !(diag > interior_sum)) return {false, long(i), "no strict dominance next to boundary"};
  }
  return rep;
}

inline DiscreteOperator assemble_operator(const ChartMetric& metric, GridPtr grid,
                                          std::complex<double> lambda = {0, 0}) {
  const Grid1D& g = *grid;
  check_compatible(metric, g);
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
    throw std::invalid_argument("assemble_operator: non-finite shift");
  DiscreteOperator op;
  op.grid = grid;
  op.lambda = lambda;
  op.L = fv_laplacian(g, g.topology() == Topology::radial ? g.real_dim() : 1);
  const std::size_t N = g.size();
  op.finv.resize(N);
  for (std::size_t i = 0; i < N; ++i) op.finv[i] = 1.0 / metric.f(g[i]);

  const int blocks = op.is_complex() ? 2 : 1;
  std::vector<Triplet> t;
  t.reserve(std::size_t(blocks) * (3 * N + N));
  for (int b = 0; b < blocks; ++b) {
    const long o = long(b) * long(N);
    for (std::size_t i = 0; i < N; ++i) {
      const long r = o + long(i);
      if (g.is_boundary(i)) {
        t.emplace_back(r, r, 1.0);
        continue;
      }
      t.emplace_back(r, r, -op.finv[i] * op.L.di[i] + lambda.real());
      if (op.L.lo[i] != 0.0) t.emplace_back(r, r - 1, -op.finv[i] * op.L.lo[i]);
      if (op.L.up[i] != 0.0) t.emplace_back(r, r + 1, -op.finv[i] * op.L.up[i]);
      if (blocks == 2) {
        // real rows get -Im(lambda) Im u, imaginary rows +Im(lambda) Re u
        const long other = (b == 0 ? long(N) : -long(N)) + r;
        t.emplace_back(r, other, b == 0 ? -lambda.imag() : lambda.imag());
      }
    }
  }
  op.A.resize(blocks * long(N), blocks * long(N));
  op.A.setFromTriplets(t.begin(), t.end());
  op.A.makeCompressed();

  if (lambda.imag() == 0.0 && lambda.real() >= 0.0) {
    const MMatrixReport rep = check_m_matrix(op);
    if (!rep.ok)
      throw std::runtime_error("assemble_operator: M-matrix violation at row " + std::to_string(rep.row) + " (" +
                               rep.reason + ")");
  }
  return op;
}

namespace detail {

inline Eigen::VectorXd sparse_solve(const SpMat& A, const Eigen::VectorXd& b, const char* who) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error(std::string(who) + ": singular system");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw std::runtime_error(std::string(who) + ": solve failed");
  // relative residual against the size of the terms
  const Eigen::VectorXd r = A * x - b;
  double scale = b.cwiseAbs().maxCoeff();
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) scale = std::max(scale, std::abs(it.value() * x(it.col())));
  if (r.cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300))
    throw std::runtime_error(std::string(who) + ": residual above 1e-10");
  return x;
}

} // namespace detail

// (-Lap~ + lambda) u = f inside, u = g on boundary nodes (g read only there)
inline ScalarField solve_dirichlet(const DiscreteOperator& op, const ScalarField& f, const ScalarField& g) {
  if (op.is_complex()) throw std::invalid_argument("solve_dirichlet: use solve_dirichlet_complex");
  const Grid1D& G = *op.grid;
  const std::size_t N = G.size();
  if (f.size() != N || g.size() != N) throw std::invalid_argument("solve_dirichlet: size mismatch");
  Eigen::VectorXd b(N);
  for (std::size_t i = 0; i < N; ++i) b(long(i)) = G.is_boundary(i) ? g[i] : f[i];
  const Eigen::VectorXd x = detail::sparse_solve(op.A, b, "solve_dirichlet");
  std::vector<double> u(x.data(), x.data() + N);
  for (std::size_t i = 0; i < N; ++i)
    if (G.is_boundary(i)) u[i] = g[i];  // exact, LU may leave rounding there
  return ScalarField(op.grid, std::move(u));
}

inline ScalarField solve_dirichlet(const DiscreteOperator& op, const ScalarField& f) {
  return solve_dirichlet(op, f, ScalarField(op.grid, std::vector<double>(op.size(), 0.0)));
}

struct ComplexField {
  ScalarField re, im;
};

// real data, zero boundary values
inline ComplexField solve_dirichlet_complex(const DiscreteOperator& op, const ScalarField& f) {
  const Grid1D& G = *op.grid;
  const std::size_t N = G.size();
  if (!op.is_complex()) {
    ScalarField re = solve_dirichlet(op, f);
    return {re, ScalarField(op.grid, std::vector<double>(N, 0.0))};
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * long(N));
  for (std::size_t i = 0; i < N; ++i)
    if (!G.is_boundary(i)) b(long(i)) = f[i];
  const Eigen::VectorXd x = detail::sparse_solve(op.A, b, "solve_dirichlet_complex");
  return {ScalarField(op.grid, std::vector<double>(x.data(), x.data() + N)),
          ScalarField(op.grid, std::vector<double>(x.data() + N, x.data() + 2 * N))};
}

// ------------------------------------------------------------ exhaustion

// Level radii (radial) or s-levels (two-ends), all on grid nodes.
struct ExhaustionSchedule {
  std::vector<double> levels;
  double tol = 1e-6;        // inter-level sup difference on the reference compact
  double reference = 2;     // reference compact: r <= reference or |s| <= reference
  int max_levels = 24;

  void validate() const {
    if (levels.empty()) throw std::invalid_argument("schedule: no levels");
    for (std::size_t k = 1; k < levels.size(); ++k)
      if (!(levels[k] > levels[k - 1])) throw std::invalid_argument("schedule: levels not increasing");
    if (!(tol > 0)) throw std::invalid_argument("schedule: tolerance must be positive");
    if (max_levels < 2) throw std::invalid_argument("schedule: need at least 2 levels");
  }
};

// R_k = R0 2^(k + shift)
inline ExhaustionSchedule radial_schedule(double R0, int levels = 24, double shift = 0, double tol = 1e-6) {
  ExhaustionSchedule s;
  for (int k = 0; k < levels; ++k) s.levels.push_back(R0 * std::exp2(k + shift));
  s.reference = R0;
  s.tol = tol;
  s.max_levels = levels;
  return s;
}

// s_k = 1 - 2^(-k-1-shift)
inline ExhaustionSchedule twoends_schedule(int levels = 24, double shift = 0, double tol = 1e-6) {
  ExhaustionSchedule s;
  for (int k = 0; k < levels; ++k) s.levels.push_back(1 - std::exp2(-k - 1 - shift));
  s.reference = 0.5;
  s.tol = tol;
  s.max_levels = levels;
  return s;
}

// node range [lo, hi] of the level domain
inline std::pair<std::size_t, std::size_t> level_range(const Grid1D& g, double level) {
  const long hi = g.find(level);
  if (hi < 0) throw std::invalid_argument("level " + std::to_string(level) + " is not a grid node");
  if (g.topology() == Topology::interval) {
    const long lo = g.find(-level);
    if (lo < 0) throw std::invalid_argument("level -" + std::to_string(level) + " is not a grid node");
    return {std::size_t(lo), std::size_t(hi)};
  }
  return {0, std::size_t(hi)};
}

inline bool in_reference(const Grid1D& g, std::size_t i, double reference) {
  return std::abs(g[i]) <= reference * (1 + 1e-12);
}

struct ExhaustionLevel {
  int level = 0;
  double radius = 0;
  double barrier_C = 0;     // max |u_k| / v over the level
  double interlevel_diff = std::numeric_limits<double>::quiet_NaN();
};

struct ExhaustionResult {
  ScalarField limit;        // full grid, zero outside the last level
  double C = 0;             // barrier constant of the last level
  std::vector<ExhaustionLevel> log;
  bool converged = false;
};

// Zero-boundary Dirichlet problems -Lap~ u_k = f on increasing levels.
inline ExhaustionResult exhaustion_solve(const ChartMetric& metric, const ScalarField& f,
                                         const std::function<double(double)>& barrier,
                                         const ExhaustionSchedule& sched) {
  sched.validate();
  const GridPtr full = f.grid;
  const Grid1D& G = *full;
  ExhaustionResult res;
  std::vector<double> prev;
  bool have_prev = false;
  double C_first = 0;
  const int nlev = std::min<int>(sched.max_levels, int(sched.levels.size()));
  for (int k = 0; k < nlev; ++k) {
    const auto [lo, hi] = level_range(G, sched.levels[k]);
    const GridPtr sub = make_grid(G.slice(lo, hi));
    const DiscreteOperator op = assemble_operator(metric, sub);
    ScalarField fk(sub, std::vector<double>(f.v.begin() + long(lo), f.v.begin() + long(hi) + 1));
    const ScalarField uk = solve_dirichlet(op, fk);

    std::vector<double> u(G.size(), 0.0);
    std::copy(uk.v.begin(), uk.v.end(), u.begin() + long(lo));
    ExhaustionLevel L;
    L.level = k;
    L.radius = sched.levels[k];
    for (std::size_t i = 0; i < sub->size(); ++i) {
      const double v = barrier((*sub)[i]);
      if (!(v > 0)) throw std::runtime_error("exhaustion_solve: barrier not positive");
      L.barrier_C = std::max(L.barrier_C, std::abs(uk[i]) / v);
    }
    if (k == 0) C_first = std::max(L.barrier_C, 1e-300);
    if (L.barrier_C > 1e6 * C_first) throw std::runtime_error("exhaustion_solve: barrier constant unbounded");
    if (have_prev) {
      double d = 0;
      for (std::size_t i = 0; i < G.size(); ++i)
        if (in_reference(G, i, sched.reference)) d = std::max(d, std::abs(u[i] - prev[i]));
      L.interlevel_diff = d;
    }
    res.log.push_back(L);
    res.C = L.barrier_C;
    prev = std::move(u);
    have_prev = true;
    if (k > 0 && L.interlevel_diff < sched.tol) {
      res.converged = true;
      break;
    }
  }
  res.limit = ScalarField(full, prev);
  return res;
}

// V solving -Lap~ V = source by exhaustion; V >= 0, and V > 0 inside when
// the source is nontrivial
inline ExhaustionResult comparison_function(const ChartMetric& metric, const ScalarField& source,
                                            const std::function<double(double)>& barrier,
                                            const ExhaustionSchedule& sched) {
  for (double s : source.v)
    if (s < 0) throw std::invalid_argument("comparison_function: negative source");
  ExhaustionResult r = exhaustion_solve(metric, source, barrier, sched);
  const bool trivial = std::all_of(source.v.begin(), source.v.end(), [](double s) { return s == 0.0; });
  const Grid1D& G = *r.limit.grid;
  const auto [lo, hi] = level_range(G, r.log.back().radius);
  for (std::size_t i = lo; i <= hi; ++i) {
    const bool bnd = (i == hi) || (i == lo && !(G.has_center() && lo == 0));
    if (r.limit[i] < 0) throw std::runtime_error("comparison_function: V negative at node " + std::to_string(i));
    if (!trivial && !bnd && !(r.limit[i] > 0))
      throw std::runtime_error("comparison_function: V not positive at interior node " + std::to_string(i));
  }
  return r;
}

// barrier profiles used with exhaustion_solve
inline std::function<double(double)> power_barrier(double alpha) {
  return [alpha](double r) { return std::pow(1 + r * r, -alpha); };
}
inline std::function<double(double)> log_barrier(double A, double alpha) {
  return [A, alpha](double r) { return std::pow(std::log(A + r * r), -alpha); };
}
// glued two-ends v with eps = 0 inside (the jump condition is slack there)
inline std::function<double(double)> twoends_barrier(double mu_p, double delta) {
  return [mu_p, delta](double s) {
    const double x = std::max(1 - std::abs(s), 0.5);
    return std::pow(x, delta * mu_p);
  };
}

// ------------------------------------------------------------ resolvent

struct ResolventRow {
  double angle = 0, r = 0;
  double sup_abs = 0;      // max |u|
  double sup_imag = 0;     // max |Im u|
  double sup_times_r = 0;
};

struct ResolventTable {
  std::vector<ResolventRow> rows;
  std::vector<double> slope;  // per angle: log-log slope of sup|u| * r against r
};

inline ResolventTable resolvent_probe(const ChartMetric& metric, const std::vector<double>& angles,
                                      const std::vector<double>& radii, const ScalarField& phi) {
  ResolventTable t;
  for (double a : angles) {
    std::vector<double> lx, ly;
    for (double r : radii) {
      const std::complex<double> lam = std::polar(r, a);
      const DiscreteOperator op = assemble_operator(metric, phi.grid, lam);
      const ComplexField u = solve_dirichlet_complex(op, phi);
      ResolventRow row;
      row.angle = a;
      row.r = r;
      for (std::size_t i = 0; i < phi.size(); ++i) {
        row.sup_abs = std::max(row.sup_abs, std::hypot(u.re[i], u.im[i]));
        row.sup_imag = std::max(row.sup_imag, std::abs(u.im[i]));
      }
      row.sup_times_r = row.sup_abs * r;
      t.rows.push_back(row);
      lx.push_back(std::log(r));
      ly.push_back(std::log(row.sup_times_r));
    }
    double sl = std::numeric_limits<double>::quiet_NaN();
    if (lx.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k], my += ly[k];
      mx /= double(lx.size());
      my /= double(ly.size());
      double sxy = 0, sxx = 0;
      for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
      }
      sl = sxy / sxx;
    }
    t.slope.push_back(sl);
  }
  return t;
}

// ------------------------------------------------------------ periodic x interval

// -Lap~ u = f on a theta-periodic x s-interval grid of a two-ends metric
// (one compact direction kept, unit period), u = g at s-boundary nodes.
// Values indexed by PeriodicIntervalGrid::index.
inline std::vector<double> solve_dirichlet_periodic(const ChartMetric& metric, const PeriodicIntervalGrid& P,
                                                    const std::vector<double>& f, const std::vector<double>& g) {
  if (metric.radial()) throw std::invalid_argument("solve_dirichlet_periodic: needs the two-ends metric");
  const Grid1D& S = *P.s;
  const std::size_t N = P.size();
  if (f.size() != N || g.size() != N) throw std::invalid_argument("solve_dirichlet_periodic: size mismatch");
  const Stencil3 L = fv_laplacian(S, 1);
  const double ht2 = P.h_theta() * P.h_theta();
  std::vector<Triplet> t;
  Eigen::VectorXd b(static_cast<long>(N));
  for (std::size_t is = 0; is < S.size(); ++is)
    for (int it = 0; it < P.n_theta; ++it) {
      const long r = long(P.index(it, is));
      if (S.is_boundary(is)) {
        t.emplace_back(r, r, 1.0);
        b(r) = g[std::size_t(r)];
        continue;
      }
      const double fi = 1.0 / metric.f(S[is]);
      t.emplace_back(r, r, -fi * (L.di[is] - 2 / ht2));
      t.emplace_back(r, long(P.index(it, is - 1)), -fi * L.lo[is]);
      t.emplace_back(r, long(P.index(it, is + 1)), -fi * L.up[is]);
      t.emplace_back(r, long(P.index((it + 1) % P.n_theta, is)), -fi / ht2);
      t.emplace_back(r, long(P.index((it + P.n_theta - 1) % P.n_theta, is)), -fi / ht2);
      b(r) = f[std::size_t(r)];
    }
  SpMat A(static_cast<long>(N), static_cast<long>(N));
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  const Eigen::VectorXd x = detail::sparse_solve(A, b, "solve_dirichlet_periodic");
  return std::vector<double>(x.data(), x.data() + N);
}

} // namespace hhm
