#pragma once

#include "flow.hpp"
#include "operators.hpp"
#include "target.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

// c1(1) of the global maximum principle, 1.25 x the largest ratio the
// manufactured battery in configs/battery.ini needs. Re-derived by
// test_certify; change only together with the battery.
inline constexpr double kFrozenC1 = 1.26359;  // 1.25 x 1.010869, 33x33 grids
inline constexpr int kFrozenC1Dim = 1;

// ------------------------------------------------------------ space-time grid

// Tensor grid [xlo, xhi]^n x [t0, t1]; time is the slowest index.
struct SpaceTimeGrid {
  std::vector<int> nx;  // nodes per spatial axis
  int nt = 0;
  double xlo = -1, xhi = 1;
  double t0 = 0, t1 = 1;

  SpaceTimeGrid() = default;
  SpaceTimeGrid(std::vector<int> per_axis, int n_time, double a, double b, double ta, double tb)
      : nx(std::move(per_axis)), nt(n_time), xlo(a), xhi(b), t0(ta), t1(tb) {
    if (nx.empty() || nt < 2 || !(xhi > xlo) || !(t1 > t0)) throw std::invalid_argument("SpaceTimeGrid: bad parameters");
    for (int k : nx)
      if (k < 3) throw std::invalid_argument("SpaceTimeGrid: need 3 nodes per axis");
  }
  int dim() const { return int(nx.size()); }
  std::size_t spatial_size() const {
    std::size_t s = 1;
    for (int k : nx) s *= std::size_t(k);
    return s;
  }
  std::size_t size() const { return spatial_size() * std::size_t(nt); }
  double hx(int k) const { return (xhi - xlo) / (nx[std::size_t(k)] - 1); }
  double ht() const { return (t1 - t0) / (nt - 1); }
  // spatial multi-index and time index of a node
  void coords(std::size_t idx, std::vector<int>& c, int& it) const {
    c.resize(nx.size());
    for (std::size_t k = 0; k < nx.size(); ++k) {
      c[k] = int(idx % std::size_t(nx[k]));
      idx /= std::size_t(nx[k]);
    }
    it = int(idx);
  }
  Vec x(std::size_t idx) const {
    std::vector<int> c;
    int it;
    coords(idx, c, it);
    Vec p(dim());
    for (int k = 0; k < dim(); ++k) p(k) = xlo + hx(k) * c[std::size_t(k)];
    return p;
  }
  double t(std::size_t idx) const { return t0 + ht() * double(idx / spatial_size()); }
  int time_index(std::size_t idx) const { return int(idx / spatial_size()); }
  // bottom or lateral boundary
  bool parabolic_boundary(std::size_t idx) const {
    std::vector<int> c;
    int it;
    coords(idx, c, it);
    if (it == 0) return true;
    for (std::size_t k = 0; k < nx.size(); ++k)
      if (c[k] == 0 || c[k] == nx[k] - 1) return true;
    return false;
  }
  // trapezoid weight of the node
  double weight(std::size_t idx) const {
    std::vector<int> c;
    int it;
    coords(idx, c, it);
    double w = ht() * ((it == 0 || it == nt - 1) ? 0.5 : 1.0);
    for (std::size_t k = 0; k < nx.size(); ++k) w *= hx(int(k)) * ((c[k] == 0 || c[k] == nx[k] - 1) ? 0.5 : 1.0);
    return w;
  }
  template <class F>
  std::vector<double> sample(F&& fn) const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(x(i), t(i));
    return v;
  }
};

// ------------------------------------------------------------ small LP

struct LPResult {
  bool optimal = false;
  double value = 0;
  Vec x;      // primal
  Vec dual;   // pi = B^{-T} c_B
};

namespace detail {

// max c.x  s.t.  A x = b, x >= 0, b >= 0. Two-phase tableau simplex with
// Bland's rule.
inline LPResult simplex(const Mat& A, const Vec& b, const Vec& c, double eps = 1e-11) {
  const long r = A.rows(), m = A.cols();
  for (long i = 0; i < r; ++i)
    if (b(i) < 0) throw std::invalid_argument("simplex: negative right-hand side");
  const long ncol = m + r;
  Mat T = Mat::Zero(r, ncol + 1);
  T.leftCols(m) = A;
  T.block(0, m, r, r).setIdentity();
  T.col(ncol) = b;
  std::vector<long> basis(static_cast<std::size_t>(r));
  for (long i = 0; i < r; ++i) basis[std::size_t(i)] = m + i;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double tol = eps * scale;

  auto pivot = [&](long pr, long pc) {
    T.row(pr) /= T(pr, pc);
    for (long i = 0; i < r; ++i)
      if (i != pr && T(i, pc) != 0.0) T.row(i) -= T(i, pc) * T.row(pr);
    basis[std::size_t(pr)] = pc;
  };
  // run with cost vector cost (length ncol), columns >= allowed excluded from entering
  auto run = [&](const Vec& cost, long allowed) {
    for (int iter = 0; iter < 10000; ++iter) {
      Vec cb(r);
      for (long i = 0; i < r; ++i) cb(i) = cost(basis[std::size_t(i)]);
      long enter = -1;
      for (long j = 0; j < allowed; ++j) {
        const double rc = cost(j) - cb.dot(T.col(j));
        if (rc > tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      long leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (long i = 0; i < r; ++i) {
        if (T(i, enter) > tol) {
          const double ratio = T(i, ncol) / T(i, enter);
          if (ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave >= 0 && basis[std::size_t(i)] < basis[std::size_t(leave)])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration limit");
  };

  // phase I: maximise -sum(artificials)
  Vec c1 = Vec::Zero(ncol);
  c1.tail(r).setConstant(-1.0);
  run(c1, ncol);
  double infeas = 0;
  for (long i = 0; i < r; ++i)
    if (basis[std::size_t(i)] >= m) infeas += T(i, ncol);
  LPResult res;
  if (infeas > tol * std::max(1.0, b.cwiseAbs().maxCoeff())) return res;
  // drive zero-level artificials out where possible
  for (long i = 0; i < r; ++i) {
    if (basis[std::size_t(i)] < m) continue;
    for (long j = 0; j < m; ++j)
      if (std::abs(T(i, j)) > tol) {
        pivot(i, j);
        break;
      }
  }
  Vec c2 = Vec::Zero(ncol);
  c2.head(m) = c;
  if (!run(c2, m)) return res;
  res.optimal = true;
  res.x = Vec::Zero(m);
  Mat B(r, r);
  Vec cb(r);
  for (long i = 0; i < r; ++i) {
    const long j = basis[std::size_t(i)];
    if (j < m) res.x(j) = T(i, ncol);
    if (j < m) {
      B.col(i) = A.col(j);
      cb(i) = c(j);
    } else {
      B.col(i) = Vec::Unit(r, j - m);
      cb(i) = 0;
    }
  }
  res.value = c.dot(res.x);
  res.dual = B.transpose().partialPivLu().solve(cb);
  return res;
}

} // namespace detail

// ------------------------------------------------------------ upper contact set

enum class ContactMethod { lp, brute_force };

struct ContactSetResult {
  std::vector<char> E, Eplus;            // per node
  std::vector<Vec> xi;                   // witness where E holds
  double sigma_R = 0, sigma_h_max = 0;   // Sigma(u) = {R|xi| < h < sigma_h_max}
  double tol = 0;
  std::size_t count_E() const { return std::size_t(std::count(E.begin(), E.end(), 1)); }
  std::size_t count_Eplus() const { return std::size_t(std::count(Eplus.begin(), Eplus.end(), 1)); }
};

// max_Y (u(Y) - u(X) - xi.(y - x)) over grid nodes with s <= t; <= 0 means xi touches
inline double contact_violation(const SpaceTimeGrid& g, const std::vector<double>& u, std::size_t X, const Vec& xi) {
  const Vec x = g.x(X);
  const int tx = g.time_index(X);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t Y = 0; Y < g.size(); ++Y) {
    if (Y == X || g.time_index(Y) > tx) continue;
    worst = std::max(worst, u[Y] - u[X] - xi.dot(g.x(Y) - x));
  }
  return worst;
}

namespace detail {

struct ContactRows {
  Mat A;   // rows -(y - x)
  Vec b;   // u(X) - u(Y)
};

inline ContactRows contact_rows(const SpaceTimeGrid& g, const std::vector<double>& u, std::size_t X) {
  const Vec x = g.x(X);
  const int tx = g.time_index(X);
  std::vector<std::size_t> ys;
  for (std::size_t Y = 0; Y < g.size(); ++Y)
    if (Y != X && g.time_index(Y) <= tx) ys.push_back(Y);
  ContactRows R{Mat(long(ys.size()), g.dim()), Vec(long(ys.size()))};
  for (std::size_t k = 0; k < ys.size(); ++k) {
    R.A.row(long(k)) = -(g.x(ys[k]) - x).transpose();
    R.b(long(k)) = u[X] - u[ys[k]];
  }
  return R;
}

// Feasibility of A xi <= b + tol through the dual of  min s : A xi - s <= b.
inline std::optional<Vec> contact_lp(const ContactRows& R, double tol) {
  const long m = R.A.rows(), n = R.A.cols();
  Mat M(n + 1, m);
  M.topRows(n) = R.A.transpose();
  M.row(n).setOnes();
  Vec e = Vec::Zero(n + 1);
  e(n) = 1;
  const LPResult lp = simplex(M, e, -R.b);
  if (!lp.optimal) return std::nullopt;
  const double s = lp.dual(n);
  if (s > tol) return std::nullopt;
  return Vec(-lp.dual.head(n));
}

// every n-subset of rows taken as active on b + tol; any vertex feasible
// for all rows decides membership (the relaxed set is a bounded polytope at
// interior nodes, so it is nonempty iff it has a vertex)
inline std::optional<Vec> contact_brute(const ContactRows& R, double tol) {
  const long m = R.A.rows(), n = R.A.cols();
  // rows with y = x carry no slope and are checked directly
  std::vector<long> live;
  for (long k = 0; k < m; ++k) {
    if (R.A.row(k).cwiseAbs().maxCoeff() == 0.0) {
      if (R.b(k) < -tol) return std::nullopt;
    } else {
      live.push_back(k);
    }
  }
  std::vector<long> pick(static_cast<std::size_t>(n));
  std::optional<Vec> found;
  std::function<void(long, long)> rec = [&](long from, long depth) {
    if (found) return;
    if (depth == n) {
      Mat S(n, n);
      Vec rhs(n);
      for (long k = 0; k < n; ++k) {
        S.row(k) = R.A.row(pick[std::size_t(k)]);
        rhs(k) = R.b(pick[std::size_t(k)]) + tol;
      }
      Eigen::FullPivLU<Mat> lu(S);
      if (lu.rank() < n) return;
      const Vec xi = lu.solve(rhs);
      const double slack = 1e-9 * tol + 1e-13 * (1 + xi.cwiseAbs().maxCoeff());
      for (long k : live)
        if (R.A.row(k).dot(xi) > R.b(k) + tol + slack) return;
      found = xi;
      return;
    }
    for (long i = from; i < long(live.size()); ++i) {
      pick[std::size_t(depth)] = live[std::size_t(i)];
      rec(i + 1, depth + 1);
      if (found) return;
    }
  };
  rec(0, 0);
  return found;
}

} // namespace detail

// E(u) on interior space-time nodes; E+(u) with the ball B_R centred at 0,
// R = half-width of the spatial box. E+ is evaluated at the recorded witness.
inline ContactSetResult upper_contact_set(const SpaceTimeGrid& g, const std::vector<double>& u,
                                          ContactMethod method = ContactMethod::lp) {
  if (u.size() != g.size()) throw std::invalid_argument("upper_contact_set: size mismatch");
  if (method == ContactMethod::brute_force && g.size() > 512)
    throw std::invalid_argument("upper_contact_set: grid too large for brute force, use the LP path");
  ContactSetResult res;
  double umax = 0, sup_plus = 0;
  for (double v : u) {
    umax = std::max(umax, std::abs(v));
    sup_plus = std::max(sup_plus, v);
  }
  res.tol = 1e-12 * (1 + umax);
  res.sigma_R = 0.5 * (g.xhi - g.xlo);
  res.sigma_h_max = 0.5 * sup_plus;
  res.E.assign(g.size(), 0);
  res.Eplus.assign(g.size(), 0);
  res.xi.assign(g.size(), Vec());
  const double R = res.sigma_R;
  const Vec centre = Vec::Constant(g.dim(), 0.5 * (g.xlo + g.xhi));
  for (std::size_t X = 0; X < g.size(); ++X) {
    if (g.parabolic_boundary(X)) continue;
    const detail::ContactRows rows = detail::contact_rows(g, u, X);
    const std::optional<Vec> xi =
        method == ContactMethod::lp ? detail::contact_lp(rows, res.tol) : detail::contact_brute(rows, res.tol);
    if (!xi) continue;
    res.E[X] = 1;
    res.xi[X] = *xi;
    const double h = u[X] - xi->dot(g.x(X) - centre);
    if (u[X] > 0 && R * xi->norm() < h && h < res.sigma_h_max) res.Eplus[X] = 1;
  }
  return res;
}

// ------------------------------------------------------------ maximum principles

// L u = -u_t + a u_xx + b u_x + c u on B_R x time, one space dimension.
struct Coefficients {
  std::vector<double> a, b, c;
};

struct MaxPrincipleBounds {
  int n = 1;
  double R = 1, T = 1;
  double lambda0 = 1, Lambda0 = 1, B = 0, c0 = 0, k = 0;
  double p = 2;
  double rho = 0.5;
  double q() const { return p > n + 1 ? 2.0 : 2.0 * (n + 1) / p; }
  void validate() const {
    if (n != kFrozenC1Dim) throw std::invalid_argument("MaxPrincipleBounds: c1 is frozen for n = 1 only");
    if (!(R > 0) || !(T > 0)) throw std::invalid_argument("MaxPrincipleBounds: R, T must be positive");
    if (!(lambda0 > 0) || !(Lambda0 >= lambda0)) throw std::invalid_argument("MaxPrincipleBounds: need 0 < lambda0 <= Lambda0");
    if (!(B >= 0) || !(k >= 0)) throw std::invalid_argument("MaxPrincipleBounds: need B >= 0, k >= 0");
    if (!(p > 0)) throw std::invalid_argument("MaxPrincipleBounds: need p > 0");
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("MaxPrincipleBounds: need 0 < rho < 1");
  }
};

// C~ = 2q(4(1+q)+n) lambda0^{-n/(n+1)} (c0 + B + Lambda0 + 1), on the unit
// cylinder; bounds rescaled by x -> x/R, t -> t/T. Negative c0 enters as 0.
inline double c_tilde(const MaxPrincipleBounds& b) {
  const double n = b.n, q = b.q();
  const double l0 = b.lambda0 * b.T / (b.R * b.R), L0 = b.Lambda0 * b.T / (b.R * b.R);
  const double Bs = b.B * b.T / b.R, c0 = std::max(b.c0, 0.0) * b.T;
  return 2 * q * (4 * (1 + q) + n) * std::pow(l0, -n / (n + 1)) * (c0 + Bs + L0 + 1);
}

struct MaxPrincipleCertificate {
  std::string check_id;
  MaxPrincipleBounds bounds;
  double q = std::numeric_limits<double>::quiet_NaN();
  double B0 = std::numeric_limits<double>::quiet_NaN();
  double Ctilde = std::numeric_limits<double>::quiet_NaN();
  double c1 = 0;
  double C = std::numeric_limits<double>::quiet_NaN();
  double lhs = 0, rhs = 0, slack = 0;
  double needed_c1 = 0;    // smallest c1 with slack >= 0 (firstmax)
  std::size_t eplus_nodes = 0;
  bool pass = false;
};

namespace detail {

inline void check_coefficients(const SpaceTimeGrid& g, const Coefficients& co, const MaxPrincipleBounds& b,
                               bool use_k) {
  if (g.dim() != 1) throw std::invalid_argument("maximum principle checks: one space dimension");
  if (co.a.size() != g.size() || co.b.size() != g.size() || co.c.size() != g.size())
    throw std::invalid_argument("maximum principle checks: coefficient size mismatch");
  if (std::abs(0.5 * (g.xhi - g.xlo) - b.R) > 1e-12 * b.R || std::abs(g.xlo + g.xhi) > 1e-12 * b.R)
    throw std::invalid_argument("maximum principle checks: grid is not B_R");
  if (std::abs((g.t1 - g.t0) - b.T) > 1e-12 * b.T) throw std::invalid_argument("maximum principle checks: time span is not T");
  const double e = 1e-12;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (co.a[i] < b.lambda0 * (1 - e) || co.a[i] > b.Lambda0 * (1 + e))
      throw std::invalid_argument("coefficient bounds violated: a outside [lambda0, Lambda0]");
    if (std::abs(co.b[i]) > b.B * (1 + e) + e) throw std::invalid_argument("coefficient bounds violated: |b| > B");
    if (co.c[i] > b.c0 + e) throw std::invalid_argument("coefficient bounds violated: c > c0");
    if (use_k && co.c[i] > b.k + e) throw std::invalid_argument("coefficient bounds violated: c > k");
  }
}

} // namespace detail

// sup u <= exp(kT)(sup_P u+ + c1 B0 R^{n/(n+1)} ||f/D*||_{n+1,E+(w)}),
// w = exp(-kt)u - sup_P(exp(-k.)u+). Time runs over [t0, t0 + T].
inline MaxPrincipleCertificate check_firstmax(const SpaceTimeGrid& g, const std::vector<double>& u,
                                              const std::vector<double>& f, const Coefficients& co,
                                              const MaxPrincipleBounds& bd, double c1 = kFrozenC1) {
  bd.validate();
  if (u.size() != g.size() || f.size() != g.size()) throw std::invalid_argument("check_firstmax: size mismatch");
  detail::check_coefficients(g, co, bd, true);
  const double n = bd.n, k = bd.k;
  MaxPrincipleCertificate cert;
  cert.check_id = "firstmax";
  cert.bounds = bd;
  cert.c1 = c1;
  double supP = 0, supPk = 0, sup = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    sup = std::max(sup, u[i]);
    if (!g.parabolic_boundary(i)) continue;
    supP = std::max(supP, std::max(u[i], 0.0));
    supPk = std::max(supPk, std::exp(-k * (g.t(i) - g.t0)) * std::max(u[i], 0.0));
  }
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = std::exp(-k * (g.t(i) - g.t0)) * u[i] - supPk;
  const ContactSetResult E = upper_contact_set(g, w);
  double bn = 0, fn = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!E.Eplus[i]) continue;
    const double D = co.a[i];  // det a, so D*^{n+1} = D
    bn += g.weight(i) * std::pow(std::abs(co.b[i]), n + 1) / D;
    fn += g.weight(i) * std::pow(std::abs(f[i]), n + 1) / D;
  }
  cert.eplus_nodes = E.count_Eplus();
  cert.B0 = bn / bd.R + 1;
  const double F = std::pow(fn, 1 / (n + 1));
  const double base = cert.B0 * std::pow(bd.R, n / (n + 1)) * F;
  cert.lhs = sup;
  cert.rhs = std::exp(k * bd.T) * (supP + c1 * base);
  cert.slack = cert.rhs - cert.lhs;
  const double need = sup * std::exp(-k * bd.T) - supP;
  cert.needed_c1 = need <= 0 ? 0.0 : (base > 0 ? need / base : std::numeric_limits<double>::infinity());
  cert.pass = cert.slack >= -1e-12 * (1 + std::abs(cert.lhs));
  return cert;
}

// sup_{rho Omega} u <= C(|Omega|^{-1/p}||u+||_p + (T/R)^{n/(n+1)}||f||_{n+1}),
// Omega = B_R x (-T, 0), rho Omega = B_{rho R} x (-rho T, 0].
inline MaxPrincipleCertificate check_parmax(const SpaceTimeGrid& g, const std::vector<double>& u,
                                            const std::vector<double>& f, const Coefficients& co,
                                            const MaxPrincipleBounds& bd, double c1 = kFrozenC1) {
  bd.validate();
  if (u.size() != g.size() || f.size() != g.size()) throw std::invalid_argument("check_parmax: size mismatch");
  if (std::abs(g.t1) > 1e-12 * bd.T) throw std::invalid_argument("check_parmax: time must run over (-T, 0)");
  detail::check_coefficients(g, co, bd, false);
  if (!(c1 > 0)) throw std::invalid_argument("check_parmax: c1 not calibrated");
  const double n = bd.n, p = bd.p, q = bd.q(), rho = bd.rho;
  MaxPrincipleCertificate cert;
  cert.check_id = "parmax";
  cert.bounds = bd;
  cert.c1 = c1;
  cert.q = q;
  cert.B0 = 1;  // the principal part has b = 0
  cert.Ctilde = c_tilde(bd);
  const double Q = 2.0;  // |B_1 x (-1, 0)| in one dimension
  const double shrink = std::pow(1 - rho, -2 * q);
  if (p > n + 1) {
    cert.C = shrink * c1 * cert.Ctilde * std::max(1.0, std::pow(Q, 1 / (n + 1)));
  } else {
    const double eps = 1 / (2 * c1 * cert.Ctilde), c2 = p / (n + 1);
    cert.C = shrink * 2 * c1 * cert.Ctilde * std::max(1.0, c2 * std::pow(eps, 1 - (n + 1) / p) * std::pow(Q, 1 / p));
  }
  double up = 0, fn = 0, lhs = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    up += g.weight(i) * std::pow(std::max(u[i], 0.0), p);
    fn += g.weight(i) * std::pow(std::abs(f[i]), n + 1);
    if (std::abs(g.x(i)(0)) <= rho * bd.R * (1 + 1e-12) && g.t(i) >= -rho * bd.T * (1 + 1e-12)) lhs = std::max(lhs, u[i]);
  }
  const double vol = 2 * bd.R * bd.T;
  const double term = std::pow(vol, -1 / p) * std::pow(up, 1 / p) + std::pow(bd.T / bd.R, n / (n + 1)) * std::pow(fn, 1 / (n + 1));
  cert.lhs = lhs;
  cert.rhs = cert.C * term;
  cert.slack = cert.rhs - cert.lhs;
  cert.pass = cert.slack >= -1e-12 * (1 + std::abs(cert.lhs));
  return cert;
}

// ------------------------------------------------------------ manufactured battery

// u = A cos(w x) e^{-beta t} + s x + G t (1 - x^2/R^2) + D,
// a = a0 (1 + a1 sin(x + t)), b = b0 cos(x), c = c0.
struct BatteryCase {
  std::string id;
  double A = 1, omega = 1, beta = 0, s = 0, G = 0, D = 0;
  double a0 = 1, a1 = 0, b0 = 0, c0 = 0;
  double R = 1, T = 1;
  double p = 2, rho = 0.5;
  int nx = 33, nt = 33;
};

struct BatteryProblem {
  SpaceTimeGrid grid;
  std::vector<double> u, f;
  Coefficients co;
  MaxPrincipleBounds bounds;
};

// firstmax runs on (0, T), parmax on (-T, 0)
inline BatteryProblem battery_problem(const BatteryCase& bc, bool parabolic_local) {
  if (!(std::abs(bc.a1) < 1) || !(bc.a0 > 0)) throw std::invalid_argument("battery case: need a0 > 0, |a1| < 1");
  BatteryProblem P;
  const double t0 = parabolic_local ? -bc.T : 0.0;
  P.grid = SpaceTimeGrid({bc.nx}, bc.nt, -bc.R, bc.R, t0, t0 + bc.T);
  const double R2 = bc.R * bc.R;
  auto uf = [&](double x, double t) {
    return bc.A * std::cos(bc.omega * x) * std::exp(-bc.beta * t) + bc.s * x + bc.G * t * (1 - x * x / R2) + bc.D;
  };
  const std::size_t N = P.grid.size();
  P.u.resize(N);
  P.f.resize(N);
  P.co.a.resize(N);
  P.co.b.resize(N);
  P.co.c.assign(N, bc.c0);
  for (std::size_t i = 0; i < N; ++i) {
    const double x = P.grid.x(i)(0), t = P.grid.t(i);
    const double E = std::exp(-bc.beta * t), cw = std::cos(bc.omega * x), sw = std::sin(bc.omega * x);
    const double ut = -bc.beta * bc.A * cw * E + bc.G * (1 - x * x / R2);
    const double ux = -bc.A * bc.omega * sw * E + bc.s - 2 * bc.G * t * x / R2;
    const double uxx = -bc.A * bc.omega * bc.omega * cw * E - 2 * bc.G * t / R2;
    const double a = bc.a0 * (1 + bc.a1 * std::sin(x + t)), b = bc.b0 * std::cos(x);
    P.co.a[i] = a;
    P.co.b[i] = b;
    P.u[i] = uf(x, t);
    P.f[i] = -ut + a * uxx + b * ux + bc.c0 * P.u[i];
  }
  MaxPrincipleBounds& B = P.bounds;
  B.n = 1;
  B.R = bc.R;
  B.T = bc.T;
  B.lambda0 = bc.a0 * (1 - std::abs(bc.a1));
  B.Lambda0 = bc.a0 * (1 + std::abs(bc.a1));
  B.B = std::abs(bc.b0);
  B.c0 = bc.c0;
  B.k = std::max(bc.c0, 0.0);
  B.p = bc.p;
  B.rho = bc.rho;
  return P;
}

// 1.25 x max over the battery of the c1 each case needs
inline double calibrate_c1(const std::vector<BatteryCase>& battery) {
  double m = 0;
  for (const auto& bc : battery) {
    const BatteryProblem P = battery_problem(bc, false);
    m = std::max(m, check_firstmax(P.grid, P.u, P.f, P.co, P.bounds, 1.0).needed_c1);
  }
  return 1.25 * m;
}

// ------------------------------------------------------------ energy inequality

enum class EnergyMode { elliptic, parabolic };

struct EnergyCertificate {
  EnergyMode mode = EnergyMode::elliptic;
  double Lambda = 0;        // sup |D^2 (1/f)| sup f
  double C1 = 0;            // sup |D (1/f)| sup f
  double eps = 0;           // (16 m C1)^{-1}
  double C = 0;             // Lambda + 128 m^3 C1^2
  std::vector<double> residual;   // interior nodes of Omega, boundary entries NaN
  double min_residual = 0;
  double tolerance = 0;
  std::vector<double> curvature;  // (e5)+(e6) combination per interior node
  double min_curvature = 0;
  bool pass = false;
};

namespace detail {

// sup over the nodes of [lo, hi] of |D(1/f)|, ||D^2(1/f)||, f
struct MetricBounds {
  double d1 = 0, d2 = 0, fmax = 0;
};

inline MetricBounds metric_bounds(const ChartMetric& M, const Grid1D& g, std::size_t lo, std::size_t hi) {
  MetricBounds mb;
  auto phi1 = [&](double x) { return -M.df(x) / (M.f(x) * M.f(x)); };
  for (std::size_t i = lo; i <= hi; ++i) {
    const double x = g[i];
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    const double p1 = phi1(x);
    double p2;
    if (M.radial() && x - h < 0) {
      p2 = (phi1(x + h) - phi1(std::max(x - h, 0.0))) / (x + h - std::max(x - h, 0.0));
    } else {
      p2 = (phi1(x + h) - phi1(x - h)) / (2 * h);
    }
    double hess = std::abs(p2);
    if (M.radial() && x > 0) hess = std::max(hess, std::abs(p1 / x));
    mb.d1 = std::max(mb.d1, std::abs(p1));
    mb.d2 = std::max(mb.d2, hess);
    mb.fmax = std::max(mb.fmax, M.f(x));
  }
  return mb;
}

inline void curvature_samples(const TargetManifold& N, const MapField& u, EnergyCertificate& cert) {
  const Grid1D& g = *u.grid;
  cert.curvature.assign(u.size(), std::numeric_limits<double>::quiet_NaN());
  cert.min_curvature = std::numeric_limits<double>::infinity();
  std::vector<Vec> d;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (g.is_boundary(i)) continue;
    detail::node_derivatives(u, i, d);
    double s = 0;
    if (N.kind() != TargetKind::flat && d.size() > 1) {
      const RiemannTensor R = riemann(N, u.point(i));
      for (const Vec& X : d)
        for (const Vec& Y : d) s -= R.eval(X, Y, X, Y);
    }
    cert.curvature[i] = s;
    cert.min_curvature = std::min(cert.min_curvature, s);
  }
}

inline void energy_constants(const ChartMetric& M, const Grid1D& g, EnergyCertificate& cert) {
  const MetricBounds mb = metric_bounds(M, g, 0, g.size() - 1);
  const double m = M.m();
  cert.Lambda = mb.d2 * mb.fmax;
  cert.C1 = mb.d1 * mb.fmax;
  cert.eps = cert.C1 > 0 ? 1 / (16 * m * cert.C1) : std::numeric_limits<double>::infinity();
  cert.C = cert.Lambda + 128 * m * m * m * cert.C1 * cert.C1;
}

inline ScalarField interior_laplacian(const ChartMetric& M, const ScalarField& e) {
  return holomorphic_laplacian(M, e);
}

} // namespace detail

// -Lap~ e(u) <= C(Omega) e(u) at the interior nodes of the grid of u, which is
// taken as Omega. Tolerance 10 h_max^2 (sup|Lap~ e| + C sup e).
inline EnergyCertificate check_energy_inequality(const ChartMetric& M, const TargetManifold& N, const MapField& u,
                                                 double stationary_tol = 1e-6) {
  // every target kind is nonpositively curved; the curvature samples check it
  const ScalarField tn = tension_norm(M, N, u);
  const double ms = *std::max_element(tn.v.begin(), tn.v.end());
  if (ms > stationary_tol)
    throw std::invalid_argument("check_energy_inequality: map not stationary (max ||sigma|| = " + std::to_string(ms) + ")");
  EnergyCertificate cert;
  cert.mode = EnergyMode::elliptic;
  const Grid1D& g = *u.grid;
  detail::energy_constants(M, g, cert);
  const ScalarField e = energy_density(M, N, u);
  const ScalarField Le = detail::interior_laplacian(M, e);
  double sl = 0, se = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    sl = std::max(sl, std::abs(Le[i]));
    se = std::max(se, e[i]);
  }
  cert.tolerance = 10 * g.h_max() * g.h_max() * (sl + cert.C * se);
  cert.residual.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
  cert.min_residual = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    cert.residual[i] = cert.C * e[i] + Le[i];
    cert.min_residual = std::min(cert.min_residual, cert.residual[i]);
  }
  detail::curvature_samples(N, u, cert);
  cert.pass = cert.min_residual >= -cert.tolerance && cert.min_curvature >= -1e-10;
  return cert;
}

// (d/dt - 1/4 Lap~) e <= 1/4 C(Omega) e between two flow states, with the
// time derivative a forward difference and Lap~ e averaged over both states.
inline EnergyCertificate check_energy_inequality(const ChartMetric& M, const TargetManifold& N, const FlowState& s0,
                                                 const FlowState& s1) {
  if (!(s1.t > s0.t)) throw std::invalid_argument("check_energy_inequality: states not in time order");
  if (s0.u.grid != s1.u.grid) throw std::invalid_argument("check_energy_inequality: states on different grids");
  EnergyCertificate cert;
  cert.mode = EnergyMode::parabolic;
  const Grid1D& g = *s0.u.grid;
  detail::energy_constants(M, g, cert);
  const ScalarField e0 = energy_density(M, N, s0.u), e1 = energy_density(M, N, s1.u);
  const ScalarField L0 = detail::interior_laplacian(M, e0), L1 = detail::interior_laplacian(M, e1);
  const double dt = s1.t - s0.t;
  double sl = 0, se = 0, st = 0;
  cert.residual.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
  cert.min_residual = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    const double em = 0.5 * (e0[i] + e1[i]), Lm = 0.5 * (L0[i] + L1[i]), et = (e1[i] - e0[i]) / dt;
    sl = std::max(sl, std::abs(Lm));
    se = std::max(se, em);
    st = std::max(st, std::abs(et));
    cert.residual[i] = 0.25 * cert.C * em + 0.25 * Lm - et;
    cert.min_residual = std::min(cert.min_residual, cert.residual[i]);
  }
  cert.tolerance = 10 * g.h_max() * g.h_max() * (sl + cert.C * se) + 10 * dt * st;
  detail::curvature_samples(N, s1.u, cert);
  cert.pass = cert.min_residual >= -cert.tolerance && cert.min_curvature >= -1e-10;
  return cert;
}

} // namespace hhm
