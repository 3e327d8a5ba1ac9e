#pragma once

#include "kummer.hpp"
#include "operators.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

struct Check {
  std::string name;
  double value = 0;
  bool pass = false;
};

// Sampled differential-inequality certificate. residual >= -tolerance on the
// finest grid; tolerance is a Richardson estimate, so O(h^2).
struct BarrierCertificate {
  std::string id;
  std::map<std::string, double> params;
  double claimed_constant = 0;
  std::string grid;
  double h = 0;
  double residual_min = 0;
  double tolerance = 0;
  double order = std::numeric_limits<double>::quiet_NaN();
  std::vector<Check> checks;
  bool pass = false;

  void finish() {
    pass = residual_min >= -tolerance;
    for (const Check& c : checks) pass = pass && c.pass;
  }
};

namespace detail {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

struct LevelResult {
  std::vector<double> coarse;  // residual at the level-0 sample points (NaN = skip)
  double min_all = std::numeric_limits<double>::infinity();
};

struct RefineStats {
  double residual_min = 0, d1 = 0, d2 = 0, order = nan_v, tolerance = 0;
};

// three nested refinements; order from successive differences at shared samples
template <class Level>
RefineStats refine3(Level&& level, double floor_scale) {
  const LevelResult r0 = level(0), r1 = level(1), r2 = level(2);
  RefineStats s;
  double scale = 0;
  for (std::size_t i = 0; i < r0.coarse.size(); ++i) {
    if (std::isnan(r0.coarse[i]) || std::isnan(r1.coarse[i]) || std::isnan(r2.coarse[i])) continue;
    s.d1 = std::max(s.d1, std::abs(r0.coarse[i] - r1.coarse[i]));
    s.d2 = std::max(s.d2, std::abs(r1.coarse[i] - r2.coarse[i]));
    scale = std::max(scale, std::abs(r2.coarse[i]));
  }
  s.residual_min = r2.min_all;
  const double fl = 1e-12 * std::max(scale, floor_scale);
  if (s.d2 > fl) s.order = std::log2(s.d1 / s.d2);
  s.tolerance = 10.0 * s.d2 / 3.0 + fl;
  return s;
}

inline void apply_stats(BarrierCertificate& c, const RefineStats& s) {
  c.residual_min = s.residual_min;
  c.tolerance = s.tolerance;
  c.order = s.order;
}

// residual of -inv_f * Lap v - rhs on a radial grid (FV Laplacian in dim n)
inline std::vector<double> radial_residual(const Grid1D& g, int n, const std::function<double(double)>& v,
                                           const std::function<double(double)>& inv_f,
                                           const std::function<double(double)>& rhs) {
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = v(g[i]);
  const std::vector<double> L = apply_stencil(fv_laplacian(g, n), u);
  std::vector<double> res(g.size(), nan_v);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.is_boundary(i)) res[i] = -inv_f(g[i]) * L[i] - rhs(g[i]);
  return res;
}

inline LevelResult collect(const std::vector<double>& res, int stride) {
  LevelResult out;
  for (std::size_t i = 0; i < res.size(); i += std::size_t(stride)) out.coarse.push_back(res[i]);
  for (double x : res)
    if (!std::isnan(x)) out.min_all = std::min(out.min_all, x);
  return out;
}

} // namespace detail

// ------------------------------------------------------------ elliptic barriers

// -Lap_e (1+|x|^2)^{-alpha} >= c (1+|x|^2)^{-alpha-1}, c = 4 alpha (n/2 - alpha - 1)
inline double power_constant(int n, double alpha) { return 4 * alpha * (0.5 * n - (alpha + 1)); }

inline BarrierCertificate barrier_power(int n, double alpha, double R = 50, int cells = 800) {
  if (n <= 2) throw std::invalid_argument("barrier_power: n must exceed 2");
  if (!(alpha > 0) || !(alpha < 0.5 * n - 1)) throw std::invalid_argument("barrier_power: need 0 < alpha < n/2 - 1");
  BarrierCertificate c;
  c.id = "power";
  c.params = {{"n", n}, {"alpha", alpha}};
  c.claimed_constant = power_constant(n, alpha);
  const double cc = c.claimed_constant;
  auto v = [alpha](double r) { return std::pow(1 + r * r, -alpha); };
  auto rhs = [alpha, cc](double r) { return cc * std::pow(1 + r * r, -alpha - 1); };
  auto one = [](double) { return 1.0; };
  auto level = [&](int k) {
    const Grid1D g = Grid1D::radial_uniform(0, R, cells << k, n);
    // relative to the bound
    std::vector<double> res = detail::radial_residual(g, n, v, one, rhs);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] /= rhs(g[i]);
    return detail::collect(res, 1 << k);
  };
  detail::apply_stats(c, detail::refine3(level, 1.0));
  c.h = R / (cells << 2);
  c.grid = "radial uniform r in [0," + std::to_string(R) + "], " + std::to_string(cells << 2) + " cells, relative";
  // -Lap v(0) = 2 alpha n
  const Grid1D g = Grid1D::radial_uniform(0, R, cells << 2, n);
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = v(g[i]);
  const double centre = -apply_stencil(fv_laplacian(g, n), u)[0];
  c.checks.push_back({"centre value 2 alpha n", centre - 2 * alpha * n, std::abs(centre - 2 * alpha * n) < 1e-3});
  c.finish();
  return c;
}

// A = max(2, exp(4(alpha+1)/(n-2))) makes the bracket 2(alpha+1)/((n-2) log A) <= 1/2
inline double log_barrier_A(int n, double alpha) { return std::max(2.0, std::exp(4 * (alpha + 1) / (n - 2))); }

// -Lap_e (log(A+r^2))^{-alpha} >= (alpha (n-2)/A) (log(A+r^2))^{-alpha-1} (1+r^2)^{-1},
// i.e. -Lap~ v >= (alpha (n-2)/A) (log(A+r^2))^{-alpha-1} for f = (1+r^2)^{-1}
inline BarrierCertificate barrier_log(int n, double alpha, double R = 1000, int cells = 400) {
  if (n <= 2) throw std::invalid_argument("barrier_log: n must exceed 2");
  if (!(alpha > 0)) throw std::invalid_argument("barrier_log: alpha must be positive");
  const double A = log_barrier_A(n, alpha);
  BarrierCertificate c;
  c.id = "log";
  c.params = {{"n", n}, {"alpha", alpha}, {"A", A}};
  c.claimed_constant = alpha * (n - 2) / A;
  const double cc = c.claimed_constant;
  auto v = [A, alpha](double r) { return std::pow(std::log(A + r * r), -alpha); };
  auto rhs = [A, alpha, cc](double r) { return cc * std::pow(std::log(A + r * r), -alpha - 1) / (1 + r * r); };
  auto one = [](double) { return 1.0; };
  // nodes r = e^xi - 1, xi uniform
  const double xi_max = std::log1p(R);
  auto level = [&](int k) {
    const int N = cells << k;
    std::vector<double> x(N + 1);
    for (int i = 0; i <= N; ++i) x[i] = std::expm1(xi_max * i / N);
    x[N] = R;
    const Grid1D g(Topology::radial, x, n);
    // normalised by the bound, which spans many decades on [0, R]
    std::vector<double> res = detail::radial_residual(g, n, v, one, rhs);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] /= rhs(g[i]);
    return detail::collect(res, 1 << k);
  };
  detail::apply_stats(c, detail::refine3(level, 1.0));
  c.h = xi_max / (cells << 2);
  c.grid = "radial r = exp(xi)-1, xi uniform, r in [0," + std::to_string(R) + "], relative residual";
  c.checks.push_back({"bracket 2(alpha+1)/((n-2)log A) <= 1/2", 2 * (alpha + 1) / ((n - 2) * std::log(A)),
                      2 * (alpha + 1) / ((n - 2) * std::log(A)) <= 0.5 + 1e-12});
  c.finish();
  return c;
}

// Poincare ball f = 4/(1-r^2)^2 in real dimension n = 2m; W = A + 2 artanh r.
// -Lap~ W^{-mu'} >= mu'(A-mu'-1)/A W^{-mu'-1}.
inline double poincare_barrier_constant(double mu_p, double A) { return mu_p * (A - mu_p - 1) / A; }

inline BarrierCertificate barrier_poincare(double mu_p, int m = 2, double A = detail::nan_v, double rho_max = 12,
                                           int cells = 400) {
  if (!(mu_p > 0)) throw std::invalid_argument("barrier_poincare: mu' must be positive");
  if (m < 2) throw std::invalid_argument("barrier_poincare: m must be >= 2");
  if (std::isnan(A)) A = mu_p + 2;
  if (!(A > mu_p + 1)) throw std::invalid_argument("barrier_poincare: A must exceed mu'+1");
  const int n = 2 * m;
  BarrierCertificate c;
  c.id = "poincare";
  c.params = {{"mu_prime", mu_p}, {"m", m}, {"A", A}};
  c.claimed_constant = poincare_barrier_constant(mu_p, A);
  const double cc = c.claimed_constant;
  // in rho = 2 artanh r: Lap~ v = v_rr + (r + (n-1)(1-r^2)/(2r)) v_r (derivatives in rho)
  auto drift = [n](double rho) {
    const double r = std::tanh(0.5 * rho);
    return r + (n - 1) * (1 - r * r) / (2 * r);
  };
  auto v = [A, mu_p](double rho) { return std::pow(A + rho, -mu_p); };
  auto rhs = [A, mu_p, cc](double rho) { return cc * std::pow(A + rho, -mu_p - 1); };
  auto level = [&](int k) {
    const int N = cells << k;
    const double h = rho_max / N;
    std::vector<double> res(N + 1, detail::nan_v);
    for (int i = 1; i < N; ++i) {
      const double x = h * i;
      const double vm = v(x - h), v0 = v(x), vp = v(x + h);
      const double lap = (vp - 2 * v0 + vm) / (h * h) + drift(x) * (vp - vm) / (2 * h);
      res[i] = (-lap - rhs(x)) / rhs(x);
    }
    return detail::collect(res, 1 << k);
  };
  detail::apply_stats(c, detail::refine3(level, 1.0));
  c.h = rho_max / (cells << 2);
  c.grid = "rho = 2 artanh r uniform in (0," + std::to_string(rho_max) + "), relative residual";
  // K(r) = mu' r + (n-1) mu' (1-r^2)/(2r) decreasing on (0,1), K(1) = mu'
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < 1000; ++i) {
    const double r = i / 1000.0;
    worst = std::max(worst, mu_p - (n - 1) * mu_p * (1 + r * r) / (2 * r * r));
  }
  c.checks.push_back({"coefficient derivative < 0", worst, worst < 0});
  c.finish();
  return c;
}

// d~(s) = (1-|s|)^{-delta} - 1
inline double two_ends_distance(double s, double delta) { return std::pow(1 - std::abs(s), -delta) - 1; }

inline double two_ends_coefficient(double mu_p, double delta) { return mu_p * (1 - delta * mu_p) / delta; }

// -Lap~ (1+d~)^{-mu'} = mu'(1-delta mu')/delta (1+d~)^{-mu'-2} on 1/2 < |s| < 1
inline BarrierCertificate barrier_twoends(double mu_p, double delta, int halvings = 20, int per_unit = 40) {
  if (!(delta > 0)) throw std::invalid_argument("barrier_twoends: delta must be positive");
  if (!(mu_p > 0) || !(delta * mu_p < 1)) throw std::invalid_argument("barrier_twoends: need 0 < delta mu' < 1");
  BarrierCertificate c;
  c.id = "twoends";
  c.params = {{"mu_prime", mu_p}, {"delta", delta}};
  c.claimed_constant = two_ends_coefficient(mu_p, delta);
  const double cc = c.claimed_constant;
  // x = 1-|s| = e^{-y}, y uniform in [log 2, log 2 + halvings log 2];
  // d^2/ds^2 = e^{2y}(v_yy + v_y), f^{-1} = x^{2 delta + 2}/delta^2
  const double y0 = std::log(2.0), y1 = y0 + halvings * std::log(2.0);
  auto v = [delta, mu_p](double y) { return std::exp(-delta * mu_p * y); };
  auto rhs = [delta, mu_p, cc](double y) { return cc * std::exp(-delta * (mu_p + 2) * y); };
  double identity_err = 0;
  auto level = [&](int k) {
    const int N = (per_unit * halvings) << k;
    const double h = (y1 - y0) / N;
    std::vector<double> res(N + 1, detail::nan_v);
    for (int i = 1; i < N; ++i) {
      const double y = y0 + h * i;
      const double vm = v(y - h), v0 = v(y), vp = v(y + h);
      const double vss = std::exp(2 * y) * ((vp - 2 * v0 + vm) / (h * h) + (vp - vm) / (2 * h));
      const double x = std::exp(-y);
      const double lhs = -std::pow(x, 2 * delta + 2) / (delta * delta) * vss;
      res[i] = (lhs - rhs(y)) / rhs(y);
      if (k == 2) identity_err = std::max(identity_err, std::abs(res[i]));
    }
    return detail::collect(res, 1 << k);
  };
  const detail::RefineStats st = detail::refine3(level, 1.0);
  detail::apply_stats(c, st);
  c.h = (y1 - y0) / ((per_unit * halvings) << 2);
  c.grid = "x = 1-|s| = exp(-y), y uniform, 1/2 < |s| < 1 - 2^-" + std::to_string(halvings + 1) + ", relative";
  c.checks.push_back({"coefficient positive", cc, cc > 0});
  c.checks.push_back({"identity |lhs/rhs - 1|", identity_err, identity_err <= st.tolerance});
  c.finish();
  return c;
}

// nonnegative test function (1-((s-s0)/w)^2)^4, optionally times the same in t
struct Bump {
  double s0 = 0, w = 0.1, t0 = 0, tau = 0;
  double operator()(double s) const {
    const double q = (s - s0) / w;
    if (std::abs(q) >= 1) return 0;
    const double b = 1 - q * q;
    return b * b * b * b;
  }
  double d1(double s) const {
    const double q = (s - s0) / w;
    if (std::abs(q) >= 1) return 0;
    const double b = 1 - q * q;
    return -8 * q * b * b * b / w;
  }
  double d2(double s) const {
    const double q = (s - s0) / w;
    if (std::abs(q) >= 1) return 0;
    const double b = 1 - q * q;
    return (-8 * b * b * b + 48 * q * q * b * b) / (w * w);
  }
  double in_time(double t) const {
    if (tau <= 0) return 1;
    const double q = (t - t0) / tau;
    if (std::abs(q) >= 1) return 0;
    const double b = 1 - q * q;
    return b * b * b * b;
  }
};

// 20 bumps concentrated near the gluing points |s| = 1/2
inline std::vector<Bump> default_bump_battery() {
  std::vector<Bump> b;
  for (double sg : {-1.0, 1.0}) {
    for (double w : {0.02, 0.05, 0.1, 0.2}) b.push_back({sg * 0.5, w});
    for (double w : {0.05, 0.15}) b.push_back({sg * 0.75, w});
    for (double w : {0.1, 0.15}) b.push_back({sg * 0.3, w});
    b.push_back({sg * 0.9, 0.05});
  }
  b.push_back({0.0, 0.1});
  b.push_back({0.0, 0.3});
  return b;
}

// glued v of the two-ends example: (1+d~)^{-mu'} outside, (1+d~(1/2))^{-mu'} b(s) inside
struct TwoEndsGlued {
  double mu_p, delta, eps;
  double outer(double s) const { return std::pow(1 - std::abs(s), delta * mu_p); }
  double operator()(double s) const {
    if (std::abs(s) > 0.5) return outer(s);
    return outer(0.5) * (1 + eps * (0.25 - s * s));
  }
  // second derivative away from |s| = 1/2
  double d2(double s) const {
    if (std::abs(s) > 0.5) {
      const double x = 1 - std::abs(s), k = delta * mu_p;
      return k * (k - 1) * std::pow(x, k - 2);
    }
    return -2 * eps * outer(0.5);
  }
};

// jump condition threshold: -eps + mu' d~'(1/2)/(1+d~(1/2)) >= 0  <=>  eps <= 2 delta mu'
inline double twoends_eps_threshold(double mu_p, double delta) { return 2 * delta * mu_p; }

inline double twoends_jump(double mu_p, double delta, double eps) {
  const double dp = delta * std::pow(0.5, -delta - 1);
  return -eps + mu_p * dp / (1 + two_ends_distance(0.5, delta));
}

// integral of (-Lap~* phi) v f^m dx over the s-line: -(phi f^{m-1})'' v
inline double twoends_weak_integral(const ChartMetric& M, const TwoEndsGlued& v, const Bump& b) {
  const int m = M.m();
  auto integrand = [&](double s) {
    const double f = M.f(s), fp = M.df(s), fpp = M.d2f(s);
    const double F = std::pow(f, m - 1);
    const double Fp = (m - 1) * std::pow(f, m - 2) * fp;
    const double Fpp = (m - 1) * ((m - 2) * std::pow(f, m - 3) * fp * fp + std::pow(f, m - 2) * fpp);
    const double pf2 = b.d2(s) * F + 2 * b.d1(s) * Fp + b(s) * Fpp;
    return -pf2 * v(s);
  };
  const double lo = std::max(-1.0 + 1e-12, b.s0 - b.w), hi = std::min(1.0 - 1e-12, b.s0 + b.w);
  std::vector<double> cuts{lo};
  for (double p : {-0.5, 0.5})
    if (p > lo && p < hi) cuts.push_back(p);
  cuts.push_back(hi);
  double I = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    I += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[k], cuts[k + 1], 8, 1e-11);
  return I;
}

inline BarrierCertificate weak_supersolution_twoends(double mu_p, double delta, double eps, const ChartMetric& M,
                                                     const std::vector<Bump>& battery = default_bump_battery()) {
  if (M.kind() != MetricKind::two_ends || std::abs(M.delta() - delta) > 1e-15)
    throw std::invalid_argument("weak_supersolution_twoends: metric must be two-ends with the same delta");
  if (!(mu_p > 0) || !(delta * mu_p < 1)) throw std::invalid_argument("weak_supersolution_twoends: need 0 < delta mu' < 1");
  if (!(eps > 0)) throw std::invalid_argument("weak_supersolution_twoends: eps must be positive");
  BarrierCertificate c;
  c.id = "twoends-weak";
  c.params = {{"mu_prime", mu_p}, {"delta", delta}, {"eps", eps}, {"m", M.m()}};
  c.claimed_constant = twoends_eps_threshold(mu_p, delta);
  const TwoEndsGlued v{mu_p, delta, eps};
  const double cont = std::abs(v(0.5) - v(std::nextafter(0.5, 1.0)));
  c.checks.push_back({"continuity at |s| = 1/2", cont, cont <= 1e-12});
  // -Lap~ b = 2 eps v(1/2) / a(s) on |s| <= 1/2, sampled with a 3-point difference
  double inner = std::numeric_limits<double>::infinity();
  const double h = 1e-3;
  for (int i = -500; i <= 500; ++i) {
    const double s = i * 1e-3;
    const double sl = std::max(s - h, -0.5), sr = std::min(s + h, 0.5);
    const double hl = s - sl, hr = sr - s;
    if (hl <= 0 || hr <= 0) continue;
    const double d2 = 2 * (v(sl) * hr - v(s) * (hl + hr) + v(sr) * hl) / (hl * hr * (hl + hr));
    inner = std::min(inner, -d2 / M.f(s));
  }
  c.checks.push_back({"interior -Lap~ b > 0", inner, inner > 0});
  const double J = twoends_jump(mu_p, delta, eps);
  c.checks.push_back({"jump condition", J, J >= 0});
  double weak = std::numeric_limits<double>::infinity();
  for (const Bump& b : battery) {
    // normalised by the mass of the test function
    auto mass_fn = [&](double s) { return b(s); };
    const double mass = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        mass_fn, std::max(-1.0, b.s0 - b.w), std::min(1.0, b.s0 + b.w), 8, 1e-11);
    weak = std::min(weak, twoends_weak_integral(M, v, b) / mass);
  }
  c.checks.push_back({"weak form over battery", weak, weak >= -1e-10});
  c.residual_min = J;
  c.tolerance = 0;
  c.grid = "s in [-1/2, 1/2] step 1e-3; battery of " + std::to_string(battery.size()) + " bumps";
  c.h = h;
  c.finish();
  return c;
}

// ------------------------------------------------------------ tension of id

// (m-1)/(2 f) |grad sqrt(f~)| for radial conformal profiles
inline double sigma_id_conformal(int m, const Profile& f, const Profile& ft, double r) {
  const double g = ft.df(r) / (2 * std::sqrt(ft.f(r)));
  return (m - 1) / (2 * f.f(r)) * std::abs(g);
}

using HermitianMetric = std::function<Eigen::MatrixXcd(const Vec&)>;

inline HermitianMetric conformal_hermitian(const ChartMetric& M) {
  return [M](const Vec& z) {
    return Eigen::MatrixXcd(M.f_at(z) * Eigen::MatrixXcd::Identity(M.m(), M.m()));
  };
}

struct AepsResult {
  Eigen::VectorXcd A;
  double norm = 0;
};

// A^e = 1/2 g~^{e dbar} g^{a bbar} (g~_{a dbar, bbar} - g~_{a bbar, dbar}); norm with g~.
// Real coordinates (x1, y1, ..., xm, ym); d/dzbar = (d/dx + i d/dy)/2.
inline AepsResult tension_vector_Aeps(const HermitianMetric& g, const HermitianMetric& gt, const Vec& z,
                                      double h = 5e-4) {
  const Eigen::MatrixXcd G = g(z), Gt = gt(z);
  const int m = int(G.rows());
  if (z.size() != 2 * m || Gt.rows() != m) throw std::invalid_argument("tension_vector_Aeps: dimension mismatch");
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(G), lut(Gt);
  if (!lu.isInvertible() || !lut.isInvertible()) throw std::domain_error("tension_vector_Aeps: singular metric");
  // inverse with sum_b M_{a bbar} M^{c bbar} = delta: M^{-1} transposed
  const Eigen::MatrixXcd Gi = G.inverse().transpose(), Gti = Gt.inverse().transpose();
  auto d_real = [&](int k) {
    Vec e = Vec::Zero(2 * m);
    e(k) = 1;
    return Eigen::MatrixXcd((-gt(z + 2 * h * e) + 8.0 * gt(z + h * e) - 8.0 * gt(z - h * e) + gt(z - 2 * h * e)) /
                            (12 * h));
  };
  std::vector<Eigen::MatrixXcd> dbar(m);  // dbar[b](a, c) = d/dzbar_b g~_{a cbar}
  const std::complex<double> I(0, 1);
  for (int b = 0; b < m; ++b) dbar[b] = 0.5 * (d_real(2 * b) + I * d_real(2 * b + 1));
  Eigen::VectorXcd A = Eigen::VectorXcd::Zero(m);
  for (int e = 0; e < m; ++e)
    for (int d = 0; d < m; ++d)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) A(e) += 0.5 * Gti(e, d) * Gi(a, b) * (dbar[b](a, d) - dbar[d](a, b));
  std::complex<double> n2 = 0;
  for (int e = 0; e < m; ++e)
    for (int p = 0; p < m; ++p) n2 += Gt(e, p) * A(e) * std::conj(A(p));
  return {A, std::sqrt(std::max(0.0, n2.real()))};
}

// |z|(7+2|z|^2)/(2(1+|z|^2)^2) for h(z) = z/(1+|z|^2) into the warped planes
inline double sigma_h_example(double r) { return r * (7 + 2 * r * r) / (2 * (1 + r * r) * (1 + r * r)); }

// ------------------------------------------------------------ growth, curvature

enum class GrowthClass { bounded_domain, sublinear, linear, superlinear };

inline std::string to_string(GrowthClass g) {
  switch (g) {
  case GrowthClass::bounded_domain: return "bounded-domain";
  case GrowthClass::sublinear: return "sublinear";
  case GrowthClass::linear: return "linear";
  case GrowthClass::superlinear: return "superlinear";
  }
  return "?";
}

struct GrowthReport {
  std::vector<double> r, D, psi;
  double exponent = detail::nan_v;
  GrowthClass cls = GrowthClass::linear;
  bool divergent = false;        // bounded domain: D unbounded toward the end
  bool monotone_derivative = false;
};

// D(r) = int_{r0}^r sqrt f. domain_end finite: coordinate domain ends there.
inline GrowthReport growth_profile(const Profile& f, double r0, double r1,
                                   double domain_end = std::numeric_limits<double>::infinity(), int samples = 41) {
  if (!(r1 > r0)) throw std::invalid_argument("growth_profile: empty range");
  GrowthReport g;
  auto sq = [&](double t) { return std::sqrt(f.f(t)); };
  auto D = [&](double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(sq, a, b, 12, 1e-12);
  };
  // near a finite end: r = end - e^{-y}
  auto D_end = [&](double a, double b) {
    auto fy = [&](double y) { return sq(domain_end - std::exp(-y)) * std::exp(-y); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(fy, -std::log(domain_end - a),
                                                                         -std::log(domain_end - b), 12, 1e-12);
  };
  const bool bounded = std::isfinite(domain_end);
  // samples: uniform for bounded domains, log-spaced over the outer decade otherwise
  double acc = 0, prev = r0;
  for (int k = 0; k < samples; ++k) {
    double r;
    if (bounded)
      r = r0 + (r1 - r0) * k / (samples - 1);
    else
      r = r1 * std::pow(10.0, -1.0 + double(k) / (samples - 1));
    if (r < r0) r = r0;
    acc += D(prev, r);
    prev = r;
    g.r.push_back(r);
    g.D.push_back(acc);
    const double fr = f.f(r);
    g.psi.push_back(r > 0 ? f.df(r) / (2 * r * fr) : detail::nan_v);
  }
  g.monotone_derivative = true;
  for (std::size_t k = 1; k < g.r.size(); ++k)
    if (sq(g.r[k]) < sq(g.r[k - 1]) * (1 - 1e-12)) g.monotone_derivative = false;
  if (bounded) {
    g.cls = GrowthClass::bounded_domain;
    double last = 0;
    std::vector<double> inc;
    double a = r1;
    for (int k = 2; k <= 10; k += 2) {
      const double b = domain_end - std::pow(10.0, -k) * (domain_end - r0);
      if (b <= a) continue;
      inc.push_back(D_end(a, b));
      a = b;
    }
    last = inc.empty() ? 0 : inc.back();
    g.divergent = inc.size() >= 2 && last > 0.5 * inc[inc.size() - 2];
    return g;
  }
  // least squares on log D vs log r
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < g.r.size(); ++k) {
    if (!(g.D[k] > 0) || !(g.r[k] > 0)) continue;
    const double x = std::log(g.r[k]), y = std::log(g.D[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  g.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (g.exponent < 0.9)
    g.cls = GrowthClass::sublinear;
  else if (g.exponent <= 1.1)
    g.cls = GrowthClass::linear;
  else
    g.cls = GrowthClass::superlinear;
  return g;
}

enum class SignClass { zero, positive, nonnegative, negative, nonpositive, indefinite };

inline std::string to_string(SignClass s) {
  switch (s) {
  case SignClass::zero: return "zero";
  case SignClass::positive: return "positive";
  case SignClass::nonnegative: return "nonnegative";
  case SignClass::negative: return "negative";
  case SignClass::nonpositive: return "nonpositive";
  case SignClass::indefinite: return "indefinite";
  }
  return "?";
}

struct SignReport {
  std::vector<double> x, value;
  double min = 0, max = 0;
  SignClass sign = SignClass::zero;
};

inline SignClass classify_sign(double lo, double hi, double tol) {
  if (std::abs(lo) <= tol && std::abs(hi) <= tol) return SignClass::zero;
  if (lo > tol) return SignClass::positive;
  if (lo >= -tol) return SignClass::nonnegative;
  if (hi < -tol) return SignClass::negative;
  if (hi <= tol) return SignClass::nonpositive;
  return SignClass::indefinite;
}

namespace detail {
inline SignReport sign_report(std::vector<double> x, std::vector<double> v, double tol) {
  SignReport s;
  s.x = std::move(x);
  s.value = std::move(v);
  s.min = *std::min_element(s.value.begin(), s.value.end());
  s.max = *std::max_element(s.value.begin(), s.value.end());
  s.sign = classify_sign(s.min, s.max, tol);
  return s;
}
} // namespace detail

// conformal profile phi(s), s = r^2: samples 2 phi^2 (s psi' + psi), psi = (ln phi)';
// nonnegative is the nonpositive-curvature condition
inline SignReport curvature_sign_conformal(const Profile& phi, double s0, double s1, int samples = 200,
                                           double tol = 1e-12) {
  std::vector<double> x, v;
  for (int k = 0; k < samples; ++k) {
    const double s = s0 + (s1 - s0) * k / (samples - 1);
    const double p = phi.f(s), dp = phi.df(s), d2p = phi.d2f(s);
    const double psi = dp / p, dpsi = d2p / p - psi * psi;
    x.push_back(s);
    v.push_back(2 * p * p * (s * dpsi + psi));
  }
  return detail::sign_report(std::move(x), std::move(v), tol);
}

// warped dr^2 + b(r) dphi^2: Gaussian curvature -(sqrt b)''/sqrt b
inline SignReport curvature_sign_warped(const Profile& b, double r0, double r1, int samples = 200,
                                        double tol = 1e-12) {
  std::vector<double> x, v;
  for (int k = 0; k < samples; ++k) {
    const double r = r0 + (r1 - r0) * k / (samples - 1);
    const double B = b.f(r), Bp = b.df(r), Bpp = b.d2f(r);
    x.push_back(r);
    v.push_back(-(Bpp / (2 * B) - Bp * Bp / (4 * B * B)));
  }
  return detail::sign_report(std::move(x), std::move(v), tol);
}

// ------------------------------------------------------------ parabolic comparison functions

// w(s,t) = t^c F(-c, 1 + 1/(2 delta), -(1/4)(1-|s|)^{-2 delta}/t)
struct TwoEndsHeatComparison {
  double c, delta;
  double b() const { return 1 + 1 / (2 * delta); }
  double z(double s, double t) const { return -0.25 * std::pow(1 - std::abs(s), -2 * delta) / t; }
  double operator()(double s, double t) const { return std::pow(t, c) * kummer(-c, b(), z(s, t)); }
  // through the transformed representation e^z F(b + c, b, -z): every term positive
  double transformed(double s, double t) const {
    const double zz = z(s, t);
    return std::pow(t, c) * std::exp(zz) * kummer(b() + c, b(), -zz);
  }
  // w(s, 0+) = Gamma(b)/Gamma(b+c) 4^{-c} (1-|s|)^{-2 c delta}
  double initial_trace(double s) const {
    return std::exp(std::lgamma(b()) - std::lgamma(b() + c)) * std::pow(4.0, -c) *
           std::pow(1 - std::abs(s), -2 * c * delta);
  }
};

struct ParabolicCertificate {
  BarrierCertificate cert;
  TwoEndsHeatComparison w{-0.5, 0.25};
};

inline ParabolicCertificate parabolic_supersolution_twoends(double c, double delta, double mu) {
  if (!(delta > 0)) throw std::invalid_argument("parabolic_supersolution_twoends: delta must be positive");
  if (!(c < 0) || !(c > std::max(-1 / (2 * delta), -mu / 2)))
    throw std::invalid_argument("parabolic_supersolution_twoends: c outside (max(-1/(2 delta), -mu/2), 0)");
  ParabolicCertificate out;
  out.w = {c, delta};
  const TwoEndsHeatComparison& w = out.w;
  BarrierCertificate& C = out.cert;
  C.id = "twoends-heat";
  C.params = {{"c", c}, {"delta", delta}, {"mu", mu}};
  C.claimed_constant = 0;
  const std::vector<double> ss{0.05, 0.2, 0.4, 0.6, 0.75, 0.9, 0.97};
  const std::vector<double> ts{0.05, 0.2, 1.0, 3.0, 10.0, 30.0};
  double pos = std::numeric_limits<double>::infinity(), dt_max = -pos, ds_max = -pos, rep = 0;
  const double h = 1e-3;
  for (double s : ss)
    for (double t : ts) {
      const double direct = w(s, t), tr = w.transformed(s, t);
      pos = std::min(pos, tr);
      rep = std::max(rep, std::abs(direct - tr) / tr);
      const double ht = h * t;
      dt_max = std::max(dt_max, (w(s, t + ht) - w(s, t - ht)) / (2 * ht));
      ds_max = std::max(ds_max, (w(s + h * (1 - s), t) - w(s - h * (1 - s), t)) / (2 * h * (1 - s)));
    }
  C.checks.push_back({"positivity (transformed series)", pos, pos > 0});
  C.checks.push_back({"direct vs transformed", rep, rep < 1e-10});
  C.checks.push_back({"dw/dt < 0", dt_max, dt_max < 0});
  C.checks.push_back({"dw/ds < 0 for s > 0", ds_max, ds_max < 0});
  // (-delta^{-2}(1-|s|)^{2 delta+2} d_ss + d_t) w = 0, fourth-order differences
  double resid = 0;
  for (double s : {0.3, 0.6, 0.75, 0.9})
    for (double t : {0.5, 1.0, 4.0}) {
      const double wss =
          (-w(s + 2 * h, t) + 16 * w(s + h, t) - 30 * w(s, t) + 16 * w(s - h, t) - w(s - 2 * h, t)) / (12 * h * h);
      const double wt =
          (-w(s, t + 2 * h) + 8 * w(s, t + h) - 8 * w(s, t - h) + w(s, t - 2 * h)) / (12 * h);
      const double L = -std::pow(1 - s, 2 * delta + 2) / (delta * delta) * wss + wt;
      resid = std::max(resid, std::abs(L));
    }
  C.residual_min = -resid;
  C.tolerance = 1e-6;
  C.h = h;
  C.grid = "s in {0.3,0.6,0.75,0.9}, t in {0.5,1,4}, h = 1e-3";
  // initial trace exponent from log-log slope in x = 1-|s| at small t
  const double t0 = 1e-6, xa = 0.5, xb = 0.25;
  const double slope = std::log(w(1 - xa, t0) / w(1 - xb, t0)) / std::log(xa / xb);
  C.checks.push_back({"initial trace exponent -2 c delta", slope - (-2 * c * delta),
                      std::abs(slope + 2 * c * delta) < 1e-3});
  const double trace_rel = std::abs(w(1 - xa, t0) / w.initial_trace(1 - xa) - 1);
  C.checks.push_back({"initial trace constant", trace_rel, trace_rel < 1e-3});
  double ratio = 0;
  for (double t : {10.0, 30.0, 100.0, 1000.0}) ratio = std::max(ratio, w(0, t) / std::pow(t, c));
  C.checks.push_back({"w(0,t) < 2 t^c for t >= 10", ratio, ratio < 2});
  C.finish();
  return out;
}

// smallest A >= 1 with (4m-5) A - 4 mu - 4 >= 0
inline double conformal_parabolic_A(int m, double mu) { return std::max(1.0, (4 * mu + 4) / (4.0 * m - 5)); }

// (-Lap~ + d_t)(A + ln(1+r^2) + t)^{-mu} >= 0 for f = (1+r^2)^{-1} on C^m
inline BarrierCertificate parabolic_barrier_conformal(int m, double mu, double R = 100, double T = 10,
                                                      int cells = 200, int nt = 20) {
  if (m < 2) throw std::invalid_argument("parabolic_barrier_conformal: m must be >= 2");
  if (!(mu > 0)) throw std::invalid_argument("parabolic_barrier_conformal: mu must be positive");
  const double A = conformal_parabolic_A(m, mu);
  BarrierCertificate c;
  c.id = "conformal-heat";
  c.params = {{"m", m}, {"mu", mu}, {"A", A}};
  c.claimed_constant = 0;
  const int n = 2 * m;
  auto w = [A, mu](double r, double t) { return std::pow(A + std::log1p(r * r) + t, -mu); };
  const double xi_max = std::log1p(R);
  auto level = [&](int k) {
    const int N = cells << k;
    std::vector<double> x(N + 1);
    for (int i = 0; i <= N; ++i) x[i] = std::expm1(xi_max * i / N);
    x[N] = R;
    const Grid1D g(Topology::radial, x, n);
    const Stencil3 L = fv_laplacian(g, n);
    const double dt = 0.05 / (1 << k);
    std::vector<double> res;
    detail::LevelResult out;
    std::vector<double> u(g.size());
    for (int j = 0; j <= nt; ++j) {
      const double t = T * j / nt;
      for (std::size_t i = 0; i < g.size(); ++i) u[i] = w(g[i], t);
      const std::vector<double> lap = apply_stencil(L, u);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double rv = detail::nan_v;
        if (!g.is_boundary(i)) {
          const double wt = (w(g[i], t + dt) - w(g[i], t - dt)) / (2 * dt);
          // scaled by W^{mu+1}: the residual itself spans many decades
          const double W = A + std::log1p(g[i] * g[i]) + t;
          rv = (-(1 + g[i] * g[i]) * lap[i] + wt) * std::pow(W, mu + 1);
          out.min_all = std::min(out.min_all, rv);
        }
        if (i % (std::size_t(1) << k) == 0) out.coarse.push_back(rv);
      }
    }
    return out;
  };
  detail::apply_stats(c, detail::refine3(level, 1.0));
  c.h = xi_max / (cells << 2);
  c.grid = "r = exp(xi)-1 in [0," + std::to_string(R) + "] x t in [0," + std::to_string(T) + "], residual * W^{mu+1}";
  c.checks.push_back({"(4m-5)A - 4mu - 4 >= 0", (4 * m - 5) * A - 4 * mu - 4, (4 * m - 5) * A - 4 * mu - 4 >= -1e-12});
  c.finish();
  return c;
}

// v = (1+|x|^2) exp(4 m t) solves (-Lap~ + d_t) v = 0 for f = (1+r^2)^{-1}
struct ConfmaxSupersolution {
  int m = 2;
  double operator()(double r, double t) const { return (1 + r * r) * std::exp(4 * m * t); }
};

inline BarrierCertificate parabolic_supersolution_confmax(int m, int samples = 100, unsigned seed = 1) {
  if (m < 1) throw std::invalid_argument("parabolic_supersolution_confmax: m must be >= 1");
  const ConfmaxSupersolution v{m};
  BarrierCertificate c;
  c.id = "confmax";
  c.params = {{"m", m}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0;
  // local three-node radial stencil (exact on r^2) and the t-derivative of exp;
  // the centre uses the node-0 stencil
  for (int k = 0; k <= samples; ++k) {
    const double t = U(rng);
    const double r = k == samples ? 0.0 : 0.5 + 5 * U(rng);
    const double h = 0.25;
    const Grid1D g = k == samples ? Grid1D(Topology::radial, {0, h, 2 * h}, 2 * m)
                                  : Grid1D(Topology::radial, {r - h, r, r + h}, 2 * m);
    const std::size_t j = k == samples ? 0 : 1;
    const std::vector<double> u{v(g[0], t), v(g[1], t), v(g[2], t)};
    const double lap = apply_stencil(fv_laplacian(g, 2 * m), u)[j];
    const double res = (-(1 + r * r) * lap + 4 * m * v(r, t)) / v(r, t);
    worst = std::max(worst, std::abs(res));
  }
  c.residual_min = -worst;
  c.tolerance = 1e-12;
  c.grid = std::to_string(samples) + " random (r,t) in (0.5,5.5) x (0,1) and r = 0, relative";
  c.finish();
  return c;
}

// v~ = (1 - log(1-|s|)) exp(t/delta^2); v = v~ + C t
struct Max4Supersolution {
  double delta = 0.25, C = 0;
  double tilde(double s, double t) const { return (1 - std::log1p(-std::abs(s))) * std::exp(t / (delta * delta)); }
  double operator()(double s, double t) const { return tilde(s, t) + C * t; }
  bool blows_up() const { return tilde(1 - 1e-300, 0) > 1e2; }
};

struct Max4Result {
  BarrierCertificate cert;
  Max4Supersolution v;
};

inline Max4Result supersolution_max4(const ChartMetric& M, double T) {
  if (M.kind() != MetricKind::two_ends) throw std::invalid_argument("supersolution_max4: two-ends metric required");
  if (!(T > 0)) throw std::invalid_argument("supersolution_max4: T must be positive");
  const double delta = M.delta();
  Max4Result out;
  out.v.delta = delta;
  BarrierCertificate& c = out.cert;
  c.id = "max4";
  c.params = {{"delta", delta}, {"T", T}};
  const double h = 1e-4;
  auto resid = [&](double s, double t) {
    const Max4Supersolution& v = out.v;
    const double vss = (v.tilde(s + h, t) - 2 * v.tilde(s, t) + v.tilde(s - h, t)) / (h * h);
    const double vt = (v.tilde(s, t + h) - v.tilde(s, t - h)) / (2 * h);
    return -vss / M.f(s) + vt;
  };
  // outer part, relative to v~
  double outer = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200; ++i) {
    const double s = 0.5 + 1e-3 + (0.99 - 0.5 - 1e-3) * i / 200.0;
    for (int j = 0; j <= 10; ++j) {
      const double t = T * j / 10 + 2 * h;
      outer = std::min(outer, resid(s, t) / out.v.tilde(s, t));
    }
  }
  c.residual_min = outer;
  c.tolerance = 1e-8;
  // inner part |s| <= 1/2 (s != 0: convex kink of -log(1-|s|)); worst at t = T
  double inner = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 500; ++i) inner = std::min(inner, resid(0.5 * i / 500.0, T));
  out.v.C = std::max(0.0, -inner) * (1 + 1e-6) + 1e-12;
  c.claimed_constant = out.v.C;
  c.checks.push_back({"C(T) finite", out.v.C, std::isfinite(out.v.C)});
  c.checks.push_back({"blow-up at |s| -> 1", out.v.tilde(1 - 1e-12, 0), out.v.blows_up()});
  c.grid = "s in (0.501, 0.99) x t in [0,T], h = 1e-4; inner |s| <= 1/2 at t = T";
  c.h = h;
  c.finish();
  return out;
}

// ------------------------------------------------------------ heat kernel on C^m = R^{2m}

enum class HeatDatum { gaussian, power };

struct HeatDecayFit {
  std::vector<double> t, v;
  double exponent = 0;
  double claimed = 0;  // m for integrable data, (mu - eps)/2 otherwise
};

// v(t,0) = (2/Gamma(m)) int_0^inf e^{-u^2} phi(2 sqrt(t) u) u^{2m-1} du
inline double heat_kernel_center(int m, const std::function<double(double)>& phi, double t) {
  auto f = [&](double u) { return std::exp(-u * u) * phi(2 * std::sqrt(t) * u) * std::pow(u, 2 * m - 1); };
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 10.0, 20, 1e-13);
  return 2 / std::tgamma(double(m)) * I;
}

inline HeatDecayFit heat_kernel_conv_decay(int m, HeatDatum kind, double mu = 0, double eps = 0.1,
                                           double t_fit_lo = 100, double t_fit_hi = 1000) {
  if (m < 1) throw std::invalid_argument("heat_kernel_conv_decay: m must be >= 1");
  if (kind == HeatDatum::power && !(mu > 0)) throw std::invalid_argument("heat_kernel_conv_decay: mu must be positive");
  std::function<double(double)> phi;
  if (kind == HeatDatum::gaussian)
    phi = [](double y) { return std::exp(-y * y); };
  else
    phi = [mu](double y) { return std::pow(1 + y, -mu); };
  HeatDecayFit fit;
  for (int k = 0; k <= 30; ++k) {
    const double t = std::pow(10.0, 3.0 * k / 30);
    fit.t.push_back(t);
    fit.v.push_back(heat_kernel_center(m, phi, t));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < fit.t.size(); ++k) {
    if (fit.t[k] < t_fit_lo * (1 - 1e-12) || fit.t[k] > t_fit_hi * (1 + 1e-12)) continue;
    const double x = std::log(fit.t[k]), y = std::log(fit.v[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  fit.exponent = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.claimed = (kind == HeatDatum::gaussian || mu > 2 * m) ? m : 0.5 * (mu - eps);
  return fit;
}

} // namespace hhm
