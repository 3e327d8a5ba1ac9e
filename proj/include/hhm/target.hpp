#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class TargetKind { flat, poincare_ball, warped_planes };
enum class CurvatureSign { flat, nonpositive, negative };

inline std::string to_string(TargetKind k) {
  switch (k) {
  case TargetKind::flat: return "flat-Rn";
  case TargetKind::poincare_ball: return "poincare-ball-n";
  case TargetKind::warped_planes: return "warped-product-planes";
  }
  return "?";
}

// Gamma^j_{kl}, stored densely
class Christoffel {
public:
  explicit Christoffel(int n) : n_(n), c_(std::size_t(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int j, int k, int l) { return c_[(std::size_t(j) * n_ + k) * n_ + l]; }
  double operator()(int j, int k, int l) const { return c_[(std::size_t(j) * n_ + k) * n_ + l]; }
  // Gamma^j_{kl} v^k w^l
  Vec contract(const Vec& v, const Vec& w) const {
    Vec out = Vec::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      double s = 0;
      for (int k = 0; k < n_; ++k) {
        if (v(k) == 0.0) continue;
        for (int l = 0; l < n_; ++l) s += (*this)(j, k, l) * v(k) * w(l);
      }
      out(j) = s;
    }
    return out;
  }
  double max_abs() const {
    double m = 0;
    for (double x : c_) m = std::max(m, std::abs(x));
    return m;
  }

private:
  int n_;
  std::vector<double> c_;
};

// Christoffel symbols of an arbitrary metric field by fourth-order central
// differences of g.
inline Christoffel christoffel_from_metric(const std::function<Mat(const Vec&)>& g, const Vec& x,
                                           double h = 1e-3) {
  const int n = int(x.size());
  std::vector<Mat> dg(n);
  for (int l = 0; l < n; ++l) {
    Vec e = Vec::Zero(n);
    e(l) = h;
    dg[l] = (-g(x + 2 * e) + 8 * g(x + e) - 8 * g(x - e) + g(x - 2 * e)) / (12 * h);
  }
  const Mat ginv = g(x).inverse();
  Christoffel G(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += ginv(j, i) * (dg[l](i, k) + dg[k](i, l) - dg[i](k, l));
        G(j, k, l) = G(j, l, k) = 0.5 * s;
      }
  return G;
}

class TargetManifold {
public:
  static TargetManifold flat(int n) {
    TargetManifold t(TargetKind::flat, n);
    t.sign_ = CurvatureSign::flat;
    return t;
  }
  // scale / (1-|x|^2)^2 delta
  static TargetManifold poincare_ball(int n, double scale = 4.0) {
    if (!(scale > 0)) throw std::invalid_argument("poincare_ball: scale must be positive");
    TargetManifold t(TargetKind::poincare_ball, n);
    t.scale_ = scale;
    t.sign_ = CurvatureSign::negative;
    return t;
  }
  // product of `planes` copies of (R^2, dr^2 + (r^2 + r^4) dphi^2)
  static TargetManifold warped_planes(int planes) {
    TargetManifold t(TargetKind::warped_planes, 2 * planes);
    t.sign_ = planes == 1 ? CurvatureSign::negative : CurvatureSign::nonpositive;
    return t;
  }

  int dim() const { return n_; }
  TargetKind kind() const { return kind_; }
  CurvatureSign curvature_sign() const { return sign_; }
  double scale() const { return scale_; }

  static double warp(double r) { return r * r + r * r * r * r; }

  bool in_chart(const Vec& x) const {
    if (x.size() != n_) return false;
    for (int i = 0; i < n_; ++i)
      if (!std::isfinite(x(i))) return false;
    if (kind_ == TargetKind::poincare_ball) return x.squaredNorm() < 1.0;
    return true;
  }

  Mat metric(const Vec& x) const {
    require(x);
    switch (kind_) {
    case TargetKind::flat: return Mat::Identity(n_, n_);
    case TargetKind::poincare_ball: {
      const double q = 1.0 - x.squaredNorm();
      return Mat::Identity(n_, n_) * (scale_ / (q * q));
    }
    case TargetKind::warped_planes: {
      Mat g = Mat::Zero(n_, n_);
      for (int p = 0; p < n_; p += 2) {
        const Eigen::Vector2d y(x(p), x(p + 1));
        const Eigen::Matrix2d b = (1.0 + y.squaredNorm()) * Eigen::Matrix2d::Identity() - y * y.transpose();
        g.block<2, 2>(p, p) = b;
      }
      return g;
    }
    }
    return {};
  }

  Mat inverse_metric(const Vec& x) const {
    require(x);
    switch (kind_) {
    case TargetKind::flat: return Mat::Identity(n_, n_);
    case TargetKind::poincare_ball: {
      const double q = 1.0 - x.squaredNorm();
      return Mat::Identity(n_, n_) * (q * q / scale_);
    }
    case TargetKind::warped_planes: {
      // ((1+r^2) I - y y^T)^{-1} = (I + y y^T) / (1+r^2), Sherman-Morrison
      Mat gi = Mat::Zero(n_, n_);
      for (int p = 0; p < n_; p += 2) {
        const Eigen::Vector2d y(x(p), x(p + 1));
        const double q = 1.0 + y.squaredNorm();
        gi.block<2, 2>(p, p) = (Eigen::Matrix2d::Identity() + y * y.transpose()) / q;
      }
      return gi;
    }
    }
    return {};
  }

  Christoffel christoffel(const Vec& x) const {
    require(x);
    switch (kind_) {
    case TargetKind::flat: return Christoffel(n_);
    case TargetKind::poincare_ball: {
      // g = e^{2phi} delta: Gamma^j_kl = d_jk phi_l + d_jl phi_k - d_kl phi_j
      const Vec dphi = 2.0 * x / (1.0 - x.squaredNorm());
      Christoffel G(n_);
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l) {
            double v = 0;
            if (j == k) v += dphi(l);
            if (j == l) v += dphi(k);
            if (k == l) v -= dphi(j);
            G(j, k, l) = v;
          }
      return G;
    }
    case TargetKind::warped_planes:
      return christoffel_from_metric([this](const Vec& y) { return metric_unchecked(y); }, x);
    }
    return Christoffel(n_);
  }

  double sq_norm(const Vec& x, const Vec& v) const { return v.dot(metric(x) * v); }
  double norm(const Vec& x, const Vec& v) const { return std::sqrt(std::max(0.0, sq_norm(x, v))); }

  double distance(const Vec& p, const Vec& q) const;

private:
  TargetManifold(TargetKind k, int n) : kind_(k), n_(n) {
    if (n < 1) throw std::invalid_argument("TargetManifold: dimension must be >= 1");
    if (k == TargetKind::warped_planes && n % 2) throw std::invalid_argument("warped planes need even n");
  }
  void require(const Vec& x) const {
    if (!in_chart(x)) throw std::domain_error("TargetManifold: point outside chart");
  }
  Mat metric_unchecked(const Vec& x) const {
    Mat g = Mat::Zero(n_, n_);
    for (int p = 0; p < n_; p += 2) {
      const Eigen::Vector2d y(x(p), x(p + 1));
      g.block<2, 2>(p, p) = (1.0 + y.squaredNorm()) * Eigen::Matrix2d::Identity() - y * y.transpose();
    }
    return g;
  }

  TargetKind kind_;
  int n_;
  double scale_ = 1.0;
  CurvatureSign sign_ = CurvatureSign::flat;
};

struct ShootingOptions {
  int steps = 1000;
  double tol = 1e-8;
  int max_iter = 200;
};

struct ShootingResult {
  double length = 0;
  double miss = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// exp_p(v) by RK4 on the geodesic equation x'' = -Gamma(x)(x', x')
inline Vec geodesic_endpoint(const TargetManifold& N, const Vec& p, const Vec& v, int steps) {
  const double dt = 1.0 / steps;
  Vec x = p, u = v;
  auto acc = [&](const Vec& y, const Vec& w) -> Vec {
    if (!N.in_chart(y)) throw std::domain_error("geodesic left chart");
    return -N.christoffel(y).contract(w, w);
  };
  for (int s = 0; s < steps; ++s) {
    const Vec k1x = u, k1u = acc(x, u);
    const Vec k2x = u + 0.5 * dt * k1u, k2u = acc(x + 0.5 * dt * k1x, k2x);
    const Vec k3x = u + 0.5 * dt * k2u, k3u = acc(x + 0.5 * dt * k2x, k3x);
    const Vec k4x = u + dt * k3u, k4u = acc(x + dt * k3x, k4x);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    u += dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
  }
  return x;
}

} // namespace detail

// Geodesic shooting: damped Newton on the initial velocity.
inline ShootingResult shoot_geodesic(const TargetManifold& N, const Vec& p, const Vec& q,
                                     const ShootingOptions& opt = {}) {
  const int n = int(p.size());
  ShootingResult res;
  Vec v = q - p;
  auto miss = [&](const Vec& w, Vec& F) -> bool {
    try {
      F = detail::geodesic_endpoint(N, p, w, opt.steps) - q;
      return true;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  Vec F;
  if (!miss(v, F)) throw std::runtime_error("shoot_geodesic: initial guess left chart");
  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    if (F.norm() < opt.tol) break;
    Mat J(n, n);
    const double eps = 1e-7 * std::max(1.0, v.norm());
    for (int k = 0; k < n; ++k) {
      Vec w = v, Fk;
      w(k) += eps;
      if (!miss(w, Fk)) {
        w(k) -= 2 * eps;
        if (!miss(w, Fk)) throw std::runtime_error("shoot_geodesic: Jacobian probe left chart");
        J.col(k) = (F - Fk) / eps;
      } else {
        J.col(k) = (Fk - F) / eps;
      }
    }
    const Vec dv = J.fullPivLu().solve(-F);
    double lam = 1.0;
    bool moved = false;
    for (int b = 0; b < 40; ++b, lam *= 0.5) {
      Vec Fn;
      const Vec w = v + lam * dv;
      if (miss(w, Fn) && Fn.norm() < F.norm()) {
        v = w;
        F = Fn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  res.miss = F.norm();
  res.converged = res.miss < opt.tol;
  if (!res.converged) throw std::runtime_error("shoot_geodesic: no convergence");
  res.length = N.norm(p, v);
  return res;
}

inline double TargetManifold::distance(const Vec& p, const Vec& q) const {
  require(p);
  require(q);
  switch (kind_) {
  case TargetKind::flat: return (p - q).norm();
  case TargetKind::poincare_ball: {
    const double a = (p - q).squaredNorm();
    const double b = (1.0 - p.squaredNorm()) * (1.0 - q.squaredNorm());
    const double d = 2.0 * a / b;
    // arcosh(1 + d) = log1p(d + sqrt(d (2 + d)))
    return 0.5 * std::sqrt(scale_) * std::log1p(d + std::sqrt(d * (2.0 + d)));
  }
  case TargetKind::warped_planes: {
    double s = 0;
    static const TargetManifold plane = warped_planes(1);
    for (int k = 0; k < n_; k += 2) {
      const Eigen::Vector2d a(p(k), p(k + 1)), b(q(k), q(k + 1));
      const double ra = a.norm(), rb = b.norm();
      double d;
      const double cross = a(0) * b(1) - a(1) * b(0);
      if ((a - b).norm() == 0.0) {
        d = 0;
      } else if (ra == 0.0 || rb == 0.0 || std::abs(cross) <= 1e-14 * ra * rb) {
        // on a common line through the origin: radial geodesics
        d = (ra == 0.0 || rb == 0.0 || a.dot(b) > 0) ? std::abs(ra - rb) : ra + rb;
      } else {
        d = shoot_geodesic(plane, Vec(a), Vec(b)).length;
      }
      s += d * d;
    }
    return std::sqrt(s);
  }
  }
  return 0;
}

// Rm(i,j,k,l) = g_km R^m_lij with R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj,
// so Rm(X,Y,X,Y) is the sectional numerator <R(X,Y)Y,X>.
class RiemannTensor {
public:
  explicit RiemannTensor(int n) : n_(n), r_(std::size_t(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return r_[((std::size_t(i) * n_ + j) * n_ + k) * n_ + l]; }
  double operator()(int i, int j, int k, int l) const {
    return r_[((std::size_t(i) * n_ + j) * n_ + k) * n_ + l];
  }
  double eval(const Vec& X, const Vec& Y, const Vec& Z, const Vec& W) const {
    double s = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l) s += (*this)(i, j, k, l) * X(i) * Y(j) * Z(k) * W(l);
    return s;
  }

private:
  int n_;
  std::vector<double> r_;
};

inline RiemannTensor riemann(const TargetManifold& N, const Vec& x, double h = 1e-4) {
  const int n = N.dim();
  const Christoffel G = N.christoffel(x);
  std::vector<Christoffel> dG;
  dG.reserve(n);
  for (int a = 0; a < n; ++a) {
    Vec e = Vec::Zero(n);
    e(a) = h;
    const Christoffel p1 = N.christoffel(x + e), m1 = N.christoffel(x - e);
    const Christoffel p2 = N.christoffel(x + 2 * e), m2 = N.christoffel(x - 2 * e);
    Christoffel d(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          d(i, j, k) = (-p2(i, j, k) + 8 * p1(i, j, k) - 8 * m1(i, j, k) + m2(i, j, k)) / (12 * h);
    dG.push_back(d);
  }
  // R^i_{jkl}
  auto Rup = [&](int i, int j, int k, int l) {
    double v = dG[k](i, l, j) - dG[l](i, k, j);
    for (int m = 0; m < n; ++m) v += G(i, k, m) * G(m, l, j) - G(i, l, m) * G(m, k, j);
    return v;
  };
  const Mat g = N.metric(x);
  RiemannTensor R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0;
          for (int m = 0; m < n; ++m) v += g(k, m) * Rup(m, l, i, j);
          R(i, j, k, l) = v;
        }
  return R;
}

inline double sectional_curvature(const TargetManifold& N, const Vec& x, const Vec& X, const Vec& Y) {
  const RiemannTensor R = riemann(N, x);
  const Mat g = N.metric(x);
  const double xx = X.dot(g * X), yy = Y.dot(g * Y), xy = X.dot(g * Y);
  return R.eval(X, Y, X, Y) / (xx * yy - xy * xy);
}

} // namespace hhm
