#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace hhm {

// scalar profile with first and second derivative
struct Profile {
  std::function<double(double)> f, df, d2f;
};

enum class MetricKind { euclidean, conformal, poincare_ball, two_ends, radial_profile };

inline std::string to_string(MetricKind k) {
  switch (k) {
  case MetricKind::euclidean: return "euclidean-Cm";
  case MetricKind::conformal: return "conformal-Cm";
  case MetricKind::poincare_ball: return "poincare-ball";
  case MetricKind::two_ends: return "two-ends";
  case MetricKind::radial_profile: return "radial-profile";
  }
  return "?";
}

// Even quartic c0 + c2 s^2 + c4 s^4 on |s| <= 1/2.
struct InteriorQuartic {
  double c0 = 0, c2 = 0, c4 = 0;
  double operator()(double s) const { const double q = s * s; return c0 + q * (c2 + q * c4); }
  double d1(double s) const { return s * (2 * c2 + 4 * c4 * s * s); }
  double d2(double s) const { return 2 * c2 + 12 * c4 * s * s; }
};

// Hermitian metric gamma = f * delta in a chart of C^m. Radial kinds depend on
// r = |z|; two-ends depends on s = Im z_m. Real coordinates are ordered
// (x1, y1, ..., xm, ym).
class ChartMetric {
public:
  static ChartMetric euclidean(int m) {
    ChartMetric g(MetricKind::euclidean, m);
    g.p_ = {[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
    g.lo_ = 0;
    g.hi_ = std::numeric_limits<double>::infinity();
    return g;
  }

  // f = (1 + r^2)^{-1}
  static ChartMetric conformal(int m) {
    ChartMetric g(MetricKind::conformal, m);
    g.p_ = {[](double r) { return 1.0 / (1.0 + r * r); },
            [](double r) { const double q = 1.0 + r * r; return -2.0 * r / (q * q); },
            [](double r) { const double q = 1.0 + r * r; return (6.0 * r * r - 2.0) / (q * q * q); }};
    g.lo_ = 0;
    g.hi_ = std::numeric_limits<double>::infinity();
    return g;
  }

  // f = scale / (1 - r^2)^2, scale = 4 is curvature -1
  static ChartMetric poincare_ball(int m, double scale = 4.0) {
    ChartMetric g(MetricKind::poincare_ball, m);
    g.p_ = {[scale](double r) { const double q = 1.0 - r * r; return scale / (q * q); },
            [scale](double r) { const double q = 1.0 - r * r; return 4.0 * scale * r / (q * q * q); },
            [scale](double r) {
              const double q = 1.0 - r * r;
              return 4.0 * scale * (1.0 + 5.0 * r * r) / (q * q * q * q);
            }};
    g.lo_ = 0;
    g.hi_ = 1;
    g.scale_ = scale;
    return g;
  }

  static ChartMetric radial_profile(int m, Profile p, double r_max) {
    ChartMetric g(MetricKind::radial_profile, m);
    g.p_ = std::move(p);
    g.lo_ = 0;
    g.hi_ = r_max;
    return g;
  }

  // f = delta^2 (1-|s|)^{-2 delta - 2} for |s| > 1/2, C^2 quartic inside
  static ChartMetric two_ends(int m, double delta) {
    if (!(delta > 0)) throw std::invalid_argument("two_ends: delta must be positive");
    ChartMetric g(MetricKind::two_ends, m);
    g.delta_ = delta;
    const double e = -2 * delta - 2;
    auto outer = [delta, e](double x) { return delta * delta * std::pow(x, e); };
    const double G0 = outer(0.5);
    const double G1 = -e * delta * delta * std::pow(0.5, e - 1);
    const double G2 = e * (e - 1) * delta * delta * std::pow(0.5, e - 2);
    InteriorQuartic a;
    a.c4 = (G2 - 2 * G1) / 2;
    a.c2 = G1 - a.c4 / 2;
    a.c0 = G0 - a.c2 / 4 - a.c4 / 16;
    for (int i = 0; i <= 200; ++i)
      if (!(a(0.5 * i / 200.0) > 0)) throw std::runtime_error("two_ends: interior profile not positive");
    g.a_ = a;
    g.p_ = {[a, delta, e](double s) {
              const double x = 1 - std::abs(s);
              return std::abs(s) <= 0.5 ? a(s) : delta * delta * std::pow(x, e);
            },
            [a, delta, e](double s) {
              const double x = 1 - std::abs(s);
              if (std::abs(s) <= 0.5) return a.d1(s);
              return -e * delta * delta * std::pow(x, e - 1) * (s > 0 ? 1.0 : -1.0);
            },
            [a, delta, e](double s) {
              const double x = 1 - std::abs(s);
              return std::abs(s) <= 0.5 ? a.d2(s) : e * (e - 1) * delta * delta * std::pow(x, e - 2);
            }};
    g.lo_ = -1;
    g.hi_ = 1;
    return g;
  }

  MetricKind kind() const { return kind_; }
  int m() const { return m_; }
  int real_dim() const { return 2 * m_; }
  bool radial() const { return kind_ != MetricKind::two_ends; }
  double delta() const { return delta_; }
  double scale() const { return scale_; }
  const InteriorQuartic& interior() const { return a_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const Profile& profile() const { return p_; }

  // profile in the reduced coordinate (r or s)
  double f(double x) const { return p_.f(x); }
  double df(double x) const { return p_.df(x); }
  double d2f(double x) const { return p_.d2f(x); }

  bool in_domain(double x) const {
    if (kind_ == MetricKind::two_ends) return x > -1 && x < 1;
    return x >= 0 && x < hi_;
  }

  // reduced coordinate of a point z in R^{2m}
  double coord(const Eigen::VectorXd& z) const {
    check_point(z);
    return kind_ == MetricKind::two_ends ? z(2 * m_ - 1) : z.norm();
  }
  double f_at(const Eigen::VectorXd& z) const { return f(coord(z)); }
  Eigen::VectorXd grad_f(const Eigen::VectorXd& z) const {
    check_point(z);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * m_);
    if (kind_ == MetricKind::two_ends) {
      g(2 * m_ - 1) = df(z(2 * m_ - 1));
    } else {
      const double r = z.norm();
      if (r > 0) g = df(r) / r * z;
    }
    return g;
  }

private:
  ChartMetric(MetricKind k, int m) : kind_(k), m_(m) {
    if (m < 1) throw std::invalid_argument("ChartMetric: m must be >= 1");
  }
  void check_point(const Eigen::VectorXd& z) const {
    if (z.size() != 2 * m_) throw std::invalid_argument("ChartMetric: point dimension mismatch");
  }

  MetricKind kind_;
  int m_;
  Profile p_;
  double lo_ = 0, hi_ = 0;
  double delta_ = 0;
  double scale_ = 0;
  InteriorQuartic a_;
};

} // namespace hhm
