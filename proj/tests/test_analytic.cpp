#include "oracles.hpp"

#include <hhm/analytic.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hhm;

TEST(BarrierPower, ConstantAndCertificate) {
  EXPECT_DOUBLE_EQ(power_constant(4, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(power_constant(6, 2.0), 0.0);
  const BarrierCertificate c = barrier_power(4, 0.5);
  EXPECT_TRUE(c.pass);
  EXPECT_DOUBLE_EQ(c.claimed_constant, 1.0);
  EXPECT_GE(c.order, 1.8);
  EXPECT_LE(c.order, 2.2);
  EXPECT_GE(c.residual_min, -c.tolerance);
  EXPECT_THROW(barrier_power(4, 1.0), std::invalid_argument);
  EXPECT_THROW(barrier_power(2, 0.1), std::invalid_argument);
}

TEST(BarrierPower, DiscreteLaplacianAgainstClosedForm) {
  // -Lap v = 2a (1+r^2)^{-a-2} (n(1+r^2) - 2(a+1) r^2), value 2an at the origin
  const int n = 4;
  const double a = 0.5;
  auto exact = [&](double r) { return 2 * a * std::pow(1 + r * r, -a - 2) * (n * (1 + r * r) - 2 * (a + 1) * r * r); };
  EXPECT_DOUBLE_EQ(exact(0), 2 * a * n);
  double prev = 0;
  for (int k = 0; k < 3; ++k) {
    const Grid1D g = Grid1D::radial_uniform(0, 50, 800 << k, n);
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = std::pow(1 + g[i] * g[i], -a);
    const std::vector<double> L = apply_stencil(fv_laplacian(g, n), u);
    double e = 0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) e = std::max(e, std::abs(-L[i] - exact(g[i])));
    if (k) {
      EXPECT_NEAR(std::log2(prev / e), 2.0, 0.2);
    }
    prev = e;
  }
}

TEST(BarrierLog, ChoiceOfAAndCertificate) {
  EXPECT_NEAR(log_barrier_A(4, 1.0), std::exp(4.0), 1e-12);
  EXPECT_NEAR(log_barrier_A(4, 1.0), 54.598150033144236, 1e-9);
  const BarrierCertificate c = barrier_log(4, 1.0);
  EXPECT_TRUE(c.pass) << c.residual_min << " " << c.tolerance;
  EXPECT_THROW(barrier_log(2, 1.0), std::invalid_argument);
  EXPECT_EQ(log_barrier_A(100, 0.1), 2.0);
}

TEST(BarrierPoincare, ConstantAndMonotoneCoefficient) {
  const BarrierCertificate c = barrier_poincare(1.0, 2, 4.0);
  EXPECT_DOUBLE_EQ(c.claimed_constant, 0.5);
  EXPECT_TRUE(c.pass) << c.residual_min << " " << c.tolerance;
  EXPECT_TRUE(barrier_poincare(1.0).pass);
  EXPECT_THROW(barrier_poincare(1.0, 2, 2.0), std::invalid_argument);
  // mu' r + 3 mu' (1-r^2)/(2r) has negative derivative on (0,1)
  for (double r = 0.01; r < 1; r += 0.01) {
    const double h = 1e-6;
    auto K = [](double x) { return x + 3 * (1 - x * x) / (2 * x); };
    EXPECT_LT(K(r + h) - K(r - h), 0.0);
  }
}

TEST(BarrierPoincare, OperatorInGeodesicRadius) {
  // the rho-form used by the certificate equals (1-r^2)^2/4 Lap_e on a fine r-grid
  const double A = 4, mu = 1;
  const Grid1D g = Grid1D::radial_uniform(0.05, 0.9, 8000, 4);
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = std::pow(A + 2 * std::atanh(g[i]), -mu);
  const std::vector<double> L = apply_stencil(fv_laplacian(g, 4), u);
  for (std::size_t i = 100; i + 1 < g.size(); i += 997) {
    const double r = g[i], q = 1 - r * r, W = A + 2 * std::atanh(r);
    const double closed = -mu * (mu + 1) * std::pow(W, -mu - 2) + mu * r * std::pow(W, -mu - 1) +
                          3 * mu * q / (2 * r) * std::pow(W, -mu - 1);
    EXPECT_NEAR(-q * q / 4 * L[i], closed, 1e-6);
  }
}

TEST(BarrierTwoEnds, CoefficientAndIdentity) {
  EXPECT_DOUBLE_EQ(two_ends_coefficient(2, 0.25), 4.0);
  const BarrierCertificate c = barrier_twoends(2, 0.25);
  EXPECT_TRUE(c.pass);
  EXPECT_DOUBLE_EQ(c.claimed_constant, 4.0);
  EXPECT_THROW(barrier_twoends(4, 0.25), std::invalid_argument);
  // pointwise at s = 0.75 with a plain 3-point difference in s
  const ChartMetric M = ChartMetric::two_ends(2, 0.25);
  auto v = [](double s) { return std::pow(1 + two_ends_distance(s, 0.25), -2.0); };
  const double s = 0.75, rhs = 4 * std::pow(1 + two_ends_distance(s, 0.25), -4.0);
  double prev = 0;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const double lhs = -(v(s + h) - 2 * v(s) + v(s - h)) / (h * h) / M.f(s);
    const double e = std::abs(lhs - rhs);
    if (prev > 0) {
      EXPECT_NEAR(prev / e, 4.0, 0.3);
    }
    prev = e;
  }
}

TEST(WeakSupersolution, BelowAndAboveThreshold) {
  const ChartMetric M = ChartMetric::two_ends(2, 0.25);
  const double thr = twoends_eps_threshold(2, 0.25);
  EXPECT_DOUBLE_EQ(thr, 1.0);
  EXPECT_NEAR(twoends_jump(2, 0.25, thr), 0.0, 1e-14);
  const BarrierCertificate ok = weak_supersolution_twoends(2, 0.25, 0.5 * thr, M);
  EXPECT_TRUE(ok.pass);
  for (const Check& c : ok.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.value;
  const BarrierCertificate bad = weak_supersolution_twoends(2, 0.25, 2 * thr, M);
  EXPECT_FALSE(bad.pass);
  EXPECT_LT(twoends_jump(2, 0.25, 2 * thr), 0.0);
  EXPECT_EQ(default_bump_battery().size(), 20u);
}

TEST(WeakSupersolution, IntegrationByPartsOracle) {
  // smooth part plus the two kink contributions (phi f^{m-1})(+-1/2) J v(1/2)
  for (int m : {2, 3}) {
    const ChartMetric M = ChartMetric::two_ends(m, 0.25);
    for (double eps : {0.5, 2.0}) {
      const TwoEndsGlued v{2, 0.25, eps};
      for (const Bump& b : {Bump{0.5, 0.1}, Bump{-0.45, 0.2}, Bump{0.7, 0.1}}) {
        auto smooth = [&](double s) { return b(s) * std::pow(M.f(s), m - 1) * (-v.d2(s)); };
        const double lo = b.s0 - b.w, hi = b.s0 + b.w;
        std::vector<double> cuts{lo};
        for (double p : {-0.5, 0.5})
          if (p > lo && p < hi) cuts.push_back(p);
        cuts.push_back(hi);
        double I = 0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
          I += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(smooth, cuts[k], cuts[k + 1], 10, 1e-12);
        const double J = -eps + 2 * 0.25 * 2;
        for (double p : {-0.5, 0.5}) I += b(p) * std::pow(M.f(p), m - 1) * J * v(0.5);
        EXPECT_NEAR(twoends_weak_integral(M, v, b), I, 1e-9 * (1 + std::abs(I)));
      }
    }
  }
}

TEST(SigmaId, ConformalFormula) {
  const ChartMetric P = ChartMetric::poincare_ball(2), C = ChartMetric::conformal(2);
  const Profile one{[](double) { return 3.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  EXPECT_EQ(sigma_id_conformal(2, C.profile(), one, 0.7), 0.0);
  // definition with 4/(1-r^2)^2: (m-1) r / 2
  EXPECT_NEAR(sigma_id_conformal(2, P.profile(), P.profile(), 0.5), 0.25, 1e-15);
  EXPECT_NEAR(sigma_id_conformal(3, P.profile(), P.profile(), 0.5), 0.5, 1e-15);
  for (double r : {0.1, 1.0, 3.0})
    EXPECT_NEAR(sigma_id_conformal(2, C.profile(), C.profile(), r), r / (2 * std::sqrt(1 + r * r)), 1e-15);
}

TEST(SigmaId, GeneralVectorFieldMatchesConformalFormula) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-0.4, 0.4);
  const std::vector<ChartMetric> ms{ChartMetric::conformal(2), ChartMetric::poincare_ball(2),
                                    ChartMetric::poincare_ball(2, 1.0)};
  double worst = 0;
  for (const ChartMetric& a : ms)
    for (const ChartMetric& b : ms)
      for (int t = 0; t < 10; ++t) {
        Vec z(4);
        for (int i = 0; i < 4; ++i) z(i) = U(rng);
        const AepsResult A = tension_vector_Aeps(conformal_hermitian(a), conformal_hermitian(b), z);
        worst = std::max(worst, std::abs(A.norm - sigma_id_conformal(2, a.profile(), b.profile(), z.norm())));
      }
  EXPECT_LT(worst, 1e-10);
  Vec z(4);
  z << 0.5, 0, 0, 0;
  const ChartMetric P = ChartMetric::poincare_ball(2);
  EXPECT_NEAR(tension_vector_Aeps(conformal_hermitian(P), conformal_hermitian(P), z).norm, 0.25, 1e-10);
  const ChartMetric E = ChartMetric::euclidean(2);
  EXPECT_LT(tension_vector_Aeps(conformal_hermitian(E), conformal_hermitian(E), z).norm, 1e-14);
}

TEST(SigmaId, GridTensionOfIdentity) {
  // the equivariant grid tension of id agrees with the conformal formula
  const ChartMetric P = ChartMetric::poincare_ball(2);
  const auto g = make_grid(Grid1D::radial_uniform(0, 0.9, 90, 4));
  const MapField id(g, MapKind::equivariant, 4, Mat::Ones(1, long(g->size())));
  const ScalarField n = tension_norm(P, TargetManifold::poincare_ball(4), id);
  for (std::size_t i = 1; i + 1 < g->size(); ++i)
    EXPECT_NEAR(n[i], sigma_id_conformal(2, P.profile(), P.profile(), (*g)[i]), 1e-10);
}

TEST(SigmaH, ExampleValues) {
  EXPECT_EQ(sigma_h_example(0), 0.0);
  EXPECT_DOUBLE_EQ(sigma_h_example(1), 9.0 / 8.0);
  for (double r = 0.05; r < 20; r *= 1.3) EXPECT_LE(sigma_h_example(r), 7 * r / (2 * (1 + r * r)));
}

TEST(Growth, Classification) {
  const Profile one{[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  const GrowthReport lin = growth_profile(one, 0, 1000);
  EXPECT_EQ(lin.cls, GrowthClass::linear);
  EXPECT_NEAR(lin.exponent, 1.0, 1e-9);
  EXPECT_NEAR(lin.D.back(), 1000.0, 1e-8);
  const ChartMetric P = ChartMetric::poincare_ball(1);
  const GrowthReport pb = growth_profile(P.profile(), 0, 0.9, 1.0);
  EXPECT_EQ(pb.cls, GrowthClass::bounded_domain);
  EXPECT_TRUE(pb.divergent);
  EXPECT_NEAR(pb.D[20], 2 * std::atanh(pb.r[20]), 1e-10);
  const Profile pw{[](double r) { return r; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
  const GrowthReport sup = growth_profile(pw, 0, 1000);
  EXPECT_EQ(sup.cls, GrowthClass::superlinear);
  EXPECT_NEAR(sup.exponent, 1.5, 1e-6);
  EXPECT_TRUE(sup.monotone_derivative);
  const ChartMetric T = ChartMetric::two_ends(2, 0.25);
  const GrowthReport te = growth_profile(T.profile(), 0, 0.9, 1.0);
  EXPECT_EQ(te.cls, GrowthClass::bounded_domain);
  EXPECT_TRUE(te.divergent);
  EXPECT_FALSE(growth_profile(one, 0, 0.9, 1.0).divergent);
}

TEST(Curvature, ConformalAndWarped) {
  const Profile c{[](double) { return 2.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  EXPECT_EQ(curvature_sign_conformal(c, 0, 10).sign, SignClass::zero);
  const Profile lin{[](double s) { return 1 + s; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
  const SignReport s = curvature_sign_conformal(lin, 0, 10);
  EXPECT_EQ(s.sign, SignClass::positive);
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double p = 1 + s.x[k];
    EXPECT_NEAR(s.value[k], 2 * p * p / (p * p), 1e-12);
  }
  const Profile b{[](double r) { return r * r + r * r * r * r; }, [](double r) { return 2 * r + 4 * r * r * r; },
                  [](double r) { return 2 + 12 * r * r; }};
  const SignReport w = curvature_sign_warped(b, 0.05, 5);
  EXPECT_EQ(w.sign, SignClass::negative);
  for (std::size_t k = 0; k < w.x.size(); ++k) {
    const double r = w.x[k];
    const double K = -r * (3 + 2 * r * r) * std::pow(1 + r * r, -1.5) / (r * std::sqrt(1 + r * r));
    EXPECT_NEAR(w.value[k], K, 1e-12);
  }
}

TEST(TwoEndsHeat, Certificate) {
  const ParabolicCertificate p = parabolic_supersolution_twoends(-0.5, 0.25, 5);
  for (const Check& c : p.cert.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.value;
  EXPECT_TRUE(p.cert.pass) << p.cert.residual_min;
  EXPECT_THROW(parabolic_supersolution_twoends(-3, 0.25, 5), std::invalid_argument);
  EXPECT_THROW(parabolic_supersolution_twoends(-2.2, 0.25, 4), std::invalid_argument);
  EXPECT_THROW(parabolic_supersolution_twoends(0.1, 0.25, 5), std::invalid_argument);
}

TEST(TwoEndsHeat, ExactSolutionWithIndependentKummer) {
  const double c = -0.7, d = 0.25, b = 1 + 1 / (2 * d);
  auto w = [&](double s, double t) { return std::pow(t, c) * oracle::kummer(-c, b, -0.25 * std::pow(1 - s, -2 * d) / t); };
  const double s = 0.75, t = 1.0, h = 1e-3;
  const double wss = (-w(s + 2 * h, t) + 16 * w(s + h, t) - 30 * w(s, t) + 16 * w(s - h, t) - w(s - 2 * h, t)) / (12 * h * h);
  const double wt = (-w(s, t + 2 * h) + 8 * w(s, t + h) - 8 * w(s, t - h) + w(s, t - 2 * h)) / (12 * h);
  EXPECT_LT(std::abs(-std::pow(1 - s, 2 * d + 2) / (d * d) * wss + wt), 1e-6);
  const TwoEndsHeatComparison W{c, d};
  EXPECT_NEAR(W(s, t), w(s, t), 1e-13);
  for (double tt : {10.0, 100.0}) EXPECT_LT(W(0, tt), 2 * std::pow(tt, c));
}

TEST(ConformalHeatBarrier, ChoiceOfA) {
  EXPECT_DOUBLE_EQ(conformal_parabolic_A(2, 2), 4.0);
  EXPECT_DOUBLE_EQ(conformal_parabolic_A(5, 0.1), 1.0);
  const BarrierCertificate c = parabolic_barrier_conformal(2, 2);
  EXPECT_TRUE(c.pass) << c.residual_min << " " << c.tolerance;
  EXPECT_GE(c.residual_min, -1e-8);
  EXPECT_THROW(parabolic_barrier_conformal(1, 2), std::invalid_argument);
}

TEST(ConformalHeatBarrier, ClosedFormResidual) {
  // mu W^{-mu-2}/(1+r^2) [W((4m-1) + (4m-5) r^2) - 4(mu+1) r^2] >= 0
  const int m = 2;
  const double mu = 2, A = 4;
  for (double r : {0.0, 0.5, 3.0, 50.0})
    for (double t : {0.0, 1.0, 10.0}) {
      const double W = A + std::log1p(r * r) + t;
      const double q = W * ((4 * m - 1) + (4 * m - 5) * r * r) - 4 * (mu + 1) * r * r;
      EXPECT_GT(q, 0.0);
    }
}

TEST(Confmax, ExactAnnihilation) {
  const BarrierCertificate c = parabolic_supersolution_confmax(2);
  EXPECT_TRUE(c.pass) << c.residual_min;
  const ConfmaxSupersolution v{2};
  EXPECT_NEAR(v(0, 1), std::exp(8.0), 1e-9);
  EXPECT_EQ(v(1.5, 0), 1 + 1.5 * 1.5);
  // closed form: -(1+r^2)(2n) e^{4mt} + 4m (1+r^2) e^{4mt} = 0 with n = 2m
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 2);
  for (int k = 0; k < 100; ++k) {
    const double r = U(rng), t = U(rng) / 2;
    const double lap = 2 * 4 * std::exp(8 * t);  // Lap_e of |x|^2 in R^4
    EXPECT_LT(std::abs(-(1 + r * r) * lap + 8 * v(r, t)) / v(r, t), 1e-12);
  }
}

TEST(Max4, SupersolutionAndBlowUp) {
  const ChartMetric M = ChartMetric::two_ends(2, 0.25);
  const Max4Result r = supersolution_max4(M, 1.0);
  EXPECT_TRUE(r.cert.pass) << r.cert.residual_min;
  EXPECT_GE(r.cert.residual_min, -1e-8);
  EXPECT_TRUE(std::isfinite(r.v.C));
  EXPECT_GT(r.v.tilde(1 - 1e-10, 0.5), r.v.tilde(0.9, 0.5));
  EXPECT_TRUE(r.v.blows_up());
  // exact residual on |s| > 1/2: delta^-2 e^{t/delta^2} (1 - log x - x^{2 delta})
  for (double s : {0.6, 0.8, 0.95}) {
    const double x = 1 - s, t = 0.3, d = 0.25;
    EXPECT_GE((1 - std::log(x) - std::pow(x, 2 * d)) * std::exp(t / (d * d)) / (d * d), 0.0);
  }
}

TEST(HeatKernel, DecayExponents) {
  // gaussian datum: v(t,0) = (1+4t)^{-m}
  EXPECT_NEAR(heat_kernel_center(2, [](double y) { return std::exp(-y * y); }, 10.0), std::pow(41.0, -2.0), 1e-12);
  const HeatDecayFit g = heat_kernel_conv_decay(2, HeatDatum::gaussian);
  EXPECT_NEAR(g.exponent, 2.0, 0.05);
  const HeatDecayFit integ = heat_kernel_conv_decay(2, HeatDatum::power, 6.0);
  EXPECT_NEAR(integ.exponent, 2.0, 0.1);
  EXPECT_EQ(integ.claimed, 2.0);
  const HeatDecayFit half = heat_kernel_conv_decay(2, HeatDatum::power, 2.1);
  EXPECT_GE(half.exponent, 1.0 - 0.1);
}

TEST(Decay, IdentityTensionNotInAnyWeightedSpace) {
  const auto g = make_grid(Grid1D::radial_uniform(0, 1 - 1e-6, 4000, 4));
  const ScalarField s = ScalarField::sample(g, [](double r) { return r; });
  for (double lam : {0.5, 1.0, 2.0}) EXPECT_TRUE(decay_norm(s, DecaySpace::poincare(lam)).diverges);
}
