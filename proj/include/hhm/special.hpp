#pragma once

// Identity report for the Kummer function over a parameter grid. The
// transformation identity is judged against a 50-digit direct series, the
// others are self-consistency residuals of the double implementation.

#include "kummer.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hhm {

struct KummerIdentityRow {
  double a = 0, b = 0, z = 0;
  double value = 0;
  double diffequ = 0;   // z F'' + (b - z) F' - a F, relative
  double transform = 0; // F(a,b,z) against e^z F(b-a,b,-z) at 50 digits, relative
  double diff = 0;      // a F(a+1,b,z) - a F - z F', F' by central differences, relative
};

struct KummerLimitRow {
  double a = 0, b = 0, z = 0;
  double scaled_gap = 0;  // | z |F / leading - 1| - |(1-a)(b-a)| |
};

struct KummerSuite {
  std::vector<KummerIdentityRow> rows;
  std::vector<KummerLimitRow> limit;
  double worst_diffequ = 0, worst_transform = 0, worst_diff = 0;
  bool limit_converges = true;
  bool pass = false;
  static constexpr double tol_diffequ = 1e-9, tol_transform = 1e-10, tol_diff = 1e-8;
};

namespace detail {

using mp50 = boost::multiprecision::cpp_bin_float_50;

inline mp50 kummer_series_mp(const mp50& a, const mp50& b, const mp50& z) {
  mp50 term = 1, sum = 1;
  for (int i = 0; i < 20000; ++i) {
    term *= (a + i) * z / ((b + i) * (i + 1));
    sum += term;
    if (term == 0) break;
    if (abs(term) < abs(sum) * mp50("1e-48") && abs((a + i) * z / (b + i)) < i + 1) break;
  }
  return sum;
}

} // namespace detail

inline KummerSuite kummer_identity_suite(const std::vector<double>& as, const std::vector<double>& bs,
                                         const std::vector<double>& zs, const std::vector<double>& limit_z) {
  using detail::mp50;
  KummerSuite S;
  const double h = 1e-4;
  for (double a : as)
    for (double b : bs)
      for (double z : zs) {
        KummerIdentityRow r{a, b, z};
        const double F = kummer(a, b, z), F1 = kummer_dz(a, b, z), F2 = kummer_dzz(a, b, z);
        r.value = F;
        const double s1 = std::max({std::abs(z * F2), std::abs((b - z) * F1), std::abs(a * F), 1e-300});
        r.diffequ = std::abs(z * F2 + (b - z) * F1 - a * F) / s1;
        const double ref = (exp(mp50(z)) * detail::kummer_series_mp(mp50(b) - a, mp50(b), -mp50(z))).convert_to<double>();
        r.transform = ref == 0 ? std::abs(F) : std::abs(F - ref) / std::abs(ref);
        if (a != 0) {
          const double Fp = (kummer(a, b, z + h) - kummer(a, b, z - h)) / (2 * h);
          const double lhs = a * kummer(a + 1, b, z), rhs = a * F + z * Fp;
          const double s3 = std::max({std::abs(lhs), std::abs(a * F), std::abs(z * Fp), 1e-300});
          r.diff = std::abs(lhs - rhs) / s3;
        }
        S.worst_diffequ = std::max(S.worst_diffequ, r.diffequ);
        S.worst_transform = std::max(S.worst_transform, r.transform);
        S.worst_diff = std::max(S.worst_diff, r.diff);
        S.rows.push_back(r);
      }
  // ratio convergence: the scaled gap shrinks along the z sequence
  std::vector<double> zl(limit_z);
  std::sort(zl.begin(), zl.end());
  for (double a : as) {
    if (detail::nonpositive_integer(a)) continue;
    for (double b : bs) {
      const double target = std::abs((1 - a) * (b - a));
      double prev = std::numeric_limits<double>::infinity();
      for (double z : zl) {
        const double gap = std::abs(z * std::abs(kummer(a, b, z) / kummer_leading(a, b, z) - 1) - target);
        S.limit.push_back({a, b, z, gap});
        if (!(gap < prev + 1e-9)) S.limit_converges = false;
        prev = gap;
      }
      if (!(prev < 0.1 * target + 1e-6)) S.limit_converges = false;
    }
  }
  S.pass = S.worst_diffequ < KummerSuite::tol_diffequ && S.worst_transform < KummerSuite::tol_transform &&
           S.worst_diff < KummerSuite::tol_diff && S.limit_converges;
  return S;
}

inline std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> v;
  const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) v.push_back(lo + double(k) * step);
  return v;
}

} // namespace hhm
