#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hhm {

// Confluent hypergeometric F(a, b, z) = sum (a)_i z^i / ((b)_i i!), real arguments.
struct KummerParams {
  double a = 0, b = 1, z = 0;
  double tol = 1e-16;        // relative term size that ends the series
  int max_terms = 500;
  double asymptotic_z = 30;  // z above this uses the large-z expansion
};

// sign * exp(log_abs); value is +-inf (or 0) when out of double range
struct KummerValue {
  double value = 0;
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;
  bool overflow = false;
  enum class Branch { series, asymptotic, polynomial } branch = Branch::series;
};

// (a)_i
inline double pochhammer(double a, int i) {
  double p = 1;
  for (int k = 0; k < i; ++k) p *= a + k;
  return p;
}

namespace detail {

inline bool nonpositive_integer(double x) { return x <= 0 && x == std::floor(x); }

inline int gamma_sign(double x) {
  if (x > 0) return 1;
  return (long long)std::floor(x) % 2 == 0 ? 1 : -1;
}

inline KummerValue pack(double log_abs, int sign, KummerValue::Branch br) {
  KummerValue v;
  v.branch = br;
  v.sign = sign;
  v.log_abs = log_abs;
  if (sign == 0) {
    v.value = 0;
    return v;
  }
  if (log_abs > std::log(std::numeric_limits<double>::max())) {
    v.overflow = true;
    v.value = sign * std::numeric_limits<double>::infinity();
  } else {
    v.value = sign * std::exp(log_abs);
  }
  return v;
}

// Direct series for z >= 0 with rescaling so that large z does not overflow.
inline KummerValue kummer_series(double a, double b, double z, double tol, int max_terms) {
  const bool poly = nonpositive_integer(a);
  double term = 1, sum = 1, log_scale = 0;
  int i = 0;
  for (; i < max_terms; ++i) {
    term *= (a + i) * z / ((b + i) * (i + 1));
    sum += term;
    if (term == 0) break;
    if (std::abs(sum) > 1e250) {
      sum *= 1e-250;
      term *= 1e-250;
      log_scale += 250 * std::log(10.0);
    }
    if (std::abs(term) < tol * std::abs(sum) && (a + i) * z / (b + i) < i + 1) break;
  }
  if (i == max_terms && !poly) throw std::runtime_error("kummer: series did not converge");
  const int sg = sum > 0 ? 1 : (sum < 0 ? -1 : 0);
  return pack(std::log(std::abs(sum)) + log_scale, sg,
              poly ? KummerValue::Branch::polynomial : KummerValue::Branch::series);
}

// Large positive z: Gamma(b)/Gamma(a) e^z z^(a-b) sum_k (1-a)_k (b-a)_k / k! z^-k,
// truncated at the smallest term.
// err receives a relative error estimate: last term kept plus the size of the
// neglected z^{-a} contribution.
inline KummerValue kummer_asymptotic(double a, double b, double z, double* err = nullptr) {
  double term = 1, sum = 1, prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const double next = term * (1 - a + k) * (b - a + k) / ((k + 1) * z);
    if (std::abs(next) >= std::abs(prev) || next == 0) {
      term = next;
      break;
    }
    prev = term;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  if (err) {
    const double second = detail::nonpositive_integer(b - a)
                              ? 0.0
                              : std::exp(std::lgamma(a) - std::lgamma(b - a) - z + (b - 2 * a) * std::log(z));
    *err = std::abs(term / sum) + second;
  }
  const double lg = std::lgamma(b) - std::lgamma(a) + z + (a - b) * std::log(z) + std::log(std::abs(sum));
  const int sg = gamma_sign(b) * gamma_sign(a) * (sum > 0 ? 1 : -1);
  return pack(lg, sg, KummerValue::Branch::asymptotic);
}

} // namespace detail

inline KummerValue kummer_eval(const KummerParams& p) {
  const double a = p.a, b = p.b, z = p.z;
  if (detail::nonpositive_integer(b)) throw std::domain_error("kummer: b is a nonpositive integer");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(z)) throw std::domain_error("kummer: non-finite argument");
  if (z == 0 || a == 0) return detail::pack(0.0, 1, KummerValue::Branch::series);
  if (z < 0) {
    // F(a,b,z) = e^z F(b-a, b, -z)
    KummerParams q = p;
    q.a = b - a;
    q.z = -z;
    KummerValue v = kummer_eval(q);
    return detail::pack(v.log_abs + z, v.sign, v.branch);
  }
  if (z > p.asymptotic_z && !detail::nonpositive_integer(a)) {
    // the expansion is used once it is accurate to rounding; before that the
    // rescaled series is still exact
    double err = 1;
    const KummerValue v = detail::kummer_asymptotic(a, b, z, &err);
    if (err < 1e-16) return v;
  }
  const int terms = z > p.asymptotic_z ? p.max_terms + int(4 * z) : p.max_terms;
  return detail::kummer_series(a, b, z, p.tol, terms);
}

inline double kummer(double a, double b, double z) { return kummer_eval({a, b, z}).value; }

// dF/dz = (a/b) F(a+1, b+1, z)
inline double kummer_dz(double a, double b, double z) { return a / b * kummer(a + 1, b + 1, z); }

// d^2F/dz^2 = a(a+1)/(b(b+1)) F(a+2, b+2, z)
inline double kummer_dzz(double a, double b, double z) {
  return a * (a + 1) / (b * (b + 1)) * kummer(a + 2, b + 2, z);
}

// leading large-z term Gamma(b)/Gamma(a) e^z z^(a-b)
inline double kummer_leading(double a, double b, double z) {
  return detail::gamma_sign(a) * detail::gamma_sign(b) *
         std::exp(std::lgamma(b) - std::lgamma(a) + z + (a - b) * std::log(z));
}

} // namespace hhm
