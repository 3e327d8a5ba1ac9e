#pragma once

// Independent reference computations shared by unit tests and the acceptance binary.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using mp = boost::multiprecision::cpp_bin_float_50;

// direct 1F1 series at 50 digits, no transformation
inline mp kummer_series(const mp& a, const mp& b, const mp& z) {
  mp term = 1, sum = 1;
  for (int i = 0; i < 20000; ++i) {
    term *= (a + i) * z / ((b + i) * (i + 1));
    sum += term;
    if (term == 0) break;
    if (abs(term) < abs(sum) * mp("1e-48") && abs((a + i) * z / (b + i)) < i + 1) break;
  }
  return sum;
}

inline double kummer(double a, double b, double z) { return kummer_series(mp(a), mp(b), mp(z)).convert_to<double>(); }

// parameter grid of the identity suite
struct KummerCase {
  double a, b, z;
};

inline std::vector<KummerCase> kummer_grid() {
  std::vector<KummerCase> g;
  const std::vector<double> bs{1.3, 1 + 1 / (2 * 0.2), 1 + 1 / (2 * 0.25), 1 + 1 / (2 * 0.5)};
  for (int ia = 0; ia <= 12; ++ia)
    for (double b : bs)
      for (int iz = 0; iz <= 16; ++iz) g.push_back({-3 + 0.5 * ia, b, -20 + 2.5 * iz});
  return g;
}

// (1/f) Lap of a radial function on R^n by finite volumes: cells [r-, r+]
// around each node, flux r^{n-1} u' through the faces. The grid only needs
// operator[] and size(); the last node is Dirichlet (left 0).
template <class G>
std::vector<double> radial_fv_laplacian(const G& g, int n, const std::vector<double>& u,
                                        const std::function<double(double)>& f) {
  const std::size_t N = g.size();
  std::vector<double> out(N, 0.0);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double rp = 0.5 * (g[i] + g[i + 1]);
    const double flux_p = std::pow(rp, n - 1) * (u[i + 1] - u[i]) / (g[i + 1] - g[i]);
    double flux_m = 0, rm = 0;
    if (i > 0) {
      rm = 0.5 * (g[i - 1] + g[i]);
      flux_m = std::pow(rm, n - 1) * (u[i] - u[i - 1]) / (g[i] - g[i - 1]);
    }
    const double vol = (std::pow(rp, n) - std::pow(rm, n)) / n;
    out[i] = (flux_p - flux_m) / vol / f(g[i]);
  }
  return out;
}

} // namespace oracle
