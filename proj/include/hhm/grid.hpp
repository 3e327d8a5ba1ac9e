#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm {

enum class Topology { radial, interval, cartesian_box, periodic_interval };

// Nodes of a 1-D reduction. Radial grids carry the real dimension used by the
// scalar Laplacian (2m); the equivariant profile operator overrides it.
class Grid1D {
public:
  Grid1D(Topology topo, std::vector<double> nodes, int real_dim)
      : topo_(topo), x_(std::move(nodes)), dim_(real_dim) {
    if (topo_ != Topology::radial && topo_ != Topology::interval)
      throw std::invalid_argument("Grid1D: topology must be radial or interval");
    if (x_.size() < 3) throw std::invalid_argument("Grid1D: need at least 3 nodes");
    for (std::size_t i = 1; i < x_.size(); ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("Grid1D: nodes not strictly increasing");
    if (topo_ == Topology::radial && x_.front() < 0.0)
      throw std::invalid_argument("Grid1D: negative radius");
    if (dim_ < 1) throw std::invalid_argument("Grid1D: real dimension < 1");
  }

  static Grid1D radial_uniform(double r0, double R, int cells, int real_dim) {
    if (cells < 2 || !(R > r0)) throw std::invalid_argument("radial_uniform: bad range");
    std::vector<double> x(cells + 1);
    for (int i = 0; i <= cells; ++i) x[i] = r0 + (R - r0) * i / cells;
    return Grid1D(Topology::radial, std::move(x), real_dim);
  }

  // Uniform spacing h on [r0, r_switch], then r_switch * 2^(j/per_doubling)
  // until R is reached. Powers of two times r_switch are nodes.
  static Grid1D radial_graded(double r0, double r_switch, double R, double h, int per_doubling,
                              int real_dim) {
    if (!(h > 0) || !(r_switch > r0) || per_doubling < 1)
      throw std::invalid_argument("radial_graded: bad parameters");
    const long nu = std::lround((r_switch - r0) / h);
    if (nu < 2 || std::abs(nu * h - (r_switch - r0)) > 1e-9 * r_switch)
      throw std::invalid_argument("radial_graded: h must divide the uniform part");
    std::vector<double> x;
    for (long i = 0; i <= nu; ++i) x.push_back(r0 + (r_switch - r0) * double(i) / double(nu));
    for (int j = 1; x.back() < R * (1 - 1e-12); ++j)
      x.push_back(r_switch * std::exp2(double(j) / per_doubling));
    return Grid1D(Topology::radial, std::move(x), real_dim);
  }

  static Grid1D interval_uniform(double a, double b, int cells) {
    if (cells < 2 || !(b > a)) throw std::invalid_argument("interval_uniform: bad range");
    std::vector<double> x(cells + 1);
    for (int i = 0; i <= cells; ++i) x[i] = a + (b - a) * i / cells;
    return Grid1D(Topology::interval, std::move(x), 1);
  }

  // Symmetric grid on (-1, 1): uniform spacing h on [-1/2, 1/2]; for |s| > 1/2
  // the distance 1-|s| is 2^{-1-j/per_halving}, j = 1..halvings*per_halving.
  static Grid1D interval_graded(double h, int per_halving, int halvings) {
    const long nu = std::lround(0.5 / h);
    if (nu < 1 || std::abs(nu * h - 0.5) > 1e-12 || per_halving < 1 || halvings < 1)
      throw std::invalid_argument("interval_graded: bad parameters");
    std::vector<double> pos;
    for (long i = 0; i <= nu; ++i) pos.push_back(0.5 * double(i) / double(nu));
    for (int j = 1; j <= halvings * per_halving; ++j)
      pos.push_back(1.0 - 0.5 * std::exp2(-double(j) / per_halving));
    std::vector<double> x;
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) x.push_back(-*it);
    for (std::size_t i = 1; i < pos.size(); ++i) x.push_back(pos[i]);
    return Grid1D(Topology::interval, std::move(x), 1);
  }

  Topology topology() const { return topo_; }
  int real_dim() const { return dim_; }
  std::size_t size() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }
  const std::vector<double>& nodes() const { return x_; }
  bool has_center() const { return topo_ == Topology::radial && x_.front() == 0.0; }

  bool is_boundary(std::size_t i) const {
    if (i + 1 == x_.size()) return true;
    if (i == 0) return !has_center();
    return false;
  }
  std::size_t interior_count() const { return x_.size() - (has_center() ? 1 : 2); }

  double h_max() const {
    double h = 0;
    for (std::size_t i = 1; i < x_.size(); ++i) h = std::max(h, x_[i] - x_[i - 1]);
    return h;
  }
  double h_min() const {
    double h = x_[1] - x_[0];
    for (std::size_t i = 1; i < x_.size(); ++i) h = std::min(h, x_[i] - x_[i - 1]);
    return h;
  }

  // index of the node equal to x up to a relative tolerance, or -1
  long find(double x, double rtol = 1e-10) const {
    auto it = std::lower_bound(x_.begin(), x_.end(), x - rtol * std::max(1.0, std::abs(x)));
    if (it == x_.end()) return -1;
    if (std::abs(*it - x) > rtol * std::max(1.0, std::abs(x))) return -1;
    return long(it - x_.begin());
  }

  // nodes [lo, hi] inclusive as a new grid (same topology and dimension)
  Grid1D slice(std::size_t lo, std::size_t hi) const {
    if (hi >= x_.size() || hi < lo + 2) throw std::invalid_argument("Grid1D::slice: bad range");
    return Grid1D(topo_, std::vector<double>(x_.begin() + long(lo), x_.begin() + long(hi) + 1), dim_);
  }

  Grid1D with_dim(int d) const { return Grid1D(topo_, x_, d); }

private:
  Topology topo_;
  std::vector<double> x_;
  int dim_;
};

using GridPtr = std::shared_ptr<const Grid1D>;

inline GridPtr make_grid(Grid1D g) { return std::make_shared<const Grid1D>(std::move(g)); }

// Uniform tensor grid on a box in R^d, node count per axis n.
struct BoxGrid {
  int dim = 0;
  int n = 0;
  double lo = 0, hi = 0;

  BoxGrid(int d, int per_axis, double a, double b) : dim(d), n(per_axis), lo(a), hi(b) {
    if (d < 1 || per_axis < 3 || !(b > a)) throw std::invalid_argument("BoxGrid: bad parameters");
  }
  double h() const { return (hi - lo) / (n - 1); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int k = 0; k < dim; ++k) s *= std::size_t(n);
    return s;
  }
  void coords(std::size_t idx, std::vector<int>& c) const {
    c.resize(dim);
    for (int k = 0; k < dim; ++k) {
      c[k] = int(idx % std::size_t(n));
      idx /= std::size_t(n);
    }
  }
  std::size_t index(const std::vector<int>& c) const {
    std::size_t idx = 0;
    for (int k = dim - 1; k >= 0; --k) idx = idx * std::size_t(n) + std::size_t(c[k]);
    return idx;
  }
  double x(int i) const { return lo + (hi - lo) * i / (n - 1); }
};

// Periodic coordinate theta in [0, 1) times an interval grid in s.
struct PeriodicIntervalGrid {
  int n_theta = 0;
  GridPtr s;
  PeriodicIntervalGrid(int nt, GridPtr sg) : n_theta(nt), s(std::move(sg)) {
    if (nt < 3 || !s || s->topology() != Topology::interval)
      throw std::invalid_argument("PeriodicIntervalGrid: bad parameters");
  }
  double h_theta() const { return 1.0 / n_theta; }
  std::size_t size() const { return std::size_t(n_theta) * s->size(); }
  std::size_t index(int it, std::size_t is) const { return is * std::size_t(n_theta) + std::size_t(it); }
};

struct ScalarField {
  GridPtr grid;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(GridPtr g, std::vector<double> values) : grid(std::move(g)), v(std::move(values)) {
    if (!grid || v.size() != grid->size()) throw std::invalid_argument("ScalarField: size mismatch");
    for (double x : v)
      if (!std::isfinite(x)) throw std::domain_error("ScalarField: non-finite value");
  }
  template <class F>
  static ScalarField sample(GridPtr g, F&& fn) {
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn((*g)[i]);
    return ScalarField(g, std::move(v));
  }
  std::size_t size() const { return v.size(); }
  double operator[](std::size_t i) const { return v[i]; }
};

} // namespace hhm
