#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace krlab {

// Uniform periodic grid on [0,1)^2, nodes x_i = i/nx, y_j = j/ny.
// Carries the complex-structure modulus tau of the fiber coordinate
// z = x + tau*y; purely metadata at this level, derivative operators
// that need it read it from here.
struct PeriodicGrid2 {
  int nx = 0;
  int ny = 0;
  std::complex<double> tau{0.0, 1.0};

  PeriodicGrid2() = default;
  PeriodicGrid2(int nx_, int ny_, std::complex<double> tau_ = {0.0, 1.0})
      : nx(nx_), ny(ny_), tau(tau_) {
    if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0)
      throw std::invalid_argument("PeriodicGrid2: nx, ny must be even and >= 8");
    if (tau.imag() <= 0.0)
      throw std::invalid_argument("PeriodicGrid2: Im tau must be positive");
  }

  double hx() const { return 1.0 / nx; }
  double hy() const { return 1.0 / ny; }
  int size() const { return nx * ny; }
  int idx(int i, int j) const { return j * nx + i; }

  bool operator==(const PeriodicGrid2& o) const {
    return nx == o.nx && ny == o.ny && tau == o.tau;
  }
};

// Real scalar field sampled on a PeriodicGrid2, row-major (x fastest).
struct RealField {
  PeriodicGrid2 grid;
  std::vector<double> v;

  RealField() = default;
  explicit RealField(const PeriodicGrid2& g, double fill = 0.0)
      : grid(g), v(static_cast<size_t>(g.size()), fill) {}

  double& at(int i, int j) { return v[grid.idx(i, j)]; }
  double at(int i, int j) const { return v[grid.idx(i, j)]; }
  size_t size() const { return v.size(); }
};

// Uniform grid on [-T, T] for rotation-invariant weights in the
// logarithmic coordinate t = log|z|^2.  Node t_i = -T + i*h with
// h = 2T/(n-1); the node set is symmetric about 0, so the involution
// t -> -t maps node i to node n-1-i exactly.
struct LineGrid {
  int n = 0;
  double T = 0.0;
  double decay_tol = 1e-7;

  LineGrid() = default;
  LineGrid(int n_, double T_, double decay_tol_ = 1e-7)
      : n(n_), T(T_), decay_tol(decay_tol_) {
    if (n < 16) throw std::invalid_argument("LineGrid: n must be >= 16");
    if (T < 8.0) throw std::invalid_argument("LineGrid: T must be >= 8");
  }

  double h() const { return 2.0 * T / (n - 1); }
  double t(int i) const { return -T + i * h(); }
  int mirror(int i) const { return n - 1 - i; }

  bool operator==(const LineGrid& o) const { return n == o.n && T == o.T; }
};

struct LineField {
  LineGrid grid;
  std::vector<double> v;

  LineField() = default;
  explicit LineField(const LineGrid& g, double fill = 0.0)
      : grid(g), v(static_cast<size_t>(g.n), fill) {}
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace krlab
