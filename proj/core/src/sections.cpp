#include "krlab/sections.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krlab/errors.hpp"

namespace krlab {

int section_count(const ModelGeometry& g, int k) {
  if (k < 1) throw std::invalid_argument("section_count: k must be >= 1");
  return g.kind == ModelKind::elliptic_curve ? k * g.elliptic.degree
                                             : k * g.p1.degree + 1;
}

int theta_truncation(std::complex<double> tau, int k) {
  return 8 + static_cast<int>(std::ceil(6.0 / std::sqrt(M_PI * k * tau.imag())));
}

SectionBasis make_basis(GeometryPtr g, int k) {
  SectionBasis b;
  b.geom = g;
  b.k = k;
  b.count = section_count(*g, k);
  if (g->kind == ModelKind::elliptic_curve) {
    const double it = g->elliptic.tau.imag();
    b.n_trunc = theta_truncation(g->elliptic.tau, k);
    // The nearest dropped lattice term sits at least n_trunc - 1 periods
    // from the magnitude peak (the peak center m/N + y ranges over (-2, 1]).
    const double dist = b.n_trunc - 1;
    b.truncation_bound = std::exp(-M_PI * it * b.count * dist * dist);
    if (b.truncation_bound >= 1e-14)
      throw numerical_error("make_basis: theta truncation bound above 1e-14");
  } else {
    const int n = g->line.n;
    b.p1_values.resize(static_cast<size_t>(b.count) * n);
    for (int j = 0; j < b.count; ++j)
      for (int i = 0; i < n; ++i) {
        const double t = g->line.t(i);
        b.p1_values[static_cast<size_t>(j) * n + i] =
            std::exp(0.5 * (j * t - k * psi_fs(t, g->p1.degree)));
      }
  }
  return b;
}

std::vector<std::complex<double>> theta_basis_point(std::complex<double> tau, int N,
                                                    int n_trunc, double x, double y) {
  std::vector<std::complex<double>> out(N, 0.0);
  const double it = tau.imag(), rt = tau.real();
  for (int j = 0; j < N; ++j) {
    std::complex<double> s = 0.0;
    for (int n = -n_trunc; n <= n_trunc; ++n) {
      const double m = j + static_cast<double>(n) * N;
      const double mag = -M_PI * it * N * (m / N + y) * (m / N + y);
      const double phase = M_PI * rt * m * m / N + 2.0 * M_PI * m * (x + rt * y);
      s += std::exp(mag) * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    out[j] = s;
  }
  return out;
}

void elliptic_basis_row(const SectionBasis& b, int row, std::complex<double>* out) {
  const auto& g = *b.geom;
  const int nx = g.fiber.nx, N = b.count;
  const double it = g.elliptic.tau.imag(), rt = g.elliptic.tau.real();
  const double y = static_cast<double>(row) / g.fiber.ny;
  std::fill(out, out + static_cast<size_t>(nx) * N, std::complex<double>(0.0));
  for (int j = 0; j < N; ++j) {
    std::complex<double>* col = out + static_cast<size_t>(j) * nx;
    for (int n = -b.n_trunc; n <= b.n_trunc; ++n) {
      const double m = j + static_cast<double>(n) * N;
      const double mag = std::exp(-M_PI * it * N * (m / N + y) * (m / N + y));
      if (mag < 1e-300) continue;
      const double phase0 = M_PI * rt * m * m / N + 2.0 * M_PI * m * rt * y;
      const double dphi = 2.0 * M_PI * m / nx;
      const std::complex<double> step(std::cos(dphi), std::sin(dphi));
      std::complex<double> w;
      for (int i = 0; i < nx; ++i) {
        // Refresh the phase recurrence periodically to stop drift.
        if (i % 64 == 0) {
          const double ph = phase0 + dphi * i;
          w = mag * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        col[i] += w;
        w *= step;
      }
    }
  }
}

Eigen::MatrixXcd elliptic_gram(const SectionBasis& b, const std::vector<double>& w) {
  const auto& g = *b.geom;
  if (g.kind != ModelKind::elliptic_curve)
    throw std::invalid_argument("elliptic_gram: wrong model");
  const int nx = g.fiber.nx, ny = g.fiber.ny, N = b.count;
  if (static_cast<int>(w.size()) != nx * ny)
    throw std::invalid_argument("elliptic_gram: weight size mismatch");
  const double cell = g.fiber.hx() * g.fiber.hy();
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(N, N);
  Eigen::MatrixXcd row(nx, N), wrow(nx, N);
  for (int jy = 0; jy < ny; ++jy) {
    elliptic_basis_row(b, jy, row.data());
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < nx; ++i)
        wrow(i, j) = row(i, j) * (w[static_cast<size_t>(jy) * nx + i] * cell);
    G.noalias() += row.adjoint() * wrow;
  }
  // Enforce exact Hermitian symmetry against accumulation round-off.
  G = 0.5 * (G + G.adjoint()).eval();
  return G;
}

std::vector<double> elliptic_quadratic_form(const SectionBasis& b,
                                            const Eigen::MatrixXcd& M) {
  const auto& g = *b.geom;
  if (g.kind != ModelKind::elliptic_curve)
    throw std::invalid_argument("elliptic_quadratic_form: wrong model");
  const int nx = g.fiber.nx, ny = g.fiber.ny, N = b.count;
  if (M.rows() != N || M.cols() != N)
    throw std::invalid_argument("elliptic_quadratic_form: matrix size mismatch");
  std::vector<double> q(static_cast<size_t>(nx) * ny);
  Eigen::MatrixXcd row(nx, N), t(nx, N);
  for (int jy = 0; jy < ny; ++jy) {
    elliptic_basis_row(b, jy, row.data());
    t.noalias() = row * M;
    for (int i = 0; i < nx; ++i) {
      double s = 0.0;
      for (int j = 0; j < N; ++j)
        s += (t(i, j) * std::conj(row(i, j))).real();
      q[static_cast<size_t>(jy) * nx + i] = s;
    }
  }
  return q;
}

Eigen::VectorXd p1_gram_diagonal(const SectionBasis& b, const std::vector<double>& mu,
                                 double extra_rate_plus, double extra_rate_minus) {
  const auto& g = *b.geom;
  if (g.kind != ModelKind::p1_symmetric)
    throw std::invalid_argument("p1_gram_diagonal: wrong model");
  const int n = g.line.n, N = b.count, kd = b.k * g.p1.degree;
  if (static_cast<int>(mu.size()) != n)
    throw std::invalid_argument("p1_gram_diagonal: measure size mismatch");
  Eigen::VectorXd diag(N);
  LineField integrand(g.line);
  for (int j = 0; j < N; ++j) {
    const double* vj = &b.p1_values[static_cast<size_t>(j) * n];
    for (int i = 0; i < n; ++i) integrand.v[i] = vj[i] * vj[i] * mu[i];
    diag[j] = line_integrate_with_tails(integrand, (kd - j) + extra_rate_plus,
                                        j + extra_rate_minus);
  }
  return diag;
}

std::vector<double> p1_quadratic_form(const SectionBasis& b,
                                      const Eigen::VectorXd& diag_inv) {
  const auto& g = *b.geom;
  const int n = g.line.n, N = b.count;
  if (diag_inv.size() != N)
    throw std::invalid_argument("p1_quadratic_form: size mismatch");
  std::vector<double> q(static_cast<size_t>(n), 0.0);
  for (int j = 0; j < N; ++j) {
    const double* vj = &b.p1_values[static_cast<size_t>(j) * n];
    for (int i = 0; i < n; ++i) q[i] += vj[i] * vj[i] * diag_inv[j];
  }
  return q;
}

}  // namespace krlab
