#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "krlab/geometry.hpp"

namespace krlab {

// Holomorphic section basis of the k-th tensor power.
//
// Elliptic curve, N = k*d sections: translated theta series
//   theta_j(z) = sum_{m = j mod N} exp(i pi tau m^2 / N + 2 pi i m z),
// stored and evaluated in weighted form v_j = theta_j e^{-k phi0 / 2},
// whose per-term magnitude exp(-pi Im(tau) N (m/N + y)^2) never exceeds 1.
//
// P1 in the symmetric reduction, N = k*d + 1 sections: monomials z^j
// with weighted values v_j(t) = exp((j t - k psi0(t)) / 2) on the t-line
// (real, bounded by 1). Rotation invariance makes every Gram diagonal and
// inversion symmetry makes it palindromic.
struct SectionBasis {
  GeometryPtr geom;
  int k = 1;
  int count = 0;    // N_k
  int n_trunc = 0;  // theta lattice truncation (elliptic only)
  double truncation_bound = 0.0;
  std::vector<double> p1_values;  // count x n, section-major (p1 only)
};

SectionBasis make_basis(GeometryPtr g, int k);

// Number of sections without building the basis.
int section_count(const ModelGeometry& g, int k);

// Weighted basis values at one label point of the elliptic model; tau may
// differ from the geometry's (used when the modulus varies over a family).
std::vector<std::complex<double>> theta_basis_point(std::complex<double> tau, int N,
                                                    int n_trunc, double x, double y);

int theta_truncation(std::complex<double> tau, int k);

// Weighted values of one grid row (y = row j), all sections: out is
// nx x N column-major (each section's nodes contiguous). Streaming form
// used by Gram assembly.
void elliptic_basis_row(const SectionBasis& b, int row, std::complex<double>* out);

// Gram matrix sum_nodes w(node) * v(node) v(node)^H, node weights w given
// against the reference area element (the hx*hy factor is applied here).
Eigen::MatrixXcd elliptic_gram(const SectionBasis& b, const std::vector<double>& w);

// Per-node Hermitian quadratic form q(node) = v(node)^H M v(node) for the
// whole grid; M must be count x count.
std::vector<double> elliptic_quadratic_form(const SectionBasis& b,
                                            const Eigen::MatrixXcd& M);

// P1 diagonal Gram against a t-line measure density (tail-corrected).
// rate bases: the integrand of entry j decays with rate (k*d - j) + extra_rate_plus
// above T and j + extra_rate_minus below -T.
Eigen::VectorXd p1_gram_diagonal(const SectionBasis& b, const std::vector<double>& mu,
                                 double extra_rate_plus, double extra_rate_minus);

std::vector<double> p1_quadratic_form(const SectionBasis& b,
                                      const Eigen::VectorXd& diag_inv);

}  // namespace krlab
