#pragma once

#include <Eigen/Dense>
#include <vector>

#include "krlab/functionals.hpp"
#include "krlab/geometry.hpp"
#include "krlab/sections.hpp"

namespace krlab {

// Hermitian positive form on the degree-k section space, stored dense in the
// model frame (theta frame on the elliptic curve, monomial frame on P1,
// where every form arising here is exactly diagonal).
struct HermitianForm {
  GeometryPtr geom;
  int k = 0;
  Eigen::MatrixXcd mat;
};

// Quadrature resolution contract for degree-k Grams: min(512, max(64, 8kd))
// nodes per direction. Callers must build geometries at least this fine.
int quantization_grid(int k, int degree);

// Gram matrix of the section basis against e^{-k phi} mu(phi), with mu the
// quantization measure of the family.
HermitianForm hilb(const MeasureFamily& fam, const Weight& w, const SectionBasis& b);

// Weight with e^{k phi} = (1/N) sum |f_i|^2 over an H-orthonormal frame.
// Throws numerical_error when H is not positive definite.
Weight fs(const HermitianForm& H, const SectionBasis& b);

// Bergman density (1/N) sum |f_i|^2 e^{-k phi} of an H-orthonormal frame;
// integrates to 1 against the quantization measure when H = hilb(fam, w).
std::vector<double> bergman_density(const Weight& w, const HermitianForm& H,
                                    const SectionBasis& b);

Weight bergman_step(const MeasureFamily& fam, const Weight& w, const SectionBasis& b);

// -log det(Hilb) / (k N), relative to the model frame. Differences along an
// iteration are frame-independent; it gains +c under phi -> phi + c in the
// normalized settings and +c(1 - 1/k) on the bare twisted branch.
double l_functional(const HermitianForm& H);

double condition_estimate(const HermitianForm& H);

// Exact reference Gram diagonal on P1: entry j equals j!(kd-j)!/(kd+1)!,
// the closed form of the reference-volume integrals; feeding it to fs
// reproduces the reference weight identically.
Eigen::VectorXd beta_diagonal(int k, int degree);

struct BergmanOptions {
  int max_iter = 20000;
  double tol = 1e-10;     // sup change between consecutive iterates
  int confirm_steps = 5;  // consecutive sub-tol changes required to stop
  bool record_weights = false;
};

struct BergmanTrace {
  // Entry m holds the value at iterate m; sup_change[m] is the step from
  // iterate m to m+1.
  std::vector<double> l_value;
  std::vector<double> i_value;
  std::vector<double> sup_change;
  std::vector<Weight> weights;  // populated when record_weights is set
  Weight final;
  bool converged = false;
  int steps = 0;
};

BergmanTrace bergman_iterate(const MeasureFamily& fam, Weight w0,
                             const SectionBasis& b, const BergmanOptions& opt);

// sup |rho - 1| of the Bergman density at hilb(fam, w).
double bergman_sup_deviation(const MeasureFamily& fam, const Weight& w,
                             const SectionBasis& b);

}  // namespace krlab
