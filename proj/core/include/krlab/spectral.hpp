#pragma once

#include <complex>
#include <vector>

#include "krlab/grid.hpp"

namespace krlab {

enum class Deriv { dx, dy, dxx, dyy, dxy };

// Spectral derivatives are the production path; the centered
// finite-difference path exists as an independent cross-check.
enum class DerivMode { spectral, finite_difference };

// Partial derivative of a periodic field. Spectral mode zeroes the
// Nyquist modes of odd derivatives so the result stays real and the
// operator skew-adjoint.
RealField diff2(const RealField& f, Deriv which, DerivMode mode = DerivMode::spectral);

// Trapezoid quadrature on the periodic grid (exact weights h_x*h_y).
double integrate(const RealField& f);
double integrate(const RealField& f, const RealField& density);

// Solve (d_xx + d_yy) u = rhs on the flat torus; rhs must have zero
// mean to 1e-10 * scale, u is returned with zero mean.
RealField poisson_solve(const RealField& rhs);

// Forward/backward complex DFT of a real field; used by the operators
// above and by the flow's implicit solves. Layout matches RealField.
std::vector<std::complex<double>> fft2_forward(const RealField& f);
RealField fft2_backward(const PeriodicGrid2& g, std::vector<std::complex<double>> spec);

// Signed integer frequency of bin i on an n-point grid: 0..n/2-1, then -n/2..-1.
inline int fft_freq(int i, int n) { return (i <= n / 2 - 1) ? i : i - n; }

// One-dimensional second derivative on a LineGrid: 4th-order centered
// in the interior, 2nd-order one-sided at the two nodes nearest each
// end. Fields are bounded corrections with decaying derivatives, so
// the boundary rows act on near-constant data.
LineField line_d1(const LineField& f);
LineField line_d2(const LineField& f);

// Trapezoid rule on [-T, T].
double line_integrate(const LineField& f);

// Trapezoid plus first-order analytic tails for integrands that decay
// like e^{-rate_plus (t-T)} above T and e^{rate_minus (t+T)} below -T:
// adds g(T)/rate_plus + g(-T)/rate_minus. Rates must be positive.
double line_integrate_with_tails(const LineField& f, double rate_plus,
                                 double rate_minus);

// max_i |f_i - f_mirror(i)|, distance from evenness under t -> -t.
double line_symmetry_defect(const LineField& f);

// Largest derivative magnitude over the outermost two nodes at each
// end; flows and quadratures require this below grid.decay_tol.
double line_boundary_activity(const LineField& f);

}  // namespace krlab
