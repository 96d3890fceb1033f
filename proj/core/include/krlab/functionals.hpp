#pragma once

#include <vector>

#include "krlab/geometry.hpp"

namespace krlab {

// A measure family assigns to each weight phi = phi0 + u a positive measure
// on the model. mu0 always holds a probability density against the reference
// area element; canonical kinds reweight it by e^{+-u}.
//
//   fixed          mu(phi) = mu0, independent of phi
//   twisted_plus   mu(phi) = e^{u} mu0            (elliptic realization)
//   anticanonical  mu(phi) = e^{-u} rho_FS        (P1, degree 2 only)
enum class MeasureKind { fixed, twisted_plus, anticanonical };

struct MeasureFamily {
  MeasureKind kind = MeasureKind::fixed;
  bool normalized = true;
  GeometryPtr geom;
  std::vector<double> mu0;
  // Exponential decay rates of mu0 at +-infinity (line models only).
  double rate_plus = 1.0;
  double rate_minus = 1.0;
};

// Reference probability volume: flat dx dy on the torus, the density
// 1/(4 cosh^2(t/2)) on the line.
MeasureFamily make_reference_measure(GeometryPtr g);

// Fixed measure from samples; normalizes the samples to unit mass.
MeasureFamily make_fixed_measure(GeometryPtr g, std::vector<double> density,
                                 double rate_plus = 1.0, double rate_minus = 1.0);

// e^{u}-twisted family over a fixed probability measure mu0 (elliptic only;
// a genuine e^{phi} density cannot be periodic for degree >= 1).
MeasureFamily make_twisted_plus(GeometryPtr g, std::vector<double> mu0_density,
                                bool normalized);

// Genuine anticanonical family on P1 with degree 2, where the reference
// weight solves MA(phi) = mu(phi) exactly.
MeasureFamily make_anticanonical(GeometryPtr g, bool normalized);

// Density handed to quantization: probability when normalized, the bare
// e^{+-u}-weighted density otherwise (with the degree prefactor on the
// anticanonical branch so the reference weight stays the exact fixed point).
std::vector<double> mu_quant(const MeasureFamily& fam, const Weight& w);

// Density targeted by the flow and by fixed-point solves; carries total mass
// V = d at the fixed point so MA(phi) = mu is attainable.
std::vector<double> mu_flow(const MeasureFamily& fam, const Weight& w);

double measure_mass(const MeasureFamily& fam, const Weight& w);

// Unit-equivariant potential of the family: I(u + c) = I(u) + c, I(0) = 0.
//   fixed:          integral of u against mu0
//   twisted_plus:   log integral of e^{u} mu0
//   anticanonical:  -log integral of e^{-u} rho_FS
// Vanishing I pins the additive constant of canonical fixed points.
double i_functional(const MeasureFamily& fam, const Weight& w);

// Monge-Ampere energy, exactly quadratic in u on these surfaces:
// E(u) = (1/2) int u (MA(phi0) + MA(phi)), E(u + c) = E(u) + c d, E(0) = 0.
double energy_E(const Weight& w);

// J(u) = d int u mu_ref - E(u): shift-invariant, equals half the Dirichlet
// energy of u, nonnegative, zero only for constant u.
double j_functional(const Weight& w);

// F = E - d I: shift-invariant for every family, monotone along the flow.
double f_functional(const MeasureFamily& fam, const Weight& w);

// |(E(u+eps dir) - E(u-eps dir))/(2 eps) - int dir MA(phi)|. The central
// difference of a quadratic is exact, so this isolates discretization error
// in the first-variation identity dE = MA.
double energy_derivative_gap(const Weight& w, const std::vector<double>& dir,
                             double eps = 1e-4);

// Integral of a sampled density over the model, with exponential tail
// corrections on line models.
double measure_integrate(const ModelGeometry& g, const std::vector<double>& density,
                         double rate_plus = 1.0, double rate_minus = 1.0);

}  // namespace krlab
