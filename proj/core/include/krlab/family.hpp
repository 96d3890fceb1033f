#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "krlab/flow.hpp"
#include "krlab/functionals.hpp"
#include "krlab/geometry.hpp"
#include "krlab/quantization.hpp"

namespace krlab {

// One-parameter holomorphic family of elliptic fibers tau(s) = sum_j c_j s^j
// over a square grid of ns x ns nodes with spacing hs centered at s = 0.
// A single coefficient makes the family trivial (a product).
struct FamilyGeometry {
  std::vector<std::complex<double>> tau_coeffs;
  int degree = 1;
  int ns = 9;
  double hs = 0.05;
  int nx = 64, ny = 64;
  std::vector<GeometryPtr> fibers;  // node (p, q) at index q * ns + p

  std::complex<double> s_at(int p, int q) const {
    const int c = ns / 2;
    return {hs * (p - c), hs * (q - c)};
  }
  std::complex<double> tau(std::complex<double> s) const;
  std::complex<double> dtau(std::complex<double> s) const;
  int node(int p, int q) const { return q * ns + p; }
};

using FamilyPtr = std::shared_ptr<const FamilyGeometry>;

FamilyPtr make_family(std::vector<std::complex<double>> tau_coeffs, int degree,
                      int ns = 9, double hs = 0.05, int nx = 64, int ny = 64);

// Weight on the family: phi(s) = 2 pi d y^2 Im tau(s) + u(s), one fiber of
// samples per node.
struct FamilyWeight {
  FamilyPtr fam;
  std::vector<std::vector<double>> u;

  Weight fiber_weight(int p, int q) const;
};

FamilyWeight fiberwise_flat(FamilyPtr f);

// Adds the fiber-constant -log(2 Im tau(s)), normalizing the fiberwise flat
// volume; the horizontal curvature of this weight is exactly the
// Weil-Petersson density of the family.
FamilyWeight fiberwise_flat_normalized(FamilyPtr f);

// u(s) = sigma1 g_re - sigma2 g_im + b |s|^2: linear plus isotropic quadratic
// data, differentiated exactly by the centered s-stencils.
FamilyWeight family_weight_quadratic(FamilyPtr f, const std::vector<double>& g_re,
                                     const std::vector<double>& g_im, double b);

// |tau'(s)|^2 / (2 Im tau(s))^2, the pointwise Weil-Petersson density in the
// identity (d/ds)(d/dsbar)(-log Im tau) = |tau'|^2 / 4 Im^2 tau.
double wp_pointwise(const FamilyGeometry& f, std::complex<double> s);

// Horizontal (s, zbar)-derivatives of a family scalar. Nodes with p or q
// closer than margin to the edge hold empty vectors.
struct ScalarJet {
  int margin = 0;
  std::vector<std::vector<std::complex<double>>> d_s;      // D_s f
  std::vector<std::vector<std::complex<double>>> d_szbar;  // D_zbar D_s f
  std::vector<std::vector<double>> d_ssbar;                // D_sbar D_s f
  std::vector<std::vector<double>> d_zzbar;                // fiber f_{z zbar}
};

// with_reference treats the samples as corrections u over the fiberwise
// flat weight and adds its closed-form derivatives.
ScalarJet family_scalar_jet(const FamilyGeometry& f,
                            const std::vector<std::vector<double>>& samples,
                            bool with_reference, int stencil_order = 2,
                            DerivMode mode = DerivMode::spectral);

// Curvature data of a family weight: c = phi_ssbar - |phi_szbar|^2 / phi_zzbar,
// the fiberwise velocity field v = phi_szbar / phi_zzbar, and its dbar.
struct FamilyJet {
  int margin = 0;
  std::vector<std::vector<double>> c;
  std::vector<std::vector<std::complex<double>>> phi_szbar;
  std::vector<std::vector<double>> phi_zzbar;
  std::vector<std::vector<std::complex<double>>> v_field;
  std::vector<std::vector<std::complex<double>>> dzbar_v;
};

FamilyJet family_jet(const FamilyWeight& w, int stencil_order = 2,
                     DerivMode mode = DerivMode::spectral);

// dc_phi(chi) = chi_ssbar - [2 Re(chi_szbar conj(phi_szbar)) phi_zzbar
//               - |phi_szbar|^2 chi_zzbar] / phi_zzbar^2 for a sampled
// direction chi; dc_phi(phi) = c(phi).
std::vector<std::vector<double>> c_direction(const FamilyWeight& w, const FamilyJet& jet,
                                             const std::vector<std::vector<double>>& chi,
                                             int stencil_order = 2,
                                             DerivMode mode = DerivMode::spectral);

double min_over_window(const std::vector<std::vector<double>>& field,
                       const FamilyGeometry& f, int margin);

// Fiber measures driving family flows: the relative volume form (flat dx dy
// on every fiber) or its e^{u}-twist over the flat density.
enum class FamilyMeasure { fixed_flat, twisted_plus_flat };

MeasureFamily node_measure(const FamilyGeometry& f, int p, int q, FamilyMeasure meas);

// Fiberwise flow advanced with fixed-substep RK4 (accurate trajectories for
// order studies; explicitly stable only for dt_sub below the stiffness
// limit of the fiber grid).
FamilyWeight family_flow_rk4(const FamilyWeight& w, FamilyMeasure meas, double t,
                             double dt_sub, DerivMode mode = DerivMode::spectral);

// Fiberwise semi-implicit flow, for long monitor runs.
FamilyWeight family_flow_steps(const FamilyWeight& w, FamilyMeasure meas, int steps,
                               double dt, DerivMode mode = DerivMode::spectral);

// The flow u_t = log(MA/mu) moves c by dc_phi(u_t); expanding the velocity
// splits dc into named terms:
//   fixed_flat:         dc = lap_omega c + |dzbar v|^2 - wp
//   twisted_plus_flat:  dc = lap_omega c - c + |dzbar v|^2 - wp + dc_phi(g),
// with g the closed-form fiberwise flat reference weight (its twist
// potential over the flat density). assembled_flipped negates the c term
// (fixed_flat: inserts -c), a deliberately broken variant used as the
// negative control.
struct HeatTerms {
  int margin = 0;
  std::vector<std::vector<double>> dc_flow;
  std::vector<std::vector<double>> assembled;
  std::vector<std::vector<double>> assembled_flipped;
};

HeatTerms heat_terms(const FamilyWeight& w, FamilyMeasure meas, int stencil_order = 2,
                     DerivMode mode = DerivMode::spectral);

struct HeatResidual {
  double chain_rule_gap = 0.0;  // |(c(+dt) - c(-dt))/(2dt) - dc_phi(u_t)|
  double identity_gap = 0.0;    // |dc_phi(u_t) - assembled terms|
  double ablation_gap = 0.0;    // assembled with the c term flipped
};

// w_minus, w0, w_plus must be flow states dt apart; gaps are sup norms over
// the valid window.
HeatResidual heat_residual(const FamilyWeight& w_minus, const FamilyWeight& w0,
                           const FamilyWeight& w_plus, double dt, FamilyMeasure meas,
                           int stencil_order = 2,
                           DerivMode mode = DerivMode::spectral);

// Weil-Petersson density two ways: route (a) differentiates -log(2 Im tau)
// with dedicated 4th-order stencils at spacing h_a (fresh analytic
// evaluations, independent of the node grid); route (b) integrates
// |dzbar v|^2 of the normalized fiberwise flat weight over the fiber.
struct WpComparison {
  std::vector<double> route_a;  // per node, full grid
  std::vector<double> route_b;  // per node, NaN outside the margin
  int margin = 0;
  double max_discrepancy = 0.0;
};

WpComparison wp_form(FamilyPtr f, int stencil_order = 2, double h_a = 0.01,
                     DerivMode mode = DerivMode::spectral);

// Deligne-type curvature density: per node, int c (MA/d) dx dy; NaN outside
// the jet's margin.
std::vector<double> deligne_curvature(const FamilyWeight& w, const FamilyJet& jet);

// Per-node Bergman iteration with the flat fiber measure; records
// min over the window of c + (m/k) wp after each step, the discrete form of
// the direct-image lower bound for the m-fold iterate.
struct FamilyBergmanResult {
  std::vector<double> min_shifted_c;  // entry m-1: after m steps
  double min_c_final = 0.0;
  int steps = 0;
};

FamilyBergmanResult family_bergman_monitor(const FamilyWeight& w0, int k, int steps,
                                           int stencil_order = 2,
                                           DerivMode mode = DerivMode::spectral);

// Plurisubharmonicity of the direct image: for holomorphic functionals
// (dual basis vectors and point evaluations), the discrete s-Laplacian of
// log of the dual norm under the 2 Im tau-twisted Gram must be bounded
// below by -tol. The untwisted Gram is also reported; the twist raises
// each curvature by one Weil-Petersson density, which calibrates the
// resolution of the check even where both signs come out positive.
struct PshCheckResult {
  double min_basis_curvature = 0.0;
  double min_eval_curvature = 0.0;
  double min_raw_eval_curvature = 0.0;
};

PshCheckResult direct_image_psh_check(const FamilyWeight& w, int k,
                                      const std::vector<std::complex<double>>& z_points);

}  // namespace krlab
