#pragma once

#include <complex>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "krlab/grid.hpp"
#include "krlab/spectral.hpp"

namespace krlab {

// Desk-scale models. The elliptic curve C/(Z + tau Z) carries O(d)-type
// weights sampled on the unit square with fiber coordinate z = x + tau y;
// P1 carries rotation- and inversion-invariant weights of O(d) reduced to
// the coordinate t = log|z|^2.
struct EllipticCurve {
  std::complex<double> tau{0.0, 1.0};
  int degree = 1;
};

struct P1Symmetric {
  int degree = 1;
};

enum class ModelKind { elliptic_curve, p1_symmetric };

struct ModelGeometry {
  ModelKind kind = ModelKind::elliptic_curve;
  EllipticCurve elliptic;
  P1Symmetric p1;
  PeriodicGrid2 fiber;  // active when kind == elliptic_curve
  LineGrid line;        // active when kind == p1_symmetric

  int degree() const {
    return kind == ModelKind::elliptic_curve ? elliptic.degree : p1.degree;
  }

  static std::shared_ptr<const ModelGeometry> make_elliptic(
      std::complex<double> tau, int degree, int nx = 64, int ny = 64);
  static std::shared_ptr<const ModelGeometry> make_p1(int degree, int n = 512,
                                                      double T = 16.0);
};

using GeometryPtr = std::shared_ptr<const ModelGeometry>;

// Weight phi = phi0 + u on the model's line bundle, stored as the bounded
// correction u over the reference weight phi0 (flat on the elliptic curve,
// Fubini-Study on P1). Total Monge-Ampere mass is the degree d, carried
// explicitly and never normalized away.
struct Weight {
  GeometryPtr geom;
  std::vector<double> u;

  Weight() = default;
  explicit Weight(GeometryPtr g, double fill = 0.0);
  Weight(GeometryPtr g, std::vector<double> samples);

  int samples() const { return static_cast<int>(u.size()); }
  Weight shifted(double c) const;

  // Cached min of the MA density; NaN until first positivity query.
  mutable double cached_min_ma = std::numeric_limits<double>::quiet_NaN();
};

// Density against the reference area element (dx dy on the unit square,
// dt on the line). Line densities carry the analytic mass of the two
// tails beyond [-T, T] so totals are cut-off independent.
struct Density {
  std::vector<double> v;
  double tail_mass = 0.0;
};

Weight reference_weight(GeometryPtr g);

// Reference-weight helpers on P1, stable at both ends of the t-line:
// psi0 = d log(1+e^t), psi0' = d/(1+e^{-t}), psi0'' = d/(4 cosh^2(t/2)).
double psi_fs(double t, int degree);
double psi_fs_d1(double t, int degree);
double psi_fs_d2(double t, int degree);

// u_{z zbar} in label coordinates:
// [ |tau|^2 u_xx - 2 Re(tau) u_xy + u_yy ] / (4 Im^2 tau).
RealField complex_hessian(const RealField& u, DerivMode mode = DerivMode::spectral);

// MA(phi) density. Elliptic: d + (Im tau / pi) u_{z zbar}; P1: psi''(t).
// May be negative for non-positively-curved weights; total mass is d.
Density ma_measure(const Weight& w, DerivMode mode = DerivMode::spectral);

double density_mass(const ModelGeometry& g, const Density& d);
double density_min(const Density& d);

// Strict fiber positivity of the MA density, with margin. Caches the
// computed minimum on the weight.
bool is_fiber_positive(const Weight& w, double margin = 0.0);

double sup_distance(const Weight& a, const Weight& b);
double weight_mean(const Weight& w);

// Integral of f against the model's reference area element.
double model_integrate(const ModelGeometry& g, const std::vector<double>& f);

// Bit-exact serialization (hex-float samples inside a JSON container).
std::string weight_to_json(const Weight& w);
Weight weight_from_json(const std::string& text);

}  // namespace krlab
