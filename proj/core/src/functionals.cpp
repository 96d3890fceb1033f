#include "krlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krlab/errors.hpp"

namespace krlab {

namespace {

void check_family(const MeasureFamily& fam, const Weight& w) {
  if (!fam.geom || !w.geom || fam.geom.get() != w.geom.get())
    throw std::invalid_argument("measure family and weight live on different models");
  if (fam.mu0.size() != w.u.size())
    throw std::invalid_argument("measure family sample count mismatch");
}

// log of int e^{s} mu0 with the max factored out, overflow-safe.
double log_exp_integral(const ModelGeometry& g, const std::vector<double>& s,
                        const std::vector<double>& mu0, double rate_plus,
                        double rate_minus) {
  const double m = *std::max_element(s.begin(), s.end());
  std::vector<double> f(s.size());
  for (size_t i = 0; i < s.size(); ++i) f[i] = std::exp(s[i] - m) * mu0[i];
  const double z = measure_integrate(g, f, rate_plus, rate_minus);
  if (!(z > 0.0)) throw numerical_error("log_exp_integral: nonpositive mass");
  return m + std::log(z);
}

}  // namespace

double measure_integrate(const ModelGeometry& g, const std::vector<double>& density,
                         double rate_plus, double rate_minus) {
  if (g.kind == ModelKind::elliptic_curve) {
    RealField f(g.fiber);
    f.v = density;
    return integrate(f);
  }
  LineField f(g.line);
  f.v = density;
  return line_integrate_with_tails(f, rate_plus, rate_minus);
}

MeasureFamily make_reference_measure(GeometryPtr g) {
  MeasureFamily fam;
  fam.kind = MeasureKind::fixed;
  fam.normalized = true;
  fam.geom = g;
  if (g->kind == ModelKind::elliptic_curve) {
    fam.mu0.assign(static_cast<size_t>(g->fiber.nx) * g->fiber.ny, 1.0);
  } else {
    fam.mu0.resize(g->line.n);
    for (int i = 0; i < g->line.n; ++i) {
      const double c = std::cosh(0.5 * g->line.t(i));
      fam.mu0[i] = 0.25 / (c * c);
    }
  }
  return fam;
}

MeasureFamily make_fixed_measure(GeometryPtr g, std::vector<double> density,
                                 double rate_plus, double rate_minus) {
  MeasureFamily fam;
  fam.kind = MeasureKind::fixed;
  fam.normalized = true;
  fam.geom = g;
  fam.mu0 = std::move(density);
  fam.rate_plus = rate_plus;
  fam.rate_minus = rate_minus;
  for (double v : fam.mu0)
    if (!(v >= 0.0)) throw std::invalid_argument("fixed measure must be nonnegative");
  const double mass = measure_integrate(*g, fam.mu0, rate_plus, rate_minus);
  if (!(mass > 0.0)) throw std::invalid_argument("fixed measure must have positive mass");
  for (double& v : fam.mu0) v /= mass;
  return fam;
}

MeasureFamily make_twisted_plus(GeometryPtr g, std::vector<double> mu0_density,
                                bool normalized) {
  if (g->kind != ModelKind::elliptic_curve)
    throw std::invalid_argument("twisted_plus family needs the elliptic model");
  MeasureFamily fam = make_fixed_measure(g, std::move(mu0_density));
  fam.kind = MeasureKind::twisted_plus;
  fam.normalized = normalized;
  return fam;
}

MeasureFamily make_anticanonical(GeometryPtr g, bool normalized) {
  if (g->kind != ModelKind::p1_symmetric || g->p1.degree != 2)
    throw std::invalid_argument("anticanonical family needs P1 with degree 2");
  MeasureFamily fam = make_reference_measure(g);
  fam.kind = MeasureKind::anticanonical;
  fam.normalized = normalized;
  return fam;
}

std::vector<double> mu_quant(const MeasureFamily& fam, const Weight& w) {
  check_family(fam, w);
  const auto& g = *fam.geom;
  std::vector<double> out(fam.mu0.size());
  switch (fam.kind) {
    case MeasureKind::fixed:
      return fam.mu0;
    case MeasureKind::twisted_plus: {
      for (size_t i = 0; i < out.size(); ++i)
        out[i] = std::exp(w.u[i]) * fam.mu0[i];
      if (fam.normalized) {
        const double mass = measure_integrate(g, out, fam.rate_plus, fam.rate_minus);
        if (!(mass > 0.0)) throw numerical_error("twisted measure mass underflow");
        for (double& v : out) v /= mass;
      }
      return out;
    }
    case MeasureKind::anticanonical: {
      for (size_t i = 0; i < out.size(); ++i)
        out[i] = std::exp(-w.u[i]) * fam.mu0[i];
      if (fam.normalized) {
        const double mass = measure_integrate(g, out, fam.rate_plus, fam.rate_minus);
        if (!(mass > 0.0)) throw numerical_error("anticanonical measure mass underflow");
        for (double& v : out) v /= mass;
      } else {
        // Degree prefactor keeps the reference weight an exact fixed point
        // of MA(phi) = mu(phi).
        for (double& v : out) v *= g.degree();
      }
      return out;
    }
  }
  throw std::logic_error("mu_quant: unreachable");
}

std::vector<double> mu_flow(const MeasureFamily& fam, const Weight& w) {
  std::vector<double> out = mu_quant(fam, w);
  // Anticanonical non-normalized already carries its degree prefactor.
  if (!(fam.kind == MeasureKind::anticanonical && !fam.normalized)) {
    const double d = fam.geom->degree();
    for (double& v : out) v *= d;
  }
  return out;
}

double measure_mass(const MeasureFamily& fam, const Weight& w) {
  return measure_integrate(*fam.geom, mu_quant(fam, w), fam.rate_plus, fam.rate_minus);
}

double i_functional(const MeasureFamily& fam, const Weight& w) {
  check_family(fam, w);
  const auto& g = *fam.geom;
  switch (fam.kind) {
    case MeasureKind::fixed: {
      std::vector<double> f(w.u.size());
      for (size_t i = 0; i < f.size(); ++i) f[i] = w.u[i] * fam.mu0[i];
      return measure_integrate(g, f, fam.rate_plus, fam.rate_minus);
    }
    case MeasureKind::twisted_plus:
      return log_exp_integral(g, w.u, fam.mu0, fam.rate_plus, fam.rate_minus);
    case MeasureKind::anticanonical: {
      std::vector<double> neg(w.u.size());
      for (size_t i = 0; i < neg.size(); ++i) neg[i] = -w.u[i];
      return -log_exp_integral(g, neg, fam.mu0, fam.rate_plus, fam.rate_minus);
    }
  }
  throw std::logic_error("i_functional: unreachable");
}

double energy_E(const Weight& w) {
  const auto& g = *w.geom;
  const Density ma0 = ma_measure(reference_weight(w.geom));
  const Density ma = ma_measure(w);
  std::vector<double> f(w.u.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * w.u[i] * (ma0.v[i] + ma.v[i]);
  return measure_integrate(g, f);
}

double j_functional(const Weight& w) {
  const MeasureFamily ref = make_reference_measure(w.geom);
  return w.geom->degree() * i_functional(ref, w) - energy_E(w);
}

double f_functional(const MeasureFamily& fam, const Weight& w) {
  return energy_E(w) - w.geom->degree() * i_functional(fam, w);
}

double energy_derivative_gap(const Weight& w, const std::vector<double>& dir,
                             double eps) {
  if (dir.size() != w.u.size())
    throw std::invalid_argument("energy_derivative_gap: direction size mismatch");
  Weight up(w.geom, w.u), dn(w.geom, w.u);
  for (size_t i = 0; i < dir.size(); ++i) {
    up.u[i] += eps * dir[i];
    dn.u[i] -= eps * dir[i];
  }
  const double central = (energy_E(up) - energy_E(dn)) / (2.0 * eps);
  const Density ma = ma_measure(w);
  std::vector<double> f(dir.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = dir[i] * ma.v[i];
  return std::abs(central - measure_integrate(*w.geom, f));
}

}  // namespace krlab
