#include "krlab/family.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "krlab/errors.hpp"
#include "krlab/sections.hpp"
#include "krlab/spectral.hpp"

namespace krlab {

namespace {

using C = std::complex<double>;
using CField = std::vector<C>;
using RField = std::vector<double>;

constexpr C kI{0.0, 1.0};
const double kNaN = std::numeric_limits<double>::quiet_NaN();

int stencil_margin(int order) {
  if (order == 2) return 1;
  if (order == 4) return 2;
  throw std::invalid_argument("family: stencil_order must be 2 or 4");
}

const PeriodicGrid2& fiber_grid(const FamilyGeometry& f, int p, int q) {
  return f.fibers[f.node(p, q)]->fiber;
}

// Centered difference of per-node fields along sigma1 (dir 0) or sigma2
// (dir 1); second = true gives the second difference. Caller stays inside
// the stencil margin.
RField node_diff(const FamilyGeometry& f, const std::vector<RField>& a, int p, int q,
                 int dir, int order, bool second) {
  auto at = [&](int off) -> const RField& {
    return a[dir == 0 ? f.node(p + off, q) : f.node(p, q + off)];
  };
  const size_t cells = a[f.node(p, q)].size();
  RField out(cells);
  const double h = f.hs;
  if (!second) {
    if (order == 2) {
      const RField &m1 = at(-1), &p1 = at(1);
      const double w = 1.0 / (2.0 * h);
      for (size_t i = 0; i < cells; ++i) out[i] = (p1[i] - m1[i]) * w;
    } else {
      const RField &m2 = at(-2), &m1 = at(-1), &p1 = at(1), &p2 = at(2);
      const double w = 1.0 / (12.0 * h);
      for (size_t i = 0; i < cells; ++i)
        out[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) * w;
    }
  } else {
    if (order == 2) {
      const RField &m1 = at(-1), &c0 = at(0), &p1 = at(1);
      const double w = 1.0 / (h * h);
      for (size_t i = 0; i < cells; ++i) out[i] = (m1[i] - 2.0 * c0[i] + p1[i]) * w;
    } else {
      const RField &m2 = at(-2), &m1 = at(-1), &c0 = at(0), &p1 = at(1), &p2 = at(2);
      const double w = 1.0 / (12.0 * h * h);
      for (size_t i = 0; i < cells; ++i)
        out[i] = (-m2[i] + 16.0 * m1[i] - 30.0 * c0[i] + 16.0 * p1[i] - p2[i]) * w;
    }
  }
  return out;
}

// Fiber derivative of a complex field through the real operator.
CField fiber_diff(const PeriodicGrid2& g, const CField& a, Deriv which, DerivMode mode) {
  RealField re(g), im(g);
  for (int i = 0; i < g.size(); ++i) {
    re.v[i] = a[i].real();
    im.v[i] = a[i].imag();
  }
  RealField dre = diff2(re, which, mode);
  RealField dim = diff2(im, which, mode);
  CField out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = {dre.v[i], dim.v[i]};
  return out;
}

void check_weight(const FamilyWeight& w) {
  if (!w.fam) throw std::invalid_argument("family: weight has no geometry");
  const FamilyGeometry& f = *w.fam;
  const size_t nn = static_cast<size_t>(f.ns) * f.ns;
  const size_t cells = static_cast<size_t>(f.nx) * f.ny;
  if (w.u.size() != nn) throw std::invalid_argument("family: node count mismatch");
  for (const auto& s : w.u)
    if (s.size() != cells) throw std::invalid_argument("family: fiber size mismatch");
}

}  // namespace

std::complex<double> FamilyGeometry::tau(std::complex<double> s) const {
  C v = 0.0;
  for (size_t j = tau_coeffs.size(); j-- > 0;) v = v * s + tau_coeffs[j];
  return v;
}

std::complex<double> FamilyGeometry::dtau(std::complex<double> s) const {
  C v = 0.0;
  for (size_t j = tau_coeffs.size(); j-- > 1;) v = v * s + double(j) * tau_coeffs[j];
  return v;
}

FamilyPtr make_family(std::vector<std::complex<double>> tau_coeffs, int degree, int ns,
                      double hs, int nx, int ny) {
  if (tau_coeffs.empty()) throw std::invalid_argument("make_family: empty tau data");
  if (ns < 5 || ns % 2 == 0)
    throw std::invalid_argument("make_family: ns must be odd and >= 5");
  if (hs <= 0.0) throw std::invalid_argument("make_family: hs must be positive");
  if (degree < 1) throw std::invalid_argument("make_family: degree must be >= 1");
  auto f = std::make_shared<FamilyGeometry>();
  f->tau_coeffs = std::move(tau_coeffs);
  f->degree = degree;
  f->ns = ns;
  f->hs = hs;
  f->nx = nx;
  f->ny = ny;
  f->fibers.resize(static_cast<size_t>(ns) * ns);
  for (int q = 0; q < ns; ++q)
    for (int p = 0; p < ns; ++p) {
      const C tau = f->tau(f->s_at(p, q));
      if (tau.imag() <= 0.0)
        throw std::invalid_argument("make_family: Im tau must stay positive on the grid");
      f->fibers[f->node(p, q)] = ModelGeometry::make_elliptic(tau, degree, nx, ny);
    }
  return f;
}

Weight FamilyWeight::fiber_weight(int p, int q) const {
  const int id = fam->node(p, q);
  return Weight(fam->fibers[id], u[id]);
}

FamilyWeight fiberwise_flat(FamilyPtr f) {
  FamilyWeight w;
  w.fam = std::move(f);
  const size_t cells = static_cast<size_t>(w.fam->nx) * w.fam->ny;
  w.u.assign(static_cast<size_t>(w.fam->ns) * w.fam->ns, RField(cells, 0.0));
  return w;
}

FamilyWeight fiberwise_flat_normalized(FamilyPtr f) {
  FamilyWeight w = fiberwise_flat(std::move(f));
  const FamilyGeometry& g = *w.fam;
  for (int q = 0; q < g.ns; ++q)
    for (int p = 0; p < g.ns; ++p) {
      const double imt = g.tau(g.s_at(p, q)).imag();
      std::fill(w.u[g.node(p, q)].begin(), w.u[g.node(p, q)].end(),
                -std::log(2.0 * imt));
    }
  return w;
}

FamilyWeight family_weight_quadratic(FamilyPtr f, const std::vector<double>& g_re,
                                     const std::vector<double>& g_im, double b) {
  FamilyWeight w = fiberwise_flat(std::move(f));
  const FamilyGeometry& g = *w.fam;
  const size_t cells = static_cast<size_t>(g.nx) * g.ny;
  if (g_re.size() != cells || g_im.size() != cells)
    throw std::invalid_argument("family_weight_quadratic: field size mismatch");
  for (int q = 0; q < g.ns; ++q)
    for (int p = 0; p < g.ns; ++p) {
      const C s = g.s_at(p, q);
      RField& u = w.u[g.node(p, q)];
      const double s1 = s.real(), s2 = s.imag();
      const double quad = b * std::norm(s);
      for (size_t i = 0; i < cells; ++i) u[i] = s1 * g_re[i] - s2 * g_im[i] + quad;
    }
  return w;
}

double wp_pointwise(const FamilyGeometry& f, std::complex<double> s) {
  const double imt = f.tau(s).imag();
  return std::norm(f.dtau(s)) / (4.0 * imt * imt);
}

// D_s and D_sbar D_s of a family scalar in the label chart. With
// F = ds f (node stencil), P = conj(tau) f_x - f_y and the horizontal
// coefficient beta = tau' y / (tau - conj(tau)):
//   D_s f      = F + beta P
//   D_zbar D_s f = Q / (tau - conj(tau)),
//     Q = tau F_x - F_y - beta (tau - conj(tau))^2 f_{z zbar} - (tau'/(tau - conj(tau))) P
//   D_sbar D_s f = (1/4) lap_sigma f + Re[ R P
//                  + beta (conj(tau') f_x + conj(tau) conj(F_x) - conj(F_y))
//                  + conj(beta) Q ],   R = |tau'|^2 y / (tau - conj(tau))^2.
// The combination is exactly real for real f; roundoff lands in the
// discarded imaginary part.
ScalarJet family_scalar_jet(const FamilyGeometry& f,
                            const std::vector<std::vector<double>>& samples,
                            bool with_reference, int stencil_order, DerivMode mode) {
  const size_t nn = static_cast<size_t>(f.ns) * f.ns;
  const size_t cells = static_cast<size_t>(f.nx) * f.ny;
  if (samples.size() != nn) throw std::invalid_argument("family jet: node count mismatch");
  for (const auto& s : samples)
    if (s.size() != cells) throw std::invalid_argument("family jet: fiber size mismatch");

  const int m = stencil_margin(stencil_order);
  ScalarJet jet;
  jet.margin = m;
  jet.d_s.resize(nn);
  jet.d_szbar.resize(nn);
  jet.d_ssbar.resize(nn);
  jet.d_zzbar.resize(nn);

  const double d = f.degree;
  for (int q = m; q < f.ns - m; ++q) {
    for (int p = m; p < f.ns - m; ++p) {
      const int id = f.node(p, q);
      const PeriodicGrid2& grid = fiber_grid(f, p, q);
      const C tau = grid.tau;
      const C taup = f.dtau(f.s_at(p, q));
      const C D = tau - std::conj(tau);  // 2i Im tau
      const double imt = tau.imag();

      RealField uf(grid);
      uf.v = samples[id];
      const RField ux = diff2(uf, Deriv::dx, mode).v;
      const RField uy = diff2(uf, Deriv::dy, mode).v;
      const RField uzz = complex_hessian(uf, mode).v;

      // single s-stencil layer: F = ds u and the flat quarter-Laplacian
      const RField us1 = node_diff(f, samples, p, q, 0, stencil_order, false);
      const RField us2 = node_diff(f, samples, p, q, 1, stencil_order, false);
      const RField uss1 = node_diff(f, samples, p, q, 0, stencil_order, true);
      const RField uss2 = node_diff(f, samples, p, q, 1, stencil_order, true);
      CField F(cells);
      for (size_t i = 0; i < cells; ++i) F[i] = 0.5 * C{us1[i], -us2[i]};
      const CField Fx = fiber_diff(grid, F, Deriv::dx, mode);
      const CField Fy = fiber_diff(grid, F, Deriv::dy, mode);

      CField ds(cells), dszbar(cells);
      RField dssbar(cells), dzzbar(cells);
      const C D2 = D * D;  // -4 Im^2 tau, real negative
      const double R_base = std::norm(taup) / D2.real();
      for (size_t i = 0; i < cells; ++i) {
        const int row = static_cast<int>(i) / f.nx;
        const double y = static_cast<double>(row) / f.ny;
        const C beta = taup * y / D;
        const C P = std::conj(tau) * ux[i] - uy[i];
        const C Q = tau * Fx[i] - Fy[i] - beta * D2 * uzz[i] - (taup / D) * P;
        ds[i] = F[i] + beta * P;
        dszbar[i] = Q / D;
        const C t_mix = (R_base * y) * P +
                        beta * (std::conj(taup) * ux[i] + std::conj(tau) * std::conj(Fx[i]) -
                                std::conj(Fy[i])) +
                        std::conj(beta) * Q;
        dssbar[i] = 0.25 * (uss1[i] + uss2[i]) + t_mix.real();
        dzzbar[i] = uzz[i];
        if (with_reference) {
          ds[i] += kI * M_PI * d * y * y * taup;
          dszbar[i] += -M_PI * d * y * taup / imt;
          dssbar[i] += M_PI * d * y * y * std::norm(taup) / imt;
          dzzbar[i] += M_PI * d / imt;
        }
      }
      jet.d_s[id] = std::move(ds);
      jet.d_szbar[id] = std::move(dszbar);
      jet.d_ssbar[id] = std::move(dssbar);
      jet.d_zzbar[id] = std::move(dzzbar);
    }
  }
  return jet;
}

FamilyJet family_jet(const FamilyWeight& w, int stencil_order, DerivMode mode) {
  check_weight(w);
  const FamilyGeometry& f = *w.fam;
  ScalarJet sj = family_scalar_jet(f, w.u, true, stencil_order, mode);

  FamilyJet jet;
  jet.margin = sj.margin;
  const size_t nn = static_cast<size_t>(f.ns) * f.ns;
  jet.c.resize(nn);
  jet.phi_szbar.resize(nn);
  jet.phi_zzbar.resize(nn);
  jet.v_field.resize(nn);
  jet.dzbar_v.resize(nn);

  for (int q = jet.margin; q < f.ns - jet.margin; ++q) {
    for (int p = jet.margin; p < f.ns - jet.margin; ++p) {
      const int id = f.node(p, q);
      const PeriodicGrid2& grid = fiber_grid(f, p, q);
      const C tau = grid.tau;
      const C D = tau - std::conj(tau);
      const RField& zz = sj.d_zzbar[id];
      const CField& sz = sj.d_szbar[id];
      const size_t cells = zz.size();

      // v itself is a chart representative, affine in the non-periodic label
      // y (chart jumps shift it by -tau'); v + y tau' is chart-invariant,
      // hence periodic and safe to differentiate. D_zbar of the affine part
      // is the constant tau' / (tau - conj(tau)).
      const C taup = f.dtau(f.s_at(p, q));
      RField c(cells);
      CField v(cells), v_per(cells);
      for (size_t i = 0; i < cells; ++i) {
        if (!(zz[i] > 0.0))
          throw numerical_error("family_jet: fiber form degenerate on a node");
        c[i] = sj.d_ssbar[id][i] - std::norm(sz[i]) / zz[i];
        v[i] = sz[i] / zz[i];
        const int row = static_cast<int>(i) / f.nx;
        const double y = static_cast<double>(row) / f.ny;
        v_per[i] = v[i] + y * taup;
      }
      const CField vx = fiber_diff(grid, v_per, Deriv::dx, mode);
      const CField vy = fiber_diff(grid, v_per, Deriv::dy, mode);
      CField dv(cells);
      for (size_t i = 0; i < cells; ++i) dv[i] = taup / D + (tau * vx[i] - vy[i]) / D;

      jet.c[id] = std::move(c);
      jet.v_field[id] = std::move(v);
      jet.dzbar_v[id] = std::move(dv);
      jet.phi_szbar[id] = sj.d_szbar[id];
      jet.phi_zzbar[id] = std::move(sj.d_zzbar[id]);
    }
  }
  return jet;
}

std::vector<std::vector<double>> c_direction(const FamilyWeight& w, const FamilyJet& jet,
                                             const std::vector<std::vector<double>>& chi,
                                             int stencil_order, DerivMode mode) {
  check_weight(w);
  const FamilyGeometry& f = *w.fam;
  ScalarJet cj = family_scalar_jet(f, chi, false, stencil_order, mode);
  const int m = std::max(jet.margin, cj.margin);

  std::vector<std::vector<double>> out(static_cast<size_t>(f.ns) * f.ns);
  for (int q = m; q < f.ns - m; ++q) {
    for (int p = m; p < f.ns - m; ++p) {
      const int id = f.node(p, q);
      const size_t cells = jet.phi_zzbar[id].size();
      RField dc(cells);
      for (size_t i = 0; i < cells; ++i) {
        const double zz = jet.phi_zzbar[id][i];
        const C psz = jet.phi_szbar[id][i];
        dc[i] = cj.d_ssbar[id][i] -
                (2.0 * std::real(cj.d_szbar[id][i] * std::conj(psz)) * zz -
                 std::norm(psz) * cj.d_zzbar[id][i]) /
                    (zz * zz);
      }
      out[id] = std::move(dc);
    }
  }
  return out;
}

double min_over_window(const std::vector<std::vector<double>>& field,
                       const FamilyGeometry& f, int margin) {
  double best = std::numeric_limits<double>::infinity();
  for (int q = margin; q < f.ns - margin; ++q)
    for (int p = margin; p < f.ns - margin; ++p) {
      const auto& v = field[f.node(p, q)];
      for (double x : v) best = std::min(best, x);
    }
  if (!std::isfinite(best))
    throw std::invalid_argument("min_over_window: empty window");
  return best;
}

MeasureFamily node_measure(const FamilyGeometry& f, int p, int q, FamilyMeasure meas) {
  const GeometryPtr& g = f.fibers[f.node(p, q)];
  if (meas == FamilyMeasure::fixed_flat) return make_reference_measure(g);
  const size_t cells = static_cast<size_t>(f.nx) * f.ny;
  return make_twisted_plus(g, RField(cells, 1.0), false);
}

FamilyWeight family_flow_rk4(const FamilyWeight& w, FamilyMeasure meas, double t,
                             double dt_sub, DerivMode mode) {
  check_weight(w);
  if (t < 0.0 || dt_sub <= 0.0)
    throw std::invalid_argument("family_flow_rk4: need t >= 0 and dt_sub > 0");
  const long steps = std::lround(t / dt_sub);
  if (std::abs(steps * dt_sub - t) > 1e-12 * std::max(1.0, t))
    throw std::invalid_argument("family_flow_rk4: t must be a multiple of dt_sub");

  const FamilyGeometry& f = *w.fam;
  FamilyWeight cur = w;
  for (int q = 0; q < f.ns; ++q) {
    for (int p = 0; p < f.ns; ++p) {
      const int id = f.node(p, q);
      const GeometryPtr& g = f.fibers[id];
      const MeasureFamily fam = node_measure(f, p, q, meas);
      RField u = cur.u[id];
      const size_t cells = u.size();
      RField stage(cells);
      for (long n = 0; n < steps; ++n) {
        const RField k1 = flow_velocity(fam, Weight(g, u), mode);
        for (size_t i = 0; i < cells; ++i) stage[i] = u[i] + 0.5 * dt_sub * k1[i];
        const RField k2 = flow_velocity(fam, Weight(g, stage), mode);
        for (size_t i = 0; i < cells; ++i) stage[i] = u[i] + 0.5 * dt_sub * k2[i];
        const RField k3 = flow_velocity(fam, Weight(g, stage), mode);
        for (size_t i = 0; i < cells; ++i) stage[i] = u[i] + dt_sub * k3[i];
        const RField k4 = flow_velocity(fam, Weight(g, stage), mode);
        for (size_t i = 0; i < cells; ++i)
          u[i] += dt_sub / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      if (!all_finite(u))
        throw numerical_error("family_flow_rk4: state not finite (dt_sub too large?)");
      cur.u[id] = std::move(u);
    }
  }
  return cur;
}

FamilyWeight family_flow_steps(const FamilyWeight& w, FamilyMeasure meas, int steps,
                               double dt, DerivMode mode) {
  check_weight(w);
  if (steps < 0 || dt <= 0.0)
    throw std::invalid_argument("family_flow_steps: need steps >= 0 and dt > 0");
  const FamilyGeometry& f = *w.fam;
  FlowOptions opt;
  opt.dt = dt;
  opt.scheme = StepScheme::semi_implicit;
  opt.mode = mode;
  FamilyWeight cur = w;
  for (int q = 0; q < f.ns; ++q)
    for (int p = 0; p < f.ns; ++p) {
      const int id = f.node(p, q);
      const MeasureFamily fam = node_measure(f, p, q, meas);
      Weight state(f.fibers[id], cur.u[id]);
      for (int n = 0; n < steps; ++n) state = flow_step(fam, state, opt);
      cur.u[id] = std::move(state.u);
    }
  return cur;
}

HeatTerms heat_terms(const FamilyWeight& w, FamilyMeasure meas, int stencil_order,
                     DerivMode mode) {
  check_weight(w);
  const FamilyGeometry& f = *w.fam;
  const size_t nn = static_cast<size_t>(f.ns) * f.ns;

  FamilyJet jet = family_jet(w, stencil_order, mode);

  // velocity at every node so the direction jet has full stencil support
  std::vector<RField> chi(nn);
  for (int q = 0; q < f.ns; ++q)
    for (int p = 0; p < f.ns; ++p) {
      const int id = f.node(p, q);
      chi[id] = flow_velocity(node_measure(f, p, q, meas), w.fiber_weight(p, q), mode);
    }

  HeatTerms ht;
  ht.margin = jet.margin;
  ht.dc_flow = c_direction(w, jet, chi, stencil_order, mode);
  ht.assembled.resize(nn);
  ht.assembled_flipped.resize(nn);

  const double d = f.degree;
  for (int q = ht.margin; q < f.ns - ht.margin; ++q) {
    for (int p = ht.margin; p < f.ns - ht.margin; ++p) {
      const int id = f.node(p, q);
      const PeriodicGrid2& grid = fiber_grid(f, p, q);
      const double imt = grid.tau.imag();
      const C taup = f.dtau(f.s_at(p, q));
      const double wp = wp_pointwise(f, f.s_at(p, q));
      const size_t cells = jet.c[id].size();

      RealField cf(grid);
      cf.v = jet.c[id];
      const RField czz = complex_hessian(cf, mode).v;

      RField base(cells);
      for (size_t i = 0; i < cells; ++i)
        base[i] = czz[i] / jet.phi_zzbar[id][i] + std::norm(jet.dzbar_v[id][i]) - wp;

      RField asm_(cells), flip(cells);
      if (meas == FamilyMeasure::fixed_flat) {
        for (size_t i = 0; i < cells; ++i) {
          asm_[i] = base[i];
          flip[i] = base[i] - jet.c[id][i];
        }
      } else {
        // closed-form dc_phi(g) for the fiberwise flat twist potential g
        for (size_t i = 0; i < cells; ++i) {
          const int row = static_cast<int>(i) / f.nx;
          const double y = static_cast<double>(row) / f.ny;
          const double g_ss = M_PI * d * y * y * std::norm(taup) / imt;
          const C g_sz = -M_PI * d * y * taup / imt;
          const double g_zz = M_PI * d / imt;
          const double zz = jet.phi_zzbar[id][i];
          const C psz = jet.phi_szbar[id][i];
          const double dcg =
              g_ss - (2.0 * std::real(g_sz * std::conj(psz)) * zz - std::norm(psz) * g_zz) /
                         (zz * zz);
          asm_[i] = base[i] - jet.c[id][i] + dcg;
          flip[i] = base[i] + jet.c[id][i] + dcg;
        }
      }
      ht.assembled[id] = std::move(asm_);
      ht.assembled_flipped[id] = std::move(flip);
    }
  }
  return ht;
}

HeatResidual heat_residual(const FamilyWeight& w_minus, const FamilyWeight& w0,
                           const FamilyWeight& w_plus, double dt, FamilyMeasure meas,
                           int stencil_order, DerivMode mode) {
  if (dt <= 0.0) throw std::invalid_argument("heat_residual: dt must be positive");
  const FamilyGeometry& f = *w0.fam;
  HeatTerms ht = heat_terms(w0, meas, stencil_order, mode);
  FamilyJet jm = family_jet(w_minus, stencil_order, mode);
  FamilyJet jp = family_jet(w_plus, stencil_order, mode);

  HeatResidual r;
  for (int q = ht.margin; q < f.ns - ht.margin; ++q)
    for (int p = ht.margin; p < f.ns - ht.margin; ++p) {
      const int id = f.node(p, q);
      const size_t cells = ht.dc_flow[id].size();
      for (size_t i = 0; i < cells; ++i) {
        const double cd = (jp.c[id][i] - jm.c[id][i]) / (2.0 * dt);
        r.chain_rule_gap = std::max(r.chain_rule_gap, std::abs(cd - ht.dc_flow[id][i]));
        r.identity_gap =
            std::max(r.identity_gap, std::abs(ht.dc_flow[id][i] - ht.assembled[id][i]));
        r.ablation_gap = std::max(
            r.ablation_gap, std::abs(ht.dc_flow[id][i] - ht.assembled_flipped[id][i]));
      }
    }
  return r;
}

WpComparison wp_form(FamilyPtr f, int stencil_order, double h_a, DerivMode mode) {
  if (!f) throw std::invalid_argument("wp_form: no geometry");
  if (h_a <= 0.0) throw std::invalid_argument("wp_form: h_a must be positive");
  const FamilyGeometry& g = *f;
  const size_t nn = static_cast<size_t>(g.ns) * g.ns;

  WpComparison cmp;
  cmp.route_a.assign(nn, kNaN);
  cmp.route_b.assign(nn, kNaN);

  // route (a): dedicated 4th-order stencils on -log(2 Im tau), fresh
  // analytic evaluations at spacing h_a around each node
  auto val = [&](C s) { return -std::log(2.0 * g.tau(s).imag()); };
  auto d2 = [&](C s, C dir) {
    return (-val(s - 2.0 * h_a * dir) + 16.0 * val(s - h_a * dir) - 30.0 * val(s) +
            16.0 * val(s + h_a * dir) - val(s + 2.0 * h_a * dir)) /
           (12.0 * h_a * h_a);
  };
  for (int q = 0; q < g.ns; ++q)
    for (int p = 0; p < g.ns; ++p) {
      const C s = g.s_at(p, q);
      cmp.route_a[g.node(p, q)] = 0.25 * (d2(s, 1.0) + d2(s, kI));
    }

  // route (b): fiber integral of |dzbar v|^2 for the normalized flat weight
  FamilyWeight w = fiberwise_flat_normalized(f);
  FamilyJet jet = family_jet(w, stencil_order, mode);
  cmp.margin = jet.margin;
  for (int q = jet.margin; q < g.ns - jet.margin; ++q)
    for (int p = jet.margin; p < g.ns - jet.margin; ++p) {
      const int id = g.node(p, q);
      const Weight fw = w.fiber_weight(p, q);
      const Density ma = ma_measure(fw, mode);
      const size_t cells = jet.dzbar_v[id].size();
      RField integrand(cells);
      for (size_t i = 0; i < cells; ++i)
        integrand[i] = std::norm(jet.dzbar_v[id][i]) * ma.v[i] / g.degree;
      cmp.route_b[id] = model_integrate(*g.fibers[id], integrand);
      cmp.max_discrepancy = std::max(
          cmp.max_discrepancy, std::abs(cmp.route_b[id] - cmp.route_a[id]));
    }
  return cmp;
}

std::vector<double> deligne_curvature(const FamilyWeight& w, const FamilyJet& jet) {
  check_weight(w);
  const FamilyGeometry& f = *w.fam;
  std::vector<double> theta(static_cast<size_t>(f.ns) * f.ns, kNaN);
  for (int q = jet.margin; q < f.ns - jet.margin; ++q)
    for (int p = jet.margin; p < f.ns - jet.margin; ++p) {
      const int id = f.node(p, q);
      const Weight fw = w.fiber_weight(p, q);
      const Density ma = ma_measure(fw);
      const size_t cells = jet.c[id].size();
      RField integrand(cells);
      for (size_t i = 0; i < cells; ++i) integrand[i] = jet.c[id][i] * ma.v[i] / f.degree;
      theta[id] = model_integrate(*f.fibers[id], integrand);
    }
  return theta;
}

FamilyBergmanResult family_bergman_monitor(const FamilyWeight& w0, int k, int steps,
                                           int stencil_order, DerivMode mode) {
  check_weight(w0);
  if (k < 1 || steps < 1)
    throw std::invalid_argument("family_bergman_monitor: need k >= 1 and steps >= 1");
  const FamilyGeometry& f = *w0.fam;
  const size_t nn = static_cast<size_t>(f.ns) * f.ns;

  std::vector<SectionBasis> bases(nn);
  std::vector<MeasureFamily> meas(nn);
  for (int q = 0; q < f.ns; ++q)
    for (int p = 0; p < f.ns; ++p) {
      const int id = f.node(p, q);
      bases[id] = make_basis(f.fibers[id], k);
      meas[id] = make_reference_measure(f.fibers[id]);
    }

  FamilyBergmanResult res;
  res.steps = steps;
  FamilyWeight cur = w0;
  const int margin = stencil_margin(stencil_order);
  for (int m = 1; m <= steps; ++m) {
    for (size_t id = 0; id < nn; ++id) {
      Weight state(f.fibers[id], cur.u[id]);
      const HermitianForm H = hilb(meas[id], state, bases[id]);
      cur.u[id] = fs(H, bases[id]).u;
    }
    FamilyJet jet = family_jet(cur, stencil_order, mode);
    double best = std::numeric_limits<double>::infinity();
    double best_plain = std::numeric_limits<double>::infinity();
    for (int q = margin; q < f.ns - margin; ++q)
      for (int p = margin; p < f.ns - margin; ++p) {
        const int id = f.node(p, q);
        const double wp = wp_pointwise(f, f.s_at(p, q));
        for (double cv : jet.c[id]) {
          best = std::min(best, cv + double(m) / k * wp);
          best_plain = std::min(best_plain, cv);
        }
      }
    res.min_shifted_c.push_back(best);
    res.min_c_final = best_plain;
  }
  return res;
}

PshCheckResult direct_image_psh_check(const FamilyWeight& w, int k,
                                      const std::vector<std::complex<double>>& z_points) {
  check_weight(w);
  if (k < 1) throw std::invalid_argument("direct_image_psh_check: k must be >= 1");
  const FamilyGeometry& f = *w.fam;
  const size_t nn = static_cast<size_t>(f.ns) * f.ns;
  const int N = k * f.degree;

  // log dual norms per functional per node; the 2 Im tau twist subtracts
  // psi_Omega from every raw value
  std::vector<std::vector<double>> lam_basis(static_cast<size_t>(N),
                                             std::vector<double>(nn, kNaN));
  std::vector<std::vector<double>> lam_eval(z_points.size(), std::vector<double>(nn, kNaN));
  std::vector<std::vector<double>> lam_eval_raw = lam_eval;

  for (int q = 0; q < f.ns; ++q) {
    for (int p = 0; p < f.ns; ++p) {
      const int id = f.node(p, q);
      const GeometryPtr& g = f.fibers[id];
      const C tau = g->fiber.tau;
      const double imt = tau.imag();
      const double psi_omega = std::log(2.0 * imt);

      const SectionBasis basis = make_basis(g, k);
      const HermitianForm H = hilb(make_reference_measure(g), w.fiber_weight(p, q), basis);
      Eigen::LLT<Eigen::MatrixXcd> llt(H.mat);
      if (llt.info() != Eigen::Success)
        throw numerical_error("direct_image_psh_check: Gram not positive definite");
      const Eigen::MatrixXcd Ginv =
          llt.solve(Eigen::MatrixXcd::Identity(H.mat.rows(), H.mat.cols()));

      for (int j = 0; j < N; ++j)
        lam_basis[j][id] = std::log(Ginv(j, j).real()) - psi_omega;

      for (size_t zi = 0; zi < z_points.size(); ++zi) {
        const C z0 = z_points[zi];
        const double y0 = z0.imag() / imt;
        const double x0 = z0.real() - tau.real() * y0;
        const std::vector<C> vv = theta_basis_point(tau, N, basis.n_trunc, x0, y0);
        Eigen::VectorXcd v(N);
        for (int j = 0; j < N; ++j) v(j) = vv[j];
        const double val = (v.transpose() * Ginv * v.conjugate()).value().real();
        if (!(val > 0.0))
          throw numerical_error("direct_image_psh_check: evaluation norm not positive");
        const double raw = std::log(val) + k * 2.0 * M_PI * f.degree * y0 * y0 * imt;
        lam_eval_raw[zi][id] = raw;
        lam_eval[zi][id] = raw - psi_omega;
      }
    }
  }

  // quarter-Laplacian by second differences at interior nodes
  auto min_curv = [&](const std::vector<double>& lam) {
    double best = std::numeric_limits<double>::infinity();
    const double h2 = f.hs * f.hs;
    for (int q = 1; q < f.ns - 1; ++q)
      for (int p = 1; p < f.ns - 1; ++p) {
        const double lap = lam[f.node(p + 1, q)] + lam[f.node(p - 1, q)] +
                           lam[f.node(p, q + 1)] + lam[f.node(p, q - 1)] -
                           4.0 * lam[f.node(p, q)];
        best = std::min(best, 0.25 * lap / h2);
      }
    return best;
  };

  PshCheckResult res;
  res.min_basis_curvature = std::numeric_limits<double>::infinity();
  res.min_eval_curvature = std::numeric_limits<double>::infinity();
  res.min_raw_eval_curvature = std::numeric_limits<double>::infinity();
  for (const auto& lam : lam_basis)
    res.min_basis_curvature = std::min(res.min_basis_curvature, min_curv(lam));
  for (const auto& lam : lam_eval)
    res.min_eval_curvature = std::min(res.min_eval_curvature, min_curv(lam));
  for (const auto& lam : lam_eval_raw)
    res.min_raw_eval_curvature = std::min(res.min_raw_eval_curvature, min_curv(lam));
  if (z_points.empty()) {
    res.min_eval_curvature = 0.0;
    res.min_raw_eval_curvature = 0.0;
  }
  return res;
}

}  // namespace krlab
