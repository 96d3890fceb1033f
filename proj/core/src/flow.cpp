#include "krlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "krlab/errors.hpp"

namespace krlab {

namespace {

double preconditioner_shift(const MeasureFamily& fam) {
  switch (fam.kind) {
    case MeasureKind::twisted_plus: return -1.0;
    case MeasureKind::anticanonical: return 1.0;
    case MeasureKind::fixed: return 0.0;
  }
  return 0.0;
}

// Apply a per-mode gain, expressed as a function of the flat symbol of
// (Im tau / pi) d dbar acting on e^{2 pi i (m x + n y)}:
//   lambda(m, n) = -pi (|tau|^2 m^2 - 2 Re(tau) m n + n^2) / Im tau.
std::vector<double> fourier_gain_apply(const PeriodicGrid2& g,
                                       const std::vector<double>& rhs,
                                       const std::function<double(double)>& gain) {
  RealField f(g);
  f.v = rhs;
  auto spec = fft2_forward(f);
  const double it = g.tau.imag(), rt = g.tau.real();
  const double t2 = std::norm(g.tau);
  for (int j = 0; j < g.ny; ++j) {
    const double n = fft_freq(j, g.ny);
    for (int i = 0; i < g.nx; ++i) {
      const double m = fft_freq(i, g.nx);
      const double lambda = -M_PI * (t2 * m * m - 2.0 * rt * m * n + n * n) / it;
      spec[g.idx(i, j)] *= gain(lambda);
    }
  }
  return fft2_backward(g, std::move(spec)).v;
}

// Solve (alpha I + beta S / w) delta = rhs where S is the 3-point second
// difference with reflecting ends. pin_center swaps the middle row for an
// identity row, removing the constant kernel when alpha = 0.
std::vector<double> line_tridiag_solve(const LineGrid& g, const std::vector<double>& w,
                                       double alpha, double beta,
                                       const std::vector<double>& rhs,
                                       bool pin_center) {
  const int n = g.n;
  const double h2 = g.h() * g.h();
  std::vector<double> a(n, 0.0), b(n), c(n, 0.0), r = rhs;
  for (int i = 0; i < n; ++i) {
    const double k = beta / (h2 * w[i]);
    b[i] = alpha - 2.0 * k;
    if (i > 0) a[i] = k;
    if (i < n - 1) c[i] = k;
  }
  c[0] *= 2.0;
  a[n - 1] *= 2.0;
  if (pin_center) {
    const int mid = n / 2;
    a[mid] = c[mid] = 0.0;
    b[mid] = 1.0;
    r[mid] = 0.0;
  }
  // Thomas sweep.
  for (int i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    r[i] -= m * r[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = r[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (r[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

std::vector<double> frozen_line_coefficient(const ModelGeometry& g) {
  std::vector<double> w(g.line.n);
  for (int i = 0; i < g.line.n; ++i) w[i] = psi_fs_d2(g.line.t(i), g.p1.degree);
  return w;
}

double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

void normalize_state(const MeasureFamily& fam, Weight& w) {
  if (fam.kind == MeasureKind::fixed) {
    const double m = weight_mean(w);
    for (double& x : w.u) x -= m;
  } else {
    const double i = i_functional(fam, w);
    for (double& x : w.u) x -= i;
  }
  w.cached_min_ma = std::numeric_limits<double>::quiet_NaN();
}

FlowMonitor make_monitor(const MeasureFamily& fam, const Weight& w, double t,
                         double dt_used, double sup_vel, DerivMode mode) {
  FlowMonitor m;
  m.time = t;
  m.dt_used = dt_used;
  m.sup_velocity = sup_vel;
  m.ma_residual = sup_abs(flow_velocity(fam, w, mode));
  m.min_ma = density_min(ma_measure(w, mode));
  m.energy = energy_E(w);
  m.i_value = i_functional(fam, w);
  m.f_value = m.energy - w.geom->degree() * m.i_value;
  m.j_value = j_functional(w);
  return m;
}

}  // namespace

void symmetrize_line(const LineGrid& g, std::vector<double>& u) {
  for (int i = 0; i < g.n / 2; ++i) {
    const double avg = 0.5 * (u[i] + u[g.mirror(i)]);
    u[i] = avg;
    u[g.mirror(i)] = avg;
  }
}

std::vector<double> flow_velocity(const MeasureFamily& fam, const Weight& w,
                                  DerivMode mode) {
  const Density ma = ma_measure(w, mode);
  const std::vector<double> mu = mu_flow(fam, w);
  std::vector<double> g(ma.v.size());
  for (size_t i = 0; i < g.size(); ++i) {
    if (!(ma.v[i] > 0.0))
      throw numerical_error("flow_velocity: MA density lost positivity");
    if (!(mu[i] > 0.0))
      throw numerical_error("flow_velocity: measure density lost positivity");
    g[i] = std::log(ma.v[i] / mu[i]);
  }
  return g;
}

Weight flow_step(const MeasureFamily& fam, const Weight& w, const FlowOptions& opt) {
  if (!(opt.dt > 0.0)) throw std::invalid_argument("flow_step: dt must be positive");
  const auto& g = *w.geom;
  const std::vector<double> vel = flow_velocity(fam, w, opt.mode);
  std::vector<double> delta;

  if (opt.scheme == StepScheme::explicit_euler) {
    delta.resize(vel.size());
    for (size_t i = 0; i < vel.size(); ++i) delta[i] = opt.dt * vel[i];
  } else if (g.kind == ModelKind::elliptic_curve) {
    const double d = g.degree();
    const double shift = preconditioner_shift(fam);
    const double dt = opt.dt;
    delta = fourier_gain_apply(g.fiber, vel, [d, shift, dt](double lambda) {
      return dt / (1.0 - dt * (lambda / d + shift));
    });
  } else {
    std::vector<double> rhs(vel.size());
    for (size_t i = 0; i < vel.size(); ++i) rhs[i] = opt.dt * vel[i];
    delta = line_tridiag_solve(g.line, frozen_line_coefficient(g), 1.0, -opt.dt,
                               rhs, false);
  }

  Weight next(w.geom, w.u);
  for (size_t i = 0; i < delta.size(); ++i) next.u[i] += delta[i];
  if (g.kind == ModelKind::p1_symmetric) symmetrize_line(g.line, next.u);
  if (!all_finite(next.u)) throw numerical_error("flow_step: non-finite state");
  if (!is_fiber_positive(next, opt.positivity_margin))
    throw numerical_error("flow_step: positivity lost");
  return next;
}

FlowResult flow_run(const MeasureFamily& fam, Weight w, double t_end,
                    const FlowOptions& opt) {
  if (!(t_end >= 0.0)) throw std::invalid_argument("flow_run: t_end must be >= 0");
  FlowResult res;
  res.trace.push_back(make_monitor(fam, w, 0.0, 0.0, 0.0, opt.mode));
  double t = 0.0;
  while (t < t_end - 1e-12 * (1.0 + t_end)) {
    FlowOptions cur = opt;
    cur.dt = std::min(opt.dt, t_end - t);
    Weight next;
    int halvings = 0;
    for (;;) {
      try {
        next = flow_step(fam, w, cur);
        break;
      } catch (const numerical_error&) {
        if (++halvings > 20) throw;
        cur.dt *= 0.5;
      }
    }
    const double sup_vel = sup_distance(next, w) / cur.dt;
    w = std::move(next);
    t += cur.dt;
    res.trace.push_back(make_monitor(fam, w, t, cur.dt, sup_vel, opt.mode));
    if (opt.stop_residual > 0.0 && res.trace.back().ma_residual <= opt.stop_residual) {
      res.converged = true;
      break;
    }
  }
  res.final_residual = res.trace.back().ma_residual;
  res.w = std::move(w);
  return res;
}

FixedPointResult solve_fixed_point(const MeasureFamily& fam, Weight initial,
                                   const FixedPointOptions& opt) {
  Weight w = std::move(initial);
  const auto& g = *w.geom;
  const bool line = g.kind == ModelKind::p1_symmetric;
  if (line) symmetrize_line(g.line, w.u);
  normalize_state(fam, w);

  const double d = g.degree();
  const double shift = preconditioner_shift(fam);
  const std::vector<double> wfrozen =
      line ? frozen_line_coefficient(g) : std::vector<double>{};

  FixedPointResult out;
  out.w = w;
  double res = sup_abs(flow_velocity(fam, w, opt.mode));
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    if (res <= opt.tol) break;
    std::vector<double> delta;
    if (fam.kind == MeasureKind::fixed) {
      // Residual form: MA is affine in u, so the elliptic spectral solve
      // lands on the fixed point in one step; the line preconditioner is
      // the 3-point difference, a uniform contraction for the 5-point MA.
      const Density ma = ma_measure(out.w, opt.mode);
      const std::vector<double> mu = mu_flow(fam, out.w);
      std::vector<double> rhs(mu.size());
      for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = mu[i] - ma.v[i];
      if (!line) {
        delta = fourier_gain_apply(g.fiber, rhs, [](double lambda) {
          return lambda == 0.0 ? 0.0 : 1.0 / lambda;
        });
      } else {
        std::vector<double> ones(rhs.size(), 1.0);
        delta = line_tridiag_solve(g.line, ones, 0.0, 1.0, rhs, true);
      }
    } else {
      std::vector<double> vel = flow_velocity(fam, out.w, opt.mode);
      for (double& v : vel) v = -v;
      if (!line) {
        delta = fourier_gain_apply(g.fiber, vel, [d, shift](double lambda) {
          const double denom = lambda / d + shift;
          return denom == 0.0 ? 0.0 : 1.0 / denom;
        });
      } else {
        delta = line_tridiag_solve(g.line, wfrozen, shift, 1.0, vel, shift == 0.0);
      }
    }

    // Backtracking on the sup residual, with positivity guarding.
    bool accepted = false;
    for (double s = 1.0; s >= 1.0 / 256.0; s *= 0.5) {
      Weight cand(out.w.geom, out.w.u);
      for (size_t i = 0; i < delta.size(); ++i) cand.u[i] += s * delta[i];
      if (line) symmetrize_line(g.line, cand.u);
      normalize_state(fam, cand);
      double cres;
      try {
        cres = sup_abs(flow_velocity(fam, cand, opt.mode));
      } catch (const numerical_error&) {
        continue;
      }
      if (cres < res * (1.0 - 0.25 * s) || cres <= opt.tol) {
        out.w = std::move(cand);
        res = cres;
        accepted = true;
        break;
      }
    }
    out.iterations = iter + 1;
    if (!accepted)
      throw numerical_error("solve_fixed_point: no descent direction accepted");
  }
  if (res > opt.tol)
    throw numerical_error("solve_fixed_point: did not reach tolerance");
  out.residual = res;
  return out;
}

}  // namespace krlab
