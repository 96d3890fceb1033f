#include "krlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

#include "krlab/errors.hpp"

namespace krlab {

namespace {

// FFTW plan creation is not thread-safe and not free; plans are cached
// per grid size. FFTW_ESTIMATE keeps planning deterministic (no runtime
// measurement), FFTW_UNALIGNED lets one plan serve any buffer, and
// fftw_execute_dft on distinct buffers is safe to call concurrently.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

PlanPair& plans_for(int nx, int ny) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(nx, ny);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::vector<fftw_complex> tmp(static_cast<size_t>(nx) * ny);
  PlanPair p;
  // Row-major layout with x fastest means dims are (ny, nx) for FFTW.
  p.fwd = fftw_plan_dft_2d(ny, nx, tmp.data(), tmp.data(), FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.bwd = fftw_plan_dft_2d(ny, nx, tmp.data(), tmp.data(), FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p.fwd || !p.bwd) throw numerical_error("fft2: plan creation failed");
  return cache.emplace(key, p).first->second;
}

using cvec = std::vector<std::complex<double>>;

void require_finite(const RealField& f, const char* who) {
  if (!all_finite(f.v)) throw numerical_error(std::string(who) + ": non-finite input");
}

}  // namespace

cvec fft2_forward(const RealField& f) {
  require_finite(f, "fft2_forward");
  const int nx = f.grid.nx, ny = f.grid.ny;
  cvec spec(f.v.begin(), f.v.end());
  auto& p = plans_for(nx, ny);
  fftw_execute_dft(p.fwd, reinterpret_cast<fftw_complex*>(spec.data()),
                   reinterpret_cast<fftw_complex*>(spec.data()));
  return spec;
}

RealField fft2_backward(const PeriodicGrid2& g, cvec spec) {
  if (static_cast<int>(spec.size()) != g.size())
    throw std::invalid_argument("fft2_backward: size mismatch");
  auto& p = plans_for(g.nx, g.ny);
  fftw_execute_dft(p.bwd, reinterpret_cast<fftw_complex*>(spec.data()),
                   reinterpret_cast<fftw_complex*>(spec.data()));
  RealField out(g);
  const double scale = 1.0 / g.size();
  for (int i = 0; i < g.size(); ++i) out.v[i] = spec[i].real() * scale;
  return out;
}

namespace {

RealField diff2_spectral(const RealField& f, Deriv which) {
  const int nx = f.grid.nx, ny = f.grid.ny;
  cvec spec = fft2_forward(f);
  const std::complex<double> I(0.0, 1.0);
  const double two_pi = 2.0 * M_PI;
  for (int j = 0; j < ny; ++j) {
    const int my = fft_freq(j, ny);
    const bool ny_nyq = (j == ny / 2);
    for (int i = 0; i < nx; ++i) {
      const int mx = fft_freq(i, nx);
      const bool nx_nyq = (i == nx / 2);
      const double kx = two_pi * mx, ky = two_pi * my;
      std::complex<double> m;
      switch (which) {
        case Deriv::dx:  m = nx_nyq ? 0.0 : I * kx; break;
        case Deriv::dy:  m = ny_nyq ? 0.0 : I * ky; break;
        case Deriv::dxx: m = -kx * kx; break;
        case Deriv::dyy: m = -ky * ky; break;
        case Deriv::dxy: m = (nx_nyq || ny_nyq) ? 0.0 : -kx * ky; break;
      }
      spec[f.grid.idx(i, j)] *= m;
    }
  }
  return fft2_backward(f.grid, std::move(spec));
}

RealField diff2_fd(const RealField& f, Deriv which) {
  const int nx = f.grid.nx, ny = f.grid.ny;
  const double hx = f.grid.hx(), hy = f.grid.hy();
  RealField out(f.grid);
  auto wrap = [](int i, int n) { return (i % n + n) % n; };
  for (int j = 0; j < ny; ++j) {
    const int jp = wrap(j + 1, ny), jm = wrap(j - 1, ny);
    for (int i = 0; i < nx; ++i) {
      const int ip = wrap(i + 1, nx), im = wrap(i - 1, nx);
      const double c = f.at(i, j);
      double r = 0.0;
      switch (which) {
        case Deriv::dx:  r = (f.at(ip, j) - f.at(im, j)) / (2.0 * hx); break;
        case Deriv::dy:  r = (f.at(i, jp) - f.at(i, jm)) / (2.0 * hy); break;
        case Deriv::dxx: r = (f.at(ip, j) - 2.0 * c + f.at(im, j)) / (hx * hx); break;
        case Deriv::dyy: r = (f.at(i, jp) - 2.0 * c + f.at(i, jm)) / (hy * hy); break;
        case Deriv::dxy:
          r = (f.at(ip, jp) - f.at(ip, jm) - f.at(im, jp) + f.at(im, jm)) /
              (4.0 * hx * hy);
          break;
      }
      out.at(i, j) = r;
    }
  }
  return out;
}

}  // namespace

RealField diff2(const RealField& f, Deriv which, DerivMode mode) {
  require_finite(f, "diff2");
  return mode == DerivMode::spectral ? diff2_spectral(f, which) : diff2_fd(f, which);
}

double integrate(const RealField& f) {
  require_finite(f, "integrate");
  double s = 0.0;
  for (double x : f.v) s += x;
  return s * f.grid.hx() * f.grid.hy();
}

double integrate(const RealField& f, const RealField& density) {
  require_finite(f, "integrate");
  require_finite(density, "integrate(density)");
  if (!(f.grid == density.grid))
    throw std::invalid_argument("integrate: grid mismatch");
  double s = 0.0;
  for (size_t i = 0; i < f.v.size(); ++i) s += f.v[i] * density.v[i];
  return s * f.grid.hx() * f.grid.hy();
}

RealField poisson_solve(const RealField& rhs) {
  require_finite(rhs, "poisson_solve");
  double scale = 0.0;
  for (double x : rhs.v) scale = std::max(scale, std::abs(x));
  const double mean = integrate(rhs);
  if (std::abs(mean) > 1e-10 * (1.0 + scale))
    throw std::invalid_argument("poisson_solve: rhs mean exceeds 1e-10 tolerance");

  const int nx = rhs.grid.nx, ny = rhs.grid.ny;
  cvec spec = fft2_forward(rhs);
  const double two_pi = 2.0 * M_PI;
  for (int j = 0; j < ny; ++j) {
    const double ky = two_pi * fft_freq(j, ny);
    for (int i = 0; i < nx; ++i) {
      const double kx = two_pi * fft_freq(i, nx);
      const double k2 = kx * kx + ky * ky;
      const int id = rhs.grid.idx(i, j);
      spec[id] = (k2 == 0.0) ? 0.0 : spec[id] / (-k2);
    }
  }
  return fft2_backward(rhs.grid, std::move(spec));
}

LineField line_d1(const LineField& f) {
  const int n = f.grid.n;
  const double h = f.grid.h();
  LineField out(f.grid);
  const auto& u = f.v;
  out.v[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  out.v[1] = (u[2] - u[0]) / (2.0 * h);
  for (int i = 2; i < n - 2; ++i)
    out.v[i] = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h);
  out.v[n - 2] = (u[n - 1] - u[n - 3]) / (2.0 * h);
  out.v[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
  return out;
}

LineField line_d2(const LineField& f) {
  const int n = f.grid.n;
  const double h2 = f.grid.h() * f.grid.h();
  LineField out(f.grid);
  const auto& u = f.v;
  out.v[0] = (u[0] - 2.0 * u[1] + u[2]) / h2;
  out.v[1] = (u[0] - 2.0 * u[1] + u[2]) / h2;
  for (int i = 2; i < n - 2; ++i)
    out.v[i] = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) /
               (12.0 * h2);
  out.v[n - 2] = (u[n - 3] - 2.0 * u[n - 2] + u[n - 1]) / h2;
  out.v[n - 1] = (u[n - 3] - 2.0 * u[n - 2] + u[n - 1]) / h2;
  return out;
}

double line_integrate(const LineField& f) {
  if (!all_finite(f.v)) throw numerical_error("line_integrate: non-finite input");
  const int n = f.grid.n;
  double s = 0.5 * (f.v[0] + f.v[n - 1]);
  for (int i = 1; i < n - 1; ++i) s += f.v[i];
  return s * f.grid.h();
}

double line_integrate_with_tails(const LineField& f, double rate_plus,
                                 double rate_minus) {
  if (rate_plus <= 0.0 || rate_minus <= 0.0)
    throw std::invalid_argument("line_integrate_with_tails: rates must be positive");
  return line_integrate(f) + f.v[f.grid.n - 1] / rate_plus + f.v[0] / rate_minus;
}

double line_symmetry_defect(const LineField& f) {
  double d = 0.0;
  for (int i = 0; i < f.grid.n; ++i)
    d = std::max(d, std::abs(f.v[i] - f.v[f.grid.mirror(i)]));
  return d;
}

double line_boundary_activity(const LineField& f) {
  const int n = f.grid.n;
  const double h = f.grid.h();
  double a = 0.0;
  a = std::max(a, std::abs(f.v[1] - f.v[0]) / h);
  a = std::max(a, std::abs(f.v[2] - f.v[1]) / h);
  a = std::max(a, std::abs(f.v[n - 1] - f.v[n - 2]) / h);
  a = std::max(a, std::abs(f.v[n - 2] - f.v[n - 3]) / h);
  return a;
}

}  // namespace krlab
