#include <cmath>
#include <vector>

#include "doctest.h"
#include "krlab/functionals.hpp"
#include "krlab/geometry.hpp"

using namespace krlab;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;

template <typename F>
std::vector<double> grid_samples(const PeriodicGrid2& g, F f) {
  std::vector<double> out(static_cast<size_t>(g.size()));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out[g.idx(i, j)] = f(double(i) / g.nx, double(j) / g.ny);
  return out;
}

template <typename F>
std::vector<double> line_samples(const LineGrid& g, F f) {
  std::vector<double> out(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) out[i] = f(g.t(i));
  return out;
}

GeometryPtr torus(int degree = 1) {
  return ModelGeometry::make_elliptic({0.0, 1.0}, degree, 48, 48);
}

Weight bump(GeometryPtr g) {
  Weight w(g);
  w.u = grid_samples(g->fiber, [](double x, double y) {
    return 0.05 * std::cos(kTwoPi * x) + 0.03 * std::sin(kTwoPi * (x + y));
  });
  return w;
}

}  // namespace

TEST_CASE("measure family construction and guards") {
  auto ge = torus();
  auto gp = ModelGeometry::make_p1(2, 513, 16.0);

  auto ref_e = make_reference_measure(ge);
  for (double v : ref_e.mu0) CHECK(v == 1.0);

  auto ref_p = make_reference_measure(gp);
  CHECK(measure_integrate(*gp, ref_p.mu0, ref_p.rate_plus, ref_p.rate_minus) ==
        doctest::Approx(1.0).epsilon(1e-9));

  auto dens = grid_samples(ge->fiber,
                           [](double x, double) { return 2.0 + std::cos(kTwoPi * x); });
  auto fixed = make_fixed_measure(ge, dens);
  CHECK(measure_integrate(*ge, fixed.mu0) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(make_twisted_plus(gp, line_samples(gp->line, [](double) { return 1.0; }), true),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_anticanonical(ge, true), std::invalid_argument);
  auto gp1 = ModelGeometry::make_p1(1, 513, 16.0);
  CHECK_THROWS_AS(make_anticanonical(gp1, true), std::invalid_argument);

  dens[5] = -1.0;
  CHECK_THROWS_AS(make_fixed_measure(ge, dens), std::invalid_argument);
}

TEST_CASE("mass conventions at the reference weight") {
  auto ge = torus(3);
  Weight w0(ge);
  auto mu0 = grid_samples(ge->fiber,
                          [](double x, double) { return 1.0 + 0.3 * std::cos(kTwoPi * x); });

  for (bool norm : {true, false}) {
    auto fam = make_twisted_plus(ge, mu0, norm);
    auto q = mu_quant(fam, w0);
    CHECK(measure_integrate(*ge, q) == doctest::Approx(1.0).epsilon(1e-12));
    auto fl = mu_flow(fam, w0);
    CHECK(measure_integrate(*ge, fl) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(measure_mass(fam, w0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  auto gp = ModelGeometry::make_p1(2, 513, 16.0);
  Weight p0(gp);
  for (bool norm : {true, false}) {
    auto fam = make_anticanonical(gp, norm);
    // the reference weight is the exact fixed point: flow target equals
    // the reference MA density at every node, up to the quadrature floor
    // of the unit-mass normalization (~7e-11 on this line grid)
    auto fl = mu_flow(fam, p0);
    auto ma = ma_measure(p0);
    double worst = 0.0;
    for (size_t i = 0; i < fl.size(); ++i)
      worst = std::max(worst, std::fabs(fl[i] - ma.v[i]));
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("family potential is unit-equivariant with zero base point") {
  auto ge = torus(2);
  Weight w = bump(ge);
  auto mu0 = grid_samples(ge->fiber,
                          [](double x, double) { return 1.0 + 0.3 * std::cos(kTwoPi * x); });

  std::vector<MeasureFamily> fams = {
      make_reference_measure(ge),
      make_fixed_measure(ge, mu0),
      make_twisted_plus(ge, mu0, true),
      make_twisted_plus(ge, mu0, false),
  };
  for (const auto& fam : fams) {
    CHECK(std::fabs(i_functional(fam, Weight(ge))) <= 1e-14);
    double base = i_functional(fam, w);
    for (double c : {0.7, -1.3}) {
      CHECK(i_functional(fam, w.shifted(c)) - base == doctest::Approx(c).epsilon(1e-12));
    }
  }

  auto gp = ModelGeometry::make_p1(2, 513, 16.0);
  Weight wp(gp);
  wp.u = line_samples(gp->line, [](double t) {
    double s = 1.0 / std::cosh(0.5 * t);
    return 0.15 * s * s;
  });
  for (bool norm : {true, false}) {
    auto fam = make_anticanonical(gp, norm);
    // base value is -log of the numeric mass of rho_FS, i.e. the
    // trapezoid boundary term of this grid rather than exact zero
    CHECK(std::fabs(i_functional(fam, Weight(gp))) <= 1e-9);
    double base = i_functional(fam, wp);
    CHECK(i_functional(fam, wp.shifted(0.4)) - base == doctest::Approx(0.4).epsilon(1e-12));
  }

  // Jensen: the twisted potential dominates the linear one strictly for
  // nonconstant u
  auto lin = i_functional(make_fixed_measure(ge, mu0), w);
  auto tw = i_functional(make_twisted_plus(ge, mu0, true), w);
  CHECK(tw > lin + 1e-6);
}

TEST_CASE("monge-ampere energy is exactly quadratic") {
  auto ge = torus(2);
  Weight w = bump(ge);
  CHECK(energy_E(Weight(ge)) == 0.0);

  double ep = energy_E(w);
  Weight wm(ge);
  for (size_t i = 0; i < w.u.size(); ++i) wm.u[i] = -w.u[i];
  double em = energy_E(wm);
  double lin = 0.5 * (ep - em), quad = 0.5 * (ep + em);

  Weight w2(ge);
  for (size_t i = 0; i < w.u.size(); ++i) w2.u[i] = 2.0 * w.u[i];
  CHECK(energy_E(w2) == doctest::Approx(2.0 * lin + 4.0 * quad).epsilon(1e-12));

  Weight wt(ge);
  for (size_t i = 0; i < w.u.size(); ++i) wt.u[i] = 0.7 * w.u[i];
  CHECK(energy_E(wt) == doctest::Approx(0.7 * lin + 0.49 * quad).epsilon(1e-12));

  // shift rule E(u + c) = E(u) + c d
  CHECK(energy_E(w.shifted(0.9)) - ep == doctest::Approx(0.9 * 2.0).epsilon(1e-12));

  // first variation is the MA measure up to discretization error only
  auto dir = grid_samples(ge->fiber,
                          [](double x, double y) { return std::cos(kTwoPi * (x - y)); });
  CHECK(energy_derivative_gap(w, dir) <= 1e-9);
}

TEST_CASE("j functional is the quadratic gauge-invariant part") {
  auto ge = torus();
  Weight w = bump(ge);

  CHECK(j_functional(Weight(ge)) == 0.0);
  CHECK(j_functional(Weight(ge, std::vector<double>(w.u.size(), 0.7))) <= 1e-14);

  double j = j_functional(w);
  CHECK(j > 0.0);
  CHECK(j_functional(w.shifted(-2.0)) == doctest::Approx(j).epsilon(1e-12));

  Weight w2(ge);
  for (size_t i = 0; i < w.u.size(); ++i) w2.u[i] = 2.0 * w.u[i];
  CHECK(j_functional(w2) == doctest::Approx(4.0 * j).epsilon(1e-12));

  // closed form on a single mode: J(a cos(2 pi x)) = pi a^2 / 4 on the
  // square torus
  double a = 0.11;
  Weight wc(ge);
  wc.u = grid_samples(ge->fiber, [&](double x, double) { return a * std::cos(kTwoPi * x); });
  CHECK(j_functional(wc) == doctest::Approx(kPi * a * a / 4.0).epsilon(1e-10));
}

TEST_CASE("f functional is shift-invariant for every family") {
  auto ge = torus(2);
  Weight w = bump(ge);
  auto mu0 = grid_samples(ge->fiber,
                          [](double x, double) { return 1.0 + 0.3 * std::cos(kTwoPi * x); });

  std::vector<MeasureFamily> fams = {
      make_fixed_measure(ge, mu0),
      make_twisted_plus(ge, mu0, true),
      make_twisted_plus(ge, mu0, false),
  };
  for (const auto& fam : fams) {
    double f = f_functional(fam, w);
    CHECK(f == doctest::Approx(energy_E(w) - 2.0 * i_functional(fam, w)).epsilon(1e-12));
    CHECK(f_functional(fam, w.shifted(1.7)) == doctest::Approx(f).epsilon(1e-11));
  }
}

TEST_CASE("line integrals with tail corrections") {
  auto gp = ModelGeometry::make_p1(1, 513, 16.0);
  auto dens = line_samples(gp->line, [](double t) { return 1.0 / std::cosh(t); });
  CHECK(measure_integrate(*gp, dens, 1.0, 1.0) == doctest::Approx(kPi).epsilon(1e-9));
}
