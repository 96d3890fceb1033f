#include <cmath>
#include <vector>

#include "doctest.h"
#include "krlab/errors.hpp"
#include "krlab/flow.hpp"
#include "krlab/functionals.hpp"
#include "krlab/geometry.hpp"

using namespace krlab;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

template <typename F>
std::vector<double> grid_samples(const PeriodicGrid2& g, F f) {
  std::vector<double> out(static_cast<size_t>(g.size()));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out[g.idx(i, j)] = f(double(i) / g.nx, double(j) / g.ny);
  return out;
}

std::vector<double> cos_bump(const PeriodicGrid2& g, double amp) {
  return grid_samples(g, [amp](double x, double y) {
    return amp * (std::cos(kTwoPi * x) + 0.5 * std::sin(kTwoPi * (x + y)));
  });
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

TEST_CASE("reference weights are stationary for their canonical families") {
  SUBCASE("flat torus with the flat measure") {
    auto g = ModelGeometry::make_elliptic({0.2, 1.1}, 1, 32, 32);
    auto fam = make_reference_measure(g);
    Weight w(g);
    CHECK(sup_abs(flow_velocity(fam, w)) <= 1e-13);
    FlowOptions fo;
    auto res = flow_run(fam, w, 0.3, fo);
    CHECK(sup_abs(res.w.u) <= 1e-12);
  }
  SUBCASE("fubini-study with the anticanonical measure") {
    auto g = ModelGeometry::make_p1(2, 513, 16.0);
    auto fam = make_anticanonical(g, false);
    Weight w(g);
    // stationarity up to the quadrature floor of the measure normalization
    CHECK(sup_abs(flow_velocity(fam, w)) <= 1e-9);
  }
}

TEST_CASE("velocity throws outside the positive cone") {
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 32, 32);
  auto fam = make_reference_measure(g);
  Weight w(g);
  // amplitude far beyond fiber positivity: d + (Im tau/pi) u_zz < 0 somewhere
  w.u = cos_bump(g->fiber, 2.0);
  CHECK_FALSE(is_fiber_positive(w));
  CHECK_THROWS_AS(flow_velocity(fam, w), numerical_error);
}

TEST_CASE("fixed measure on the torus solves by a single linear pass") {
  auto g = ModelGeometry::make_elliptic({0.3, 1.2}, 2, 64, 64);
  auto dens = grid_samples(g->fiber, [](double x, double y) {
    return 1.0 + 0.25 * std::cos(kTwoPi * x) + 0.1 * std::sin(kTwoPi * y);
  });
  auto fam = make_fixed_measure(g, dens);
  auto fp = solve_fixed_point(fam, Weight(g));
  CHECK(fp.residual <= 1e-11);
  CHECK(fp.iterations <= 2);
  CHECK(std::fabs(weight_mean(fp.w)) <= 1e-13);
  CHECK(sup_abs(flow_velocity(fam, fp.w)) <= 1e-11);
}

TEST_CASE("canonical fixed points carry the I = 0 gauge") {
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 48, 48);
  auto mu0 = grid_samples(g->fiber, [](double x, double) {
    return 1.0 + 0.3 * std::cos(kTwoPi * x);
  });
  auto fam = make_twisted_plus(g, mu0, true);
  auto fp = solve_fixed_point(fam, Weight(g));
  CHECK(fp.residual <= 1e-12);
  CHECK(std::fabs(i_functional(fam, fp.w)) <= 1e-12);
  CHECK(sup_abs(fp.w.u) > 1e-3);  // genuinely nonflat solution
}

TEST_CASE("flow converges to the fixed point under both schemes") {
  // 16^2 grid keeps the explicit scheme inside its stability window
  // (largest symbol ~ (2 pi nx/2)^2 / pi, so dt must stay below ~2.5e-3)
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 16, 16);
  auto mu0 = grid_samples(g->fiber, [](double x, double) {
    return 1.0 + 0.3 * std::cos(kTwoPi * x);
  });
  auto fam = make_twisted_plus(g, mu0, true);
  auto fp = solve_fixed_point(fam, Weight(g));

  for (auto scheme : {StepScheme::semi_implicit, StepScheme::explicit_euler}) {
    FlowOptions fo;
    fo.dt = scheme == StepScheme::semi_implicit ? 5e-3 : 1e-3;
    fo.scheme = scheme;
    fo.stop_residual = 1e-10;
    auto res = flow_run(fam, Weight(g), 40.0, fo);
    CHECK(res.converged);
    CHECK(res.final_residual <= 1e-10);
    double gap = sup_distance(res.w, fp.w);
    double drift = i_functional(fam, res.w);  // gauge difference to I = 0
    CHECK(gap - std::fabs(drift) <= 1e-8);
  }

  // one-step consistency: the schemes differ at O(dt^2)
  Weight w0(g);
  w0.u = cos_bump(g->fiber, 0.05);
  FlowOptions fa, fb;
  fa.dt = fb.dt = 1e-4;
  fa.scheme = StepScheme::explicit_euler;
  fb.scheme = StepScheme::semi_implicit;
  CHECK(sup_distance(flow_step(fam, w0, fa), flow_step(fam, w0, fb)) <= 1e-5);
}

TEST_CASE("first-order accuracy in dt") {
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 32, 32);
  auto mu0 = grid_samples(g->fiber, [](double x, double) {
    return 1.0 + 0.3 * std::cos(kTwoPi * x);
  });
  auto fam = make_twisted_plus(g, mu0, true);
  Weight w0(g);
  w0.u = cos_bump(g->fiber, 0.05);

  const double t_end = 0.5;
  auto at_dt = [&](double dt) {
    FlowOptions fo;
    fo.dt = dt;
    return flow_run(fam, w0, t_end, fo).w;
  };
  auto fine = at_dt(1.25e-4);
  double e1 = sup_distance(at_dt(2e-3), fine);
  double e2 = sup_distance(at_dt(1e-3), fine);
  double order = std::log2(e1 / e2);
  CHECK(order >= 0.8);
  CHECK(order <= 1.3);
}

TEST_CASE("positivity violations trigger dt halving, not failure") {
  // from u = 0 toward a strongly curved fixed measure, one explicit step
  // of size dt moves min MA to about 1 - 28 dt, so dt = 0.5 leaves the
  // cone and must be retried at smaller dt
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 32, 32);
  auto dens = grid_samples(g->fiber, [](double x, double) {
    return 1.0 + 0.9 * std::cos(kTwoPi * x);
  });
  auto fam = make_fixed_measure(g, dens);
  Weight w0(g);

  FlowOptions fo;
  fo.dt = 0.5;
  fo.scheme = StepScheme::explicit_euler;
  CHECK_THROWS_AS(flow_step(fam, w0, fo), numerical_error);

  auto res = flow_run(fam, w0, 0.5, fo);
  REQUIRE(!res.trace.empty());
  bool halved = false;
  for (const auto& m : res.trace)
    if (m.dt_used > 0.0 && m.dt_used < 0.99 * fo.dt) halved = true;
  CHECK(halved);
  CHECK(is_fiber_positive(res.w));
}

TEST_CASE("monitor trace records a monotone f along the flow") {
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 32, 32);
  auto mu0 = grid_samples(g->fiber, [](double x, double) {
    return 1.0 + 0.3 * std::cos(kTwoPi * x);
  });
  auto fam = make_twisted_plus(g, mu0, false);
  Weight w0(g);
  w0.u = cos_bump(g->fiber, 0.05);

  FlowOptions fo;
  fo.dt = 1e-2;
  auto res = flow_run(fam, w0, 1.0, fo);
  REQUIRE(res.trace.size() >= 3);
  CHECK(res.trace.front().time == 0.0);
  for (size_t i = 1; i < res.trace.size(); ++i) {
    const auto& a = res.trace[i - 1];
    const auto& b = res.trace[i];
    CHECK(b.f_value >= a.f_value - 1e-12 * (1.0 + std::fabs(a.f_value)));
    CHECK(b.time > a.time);
    CHECK(b.min_ma > 0.0);
  }
  // the two functional columns agree with direct evaluation at the end
  CHECK(res.trace.back().energy ==
        doctest::Approx(energy_E(res.w)).epsilon(1e-12));
  CHECK(res.trace.back().f_value ==
        doctest::Approx(f_functional(fam, res.w)).epsilon(1e-12));
}

TEST_CASE("line symmetrization projects and is idempotent") {
  LineGrid g(65, 12.0);
  std::vector<double> u(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    double t = g.t(i);
    u[i] = std::exp(-t * t / 9.0) + 0.1 * t * std::exp(-t * t / 7.0);
  }
  auto v = u;
  symmetrize_line(g, v);
  LineField lf(g);
  lf.v = v;
  CHECK(line_symmetry_defect(lf) <= 1e-16);
  auto w = v;
  symmetrize_line(g, w);
  for (int i = 0; i < g.n; ++i) CHECK(w[i] == v[i]);
}
