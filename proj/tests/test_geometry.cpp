#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "krlab/errors.hpp"
#include "krlab/geometry.hpp"
#include "krlab/quantization.hpp"
#include "krlab/sections.hpp"

using namespace krlab;
using cplx = std::complex<double>;

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

template <typename F>
std::vector<double> line_samples(const LineGrid& g, F f) {
  std::vector<double> out(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) out[i] = f(g.t(i));
  return out;
}

double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("model construction and guards") {
  auto ge = ModelGeometry::make_elliptic({0.3, 1.2}, 2, 32, 48);
  CHECK(ge->kind == ModelKind::elliptic_curve);
  CHECK(ge->degree() == 2);
  CHECK(ge->fiber.nx == 32);
  CHECK(ge->fiber.ny == 48);
  CHECK(ge->fiber.tau == cplx(0.3, 1.2));

  auto gp = ModelGeometry::make_p1(3, 257, 12.0);
  CHECK(gp->kind == ModelKind::p1_symmetric);
  CHECK(gp->degree() == 3);
  CHECK(gp->line.n == 257);
  CHECK(gp->line.T == 12.0);

  CHECK_THROWS_AS(ModelGeometry::make_elliptic({0.0, 1.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(ModelGeometry::make_p1(0), std::invalid_argument);
  CHECK_THROWS_AS(Weight(ge, std::vector<double>(7, 0.0)), std::invalid_argument);
  std::vector<double> bad(static_cast<size_t>(ge->fiber.size()), 0.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Weight(ge, bad), numerical_error);
}

TEST_CASE("weight algebra") {
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 16, 16);
  Weight w0 = reference_weight(g);
  for (double x : w0.u) CHECK(x == 0.0);
  CHECK(weight_mean(w0) == 0.0);

  Weight ws = w0.shifted(0.375);
  CHECK(sup_distance(w0, ws) == 0.375);
  CHECK(weight_mean(ws) == doctest::Approx(0.375).epsilon(1e-15));

  auto other = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 32, 32);
  CHECK_THROWS_AS(sup_distance(w0, Weight(other)), std::invalid_argument);
}

TEST_CASE("fubini-study helpers match closed forms and stay finite") {
  for (int d : {1, 2}) {
    for (double t : {-6.0, -1.3, 0.0, 0.7, 5.5}) {
      CHECK(psi_fs(t, d) == doctest::Approx(d * std::log1p(std::exp(t))).epsilon(1e-14));
      double c = std::cosh(0.5 * t);
      CHECK(psi_fs_d2(t, d) == doctest::Approx(d / (4.0 * c * c)).epsilon(1e-14));
      // central differences of psi0 and psi0' as independent checks
      double h = 1e-5;
      double fd1 = (psi_fs(t + h, d) - psi_fs(t - h, d)) / (2.0 * h);
      double fd2 = (psi_fs_d1(t + h, d) - psi_fs_d1(t - h, d)) / (2.0 * h);
      CHECK(std::fabs(psi_fs_d1(t, d) - fd1) <= 1e-8);
      CHECK(std::fabs(psi_fs_d2(t, d) - fd2) <= 1e-8);
    }
    CHECK(std::isfinite(psi_fs(800.0, d)));
    CHECK(psi_fs(800.0, d) == doctest::Approx(800.0 * d).epsilon(1e-12));
    CHECK(psi_fs_d1(-800.0, d) == 0.0);
    CHECK(psi_fs_d1(800.0, d) == doctest::Approx(double(d)).epsilon(1e-14));
    CHECK(psi_fs_d2(800.0, d) == 0.0);
  }
}

TEST_CASE("complex hessian on cosine modes of a skew torus") {
  cplx tau(0.3, 1.2);
  PeriodicGrid2 g(64, 64, tau);
  // u = cos(2 pi (m x + n y)) has u_{z zbar} = -pi^2 |m tau - n|^2 / Im^2 tau * u
  for (auto [m, n] : {std::pair{1, 0}, {0, 1}, {2, -1}}) {
    RealField u(g);
    u.v = grid_samples(g, [m = m, n = n](double x, double y) {
      return std::cos(kTwoPi * (m * x + n * y));
    });
    double fac = -std::acos(-1.0) * std::acos(-1.0) *
                 std::norm(double(m) * tau - double(n)) / (tau.imag() * tau.imag());
    auto got = complex_hessian(u);
    std::vector<double> want(u.v.size());
    for (size_t i = 0; i < want.size(); ++i) want[i] = fac * u.v[i];
    CHECK(sup_abs_diff(got.v, want) <= 1e-8 * std::fabs(fac));
  }
}

TEST_CASE("finite-difference hessian converges to the spectral one") {
  cplx tau(0.3, 1.2);
  auto f = [](double x, double y) {
    return 0.2 * std::cos(kTwoPi * x) + 0.1 * std::sin(kTwoPi * (x + 2.0 * y));
  };
  double err[2];
  int ns[2] = {32, 64};
  for (int c = 0; c < 2; ++c) {
    PeriodicGrid2 g(ns[c], ns[c], tau);
    RealField u(g);
    u.v = grid_samples(g, f);
    err[c] = sup_abs_diff(complex_hessian(u, DerivMode::finite_difference).v,
                          complex_hessian(u).v);
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.9);
}

TEST_CASE("monge-ampere mass equals the degree") {
  SUBCASE("elliptic") {
    auto g = ModelGeometry::make_elliptic({0.3, 1.2}, 3, 48, 48);
    Weight w(g);
    auto flat = ma_measure(w);
    for (double v : flat.v) CHECK(v == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(density_mass(*g, flat) == doctest::Approx(3.0).epsilon(1e-12));

    w.u = grid_samples(g->fiber, [](double x, double y) {
      return 0.08 * std::cos(kTwoPi * x) + 0.05 * std::sin(kTwoPi * (x + y));
    });
    auto ma = ma_measure(w);
    CHECK(density_mass(*g, ma) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(density_min(ma) < 3.0);
    CHECK(is_fiber_positive(w, 1.0));
    CHECK_FALSE(is_fiber_positive(w, 3.1));
    CHECK(std::isfinite(w.cached_min_ma));
  }
  SUBCASE("p1") {
    auto g = ModelGeometry::make_p1(2, 513, 16.0);
    Weight w(g);
    auto ref = ma_measure(w);
    std::vector<double> want =
        line_samples(g->line, [](double t) { return psi_fs_d2(t, 2); });
    CHECK(sup_abs_diff(ref.v, want) <= 1e-9);
    CHECK(density_mass(*g, ref) == doctest::Approx(2.0).epsilon(1e-10));

    w.u = line_samples(g->line, [](double t) {
      double s = 1.0 / std::cosh(0.5 * t);
      return 0.2 * s * s;
    });
    // mass closure of the correction term is bounded by the boundary
    // decay tolerance, not by quadrature accuracy
    CHECK(density_mass(*g, ma_measure(w)) == doctest::Approx(2.0).epsilon(2e-7));
    // the density floor on the line is psi''(T) ~ 2d e^{-T}, so only
    // margins below that can hold
    CHECK(is_fiber_positive(w, 0.0));
    CHECK_FALSE(is_fiber_positive(w, 1e-3));
  }
}

TEST_CASE("reference integration") {
  auto ge = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 16, 16);
  CHECK(model_integrate(*ge, std::vector<double>(256, 2.0)) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("weight serialization is bit-exact") {
  std::mt19937 rng(777);
  auto noise = [&]() { return 2.0 * (rng() / 4294967296.0) - 1.0; };

  auto ge = ModelGeometry::make_elliptic({-0.125, 0.9}, 2, 16, 24);
  Weight we(ge);
  for (auto& x : we.u) x = 0.001 * noise();
  Weight re = weight_from_json(weight_to_json(we));
  REQUIRE(re.samples() == we.samples());
  for (int i = 0; i < we.samples(); ++i) CHECK(re.u[i] == we.u[i]);
  CHECK(re.geom->kind == ModelKind::elliptic_curve);
  CHECK(re.geom->elliptic.degree == 2);
  CHECK(re.geom->fiber == ge->fiber);

  auto gp = ModelGeometry::make_p1(1, 65, 9.0);
  Weight wp(gp);
  for (auto& x : wp.u) x = 0.001 * noise();
  Weight rp = weight_from_json(weight_to_json(wp));
  REQUIRE(rp.samples() == wp.samples());
  for (int i = 0; i < wp.samples(); ++i) CHECK(rp.u[i] == wp.u[i]);
  CHECK(rp.geom->line == gp->line);

  CHECK_THROWS_AS(weight_from_json("{\"model\":\"nonsense\"}"), std::invalid_argument);
  CHECK_THROWS_AS(weight_from_json("not json at all"), std::exception);
}

TEST_CASE("section counts") {
  auto ge = ModelGeometry::make_elliptic({0.0, 1.0}, 2, 32, 32);
  CHECK(section_count(*ge, 3) == 6);
  auto gp = ModelGeometry::make_p1(2, 257, 16.0);
  CHECK(section_count(*gp, 3) == 7);
  CHECK_THROWS_AS(section_count(*ge, 0), std::invalid_argument);
}

TEST_CASE("theta basis: truncation, periodicity, magnitude") {
  cplx tau(0.3, 1.2);
  auto g = ModelGeometry::make_elliptic(tau, 1, 32, 32);
  auto b = make_basis(g, 4);
  REQUIRE(b.count == 4);
  CHECK(b.truncation_bound < 1e-14);
  CHECK(b.n_trunc >= 2);

  // weighted magnitudes are exactly 1-periodic in both labels
  for (auto [x, y] : {std::pair{0.17, 0.43}, {0.71, 0.08}}) {
    auto v0 = theta_basis_point(tau, 4, b.n_trunc, x, y);
    auto vx = theta_basis_point(tau, 4, b.n_trunc, x + 1.0, y);
    auto vy = theta_basis_point(tau, 4, b.n_trunc, x, y + 1.0);
    REQUIRE(v0.size() == 4);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(vx[j] - v0[j]) <= 1e-12 * (1.0 + std::abs(v0[j])));
      CHECK(std::abs(std::abs(vy[j]) - std::abs(v0[j])) <=
            1e-11 * (1.0 + std::abs(v0[j])));
      CHECK(std::abs(v0[j]) <= double(2 * b.n_trunc + 3));
    }
  }
}

TEST_CASE("flat gram is isotropic") {
  auto g = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 64, 64);
  auto b = make_basis(g, 4);
  std::vector<double> flat(static_cast<size_t>(g->fiber.size()), 1.0);
  auto G = elliptic_gram(b, flat);
  REQUIRE(G.rows() == 4);
  double diag = G(0, 0).real();
  CHECK(diag > 0.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::fabs(G(i, i).imag()) <= 1e-15 * diag);
    CHECK(G(i, i).real() == doctest::Approx(diag).epsilon(1e-12));
    for (int j = 0; j < i; ++j) {
      CHECK(std::abs(G(i, j)) <= 1e-12 * diag);
      CHECK(std::abs(G(i, j) - std::conj(G(j, i))) <= 1e-15 * diag);
    }
  }
}

TEST_CASE("quadratic form integrates to the trace against the gram measure") {
  auto g = ModelGeometry::make_elliptic({0.1, 0.9}, 1, 48, 48);
  auto b = make_basis(g, 3);
  std::vector<double> mu = grid_samples(g->fiber, [](double x, double y) {
    return 1.0 + 0.2 * std::cos(kTwoPi * x) * std::sin(kTwoPi * y);
  });
  auto G = elliptic_gram(b, mu);

  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(3, 3);
  M(0, 0) = 1.5;
  M(1, 1) = 0.25;
  M(2, 2) = 2.0;
  M(0, 1) = cplx(0.3, 0.1);
  M(1, 0) = std::conj(M(0, 1));
  M(1, 2) = cplx(-0.2, 0.4);
  M(2, 1) = std::conj(M(1, 2));

  auto q = elliptic_quadratic_form(b, M);
  double lhs = 0.0;
  for (size_t i = 0; i < q.size(); ++i) lhs += q[i] * mu[i];
  lhs *= g->fiber.hx() * g->fiber.hy();
  double rhs = (M * G).trace().real();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("p1 grams against the fubini-study measure are beta integrals") {
  for (auto [k, d] : {std::pair{3, 1}, {2, 2}}) {
    auto g = ModelGeometry::make_p1(d, 513, 16.0);
    auto b = make_basis(g, k);
    REQUIRE(b.count == k * d + 1);
    std::vector<double> mu = line_samples(
        g->line, [d = d](double t) { return psi_fs_d2(t, d) / double(d); });
    auto diag = p1_gram_diagonal(b, mu, 1.0, 1.0);
    auto beta = beta_diagonal(k, d);
    REQUIRE(diag.size() == beta.size());
    for (int j = 0; j < diag.size(); ++j)
      CHECK(diag[j] == doctest::Approx(beta[j]).epsilon(1e-10));

    // sum_j |v_j|^2 / beta_j is exactly the constant N_k
    Eigen::VectorXd inv = beta.cwiseInverse();
    auto q = p1_quadratic_form(b, inv);
    for (double val : q)
      CHECK(val == doctest::Approx(double(k * d + 1)).epsilon(1e-10));
  }
}
