#include "krlab/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "krlab/errors.hpp"

namespace krlab {

std::shared_ptr<const ModelGeometry> ModelGeometry::make_elliptic(
    std::complex<double> tau, int degree, int nx, int ny) {
  if (degree < 1) throw std::invalid_argument("make_elliptic: degree must be >= 1");
  auto g = std::make_shared<ModelGeometry>();
  g->kind = ModelKind::elliptic_curve;
  g->elliptic = EllipticCurve{tau, degree};
  g->fiber = PeriodicGrid2(nx, ny, tau);
  return g;
}

std::shared_ptr<const ModelGeometry> ModelGeometry::make_p1(int degree, int n,
                                                            double T) {
  if (degree < 1) throw std::invalid_argument("make_p1: degree must be >= 1");
  auto g = std::make_shared<ModelGeometry>();
  g->kind = ModelKind::p1_symmetric;
  g->p1 = P1Symmetric{degree};
  g->line = LineGrid(n, T);
  return g;
}

Weight::Weight(GeometryPtr g, double fill) : geom(std::move(g)) {
  if (!geom) throw std::invalid_argument("Weight: null geometry");
  const int n = geom->kind == ModelKind::elliptic_curve ? geom->fiber.size()
                                                        : geom->line.n;
  u.assign(static_cast<size_t>(n), fill);
}

Weight::Weight(GeometryPtr g, std::vector<double> samples) : geom(std::move(g)) {
  if (!geom) throw std::invalid_argument("Weight: null geometry");
  const int n = geom->kind == ModelKind::elliptic_curve ? geom->fiber.size()
                                                        : geom->line.n;
  if (static_cast<int>(samples.size()) != n)
    throw std::invalid_argument("Weight: sample count does not match geometry");
  if (!all_finite(samples)) throw numerical_error("Weight: non-finite samples");
  u = std::move(samples);
}

Weight Weight::shifted(double c) const {
  Weight w(*this);
  for (double& x : w.u) x += c;
  w.cached_min_ma = std::numeric_limits<double>::quiet_NaN();
  return w;
}

Weight reference_weight(GeometryPtr g) { return Weight(std::move(g)); }

double psi_fs(double t, int degree) {
  // d log(1+e^t) without overflow at either end.
  const double soft = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  return degree * soft;
}

double psi_fs_d1(double t, int degree) { return degree / (1.0 + std::exp(-t)); }

double psi_fs_d2(double t, int degree) {
  const double c = std::cosh(0.5 * t);
  return degree / (4.0 * c * c);
}

RealField complex_hessian(const RealField& u, DerivMode mode) {
  const std::complex<double> tau = u.grid.tau;
  const double it = tau.imag(), rt = tau.real();
  const double a2 = std::norm(tau);
  RealField uxx = diff2(u, Deriv::dxx, mode);
  RealField uyy = diff2(u, Deriv::dyy, mode);
  RealField out(u.grid);
  if (rt != 0.0) {
    RealField uxy = diff2(u, Deriv::dxy, mode);
    for (size_t i = 0; i < out.v.size(); ++i)
      out.v[i] = (a2 * uxx.v[i] - 2.0 * rt * uxy.v[i] + uyy.v[i]) / (4.0 * it * it);
  } else {
    for (size_t i = 0; i < out.v.size(); ++i)
      out.v[i] = (a2 * uxx.v[i] + uyy.v[i]) / (4.0 * it * it);
  }
  return out;
}

Density ma_measure(const Weight& w, DerivMode mode) {
  const auto& g = *w.geom;
  Density d;
  if (g.kind == ModelKind::elliptic_curve) {
    RealField uf{g.fiber, {}};
    uf.v = w.u;
    RealField h = complex_hessian(uf, mode);
    const double deg = g.elliptic.degree;
    const double it = g.elliptic.tau.imag();
    d.v.resize(w.u.size());
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] = deg + (it / M_PI) * h.v[i];
  } else {
    LineField uf{g.line, {}};
    uf.v = w.u;
    LineField upp = line_d2(uf);
    d.v.resize(w.u.size());
    for (int i = 0; i < g.line.n; ++i)
      d.v[i] = psi_fs_d2(g.line.t(i), g.p1.degree) + upp.v[i];
    // Mass beyond the cut: psi0' approaches its limits exponentially and
    // the correction's slope is required to have decayed by the contract.
    const double T = g.line.T, deg = g.p1.degree;
    d.tail_mass = (deg - psi_fs_d1(T, g.p1.degree)) + psi_fs_d1(-T, g.p1.degree);
  }
  return d;
}

double density_mass(const ModelGeometry& g, const Density& d) {
  if (g.kind == ModelKind::elliptic_curve) {
    RealField f{g.fiber, {}};
    f.v = d.v;
    return integrate(f);
  }
  LineField f{g.line, {}};
  f.v = d.v;
  return line_integrate(f) + d.tail_mass;
}

double density_min(const Density& d) {
  return *std::min_element(d.v.begin(), d.v.end());
}

bool is_fiber_positive(const Weight& w, double margin) {
  if (std::isnan(w.cached_min_ma))
    w.cached_min_ma = density_min(ma_measure(w));
  return w.cached_min_ma > margin;
}

double sup_distance(const Weight& a, const Weight& b) {
  if (a.geom->kind != b.geom->kind || a.u.size() != b.u.size())
    throw std::invalid_argument("sup_distance: incompatible weights");
  double s = 0.0;
  for (size_t i = 0; i < a.u.size(); ++i)
    s = std::max(s, std::abs(a.u[i] - b.u[i]));
  return s;
}

double model_integrate(const ModelGeometry& g, const std::vector<double>& f) {
  if (g.kind == ModelKind::elliptic_curve) {
    RealField ff{g.fiber, {}};
    ff.v = f;
    return integrate(ff);
  }
  LineField ff{g.line, {}};
  ff.v = f;
  return line_integrate(ff);
}

double weight_mean(const Weight& w) {
  double s = 0.0;
  for (double x : w.u) s += x;
  return s / w.u.size();
}

namespace {

std::string hex_double(double x) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

double parse_hex_double(const std::string& s) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x, std::chars_format::hex);
  if (res.ec != std::errc{})
    throw std::invalid_argument("weight_from_json: bad hex float '" + s + "'");
  return x;
}

}  // namespace

std::string weight_to_json(const Weight& w) {
  nlohmann::json j;
  j["format"] = "krlab-weight";
  j["version"] = 1;
  const auto& g = *w.geom;
  if (g.kind == ModelKind::elliptic_curve) {
    j["model"] = "elliptic";
    j["tau"] = {hex_double(g.elliptic.tau.real()), hex_double(g.elliptic.tau.imag())};
    j["degree"] = g.elliptic.degree;
    j["grid"] = {{"nx", g.fiber.nx}, {"ny", g.fiber.ny}};
  } else {
    j["model"] = "p1-symmetric";
    j["degree"] = g.p1.degree;
    j["grid"] = {{"n", g.line.n}, {"T", hex_double(g.line.T)}};
  }
  std::vector<std::string> samples;
  samples.reserve(w.u.size());
  for (double x : w.u) samples.push_back(hex_double(x));
  j["u"] = std::move(samples);
  return j.dump();
}

Weight weight_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "krlab-weight")
    throw std::invalid_argument("weight_from_json: not a weight container");
  GeometryPtr g;
  const std::string model = j.at("model");
  if (model == "elliptic") {
    std::complex<double> tau(parse_hex_double(j.at("tau")[0]),
                             parse_hex_double(j.at("tau")[1]));
    g = ModelGeometry::make_elliptic(tau, j.at("degree"), j.at("grid").at("nx"),
                                     j.at("grid").at("ny"));
  } else if (model == "p1-symmetric") {
    g = ModelGeometry::make_p1(j.at("degree"), j.at("grid").at("n"),
                               parse_hex_double(j.at("grid").at("T")));
  } else {
    throw std::invalid_argument("weight_from_json: unknown model '" + model + "'");
  }
  std::vector<double> u;
  u.reserve(j.at("u").size());
  for (const auto& s : j.at("u")) u.push_back(parse_hex_double(s));
  return Weight(g, std::move(u));
}

}  // namespace krlab
