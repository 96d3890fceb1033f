// Acceptance gate for the laboratory: thirteen numbered criteria, one line
// of output each ("AC-n PASS ..." or "AC-n FAIL ..."), exit status equal to
// the number of failed criteria. Every tolerance is pinned in this file;
// scenario reports supply the measurements but never the thresholds.
//
//   acceptance            run all criteria
//   acceptance --only AC-7
//   acceptance --list

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "krlab/config.hpp"
#include "krlab/fit.hpp"
#include "krlab/flow.hpp"
#include "krlab/functionals.hpp"
#include "krlab/geometry.hpp"
#include "krlab/quantization.hpp"
#include "krlab/report.hpp"
#include "krlab/scenarios.hpp"
#include "krlab/sections.hpp"

namespace {

using namespace krlab;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Accumulates clauses of one criterion line; any failed clause is marked
// with '!' in front of its relation and fails the criterion.
struct Gate {
  bool pass = true;
  std::ostringstream out;
  bool first = true;

  std::ostringstream& clause() {
    if (!first) out << "; ";
    first = false;
    return out;
  }
  void le(const std::string& label, double value, double bound) {
    bool ok = value <= bound;
    pass = pass && ok;
    clause() << label << " " << fmt(value) << (ok ? " <= " : " !<= ") << fmt(bound);
  }
  void ge(const std::string& label, double value, double bound) {
    bool ok = value >= bound;
    pass = pass && ok;
    clause() << label << " " << fmt(value) << (ok ? " >= " : " !>= ") << fmt(bound);
  }
  void gt(const std::string& label, double value, double bound) {
    bool ok = value > bound;
    pass = pass && ok;
    clause() << label << " " << fmt(value) << (ok ? " > " : " !> ") << fmt(bound);
  }
  void lt(const std::string& label, double value, double bound) {
    bool ok = value < bound;
    pass = pass && ok;
    clause() << label << " " << fmt(value) << (ok ? " < " : " !< ") << fmt(bound);
  }
  void in(const std::string& label, double value, double lo, double hi) {
    bool ok = value >= lo && value <= hi;
    pass = pass && ok;
    clause() << label << " " << fmt(value) << (ok ? " in [" : " !in [") << fmt(lo)
             << ", " << fmt(hi) << "]";
  }
  void note(const std::string& text) { clause() << text; }
};

// Scenario configs assembled in memory: schema defaults plus pinned
// overrides, so the gate depends on no external files.
ExperimentConfig make_cfg(
    const std::string& scenario,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.params = Config::from_string("");
  for (const auto& spec : scenario_schema(scenario))
    cfg.params.set(spec.name, spec.fallback);
  for (const auto& kv : overrides) cfg.params.set(kv.first, kv.second);
  cfg.output_dir = ".";
  return cfg;
}

// Each scenario runs at most once per process; criteria sharing a report
// (AC-1/AC-2/AC-13 on the flow report, for instance) see the same numbers.
std::map<std::string, ExperimentReport> g_reports;

const ExperimentReport& report(
    const std::string& key, const std::string& scenario,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  auto it = g_reports.find(key);
  if (it != g_reports.end()) return it->second;
  auto rep = run_scenario(make_cfg(scenario, overrides));
  return g_reports.emplace(key, std::move(rep)).first->second;
}

double metric(const ExperimentReport& rep, const std::string& name) {
  for (const auto& kv : rep.metrics)
    if (kv.first == name) return kv.second;
  throw std::runtime_error("metric '" + name + "' missing from scenario '" +
                           rep.scenario + "'");
}

// Value recorded by a named scenario assertion (the measurement, not the
// scenario's own verdict).
double assertion_value(const ExperimentReport& rep, const std::string& name) {
  for (const auto& a : rep.assertions)
    if (a.name == name) return a.value;
  throw std::runtime_error("assertion '" + name + "' missing from scenario '" +
                           rep.scenario + "'");
}

const ExperimentReport& flow_report() { return report("flow", "flow"); }
const ExperimentReport& bergman_report() { return report("bergman", "bergman"); }

// AC-1: the parabolic route and the elliptic route land on the same weight.
// Calabi-Yau setting on the square torus, fixed measure 1 + 0.3 cos(2 pi x)
// (normalized), 64^2 grid, semi-implicit dt = 1e-2 run to t = 30.
void ac1(Gate& g) {
  const auto& rep = flow_report();
  g.le("sup|flow - newton|", metric(rep, "sup_agreement"), 1e-6);
  g.le("newton residual", metric(rep, "newton_residual"), 1e-11);
  g.le("flow residual", metric(rep, "flow_residual"), 1e-11);
}

// AC-2: monotonicity matrix. F climbs along every flow, -I along the
// normalized flows; along Bergman iterations L climbs where constants are
// killed or contracted and the shift-invariant F = L - I(FS(H)) climbs on
// the constant-expanding bare anticanonical branch. Values are the worst
// relative one-step violations; the bound is the roundoff allowance.
void ac2(Gate& g) {
  const double slack = 1e-12;
  const auto& fr = flow_report();
  double flow_worst = -1e300;
  for (const char* name :
       {"flow_F_nondecreasing_cy", "flow_F_nondecreasing_twn",
        "flow_F_nondecreasing_twb", "flow_F_nondecreasing_acn",
        "flow_F_nondecreasing_acb", "flow_negI_nondecreasing_cy",
        "flow_negI_nondecreasing_twn", "flow_negI_nondecreasing_acn"})
    flow_worst = std::max(flow_worst, assertion_value(fr, name));
  g.le("flow worst violation (8 series)", flow_worst, slack);

  const auto& br = bergman_report();
  double berg_worst = -1e300;
  for (const char* name :
       {"bergman_L_nondecreasing_cy", "bergman_L_nondecreasing_twn",
        "bergman_L_nondecreasing_twb", "bergman_L_nondecreasing_acn",
        "bergman_F_nondecreasing_acb", "bergman_negI_nondecreasing_cy",
        "bergman_negI_nondecreasing_twn", "bergman_negI_nondecreasing_acn"})
    berg_worst = std::max(berg_worst, assertion_value(br, name));
  g.le("bergman worst violation (8 series)", berg_worst, slack);
}

// AC-3: the bare twisted iteration contracts at (1 - 1/k) and meets the
// Banach iteration-count prediction within a factor of two.
void ac3(Gate& g) {
  const auto& rep = bergman_report();
  for (int k : {2, 4, 8}) {
    std::string ks = std::to_string(k);
    double q = 1.0 - 1.0 / k;
    g.le("ratio k=" + ks, metric(rep, "contraction_ratio_k" + ks), q + 1e-6);
    g.le("steps k=" + ks, metric(rep, "steps_k" + ks),
         2.0 * metric(rep, "banach_steps_k" + ks));
    g.ge("converged k=" + ks, metric(rep, "steps_k" + ks), 1.0);
  }
}

// AC-4: Bergman density of a fixed positive weight approaches MA/(d mu) at
// first order in 1/k (degree 4, k = 8..64).
void ac4(Gate& g) {
  const auto& rep = report("bouche-tian", "bouche-tian");
  g.in("fitted slope", metric(rep, "rate_slope"), -1.15, -0.85);
  g.ge("R^2", metric(rep, "rate_r2"), 0.98);
}

// AC-5: Calabi-Yau double scaling, m = k t* iterates against the flow at
// t* = 1 for k = 8, 16, 32. The criterion demands consecutive deviation
// ratios in [0.4, 0.6] (a C/k law). On the flat-fibered elliptic model the
// leading 1/k coefficient of the quantized step is zero by the symmetry of
// the theta Gram, the deviation decays like 1/k^2, and the measured ratios
// sit near 0.25; the window clause fails and is expected to fail. The
// decay itself (factor >= 3 coarse to fine) is confirmed.
void ac5(Gate& g) {
  const auto& rep = report("ds_cy", "double-scaling", {{"family", "cy_elliptic"}});
  double d8 = metric(rep, "deviation_k8");
  double d16 = metric(rep, "deviation_k16");
  double d32 = metric(rep, "deviation_k32");
  g.in("ratio k8->k16", d16 / d8, 0.4, 0.6);
  g.in("ratio k16->k32", d32 / d16, 0.4, 0.6);
  g.ge("decrease factor k8/k32", d8 / d32, 3.0);
}

// AC-6: anticanonical double scaling on P1. Deviations decrease in k and
// stay under the A e^{t*} / k envelope anchored at the coarsest k.
void ac6(Gate& g) {
  const auto& rep =
      report("ds_p1", "double-scaling", {{"family", "anticanonical_p1"}});
  double d8 = metric(rep, "deviation_k8");
  double d16 = metric(rep, "deviation_k16");
  double d32 = metric(rep, "deviation_k32");
  g.lt("dev k=16 vs k=8", d16, d8);
  g.lt("dev k=32 vs k=16", d32, d16);
  // Normalized products dev * k / e^{t*}; e^{t*} cancels against the anchor.
  g.le("envelope k=16", d16 * 16.0, 1.5 * d8 * 8.0);
  g.le("envelope k=32", d32 * 32.0, 1.5 * d8 * 8.0);
}

// AC-7: balanced weights are unique: two initializations agree to 1e-8
// after I-normalization and each is a fixed point to 2e-10.
void ac7(Gate& g) {
  const auto& rep = report("balanced", "balanced");
  g.le("agreement anticanonical k=5", metric(rep, "agreement_anticanonical"), 1e-8);
  g.le("agreement twisted k=4", metric(rep, "agreement_twisted"), 1e-8);
  g.le("residual anticanonical", metric(rep, "residual_anticanonical"), 2e-10);
  g.le("residual twisted", metric(rep, "residual_twisted"), 2e-10);
}

// AC-8: balanced weights converge to the twisted KE weight. Bare twisted
// family over mu0 = 1 + 0.3 cos(2 pi x) on the square torus (the bare branch
// pins additive constants, so weights are compared directly). Balanced
// weights are produced by 6k iterations from the KE weight: the contraction
// factor is 1 - 1/k, so the remaining distance to the true balanced weight
// is under e^{-6} of the measured gap, confirmed by the Banach tail bound.
// The distance must fall strictly in k with log-log slope <= -0.8 and stay
// under the (log k)/k envelope anchored at k = 4.
void ac8(Gate& g) {
  auto geom = ModelGeometry::make_elliptic({0.0, 1.0}, 1, 256, 256);
  const double two_pi = 8.0 * std::atan(1.0);
  std::vector<double> mu0(static_cast<size_t>(geom->fiber.size()));
  for (int j = 0; j < geom->fiber.ny; ++j)
    for (int i = 0; i < geom->fiber.nx; ++i)
      mu0[static_cast<size_t>(geom->fiber.idx(i, j))] =
          1.0 + 0.3 * std::cos(two_pi * i / geom->fiber.nx);
  auto fam = make_twisted_plus(geom, mu0, false);
  auto ke = solve_fixed_point(fam, Weight(geom));
  g.le("KE residual", ke.residual, 1e-11);

  const std::vector<int> ks = {4, 8, 16, 32};
  std::vector<double> devs, kd;
  double tail_worst = 0.0;
  for (int k : ks) {
    auto basis = make_basis(geom, k);
    BergmanOptions bo;
    bo.max_iter = 6 * k;
    bo.tol = 0.0;
    auto tr = bergman_iterate(fam, ke.w, basis, bo);
    devs.push_back(sup_distance(tr.final, ke.w));
    kd.push_back(k);
    tail_worst = std::max(tail_worst, k * tr.sup_change.back() / devs.back());
  }
  g.le("iteration tail / gap", tail_worst, 0.01);
  for (size_t i = 0; i + 1 < devs.size(); ++i)
    g.lt("dev k=" + std::to_string(ks[i + 1]), devs[i + 1], devs[i]);
  auto fitted = fit_rate(kd, devs, FitModel::power);
  g.le("log-log slope", fitted.slope, -0.8);
  double anchor = devs[0] * ks[0] / std::log(ks[0]);
  for (size_t i = 1; i < devs.size(); ++i)
    g.le("envelope k=" + std::to_string(ks[i]),
         devs[i] * ks[i] / std::log(ks[i]), anchor);
}

// AC-9: the quantized family curvature obeys the heat identity: residual
// converging at order >= 1 in dt and >= 1.8 in h, and flipping the sign of
// the c-term (the ablation) inflates the flowed-state residual by a large
// factor (negative control).
void ac9(Gate& g) {
  const auto& rep = report("family-flow", "family-flow");
  g.ge("dt order", metric(rep, "dt_order"), 1.0);
  g.ge("h order", metric(rep, "h_order"), 1.8);
  g.ge("ablation/identity ratio", metric(rep, "ablation_ratio"), 20.0);
}

// AC-10: positivity conservation. The Calabi-Yau family flow keeps min c
// nonnegative (to roundoff) from a calibrated semi-positive start, the
// twisted flow makes min c strictly positive by the end of the run, and the
// quantized elliptic-family run keeps min c + (m/k) WP above -1e-6 for
// k = 4, m <= 8.
void ac10(Gate& g) {
  const auto& rep = report("family-flow", "family-flow");
  g.le("cy start calibration", std::fabs(metric(rep, "minc_start_cy")), 1e-12);
  g.ge("cy flowed min c", metric(rep, "minc_flowed_cy"), -1e-8);
  g.gt("twisted flowed min c", metric(rep, "minc_flowed_twisted"), 0.0);
  const auto& qb = report("family-bergman", "family-bergman");
  g.ge("quantized min c + (m/k) WP", metric(qb, "min_shifted_c_worst"), -1e-6);
  g.le("quantized steps", metric(qb, "steps"), 8.0);
}

// AC-11: the two Weil-Petersson routes (Hodge-form curvature and the
// fiberwise |A|^2 integral) agree to 1e-6, the density is nonnegative, and
// the Deligne fiber integral reproduces the same value on the flat family.
void ac11(Gate& g) {
  const auto& rep = report("family-flow", "family-flow");
  g.le("route discrepancy", metric(rep, "wp_route_discrepancy"), 1e-6);
  g.ge("min over window", metric(rep, "wp_min"), 0.0);
  g.le("Deligne route gap", metric(rep, "wp_deligne_gap"), 1e-6);
}

// AC-12: direct-image positivity. The FS-of-adjoint-Hilb output is
// s-subharmonic to -1e-8 at every sampled fiber point for the trivial and
// elliptic families at k = 2, and the concave control family is detected
// with its exact quadratic curvature.
void ac12(Gate& g) {
  const auto& rep = report("psh-check", "psh-check");
  g.ge("trivial basis curvature", metric(rep, "psh_basis_trivial"), -1e-8);
  g.ge("trivial eval curvature", metric(rep, "psh_eval_trivial"), -1e-8);
  g.ge("elliptic basis curvature", metric(rep, "psh_basis_elliptic"), -1e-8);
  g.ge("elliptic eval curvature", metric(rep, "psh_eval_elliptic"), -1e-8);
  double cb = metric(rep, "control_exact_value");  // k * b < 0, exact target
  g.le("control detected", metric(rep, "psh_eval_control"), 0.5 * cb);
  g.le("control gap", std::fabs(metric(rep, "psh_eval_control") - cb), 1e-8);
}

// AC-13: functional calculus. First variations dE = MA and dI = mu over 20
// random band-limited directions at relative error 1e-6, and all additive
// equivariance identities to 1e-10.
void ac13(Gate& g) {
  const auto& rep = flow_report();
  g.le("dE gap", metric(rep, "grad_E_max_rel"), 1e-6);
  g.le("dI gap fixed", metric(rep, "grad_I_fixed_max"), 1e-6);
  g.le("dI gap twisted", metric(rep, "grad_I_twisted_max"), 1e-6);
  g.le("dI gap anticanonical", metric(rep, "grad_I_anticanonical_max"), 1e-6);
  double ident_worst = -1e300;
  for (const char* name :
       {"ident_E_shift", "ident_I_shift_fixed", "ident_I_shift_twisted",
        "ident_I_shift_anticanonical", "ident_F_shift", "ident_J_shift",
        "ident_bergman_shift"})
    ident_worst = std::max(ident_worst, metric(rep, name));
  g.le("worst shift identity (7 checks)", ident_worst, 1e-10);
}

struct Criterion {
  const char* name;
  const char* title;
  void (*run)(Gate&);
};

const Criterion kCriteria[] = {
    {"AC-1", "flow and fixed point agree", ac1},
    {"AC-2", "monotonicity along flows and iterations", ac2},
    {"AC-3", "bare twisted contraction", ac3},
    {"AC-4", "Bergman density first-order rate", ac4},
    {"AC-5", "Calabi-Yau double scaling", ac5},
    {"AC-6", "anticanonical double scaling", ac6},
    {"AC-7", "balanced uniqueness", ac7},
    {"AC-8", "balanced weights reach the KE weight", ac8},
    {"AC-9", "family heat identity", ac9},
    {"AC-10", "positivity conservation", ac10},
    {"AC-11", "Weil-Petersson consistency", ac11},
    {"AC-12", "direct-image psh check", ac12},
    {"AC-13", "functional calculus", ac13},
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : kCriteria)
        std::printf("%s  %s\n", c.name, c.title);
      return 0;
    }
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = argv[++i];
      continue;
    }
    std::fprintf(stderr, "usage: %s [--only AC-n] [--list]\n", argv[0]);
    return 64;
  }
  if (!only.empty()) {
    bool known = false;
    for (const auto& c : kCriteria) known = known || only == c.name;
    if (!known) {
      std::fprintf(stderr, "unknown criterion '%s' (see --list)\n", only.c_str());
      return 64;
    }
  }

  int failures = 0, ran = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Gate g;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(g);
    } catch (const std::exception& e) {
      g.pass = false;
      g.note(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    if (!g.pass) ++failures;
    std::printf("%s %s  %s: %s  [%.1fs]\n", c.name, g.pass ? "PASS" : "FAIL",
                c.title, g.out.str().c_str(), secs);
    std::fflush(stdout);
  }
  if (only.empty())
    std::printf("acceptance: %d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
