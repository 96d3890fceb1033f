#pragma once

#include <vector>

#include "krlab/functionals.hpp"
#include "krlab/geometry.hpp"

namespace krlab {

// Time discretizations of u_t = log(MA(phi) / mu(phi)) with mu the flow
// measure of the family (total mass d at fixed points). The semi-implicit
// scheme inverts a frozen constant-coefficient linearization each step and
// stays stable at large dt; both schemes share fixed points with the
// continuous flow.
enum class StepScheme { explicit_euler, semi_implicit };

struct FlowOptions {
  double dt = 1e-2;
  StepScheme scheme = StepScheme::semi_implicit;
  DerivMode mode = DerivMode::spectral;
  // Steps must keep min MA >= margin; violations are retried with smaller dt.
  double positivity_margin = 0.0;
  // Stop once sup |log(MA/mu)| falls below this (0 = run to t_end).
  double stop_residual = 0.0;
};

struct FlowMonitor {
  double time = 0.0;
  double dt_used = 0.0;
  double sup_velocity = 0.0;  // sup |u_{n+1} - u_n| / dt
  double ma_residual = 0.0;   // sup |log(MA/mu)|
  double min_ma = 0.0;
  double energy = 0.0;
  double i_value = 0.0;
  double f_value = 0.0;
  double j_value = 0.0;
};

struct FlowResult {
  Weight w;
  std::vector<FlowMonitor> trace;
  bool converged = false;
  double final_residual = 0.0;
};

// Pointwise flow velocity log(MA/mu); throws numerical_error when either
// density is nonpositive somewhere.
std::vector<double> flow_velocity(const MeasureFamily& fam, const Weight& w,
                                  DerivMode mode = DerivMode::spectral);

// One step at exactly opt.dt. Throws numerical_error if the step lands
// outside the positive cone.
Weight flow_step(const MeasureFamily& fam, const Weight& w, const FlowOptions& opt);

// March to t_end, halving dt on positivity failures (up to 20 times per
// step). The trace records one entry per accepted step plus the initial
// state.
FlowResult flow_run(const MeasureFamily& fam, Weight w, double t_end,
                    const FlowOptions& opt);

struct FixedPointOptions {
  double tol = 1e-12;  // sup |log(MA/mu)| at exit
  int max_iter = 200;
  DerivMode mode = DerivMode::spectral;
};

struct FixedPointResult {
  Weight w;
  int iterations = 0;
  double residual = 0.0;
};

// Solve MA(phi) = mu(phi). Fixed measures on the elliptic model reduce to a
// single exact Fourier solve; other cases run a damped quasi-Newton
// iteration with a constant-coefficient preconditioner. Normalization:
// mean-zero u for fixed measures, I = 0 for canonical families (implied at
// the solution in the non-normalized cases, imposed in the normalized ones).
FixedPointResult solve_fixed_point(const MeasureFamily& fam, Weight initial,
                                   const FixedPointOptions& opt = {});

// Projection onto inversion-symmetric fields, u(t) <- (u(t) + u(-t))/2.
// Line flows stay on this subspace, where the linearized canonical operators
// are invertible; roundoff drift is reprojected each step.
void symmetrize_line(const LineGrid& g, std::vector<double>& u);

}  // namespace krlab
