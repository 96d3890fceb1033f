#pragma once

#include <vector>

namespace krlab {

// Convergence-rate models for measured series: power fits log y against
// log x (slope = algebraic order), exponential fits log y against x
// (slope = decay rate).
enum class FitModel { power, exponential };

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;  // of the transformed linear model
  double r2 = 0.0;
  int points = 0;

  // Model prediction at x, back-transformed to the original scale.
  double predict(double x) const;
  FitModel model = FitModel::power;
};

// Least squares on the transformed pairs. Requires >= 3 points, y > 0
// throughout, x > 0 for the power model, and a nondegenerate abscissa;
// violations throw std::invalid_argument.
FitResult fit_rate(const std::vector<double>& x, const std::vector<double>& y,
                   FitModel model);

}  // namespace krlab
