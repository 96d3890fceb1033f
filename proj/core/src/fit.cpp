#include "krlab/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace krlab {

double FitResult::predict(double x) const {
  const double t = model == FitModel::power ? std::log(x) : x;
  return std::exp(intercept + slope * t);
}

FitResult fit_rate(const std::vector<double>& x, const std::vector<double>& y,
                   FitModel model) {
  const size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("fit_rate: length mismatch");
  if (n < 3) throw std::invalid_argument("fit_rate: need at least 3 points");

  std::vector<double> s(n), t(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) throw std::invalid_argument("fit_rate: y must be positive");
    if (model == FitModel::power && !(x[i] > 0.0))
      throw std::invalid_argument("fit_rate: power model needs positive x");
    s[i] = model == FitModel::power ? std::log(x[i]) : x[i];
    t[i] = std::log(y[i]);
  }

  double sm = 0.0, tm = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sm += s[i];
    tm += t[i];
  }
  sm /= static_cast<double>(n);
  tm /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (s[i] - sm) * (s[i] - sm);
    sxy += (s[i] - sm) * (t[i] - tm);
    syy += (t[i] - tm) * (t[i] - tm);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: degenerate abscissa");

  FitResult r;
  r.model = model;
  r.points = static_cast<int>(n);
  r.slope = sxy / sxx;
  r.intercept = tm - r.slope * sm;
  // Constant y fits exactly with zero slope; guard the 0/0.
  r.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return r;
}

}  // namespace krlab
