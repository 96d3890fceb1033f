#include "krlab/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krlab/errors.hpp"
#include "krlab/flow.hpp"

namespace krlab {

namespace {

void check_basis(const SectionBasis& b, const Weight& w) {
  if (!b.geom || b.geom.get() != w.geom.get())
    throw std::invalid_argument("section basis and weight live on different models");
}

void check_resolution(const ModelGeometry& g, int k) {
  const int need = quantization_grid(k, g.degree());
  const int have = g.kind == ModelKind::elliptic_curve
                       ? std::min(g.fiber.nx, g.fiber.ny)
                       : g.line.n;
  if (have < need)
    throw std::invalid_argument("quadrature grid too coarse for this k");
}

double min_eigenvalue(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// P1 forms are exactly diagonal; reject anything else loudly.
Eigen::VectorXd diagonal_of(const HermitianForm& H) {
  const int n = static_cast<int>(H.mat.rows());
  double off = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i) {
    scale = std::max(scale, std::abs(H.mat(i, i).real()));
    for (int j = 0; j < n; ++j)
      if (i != j) off = std::max(off, std::abs(H.mat(i, j)));
  }
  if (off > 1e-12 * (1.0 + scale))
    throw std::invalid_argument("P1 Hermitian form must be diagonal");
  return H.mat.real().diagonal();
}

// Pointwise sum |f_i|^2 e^{-k phi0} over an H-orthonormal frame.
std::vector<double> frame_square_sum(const HermitianForm& H, const SectionBasis& b) {
  const auto& g = *b.geom;
  if (H.k != b.k) throw std::invalid_argument("basis and form degree mismatch");
  if (H.mat.rows() != b.count)
    throw std::invalid_argument("Hermitian form size mismatch");
  if (g.kind == ModelKind::elliptic_curve) {
    Eigen::LLT<Eigen::MatrixXcd> llt(H.mat);
    if (llt.info() != Eigen::Success)
      throw numerical_error("Hermitian form not positive definite, min eig " +
                            std::to_string(min_eigenvalue(H.mat)));
    Eigen::MatrixXcd inv =
        llt.solve(Eigen::MatrixXcd::Identity(b.count, b.count));
    return elliptic_quadratic_form(b, inv);
  }
  Eigen::VectorXd diag = diagonal_of(H);
  if (diag.minCoeff() <= 0.0)
    throw numerical_error("Hermitian form not positive definite on the diagonal");
  return p1_quadratic_form(b, diag.cwiseInverse());
}

}  // namespace

int quantization_grid(int k, int degree) {
  return std::min(512, std::max(64, 8 * k * degree));
}

HermitianForm hilb(const MeasureFamily& fam, const Weight& w, const SectionBasis& b) {
  check_basis(b, w);
  const auto& g = *w.geom;
  check_resolution(g, b.k);
  const std::vector<double> mu = mu_quant(fam, w);
  std::vector<double> node(mu.size());
  for (size_t i = 0; i < node.size(); ++i)
    node[i] = std::exp(-b.k * w.u[i]) * mu[i];
  HermitianForm H;
  H.geom = w.geom;
  H.k = b.k;
  if (g.kind == ModelKind::elliptic_curve) {
    H.mat = elliptic_gram(b, node);
  } else {
    Eigen::VectorXd diag =
        p1_gram_diagonal(b, node, fam.rate_plus, fam.rate_minus);
    const int N = b.count;
    // The inversion symmetry pairs entries j and kd - j; enforce it exactly.
    for (int j = 0; j < N / 2; ++j) {
      const double avg = 0.5 * (diag[j] + diag[N - 1 - j]);
      diag[j] = diag[N - 1 - j] = avg;
    }
    H.mat = diag.asDiagonal().toDenseMatrix().cast<std::complex<double>>();
  }
  for (int i = 0; i < b.count; ++i)
    if (!(H.mat(i, i).real() > 0.0) || !std::isfinite(H.mat(i, i).real()))
      throw numerical_error("hilb: Gram diagonal must be positive and finite");
  return H;
}

Weight fs(const HermitianForm& H, const SectionBasis& b) {
  const auto& g = *b.geom;
  std::vector<double> q = frame_square_sum(H, b);
  Weight out(b.geom, 0.0);
  const double logn = std::log(static_cast<double>(b.count));
  for (size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0.0))
      throw numerical_error("fs: frame vanishes at a node");
    out.u[i] = (std::log(q[i]) - logn) / b.k;
  }
  if (g.kind == ModelKind::p1_symmetric) symmetrize_line(g.line, out.u);
  return out;
}

std::vector<double> bergman_density(const Weight& w, const HermitianForm& H,
                                    const SectionBasis& b) {
  check_basis(b, w);
  std::vector<double> q = frame_square_sum(H, b);
  for (size_t i = 0; i < q.size(); ++i)
    q[i] *= std::exp(-b.k * w.u[i]) / b.count;
  return q;
}

Weight bergman_step(const MeasureFamily& fam, const Weight& w, const SectionBasis& b) {
  return fs(hilb(fam, w, b), b);
}

double l_functional(const HermitianForm& H) {
  Eigen::LLT<Eigen::MatrixXcd> llt(H.mat);
  if (llt.info() != Eigen::Success)
    throw numerical_error("l_functional: form not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < H.mat.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  return -logdet / (static_cast<double>(H.k) * H.mat.rows());
}

double condition_estimate(const HermitianForm& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.mat, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Eigen::VectorXd beta_diagonal(int k, int degree) {
  const int kd = k * degree;
  Eigen::VectorXd diag(kd + 1);
  for (int j = 0; j <= kd; ++j)
    diag[j] = std::exp(std::lgamma(j + 1.0) + std::lgamma(kd - j + 1.0) -
                       std::lgamma(kd + 2.0));
  return diag;
}

BergmanTrace bergman_iterate(const MeasureFamily& fam, Weight w0,
                             const SectionBasis& b, const BergmanOptions& opt) {
  BergmanTrace tr;
  Weight w = std::move(w0);
  if (opt.record_weights) tr.weights.push_back(w);
  int quiet = 0;
  for (int m = 0; m < opt.max_iter; ++m) {
    HermitianForm H = hilb(fam, w, b);
    tr.l_value.push_back(l_functional(H));
    tr.i_value.push_back(i_functional(fam, w));
    Weight next = fs(H, b);
    const double change = sup_distance(next, w);
    tr.sup_change.push_back(change);
    w = std::move(next);
    if (opt.record_weights) tr.weights.push_back(w);
    tr.steps = m + 1;
    quiet = change <= opt.tol ? quiet + 1 : 0;
    if (quiet >= opt.confirm_steps) {
      tr.converged = true;
      break;
    }
  }
  tr.l_value.push_back(l_functional(hilb(fam, w, b)));
  tr.i_value.push_back(i_functional(fam, w));
  tr.final = std::move(w);
  return tr;
}

double bergman_sup_deviation(const MeasureFamily& fam, const Weight& w,
                             const SectionBasis& b) {
  const HermitianForm H = hilb(fam, w, b);
  const std::vector<double> rho = bergman_density(w, H, b);
  double s = 0.0;
  for (double r : rho) s = std::max(s, std::abs(r - 1.0));
  return s;
}

}  // namespace krlab
