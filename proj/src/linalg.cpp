#include "tnet/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "tnet/errors.hpp"

namespace tnet {

namespace {

void check_square_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            double sym_tol, const char* op) {
  if (a.rows() != a.cols()) {
    throw ContractViolation(std::string(op) + ": matrix is not square");
  }
  if (!a.allFinite()) {
    throw ContractViolation(std::string(op) + ": matrix has non-finite entries");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > sym_tol * scale) {
    throw ContractViolation(std::string(op) + ": matrix is not symmetric");
  }
}

}  // namespace

SymEigResult sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     double sym_tol) {
  check_square_symmetric(a, sym_tol, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sym_eig: eigensolver failed to converge");
  }

  const Eigen::Index n = a.rows();
  SymEigResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  // Eigen returns ascending order; flip to descending.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues[i] = solver.eigenvalues()[n - 1 - i];
    out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  // Sign convention: largest-magnitude entry of each eigenvector >= 0.
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index arg = 0;
    out.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.eigenvectors(arg, j) < 0.0) out.eigenvectors.col(j) *= -1.0;
  }
  return out;
}

Eigen::MatrixXd cholesky(const Eigen::Ref<const Eigen::MatrixXd>& a,
                         double sym_tol) {
  check_square_symmetric(a, sym_tol, "cholesky");
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw DefinitenessError("cholesky: matrix is not positive-definite");
  }
  Eigen::MatrixXd lower = llt.matrixL();
  // LLT can succeed with a zero pivot in rare borderline cases; the contract
  // requires a strictly positive diagonal.
  if ((lower.diagonal().array() <= 0.0).any()) {
    throw DefinitenessError("cholesky: non-positive pivot");
  }
  return lower;
}

Eigen::VectorXd cholesky_solve(const Eigen::Ref<const Eigen::MatrixXd>& lower,
                               const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (lower.rows() != lower.cols() || lower.rows() != b.size()) {
    throw ContractViolation("cholesky_solve: dimension mismatch");
  }
  Eigen::VectorXd y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ContractViolation("percentile: empty input");
  if (pct < 0.0 || pct > 100.0) {
    throw ContractViolation("percentile: pct out of [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace tnet
