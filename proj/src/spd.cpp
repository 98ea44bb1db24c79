#include "bemkl/spd.hpp"

#include <cmath>

#include "bemkl/error.hpp"

namespace bemkl {

SpdFactor::SpdFactor(const Eigen::MatrixXd& a, const std::string& what) {
  if (a.rows() != a.cols()) throw NumericalError(what + ": matrix is not square");
  if (!a.allFinite()) throw NumericalError(what + ": non-finite entry in precision matrix");
  llt_.compute(a);
  if (llt_.info() == Eigen::Success) return;

  const double scale = a.rows() > 0 ? a.diagonal().cwiseAbs().mean() : 1.0;
  for (double rel : {1e-8, 1e-6}) {
    jitter_ = rel * (scale > 0.0 ? scale : 1.0);
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter_;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success) return;
  }
  throw NumericalError(what + ": Cholesky factorization failed after jitter escalation");
}

double SpdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd SpdFactor::inverse() const {
  const Eigen::Index n = llt_.rows();
  // L^{-1} then L^{-T} L^{-1}; symmetrize away rounding.
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  llt_.matrixL().solveInPlace(linv);
  Eigen::MatrixXd inv(n, n);
  inv.setZero();
  inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  return inv.selfadjointView<Eigen::Lower>();
}

}  // namespace bemkl
