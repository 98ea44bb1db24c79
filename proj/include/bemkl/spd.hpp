// Cholesky factorization of symmetric positive-definite matrices with a
// bounded jitter escalation.
#ifndef BEMKL_SPD_HPP
#define BEMKL_SPD_HPP

#include <string>

#include <Eigen/Dense>

namespace bemkl {

class SpdFactor {
 public:
  /// Factors `a`. On failure retries with 1e-8 and then 1e-6 times the mean
  /// diagonal added to the diagonal; throws NumericalError naming `what`
  /// after that.
  SpdFactor(const Eigen::MatrixXd& a, const std::string& what);

  Eigen::Index size() const { return llt_.rows(); }
  double jitter() const { return jitter_; }
  double log_det() const;

  template <typename Rhs>
  Eigen::MatrixXd solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return llt_.solve(rhs);
  }

  Eigen::MatrixXd inverse() const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

}  // namespace bemkl

#endif  // BEMKL_SPD_HPP
