// Kernel bank construction and normalization.
#ifndef BEMKL_KERNELS_HPP
#define BEMKL_KERNELS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bemkl {

/// Dense instance-by-feature matrix with optional per-row class tags.
struct FeatureMatrix {
  Eigen::MatrixXd rows;             // N x D
  std::vector<std::string> labels;  // empty or N entries

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

/// P precomputed train kernels plus optional train-to-test cross kernels.
///
/// `cross_kernels[m]` is N_test x N with entry (t, j) = k_m(x_t, x_j), and
/// `test_self[m][t]` = k_m(x_t, x_t) is kept so cross blocks can be
/// spherically normalized. Either all three test-side vectors hold P
/// entries or they are all empty.
struct KernelBundle {
  std::vector<Eigen::MatrixXd> train_kernels;
  std::vector<Eigen::MatrixXd> cross_kernels;
  std::vector<Eigen::VectorXd> test_self;
  std::vector<std::string> names;

  // In-memory provenance, not part of the binary container.
  std::string gaussian_convention;
  std::vector<Eigen::Index> degenerate_features;

  std::size_t count() const { return train_kernels.size(); }
  Eigen::Index n_train() const {
    return train_kernels.empty() ? 0 : train_kernels.front().rows();
  }
  Eigen::Index n_test() const {
    return cross_kernels.empty() ? 0 : cross_kernels.front().rows();
  }
  bool has_test() const { return !cross_kernels.empty(); }

  /// Throws std::invalid_argument when shapes disagree or a train kernel is
  /// not symmetric to 1e-10.
  void validate() const;
};

inline constexpr char kGaussianConvention[] = "exp(-|x-z|^2 / (2 w^2))";

/// Gaussian widths 2^-3 .. 2^6 and polynomial degrees 1..3 used per view.
std::vector<double> bank_gaussian_widths();
std::vector<int> bank_polynomial_degrees();
inline constexpr int kKernelsPerView = 13;

Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width);

/// (<a_i, b_j> + 1)^degree for degree in {1, 2, 3}.
Eigen::MatrixXd polynomial_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int degree);

struct NormalizedKernel {
  Eigen::MatrixXd train;
  std::optional<Eigen::MatrixXd> cross;
  std::optional<Eigen::VectorXd> test_self;
};

/// k_ij / sqrt(k_ii k_jj). Cross entries use the test point's own
/// self-similarity and the train diagonal; the returned self-similarity
/// vector is all ones.
NormalizedKernel spherical_normalize(const Eigen::MatrixXd& train,
                                     const std::optional<Eigen::MatrixXd>& cross = std::nullopt,
                                     const std::optional<Eigen::VectorXd>& test_self = std::nullopt);

/// Normalizes every kernel in place.
void spherical_normalize(KernelBundle& bundle);

/// Converts a full distance matrix to exp(-d / s), with s the mean distance
/// over ordered train pairs i != j. Rows and columns keep the input order.
Eigen::MatrixXd distance_to_kernel(const Eigen::MatrixXd& distances,
                                   std::span<const Eigen::Index> train_indices);

struct BankOptions {
  bool normalize = true;
};

/// Gaussian and polynomial kernels on all features and on every single
/// feature: 13 (D + 1) kernels. `test` may have zero rows.
KernelBundle build_feature_bank(const FeatureMatrix& train, const FeatureMatrix& test,
                                const BankOptions& options = {});

}  // namespace bemkl

#endif  // BEMKL_KERNELS_HPP
