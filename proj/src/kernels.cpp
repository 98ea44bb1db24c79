#include "bemkl/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bemkl {

namespace {

void require_compatible(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << "feature dimension mismatch: " << a.cols() << " vs " << b.cols();
    throw std::invalid_argument(msg.str());
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("non-finite feature value in kernel input");
  }
}

// Pairwise squared distances by explicit differences so identical rows give 0.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d;
}

Eigen::MatrixXd gaussian_from_distances(const Eigen::MatrixXd& sq, double width) {
  const double denom = 2.0 * width * width;
  return (-sq.array() / denom).exp().matrix();
}

std::string width_label(double w) {
  std::ostringstream s;
  s << "2^" << static_cast<int>(std::lround(std::log2(w)));
  return s.str();
}

}  // namespace

void KernelBundle::validate() const {
  if (train_kernels.empty()) throw std::invalid_argument("kernel bundle is empty");
  const auto p = train_kernels.size();
  if (names.size() != p) throw std::invalid_argument("kernel bundle: name count differs from kernel count");
  const bool test = !cross_kernels.empty();
  if (test && (cross_kernels.size() != p || test_self.size() != p)) {
    throw std::invalid_argument("kernel bundle: test-side arrays must hold one entry per kernel");
  }
  if (!test && !test_self.empty()) throw std::invalid_argument("kernel bundle: self-similarities without cross kernels");
  const Eigen::Index n = train_kernels.front().rows();
  const Eigen::Index nt = test ? cross_kernels.front().rows() : 0;
  for (std::size_t m = 0; m < p; ++m) {
    const auto& k = train_kernels[m];
    if (k.rows() != n || k.cols() != n) throw std::invalid_argument("kernel bundle: train kernel " + names[m] + " has wrong shape");
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("kernel bundle: train kernel " + names[m] + " is not symmetric");
    if (test) {
      if (cross_kernels[m].rows() != nt || cross_kernels[m].cols() != n) throw std::invalid_argument("kernel bundle: cross kernel " + names[m] + " has wrong shape");
      if (test_self[m].size() != nt) throw std::invalid_argument("kernel bundle: self-similarity vector " + names[m] + " has wrong length");
    }
  }
}

std::vector<double> bank_gaussian_widths() {
  std::vector<double> w;
  for (int e = -3; e <= 6; ++e) w.push_back(std::ldexp(1.0, e));
  return w;
}

std::vector<int> bank_polynomial_degrees() { return {1, 2, 3}; }

Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width) {
  if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("gaussian width must be positive");
  require_compatible(a, b);
  return gaussian_from_distances(squared_distances(a, b), width);
}

Eigen::MatrixXd polynomial_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int degree) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("polynomial degree must be 1, 2 or 3");
  require_compatible(a, b);
  Eigen::MatrixXd k = (a * b.transpose()).array() + 1.0;
  return k.array().pow(degree).matrix();
}

NormalizedKernel spherical_normalize(const Eigen::MatrixXd& train, const std::optional<Eigen::MatrixXd>& cross,
                                     const std::optional<Eigen::VectorXd>& test_self) {
  if (train.rows() != train.cols()) throw std::invalid_argument("train kernel must be square");
  const Eigen::VectorXd diag = train.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    throw std::invalid_argument("spherical normalization needs a strictly positive diagonal");
  }
  const Eigen::VectorXd inv_root = diag.array().sqrt().inverse();

  NormalizedKernel out;
  out.train = inv_root.asDiagonal() * train * inv_root.asDiagonal();
  out.train.diagonal().setOnes();
  if (cross) {
    if (!test_self) throw std::invalid_argument("cross kernel normalization needs test self-similarities");
    if (cross->cols() != train.rows() || test_self->size() != cross->rows()) {
      throw std::invalid_argument("cross kernel shape does not match train kernel");
    }
    if ((test_self->array() <= 0.0).any()) throw std::invalid_argument("non-positive test self-similarity");
    const Eigen::VectorXd test_root = test_self->array().sqrt().inverse();
    out.cross = test_root.asDiagonal() * (*cross) * inv_root.asDiagonal();
    out.test_self = Eigen::VectorXd::Ones(cross->rows());
  }
  return out;
}

void spherical_normalize(KernelBundle& bundle) {
  for (std::size_t m = 0; m < bundle.count(); ++m) {
    std::optional<Eigen::MatrixXd> cross;
    std::optional<Eigen::VectorXd> self;
    if (bundle.has_test()) {
      cross = bundle.cross_kernels[m];
      self = bundle.test_self[m];
    }
    auto n = spherical_normalize(bundle.train_kernels[m], cross, self);
    bundle.train_kernels[m] = std::move(n.train);
    if (n.cross) {
      bundle.cross_kernels[m] = std::move(*n.cross);
      bundle.test_self[m] = std::move(*n.test_self);
    }
  }
}

Eigen::MatrixXd distance_to_kernel(const Eigen::MatrixXd& distances, std::span<const Eigen::Index> train_indices) {
  if (distances.rows() != distances.cols()) throw std::invalid_argument("distance matrix must be square");
  if ((distances.array() < 0.0).any() || !distances.allFinite()) {
    throw std::invalid_argument("distances must be finite and nonnegative");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i : train_indices) {
    for (Eigen::Index j : train_indices) {
      if (i < 0 || i >= distances.rows() || j < 0 || j >= distances.rows()) {
        throw std::out_of_range("train index outside distance matrix");
      }
      if (i == j) continue;
      total += distances(i, j);
      ++pairs;
    }
  }
  if (pairs == 0 || total <= 0.0) throw std::invalid_argument("mean train distance is zero");
  const double scale = total / static_cast<double>(pairs);
  return (-distances.array() / scale).exp().matrix();
}

KernelBundle build_feature_bank(const FeatureMatrix& train, const FeatureMatrix& test, const BankOptions& options) {
  const Eigen::Index dims = train.dim();
  if (dims == 0) throw std::invalid_argument("feature bank needs at least one feature");
  if (train.size() == 0) throw std::invalid_argument("feature bank needs training rows");
  if (test.size() > 0) require_compatible(train.rows, test.rows);
  require_compatible(train.rows, train.rows);

  KernelBundle bundle;
  bundle.gaussian_convention = kGaussianConvention;
  const bool with_test = test.size() > 0;
  const auto widths = bank_gaussian_widths();
  const auto degrees = bank_polynomial_degrees();
  const std::size_t total = static_cast<std::size_t>(kKernelsPerView) * static_cast<std::size_t>(dims + 1);
  bundle.train_kernels.reserve(total);
  bundle.names.reserve(total);

  for (Eigen::Index view = -1; view < dims; ++view) {
    Eigen::MatrixXd xa, xb;
    std::string tag;
    if (view < 0) {
      xa = train.rows;
      xb = test.rows;
      tag = "all";
    } else {
      xa = train.rows.col(view);
      xb = with_test ? Eigen::MatrixXd(test.rows.col(view)) : Eigen::MatrixXd(0, 1);
      tag = "f" + std::to_string(view + 1);
      if (xa.maxCoeff() == xa.minCoeff()) bundle.degenerate_features.push_back(view);
    }

    const Eigen::MatrixXd sq_train = squared_distances(xa, xa);
    const Eigen::MatrixXd sq_cross = with_test ? squared_distances(xb, xa) : Eigen::MatrixXd();
    const Eigen::MatrixXd lin_train = xa * xa.transpose();
    const Eigen::MatrixXd lin_cross = with_test ? Eigen::MatrixXd(xb * xa.transpose()) : Eigen::MatrixXd();
    const Eigen::VectorXd test_norm = with_test ? Eigen::VectorXd(xb.rowwise().squaredNorm()) : Eigen::VectorXd();

    auto push = [&](std::string name, Eigen::MatrixXd k, Eigen::MatrixXd kx, Eigen::VectorXd self) {
      if (options.normalize) {
        auto n = with_test ? spherical_normalize(k, kx, self) : spherical_normalize(k);
        k = std::move(n.train);
        if (with_test) {
          kx = std::move(*n.cross);
          self = std::move(*n.test_self);
        }
      }
      bundle.train_kernels.push_back(std::move(k));
      if (with_test) {
        bundle.cross_kernels.push_back(std::move(kx));
        bundle.test_self.push_back(std::move(self));
      }
      bundle.names.push_back(std::move(name));
    };

    for (double w : widths) {
      push(tag + "/gauss/w=" + width_label(w), gaussian_from_distances(sq_train, w),
           with_test ? gaussian_from_distances(sq_cross, w) : Eigen::MatrixXd(),
           with_test ? Eigen::VectorXd::Ones(xb.rows()).eval() : Eigen::VectorXd());
    }
    for (int d : degrees) {
      push(tag + "/poly/d=" + std::to_string(d), (lin_train.array() + 1.0).pow(d).matrix(),
           with_test ? (lin_cross.array() + 1.0).pow(d).matrix().eval() : Eigen::MatrixXd(),
           with_test ? (test_norm.array() + 1.0).pow(d).matrix().eval() : Eigen::VectorXd());
    }
  }
  return bundle;
}

}  // namespace bemkl
