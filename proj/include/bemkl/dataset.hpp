// Delimited-text datasets, stratified splits and z-scoring.
#ifndef BEMKL_DATASET_HPP
#define BEMKL_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bemkl/kernels.hpp"

namespace bemkl {

/// Numeric rows separated by ',', ';', tabs or spaces; the last column is a
/// string label. Blank lines and lines starting with '#' are skipped.
/// Throws FormatError with row/column on bad cells, ragged rows, or an
/// empty file.
FeatureMatrix load_dataset(const std::filesystem::path& path);
FeatureMatrix parse_dataset(std::istream& in, const std::string& source = "<input>");

struct Split {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Seeded stratified split. The train part holds round(fraction * N) rows
/// and every class has at least one row on each side.
Split split_train_test(const std::vector<std::string>& labels, std::uint64_t seed, double fraction);

FeatureMatrix subset(const FeatureMatrix& data, std::span<const Eigen::Index> rows);

struct Standardization {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // sample sd, 1 for constant columns
};

Standardization fit_standardization(const Eigen::MatrixXd& train);
void apply_standardization(const Standardization& stats, Eigen::MatrixXd& rows);

/// Z-scores both matrices in place with the train statistics.
Standardization standardize(FeatureMatrix& train, FeatureMatrix& test);

struct BinaryLabels {
  Eigen::VectorXd y;
  std::string positive;
  std::string negative;
};

/// Maps two distinct string labels to +-1. Numeric {-1, 1} and {0, 1} keep
/// 1 as the positive class; otherwise the first label seen is positive.
BinaryLabels encode_binary(const std::vector<std::string>& labels);

/// One label per line; blank lines and '#' lines are skipped.
std::vector<std::string> load_labels(const std::filesystem::path& path);
std::string format_labels(const std::vector<std::string>& labels);

}  // namespace bemkl

#endif  // BEMKL_DATASET_HPP
