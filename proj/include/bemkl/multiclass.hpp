// K-class classification: one-vs-all binary fits or one fit whose classes
// share the kernel weights.
#ifndef BEMKL_MULTICLASS_HPP
#define BEMKL_MULTICLASS_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bemkl/engine.hpp"
#include "bemkl/predictor.hpp"

namespace bemkl {

enum class MulticlassMode { OneVsAll, SharedWeights };

std::string_view to_string(MulticlassMode mode);
MulticlassMode parse_multiclass_mode(std::string_view name);

/// Class names in first-appearance order and each row's class index.
struct ClassEncoding {
  std::vector<std::string> names;
  std::vector<int> index;

  std::size_t num_classes() const { return names.size(); }
};

ClassEncoding encode_classes(const std::vector<std::string>& labels);

/// +1 for rows of `cls`, -1 otherwise.
Eigen::VectorXd one_vs_rest(const ClassEncoding& enc, int cls);

struct MulticlassModel {
  MulticlassMode mode = MulticlassMode::OneVsAll;
  std::vector<std::string> class_names;
  /// One-vs-all: one binary model per class. Shared weights: a single model
  /// holding K classes.
  std::vector<TrainedModel> models;

  std::size_t num_classes() const { return class_names.size(); }
  /// Kernel-weight means: K vectors for one-vs-all, one for shared weights.
  std::vector<Eigen::VectorXd> kernel_weights() const;
};

MulticlassModel fit_one_vs_all(const KernelBundle& bundle, const ClassEncoding& labels, const HyperParams& hyper,
                               const FitOptions& options = {}, std::size_t threads = 1);

MulticlassModel fit_shared_weights(const KernelBundle& bundle, const ClassEncoding& labels, const HyperParams& hyper,
                                   const FitOptions& options = {});

struct MulticlassPrediction {
  Eigen::VectorXd scores;
  Eigen::Index label = 0;
};

/// Index of the largest score; ties go to the lowest index.
Eigen::Index argmax_lowest(const Eigen::VectorXd& scores);

/// One-vs-all scores are each class's p_positive; shared-weights scores are
/// the per-class f means. `cross` is N x P for one point.
MulticlassPrediction predict_multiclass(const MulticlassModel& model, const Eigen::MatrixXd& cross);
std::vector<MulticlassPrediction> predict_multiclass(const MulticlassModel& model, const KernelBundle& bundle);

void save_multiclass(const MulticlassModel& model, const std::filesystem::path& path);
MulticlassModel load_multiclass(const std::filesystem::path& path);

/// Mode tag stored in a model file ("binary", "shared-weights", "one-vs-all").
std::string model_file_mode(const std::filesystem::path& path);

}  // namespace bemkl

#endif  // BEMKL_MULTICLASS_HPP
