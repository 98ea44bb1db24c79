// Model persistence: a JSON document plus an optional binary sidecar with the
// full a covariance of every class ("<model>.acov").
#ifndef BEMKL_MODEL_IO_HPP
#define BEMKL_MODEL_IO_HPP

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "bemkl/engine.hpp"

namespace bemkl {

inline constexpr int kModelVersion = 1;

nlohmann::json hyper_to_json(const HyperParams& hp);
HyperParams hyper_from_json(const nlohmann::json& j);

/// Model section without covariance sidecar data; a_cov is restored as its
/// diagonal until attach_a_cov is called.
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

/// Sidecar holding a sequence of square matrices.
void save_matrix_sidecar(const std::vector<const Eigen::MatrixXd*>& blocks, const std::filesystem::path& path);
std::vector<Eigen::MatrixXd> load_matrix_sidecar(const std::filesystem::path& path);

std::filesystem::path a_cov_sidecar_path(const std::filesystem::path& model_path);

struct ModelSaveOptions {
  bool embed_a_cov = true;
};

void save_model(const TrainedModel& model, const std::filesystem::path& path, const ModelSaveOptions& options = {});
TrainedModel load_model(const std::filesystem::path& path);

/// Writes `text` to a temporary file beside `path` and renames it into place.
void write_file_atomically(const std::filesystem::path& path, const std::string& text);

}  // namespace bemkl

#endif  // BEMKL_MODEL_IO_HPP
