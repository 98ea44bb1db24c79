#include "bemkl/multiclass.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include "bemkl/error.hpp"
#include "bemkl/model_io.hpp"
#include "bemkl/parallel.hpp"

namespace bemkl {

std::string_view to_string(MulticlassMode mode) {
  return mode == MulticlassMode::OneVsAll ? "one-vs-all" : "shared-weights";
}

MulticlassMode parse_multiclass_mode(std::string_view name) {
  if (name == "one-vs-all") return MulticlassMode::OneVsAll;
  if (name == "shared-weights" || name == "shared") return MulticlassMode::SharedWeights;
  throw std::invalid_argument("unknown multiclass mode '" + std::string(name) +
                              "' (valid: one-vs-all, shared-weights)");
}

ClassEncoding encode_classes(const std::vector<std::string>& labels) {
  ClassEncoding enc;
  std::map<std::string, int> seen;
  enc.index.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = seen.emplace(l, static_cast<int>(enc.names.size()));
    if (inserted) enc.names.push_back(l);
    enc.index.push_back(it->second);
  }
  return enc;
}

Eigen::VectorXd one_vs_rest(const ClassEncoding& enc, int cls) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(enc.index.size()));
  for (std::size_t i = 0; i < enc.index.size(); ++i) y[static_cast<Eigen::Index>(i)] = enc.index[i] == cls ? 1.0 : -1.0;
  return y;
}

std::vector<Eigen::VectorXd> MulticlassModel::kernel_weights() const {
  std::vector<Eigen::VectorXd> out;
  for (const auto& m : models) out.push_back(m.posterior.e_mean());
  return out;
}

MulticlassModel fit_one_vs_all(const KernelBundle& bundle, const ClassEncoding& labels, const HyperParams& hyper,
                               const FitOptions& options, std::size_t threads) {
  if (labels.num_classes() < 2) throw std::invalid_argument("one-vs-all needs at least two classes");
  MulticlassModel model;
  model.mode = MulticlassMode::OneVsAll;
  model.class_names = labels.names;
  model.models.resize(labels.num_classes());
  parallel_for(labels.num_classes(), threads, [&](std::size_t c) {
    auto m = fit(bundle, one_vs_rest(labels, static_cast<int>(c)), hyper, options);
    m.class_names = {labels.names[c], "rest"};
    model.models[c] = std::move(m);
  });
  return model;
}

MulticlassModel fit_shared_weights(const KernelBundle& bundle, const ClassEncoding& labels, const HyperParams& hyper,
                                   const FitOptions& options) {
  std::vector<Eigen::VectorXd> columns;
  for (std::size_t c = 0; c < labels.num_classes(); ++c) columns.push_back(one_vs_rest(labels, static_cast<int>(c)));
  MulticlassModel model;
  model.mode = MulticlassMode::SharedWeights;
  model.class_names = labels.names;
  auto m = fit_shared(bundle, columns, hyper, options);
  m.class_names = labels.names;
  model.models.push_back(std::move(m));
  return model;
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& scores) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

MulticlassPrediction predict_multiclass(const MulticlassModel& model, const Eigen::MatrixXd& cross) {
  const auto k = static_cast<Eigen::Index>(model.num_classes());
  MulticlassPrediction out;
  out.scores.resize(k);
  if (model.mode == MulticlassMode::OneVsAll) {
    for (Eigen::Index c = 0; c < k; ++c) {
      out.scores[c] = predict_point(model.models[static_cast<std::size_t>(c)], cross).p_positive;
    }
  } else {
    const auto& shared = model.models.front();
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto g = predict_g(shared, cross, c);
      out.scores[c] = predict_f(shared, g.mean, c).mean;
    }
  }
  out.label = argmax_lowest(out.scores);
  return out;
}

std::vector<MulticlassPrediction> predict_multiclass(const MulticlassModel& model, const KernelBundle& bundle) {
  const auto& first = model.models.front();
  if (static_cast<Eigen::Index>(bundle.count()) != first.posterior.num_kernels()) {
    throw std::invalid_argument("bundle has " + std::to_string(bundle.count()) + " kernels but the model expects " +
                                std::to_string(first.posterior.num_kernels()));
  }
  if (bundle.n_train() != first.posterior.size()) throw std::invalid_argument("bundle training size does not match the model");
  std::vector<MulticlassPrediction> out;
  const Eigen::Index count = prediction_count(bundle);
  for (Eigen::Index t = 0; t < count; ++t) out.push_back(predict_multiclass(model, point_cross_kernels(bundle, t)));
  return out;
}

void save_multiclass(const MulticlassModel& model, const std::filesystem::path& path) {
  if (model.mode == MulticlassMode::SharedWeights) {
    save_model(model.models.front(), path);
    return;
  }
  nlohmann::json doc;
  doc["format"] = "bemkl-model";
  doc["version"] = kModelVersion;
  doc["mode"] = std::string(to_string(model.mode));
  doc["class_names"] = model.class_names;
  doc["models"] = nlohmann::json::array();
  std::vector<const Eigen::MatrixXd*> blocks;
  for (const auto& m : model.models) {
    doc["models"].push_back(model_to_json(m));
    blocks.push_back(&m.posterior.classes.front().a_cov);
  }
  save_matrix_sidecar(blocks, a_cov_sidecar_path(path));
  doc["a_cov_sidecar"] = a_cov_sidecar_path(path).filename().string();
  write_file_atomically(path, doc.dump(1) + "\n");
}

std::string model_file_mode(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "bemkl-model") throw FormatError("not a model file: " + path.string());
    return doc.value("mode", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
}

MulticlassModel load_multiclass(const std::filesystem::path& path) {
  const auto mode = model_file_mode(path);
  MulticlassModel model;
  if (mode == "shared-weights") {
    model.mode = MulticlassMode::SharedWeights;
    model.models.push_back(load_model(path));
    model.class_names = model.models.front().class_names;
    return model;
  }
  if (mode != "one-vs-all") throw FormatError("model file " + path.string() + " is not a multiclass model");

  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in);
  model.mode = MulticlassMode::OneVsAll;
  try {
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    for (const auto& section : doc.at("models")) model.models.push_back(model_from_json(section));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed multiclass model file: ") + e.what());
  }
  if (model.models.size() != model.class_names.size()) throw FormatError("one section per class expected");
  auto blocks = load_matrix_sidecar(path.parent_path() / doc.at("a_cov_sidecar").get<std::string>());
  if (blocks.size() != model.models.size()) throw FormatError("covariance sidecar block count mismatch");
  for (std::size_t c = 0; c < blocks.size(); ++c) {
    model.models[c].posterior.classes.front().a_cov = std::move(blocks[c]);
    model.models[c].full_a_cov = true;
  }
  return model;
}

}  // namespace bemkl
