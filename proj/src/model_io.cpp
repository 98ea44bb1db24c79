#include "bemkl/model_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <sstream>

#include "bemkl/error.hpp"

namespace bemkl {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kSidecarMagic{'B', 'M', 'A', 'C'};
constexpr std::uint32_t kSidecarVersion = 1;

static_assert(std::endian::native == std::endian::little, "sidecar I/O assumes a little-endian host");

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("model file lacks field '") + key + "'");
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd to_mat(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("model file lacks field '") + key + "'");
  const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c) {
      throw FormatError(std::string("ragged matrix in field '") + key + "'");
    }
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return m;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("model file lacks field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

json hyper_to_json(const HyperParams& hp) {
  return {{"alpha_lambda", hp.alpha_lambda}, {"beta_lambda", hp.beta_lambda}, {"alpha_gamma", hp.alpha_gamma},
          {"beta_gamma", hp.beta_gamma},     {"alpha_omega", hp.alpha_omega}, {"beta_omega", hp.beta_omega},
          {"nu", hp.nu},                     {"max_iterations", hp.max_iterations},
          {"elbo_rel_tol", hp.elbo_rel_tol}};
}

HyperParams hyper_from_json(const json& j) {
  HyperParams hp;
  hp.alpha_lambda = field<double>(j, "alpha_lambda");
  hp.beta_lambda = field<double>(j, "beta_lambda");
  hp.alpha_gamma = field<double>(j, "alpha_gamma");
  hp.beta_gamma = field<double>(j, "beta_gamma");
  hp.alpha_omega = field<double>(j, "alpha_omega");
  hp.beta_omega = field<double>(j, "beta_omega");
  hp.nu = field<double>(j, "nu");
  hp.max_iterations = field<int>(j, "max_iterations");
  hp.elbo_rel_tol = field<double>(j, "elbo_rel_tol");
  hp.validate();
  return hp;
}

json model_to_json(const TrainedModel& model) {
  const auto& s = model.posterior;
  json classes = json::array();
  for (const auto& c : s.classes) {
    classes.push_back({{"a_mean", vec(c.a_mean)},
                       {"a_cov_diagonal", vec(c.a_cov.diagonal())},
                       {"lambda_shape", vec(c.lambda_shape)},
                       {"lambda_scale", vec(c.lambda_scale)},
                       {"gamma_shape", c.gamma_shape},
                       {"gamma_scale", c.gamma_scale}});
  }
  return {{"hyperparameters", hyper_to_json(model.hyper)},
          {"selection_threshold", model.selection_threshold},
          {"kernel_names", model.kernel_names},
          {"class_names", model.class_names},
          {"n_train", s.size()},
          {"n_kernels", s.num_kernels()},
          {"iterations", s.iterations},
          {"elbo_trace", s.elbo_trace},
          {"classes", classes},
          {"omega_shape", vec(s.omega_shape)},
          {"omega_scale", vec(s.omega_scale)},
          {"be_mean", vec(s.be_mean)},
          {"be_cov", mat(s.be_cov)}};
}

TrainedModel model_from_json(const json& j) {
  TrainedModel model;
  model.hyper = hyper_from_json(field<json>(j, "hyperparameters"));
  model.selection_threshold = field<double>(j, "selection_threshold");
  model.kernel_names = field<std::vector<std::string>>(j, "kernel_names");
  model.class_names = field<std::vector<std::string>>(j, "class_names");
  auto& s = model.posterior;
  s.iterations = field<int>(j, "iterations");
  s.elbo_trace = field<std::vector<double>>(j, "elbo_trace");
  const auto n = field<Eigen::Index>(j, "n_train");
  const auto p = field<Eigen::Index>(j, "n_kernels");
  for (const auto& jc : field<json>(j, "classes")) {
    ClassFactors c;
    c.a_mean = to_vec(jc, "a_mean");
    c.a_cov = to_vec(jc, "a_cov_diagonal").asDiagonal();
    c.lambda_shape = to_vec(jc, "lambda_shape");
    c.lambda_scale = to_vec(jc, "lambda_scale");
    c.gamma_shape = field<double>(jc, "gamma_shape");
    c.gamma_scale = field<double>(jc, "gamma_scale");
    if (c.a_mean.size() != n || c.lambda_shape.size() != n) throw FormatError("class section size differs from n_train");
    s.classes.push_back(std::move(c));
  }
  s.omega_shape = to_vec(j, "omega_shape");
  s.omega_scale = to_vec(j, "omega_scale");
  s.be_mean = to_vec(j, "be_mean");
  s.be_cov = to_mat(j, "be_cov");
  const auto k = s.num_classes();
  if (k == 0) throw FormatError("model file has no class sections");
  if (s.omega_shape.size() != p || s.be_mean.size() != k + p || s.be_cov.rows() != k + p ||
      s.be_cov.cols() != k + p) {
    throw FormatError("model arrays inconsistent with n_kernels");
  }
  if (static_cast<Eigen::Index>(model.kernel_names.size()) != p) throw FormatError("kernel name count differs from n_kernels");
  model.full_a_cov = false;
  return model;
}

std::filesystem::path a_cov_sidecar_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p += ".acov";
  return p;
}

void save_matrix_sidecar(const std::vector<const Eigen::MatrixXd*>& blocks, const std::filesystem::path& path) {
  std::ostringstream out;
  auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write(kSidecarMagic.data(), kSidecarMagic.size());
  u32(kSidecarVersion);
  u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto* m : blocks) {
    u32(static_cast<std::uint32_t>(m->rows()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = *m;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  write_file_atomically(path, out.str());
}

std::vector<Eigen::MatrixXd> load_matrix_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open covariance sidecar " + path.string());
  auto read = [&](char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError("truncated covariance sidecar " + path.string());
  };
  auto u32 = [&] {
    std::uint32_t v;
    read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  std::array<char, 4> magic{};
  read(magic.data(), magic.size());
  if (magic != kSidecarMagic) throw FormatError("bad covariance sidecar magic in " + path.string());
  if (u32() != kSidecarVersion) throw FormatError("unsupported covariance sidecar version");
  const auto count = u32();
  std::vector<Eigen::MatrixXd> blocks;
  for (std::uint32_t b = 0; b < count; ++b) {
    const auto n = static_cast<Eigen::Index>(u32());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, n);
    read(reinterpret_cast<char*>(rm.data()), static_cast<std::size_t>(rm.size()) * sizeof(double));
    blocks.emplace_back(rm);
  }
  return blocks;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path, const ModelSaveOptions& options) {
  json doc = model_to_json(model);
  doc["format"] = "bemkl-model";
  doc["version"] = kModelVersion;
  doc["mode"] = model.posterior.num_classes() == 1 ? "binary" : "shared-weights";
  if (options.embed_a_cov) {
    std::vector<const Eigen::MatrixXd*> blocks;
    for (const auto& c : model.posterior.classes) blocks.push_back(&c.a_cov);
    save_matrix_sidecar(blocks, a_cov_sidecar_path(path));
    doc["a_cov_sidecar"] = a_cov_sidecar_path(path).filename().string();
  } else {
    doc["a_cov_sidecar"] = nullptr;
  }
  write_file_atomically(path, doc.dump(1) + "\n");
}

namespace {

void attach_sidecar(TrainedModel& model, const json& doc, const std::filesystem::path& path) {
  if (!doc.contains("a_cov_sidecar") || doc.at("a_cov_sidecar").is_null()) return;
  const auto side = path.parent_path() / doc.at("a_cov_sidecar").get<std::string>();
  auto blocks = load_matrix_sidecar(side);
  if (blocks.size() != model.posterior.classes.size()) throw FormatError("covariance sidecar block count mismatch");
  for (std::size_t c = 0; c < blocks.size(); ++c) {
    if (blocks[c].rows() != model.posterior.size()) throw FormatError("covariance sidecar block has wrong size");
    model.posterior.classes[c].a_cov = std::move(blocks[c]);
  }
  model.full_a_cov = true;
}

}  // namespace

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (doc.value("format", "") != "bemkl-model") throw FormatError("not a model file: " + path.string());
  if (doc.value("version", -1) != kModelVersion) throw FormatError("unsupported model version");
  const auto mode = doc.value("mode", "");
  if (mode != "binary" && mode != "shared-weights") {
    throw FormatError("model file holds a '" + mode + "' model; load it as a multiclass model");
  }
  TrainedModel model;
  try {
    model = model_from_json(doc);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
  attach_sidecar(model, doc, path);
  return model;
}

}  // namespace bemkl
