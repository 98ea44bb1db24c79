#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "bemkl/error.hpp"
#include "bemkl/model_io.hpp"
#include "bemkl/predictor.hpp"
#include "support/oracles.hpp"

using namespace bemkl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bemkl_model_io";
  fs::create_directories(dir);
  return dir / name;
}

struct Fixture {
  KernelBundle bundle;
  TrainedModel model;
};

Fixture fixture() {
  std::mt19937_64 rng(17);
  const auto inst = oracle::random_instance(rng, 15, 3);
  Fixture f;
  f.bundle = oracle::to_bundle(inst);
  HyperParams hp;
  hp.max_iterations = 30;
  hp.alpha_omega = 1e-10;
  hp.beta_omega = 1e10;
  f.model = fit(f.bundle, inst.y, hp);
  f.model.class_names = {"pos", "neg"};
  return f;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("model round trip with covariance sidecar") {
  const auto f = fixture();
  const auto path = scratch("model.json");
  save_model(f.model, path);
  CHECK(fs::exists(a_cov_sidecar_path(path)));
  const auto loaded = load_model(path);
  CHECK(loaded.full_a_cov);
  CHECK(loaded.kernel_names == f.model.kernel_names);
  CHECK(loaded.class_names == f.model.class_names);
  CHECK(loaded.hyper.beta_omega == 1e10);
  CHECK(loaded.posterior.iterations == 30);
  CHECK(loaded.posterior.elbo_trace == f.model.posterior.elbo_trace);
  CHECK((loaded.posterior.classes[0].a_cov - f.model.posterior.classes[0].a_cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.posterior.be_cov - f.model.posterior.be_cov).cwiseAbs().maxCoeff() == 0.0);

  const auto a = predict(f.model, f.bundle);
  const auto b = predict(loaded, f.bundle);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].p_positive == b[i].p_positive);
    CHECK((a[i].g_var - b[i].g_var).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(selected_kernels(loaded).count == selected_kernels(f.model).count);

  // Saving twice gives identical bytes.
  const auto again = scratch("model2.json");
  save_model(loaded, again);
  auto text = slurp(path);
  auto text2 = slurp(again);
  const auto strip = [](std::string s) { return s.substr(0, s.find("a_cov_sidecar")); };
  CHECK(strip(text) == strip(text2));
}

TEST_CASE("model without sidecar keeps the covariance diagonal") {
  const auto f = fixture();
  const auto path = scratch("model_diag.json");
  fs::remove(a_cov_sidecar_path(path));
  save_model(f.model, path, ModelSaveOptions{false});
  CHECK_FALSE(fs::exists(a_cov_sidecar_path(path)));
  const auto loaded = load_model(path);
  CHECK_FALSE(loaded.full_a_cov);
  CHECK((loaded.posterior.classes[0].a_cov.diagonal() - f.model.posterior.classes[0].a_cov.diagonal())
            .cwiseAbs()
            .maxCoeff() == 0.0);
  const auto a = predict(f.model, f.bundle);
  const auto b = predict(loaded, f.bundle);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].p_positive == b[i].p_positive);
  CHECK_THROWS_AS(predict(loaded, f.bundle, 0, PredictOptions{true}), std::invalid_argument);
}

TEST_CASE("malformed model files") {
  const auto path = scratch("bad.json");
  auto write = [&](const std::string& text) {
    std::ofstream(path) << text;
  };
  write("not json");
  CHECK_THROWS_AS(load_model(path), FormatError);
  write(R"({"format": "something-else"})");
  CHECK_THROWS_AS(load_model(path), FormatError);
  write(R"({"format": "bemkl-model", "version": 99, "mode": "binary"})");
  CHECK_THROWS_AS(load_model(path), FormatError);
  write(R"({"format": "bemkl-model", "version": 1, "mode": "binary"})");
  CHECK_THROWS_AS(load_model(path), FormatError);
  write(R"({"format": "bemkl-model", "version": 1, "mode": "one-vs-all"})");
  CHECK_THROWS_AS(load_model(path), FormatError);
  CHECK_THROWS_AS(load_model(scratch("missing.json")), FormatError);

  const auto f = fixture();
  const auto good = scratch("truncated.json");
  save_model(f.model, good);
  const auto side = a_cov_sidecar_path(good);
  const auto bytes = slurp(side);
  std::ofstream(side, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(load_model(good), FormatError);
}

TEST_CASE("hyperparameter JSON round trip") {
  HyperParams hp;
  hp.alpha_lambda = 0.25;
  hp.beta_omega = 1e10;
  hp.nu = 0.0;
  hp.max_iterations = 17;
  hp.elbo_rel_tol = 1e-7;
  const auto back = hyper_from_json(hyper_to_json(hp));
  CHECK(back.alpha_lambda == 0.25);
  CHECK(back.beta_omega == 1e10);
  CHECK(back.nu == 0.0);
  CHECK(back.max_iterations == 17);
  CHECK(back.elbo_rel_tol == 1e-7);
}
