#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bemkl/bench.hpp"

using namespace bemkl;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bemkl_bench";
  fs::create_directories(dir);
  return dir / name;
}

// Two noisy classes in three dimensions; only the first feature matters.
fs::path synthetic_dataset() {
  const auto path = scratch("synthetic.csv");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::ofstream out(path);
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    out << (pos ? 1.5 : -1.5) + normal(rng) << ',' << normal(rng) << ',' << normal(rng) << ','
        << (pos ? "up" : "down") << '\n';
  }
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentConfig small_config(const std::string& scenario, int replications) {
  ExperimentConfig c;
  c.dataset = synthetic_dataset();
  c.replications = replications;
  c.scenario = scenario;
  c.iterations = 30;
  return c;
}

}  // namespace

TEST_CASE("scenario hyperparameters") {
  const auto sparse = scenario_hyperparams("sparse");
  CHECK(sparse.alpha_omega == 1e-10);
  CHECK(sparse.beta_omega == 1e10);
  CHECK(sparse.alpha_lambda == 1.0);
  CHECK(sparse.beta_gamma == 1.0);
  const auto dense = scenario_hyperparams("non-sparse");
  CHECK(dense.alpha_omega == 1.0);
  CHECK(dense.beta_omega == 1.0);
  try {
    scenario_hyperparams("medium");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sparse") != std::string::npos);
    CHECK(msg.find("non-sparse") != std::string::npos);
  }
}

TEST_CASE("aggregates") {
  const auto a = aggregate({1.0, 2.0, 4.0});
  CHECK(a.mean == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
  const double m = 7.0 / 3.0;
  const double var = ((1 - m) * (1 - m) + (2 - m) * (2 - m) + (4 - m) * (4 - m)) / 2.0;
  CHECK(std::abs(a.sd - std::sqrt(var)) < 1e-12);
  CHECK(aggregate({3.0}).sd == 0.0);
}

TEST_CASE("config validation") {
  auto c = small_config("sparse", 1);
  CHECK_NOTHROW(c.validate());
  c.replications = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config("bogus", 1);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config("sparse", 1);
  c.train_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("benchmark rows, aggregates and determinism") {
  auto config = small_config("non-sparse", 3);
  const auto r = run_benchmark(config);
  REQUIRE(r.rows.size() == 3);
  std::vector<double> acc;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    CHECK(row.replication == static_cast<int>(i));
    CHECK(row.seed == i);
    CHECK(row.n_train == 28);
    CHECK(row.n_test == 12);
    CHECK(row.n_kernels == 52);
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 100.0);
    CHECK(row.auc >= 0.0);
    CHECK(row.auc <= 1.0);
    acc.push_back(row.accuracy);
  }
  const double mean = (acc[0] + acc[1] + acc[2]) / 3.0;
  CHECK(std::abs(r.accuracy().mean - mean) < 1e-12);
  CHECK(r.accuracy().mean > 70.0);

  const auto p1 = scratch("run1.tsv");
  const auto p2 = scratch("run2.tsv");
  save_benchmark(r, p1);
  config.threads = 2;  // completion order must not matter
  save_benchmark(run_benchmark(config), p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(p1.string() + ".summary.json") == slurp(p2.string() + ".summary.json"));
  CHECK(fs::exists(p1.string() + ".timing.tsv"));

  std::ostringstream table;
  write_results_table(r, table);
  int lines = 0;
  for (char ch : table.str()) lines += ch == '\n';
  CHECK(lines == 1 + 3 + 2);
}

TEST_CASE("sparse prior selects fewer kernels") {
  const auto sparse = run_benchmark(small_config("sparse", 10));
  const auto dense = run_benchmark(small_config("non-sparse", 10));
  CHECK(sparse.selected().mean < dense.selected().mean);
}
