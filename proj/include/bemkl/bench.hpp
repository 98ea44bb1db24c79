// Replicated train/test benchmark over a delimited dataset.
#ifndef BEMKL_BENCH_HPP
#define BEMKL_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "bemkl/engine.hpp"

namespace bemkl {

/// "sparse": omega prior (1e-10, 1e10); "non-sparse": all ones. Throws
/// std::invalid_argument listing the valid names otherwise.
HyperParams scenario_hyperparams(const std::string& name);
std::vector<std::string> scenario_names();

struct ExperimentConfig {
  std::filesystem::path dataset;
  int replications = 20;
  double train_fraction = 0.7;
  std::string scenario = "sparse";  // or "non-sparse", "custom"
  HyperParams custom;               // used when scenario == "custom"
  std::uint64_t base_seed = 0;
  int iterations = 200;
  double nu = 1.0;
  std::size_t threads = 1;
  double selection_threshold = 1e-3;
  bool normalize = true;

  void validate() const;
  HyperParams hyper() const;
};

struct ReplicationResult {
  int replication = 0;
  std::uint64_t seed = 0;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  Eigen::Index n_kernels = 0;
  double accuracy = 0.0;  // percent
  std::size_t selected = 0;
  double auc = 0.0;
  double eer = 0.0;
  double final_elbo = 0.0;
  double train_seconds = 0.0;   // fit only
  double kernel_seconds = 0.0;  // bank construction
};

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 for a single value
};

Aggregate aggregate(const std::vector<double>& values);

struct ExperimentResult {
  ExperimentConfig config;
  std::string positive_class;
  std::vector<ReplicationResult> rows;

  Aggregate accuracy() const;
  Aggregate selected() const;
  Aggregate train_seconds() const;
  Aggregate auc() const;
  Aggregate eer() const;
};

/// Called with each finished replication (completion order).
using ReplicationCallback = std::function<void(const ReplicationResult&)>;

/// Per replication r: seed = base_seed + r, stratified split, z-scoring with
/// train statistics, kernel bank, fit, predict on the held-out part.
ExperimentResult run_benchmark(const ExperimentConfig& config, const ReplicationCallback& on_done = {});

/// Deterministic outputs: no timings.
void write_results_table(const ExperimentResult& result, std::ostream& out);
void write_summary_json(const ExperimentResult& result, std::ostream& out);
/// Wall-clock timings, kept apart so the files above are reproducible.
void write_timing_table(const ExperimentResult& result, std::ostream& out);

/// Writes `path`, `path.summary.json` and `path.timing.tsv` atomically.
void save_benchmark(const ExperimentResult& result, const std::filesystem::path& path);

}  // namespace bemkl

#endif  // BEMKL_BENCH_HPP
