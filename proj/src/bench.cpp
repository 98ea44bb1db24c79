#include "bemkl/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bemkl/dataset.hpp"
#include "bemkl/kernels.hpp"
#include "bemkl/metrics.hpp"
#include "bemkl/model_io.hpp"
#include "bemkl/parallel.hpp"
#include "bemkl/predictor.hpp"

namespace bemkl {

std::vector<std::string> scenario_names() { return {"sparse", "non-sparse"}; }

HyperParams scenario_hyperparams(const std::string& name) {
  HyperParams hp;
  if (name == "sparse") {
    hp.alpha_omega = 1e-10;
    hp.beta_omega = 1e10;
  } else if (name != "non-sparse") {
    throw std::invalid_argument("unknown scenario '" + name + "' (valid: sparse, non-sparse)");
  }
  return hp;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw std::invalid_argument("no dataset given");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
  if (!(selection_threshold > 0.0)) throw std::invalid_argument("selection threshold must be positive");
  hyper().validate();
}

HyperParams ExperimentConfig::hyper() const {
  HyperParams hp = scenario == "custom" ? custom : scenario_hyperparams(scenario);
  hp.nu = nu;
  hp.max_iterations = iterations;
  return hp;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

namespace {

template <typename F>
Aggregate collect(const std::vector<ReplicationResult>& rows, F field) {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(static_cast<double>(field(r)));
  return aggregate(v);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ReplicationResult run_replication(const ExperimentConfig& config, const FeatureMatrix& data, const BinaryLabels& labels,
                                  int r) {
  ReplicationResult out;
  out.replication = r;
  out.seed = config.base_seed + static_cast<std::uint64_t>(r);
  const auto split = split_train_test(data.labels, out.seed, config.train_fraction);
  auto train = subset(data, split.train);
  auto test = subset(data, split.test);
  standardize(train, test);

  const auto t0 = std::chrono::steady_clock::now();
  const auto bundle = build_feature_bank(train, test, BankOptions{config.normalize});
  out.kernel_seconds = seconds_since(t0);

  Eigen::VectorXd y_train(static_cast<Eigen::Index>(split.train.size()));
  Eigen::VectorXd y_test(static_cast<Eigen::Index>(split.test.size()));
  for (std::size_t i = 0; i < split.train.size(); ++i) y_train[static_cast<Eigen::Index>(i)] = labels.y[split.train[i]];
  for (std::size_t i = 0; i < split.test.size(); ++i) y_test[static_cast<Eigen::Index>(i)] = labels.y[split.test[i]];

  FitOptions opts;
  opts.selection_threshold = config.selection_threshold;
  opts.init.seed = out.seed;
  const auto model = fit(bundle, y_train, config.hyper(), opts);
  out.train_seconds = model.train_seconds;

  const auto preds = predict(model, bundle);
  Eigen::VectorXd predicted(y_test.size()), scores(y_test.size());
  for (Eigen::Index t = 0; t < y_test.size(); ++t) {
    predicted[t] = preds[static_cast<std::size_t>(t)].label();
    scores[t] = preds[static_cast<std::size_t>(t)].p_positive;
  }
  out.n_train = y_train.size();
  out.n_test = y_test.size();
  out.n_kernels = static_cast<Eigen::Index>(bundle.count());
  out.accuracy = 100.0 * metric_accuracy(predicted, y_test);
  out.selected = selected_kernels(model).count;
  out.auc = metric_auc(scores, y_test);
  out.eer = metric_eer(scores, y_test);
  out.final_elbo = model.final_elbo();
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

Aggregate ExperimentResult::accuracy() const { return collect(rows, [](auto& r) { return r.accuracy; }); }
Aggregate ExperimentResult::selected() const { return collect(rows, [](auto& r) { return r.selected; }); }
Aggregate ExperimentResult::train_seconds() const { return collect(rows, [](auto& r) { return r.train_seconds; }); }
Aggregate ExperimentResult::auc() const { return collect(rows, [](auto& r) { return r.auc; }); }
Aggregate ExperimentResult::eer() const { return collect(rows, [](auto& r) { return r.eer; }); }

ExperimentResult run_benchmark(const ExperimentConfig& config, const ReplicationCallback& on_done) {
  config.validate();
  const auto data = load_dataset(config.dataset);
  const auto labels = encode_binary(data.labels);
  ExperimentResult result;
  result.config = config;
  result.positive_class = labels.positive;
  result.rows.resize(static_cast<std::size_t>(config.replications));
  std::mutex report;
  parallel_for(result.rows.size(), config.threads, [&](std::size_t r) {
    result.rows[r] = run_replication(config, data, labels, static_cast<int>(r));
    if (on_done) {
      std::lock_guard lock(report);
      on_done(result.rows[r]);
    }
  });
  return result;
}

void write_results_table(const ExperimentResult& result, std::ostream& out) {
  out << "replication\tseed\tn_train\tn_test\tkernels\taccuracy\tselected\tauc\teer\tfinal_elbo\n";
  for (const auto& r : result.rows) {
    out << r.replication << '\t' << r.seed << '\t' << r.n_train << '\t' << r.n_test << '\t' << r.n_kernels << '\t'
        << fmt(r.accuracy) << '\t' << r.selected << '\t' << fmt(r.auc) << '\t' << fmt(r.eer) << '\t'
        << fmt(r.final_elbo) << '\n';
  }
  const auto acc = result.accuracy(), sel = result.selected(), auc = result.auc(), eer = result.eer();
  out << "mean\t\t\t\t\t" << fmt(acc.mean) << '\t' << fmt(sel.mean) << '\t' << fmt(auc.mean) << '\t' << fmt(eer.mean)
      << "\t\n";
  out << "sd\t\t\t\t\t" << fmt(acc.sd) << '\t' << fmt(sel.sd) << '\t' << fmt(auc.sd) << '\t' << fmt(eer.sd) << "\t\n";
}

void write_summary_json(const ExperimentResult& result, std::ostream& out) {
  const auto& c = result.config;
  auto agg = [](const Aggregate& a) { return nlohmann::json{{"mean", a.mean}, {"sd", a.sd}}; };
  nlohmann::json doc{
      {"dataset", c.dataset.string()},
      {"replications", c.replications},
      {"train_fraction", c.train_fraction},
      {"split", "stratified"},
      {"scenario", c.scenario},
      {"hyperparameters", hyper_to_json(c.hyper())},
      {"base_seed", c.base_seed},
      {"selection_threshold", c.selection_threshold},
      {"normalize", c.normalize},
      {"positive_class", result.positive_class},
      {"test_accuracy_percent", agg(result.accuracy())},
      {"selected_kernels", agg(result.selected())},
      {"auc", agg(result.auc())},
      {"eer", agg(result.eer())}};
  out << doc.dump(2) << '\n';
}

void write_timing_table(const ExperimentResult& result, std::ostream& out) {
  out << "replication\ttrain_seconds\tkernel_seconds\n";
  for (const auto& r : result.rows) {
    out << r.replication << '\t' << fmt(r.train_seconds) << '\t' << fmt(r.kernel_seconds) << '\n';
  }
  const auto t = result.train_seconds();
  out << "mean\t" << fmt(t.mean) << "\t\n";
  out << "sd\t" << fmt(t.sd) << "\t\n";
}

void save_benchmark(const ExperimentResult& result, const std::filesystem::path& path) {
  auto with = [&](const char* suffix) {
    auto p = path;
    p += suffix;
    return p;
  };
  std::ostringstream table, summary, timing;
  write_results_table(result, table);
  write_summary_json(result, summary);
  write_timing_table(result, timing);
  write_file_atomically(with(".summary.json"), summary.str());
  write_file_atomically(with(".timing.tsv"), timing.str());
  write_file_atomically(path, table.str());
}

}  // namespace bemkl
