#include "bemkl/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bemkl/bench.hpp"
#include "bemkl/bundle_io.hpp"
#include "bemkl/config.hpp"
#include "bemkl/dataset.hpp"
#include "bemkl/engine.hpp"
#include "bemkl/error.hpp"
#include "bemkl/model_io.hpp"
#include "bemkl/multiclass.hpp"
#include "bemkl/predictor.hpp"

namespace bemkl {

namespace {

namespace fs = std::filesystem;

struct KernelsArgs {
  std::string features, test, out;
  bool no_normalize = false;
  bool no_standardize = false;
};

struct TrainArgs {
  std::string bundle, labels, out;
  std::string scenario = "non-sparse";
  std::optional<double> alpha_lambda, beta_lambda, alpha_gamma, beta_gamma, alpha_omega, beta_omega;
  double nu = 1.0;
  int iterations = 200;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  bool random_init = false;
  double selection_threshold = 1e-3;
  std::string multiclass;
  std::size_t threads = 1;
  bool no_covariance = false;
  bool verbose = false;
};

struct PredictArgs {
  std::string model, bundle, out, labels;
  bool propagate_variance = false;
};

struct BenchArgs {
  std::string dataset, out;
  int replications = 20;
  double train_fraction = 0.7;
  std::string scenario = "sparse";
  std::uint64_t seed = 0;
  int iterations = 200;
  double nu = 1.0;
  std::size_t threads = 1;
  double selection_threshold = 1e-3;
  bool no_normalize = false;
  bool verbose = false;
};

struct Common {
  std::string config;
  bool show_config = false;
};

struct State {
  KernelsArgs kernels;
  TrainArgs train;
  PredictArgs predict;
  BenchArgs bench;
  Common common[4];
};

const char* const kSubcommands[] = {"kernels", "train", "predict", "bench"};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Flat key = value file; explicit flags take precedence");
  sub->add_flag("--show-config", c.show_config, "Print the effective settings and exit");
}

std::unique_ptr<CLI::App> build_app(State& s) {
  auto app = std::make_unique<CLI::App>("Bayesian efficient multiple kernel learning");
  app->require_subcommand(1);
  app->option_defaults()->always_capture_default();

  auto* k = app->add_subcommand("kernels", "Build a Gaussian/polynomial kernel bundle from feature files");
  k->add_option("--features", s.kernels.features, "Training features, label in the last column");
  k->add_option("--test", s.kernels.test, "Test features, label in the last column");
  k->add_option("--out", s.kernels.out, "Bundle file to write");
  k->add_flag("--no-normalize", s.kernels.no_normalize, "Skip spherical normalization");
  k->add_flag("--no-standardize", s.kernels.no_standardize, "Use the features as given instead of z-scoring");
  add_common(k, s.common[0]);

  auto* t = app->add_subcommand("train", "Fit a model on a kernel bundle");
  auto& ta = s.train;
  t->add_option("--bundle", ta.bundle, "Kernel bundle");
  t->add_option("--labels", ta.labels, "Label file, one per line (default <bundle>.labels)");
  t->add_option("--out", ta.out, "Model file to write");
  t->add_option("--scenario", ta.scenario, "Hyperprior preset: sparse or non-sparse");
  t->add_option("--alpha-lambda", ta.alpha_lambda, "Shape of the prior on lambda");
  t->add_option("--beta-lambda", ta.beta_lambda, "Scale of the prior on lambda");
  t->add_option("--alpha-gamma", ta.alpha_gamma, "Shape of the prior on gamma");
  t->add_option("--beta-gamma", ta.beta_gamma, "Scale of the prior on gamma");
  t->add_option("--alpha-omega", ta.alpha_omega, "Shape of the prior on omega");
  t->add_option("--beta-omega", ta.beta_omega, "Scale of the prior on omega");
  t->add_option("--nu", ta.nu, "Margin of the truncation f y > nu");
  t->add_option("--iterations", ta.iterations, "Iteration budget");
  t->add_option("--tolerance", ta.tolerance, "Relative ELBO change for early stopping (0 = off)");
  t->add_option("--seed", ta.seed, "Seed for the random initialization");
  t->add_flag("--random-init", ta.random_init, "Jitter the initial G with seeded noise");
  t->add_option("--selection-threshold", ta.selection_threshold, "Relative |e| cutoff for selected kernels");
  t->add_option("--multiclass", ta.multiclass, "one-vs-all or shared-weights (default: binary for two classes)");
  t->add_option("--threads", ta.threads, "Concurrent one-vs-all fits");
  t->add_flag("--no-covariance", ta.no_covariance, "Do not write the full a covariance sidecar");
  t->add_flag("--verbose", ta.verbose, "Log the ELBO after every iteration");
  add_common(t, s.common[1]);

  auto* p = app->add_subcommand("predict", "Predict the test block (or training points) of a bundle");
  p->add_option("--model", s.predict.model, "Model file");
  p->add_option("--bundle", s.predict.bundle, "Kernel bundle");
  p->add_option("--out", s.predict.out, "Prediction table to write");
  p->add_option("--labels", s.predict.labels, "Truth labels (default: the bundle's label sidecar if present)");
  p->add_flag("--propagate-variance", s.predict.propagate_variance, "Add intermediate-output variance to f_var");
  add_common(p, s.common[2]);

  auto* b = app->add_subcommand("bench", "Replicated split/train/test benchmark");
  auto& ba = s.bench;
  b->add_option("--dataset", ba.dataset, "Delimited feature file, label in the last column");
  b->add_option("--out", ba.out, "Result table to write (plus .summary.json and .timing.tsv)");
  b->add_option("--replications", ba.replications, "Number of random splits");
  b->add_option("--train-fraction", ba.train_fraction, "Training share of each split");
  b->add_option("--scenario", ba.scenario, "Hyperprior preset: sparse or non-sparse");
  b->add_option("--seed", ba.seed, "Base seed; replication r uses seed + r");
  b->add_option("--iterations", ba.iterations, "Iteration budget per fit");
  b->add_option("--nu", ba.nu, "Margin of the truncation f y > nu");
  b->add_option("--threads", ba.threads, "Concurrent replications");
  b->add_option("--selection-threshold", ba.selection_threshold, "Relative |e| cutoff for selected kernels");
  b->add_flag("--no-normalize", ba.no_normalize, "Skip spherical normalization");
  b->add_flag("--verbose", ba.verbose, "Report each finished replication");
  add_common(b, s.common[3]);
  return app;
}

bool is_meta(const CLI::Option* opt) {
  const auto& n = opt->get_name();
  return n == "--help" || n == "--config" || n == "--show-config";
}

void apply_config(CLI::App* sub, const std::string& path) {
  for (const auto& entry : load_config(path)) {
    auto* opt = sub->get_option_no_throw("--" + entry.key);
    if (opt == nullptr || is_meta(opt)) {
      throw FormatError(path + ":" + std::to_string(entry.line) + ": unknown key '" + entry.key + "' for " +
                        sub->get_name());
    }
    if (opt->count() > 0) continue;
    opt->add_result(entry.value);
    opt->run_callback();
  }
}

void show_config(CLI::App* sub, std::ostream& out) {
  for (const auto* opt : sub->get_options()) {
    if (is_meta(opt)) continue;
    std::string value;
    if (!opt->results().empty()) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    auto key = opt->get_name().substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    out << key << " = " << value << '\n';
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw std::invalid_argument(std::string("missing required ") + flag);
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

fs::path with_suffix(const fs::path& p, const char* suffix) {
  auto out = p;
  out += suffix;
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_kernels(const KernelsArgs& a, std::ostream& out) {
  require(a.features, "--features");
  require(a.out, "--out");
  auto train = load_dataset(a.features);
  FeatureMatrix test;
  test.rows.resize(0, train.dim());
  if (!a.test.empty()) test = load_dataset(a.test);
  if (!a.no_standardize) standardize(train, test);

  const auto t0 = std::chrono::steady_clock::now();
  const auto bundle = build_feature_bank(train, test, BankOptions{!a.no_normalize});
  const double secs = seconds_since(t0);

  std::ostringstream buf(std::ios::binary);
  write_bundle(buf, bundle);
  write_file_atomically(with_suffix(a.out, ".labels"), format_labels(train.labels));
  if (!a.test.empty()) write_file_atomically(with_suffix(a.out, ".test_labels"), format_labels(test.labels));
  write_file_atomically(a.out, buf.str());

  out << "P=" << bundle.count() << " N=" << bundle.n_train() << " N_test=" << bundle.n_test()
      << " seconds=" << num(secs) << '\n';
  out << "gaussian kernel: " << bundle.gaussian_convention << '\n';
  if (a.no_normalize) out << "spherical normalization skipped\n";
  if (!bundle.degenerate_features.empty()) {
    out << "constant features:";
    for (auto f : bundle.degenerate_features) out << " f" << f + 1;
    out << '\n';
  }
  return 0;
}

HyperParams train_hyper(const TrainArgs& a) {
  HyperParams hp = scenario_hyperparams(a.scenario);
  if (a.alpha_lambda) hp.alpha_lambda = *a.alpha_lambda;
  if (a.beta_lambda) hp.beta_lambda = *a.beta_lambda;
  if (a.alpha_gamma) hp.alpha_gamma = *a.alpha_gamma;
  if (a.beta_gamma) hp.beta_gamma = *a.beta_gamma;
  if (a.alpha_omega) hp.alpha_omega = *a.alpha_omega;
  if (a.beta_omega) hp.beta_omega = *a.beta_omega;
  hp.nu = a.nu;
  hp.max_iterations = a.iterations;
  hp.elbo_rel_tol = a.tolerance;
  hp.validate();
  return hp;
}

void print_fit(const TrainedModel& m, const std::string& tag, std::ostream& out) {
  out << tag << "final ELBO=" << num(m.final_elbo()) << " iterations=" << m.posterior.iterations
      << " seconds=" << num(m.train_seconds) << " selected=" << selected_kernels(m).count << '\n';
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  require(a.bundle, "--bundle");
  require(a.out, "--out");
  const auto hp = train_hyper(a);
  const auto bundle = load_bundle(a.bundle);
  const auto labels = load_labels(a.labels.empty() ? with_suffix(a.bundle, ".labels") : fs::path(a.labels));
  if (static_cast<Eigen::Index>(labels.size()) != bundle.n_train()) {
    throw std::invalid_argument("label file has " + std::to_string(labels.size()) + " entries but the bundle has " +
                                std::to_string(bundle.n_train()) + " training points");
  }
  const auto enc = encode_classes(labels);
  if (enc.num_classes() < 2) throw std::invalid_argument("labels contain a single class");

  out << "hyperparameters: alpha_lambda=" << num(hp.alpha_lambda) << " beta_lambda=" << num(hp.beta_lambda)
      << " alpha_gamma=" << num(hp.alpha_gamma) << " beta_gamma=" << num(hp.beta_gamma)
      << " alpha_omega=" << num(hp.alpha_omega) << " beta_omega=" << num(hp.beta_omega) << " nu=" << num(hp.nu)
      << '\n';

  FitOptions opts;
  opts.init.random = a.random_init;
  opts.init.seed = a.seed;
  opts.selection_threshold = a.selection_threshold;
  std::mutex log;
  if (a.verbose) {
    opts.on_iteration = [&](int it, double value) {
      std::lock_guard lock(log);
      out << "iteration " << it << " elbo=" << num(value) << '\n';
    };
  }

  if (a.multiclass.empty() && enc.num_classes() == 2) {
    const auto bin = encode_binary(labels);
    auto model = fit(bundle, bin.y, hp, opts);
    model.class_names = {bin.positive, bin.negative};
    save_model(model, a.out, ModelSaveOptions{!a.no_covariance});
    print_fit(model, "", out);
    return 0;
  }
  const auto mode = a.multiclass.empty() ? MulticlassMode::OneVsAll : parse_multiclass_mode(a.multiclass);
  const auto model = mode == MulticlassMode::OneVsAll ? fit_one_vs_all(bundle, enc, hp, opts, a.threads)
                                                      : fit_shared_weights(bundle, enc, hp, opts);
  save_multiclass(model, a.out);
  out << "mode=" << to_string(mode) << " classes=" << enc.num_classes() << '\n';
  if (mode == MulticlassMode::OneVsAll) {
    for (std::size_t c = 0; c < model.models.size(); ++c) print_fit(model.models[c], model.class_names[c] + ": ", out);
  } else {
    print_fit(model.models.front(), "", out);
  }
  return 0;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  require(a.model, "--model");
  require(a.bundle, "--bundle");
  require(a.out, "--out");
  const auto mode = model_file_mode(a.model);
  const auto bundle = load_bundle(a.bundle);

  std::vector<std::string> predicted;
  std::ostringstream table;
  table << std::setprecision(12);
  if (mode == "binary") {
    const auto model = load_model(a.model);
    const auto preds = predict(model, bundle, 0, PredictOptions{a.propagate_variance});
    const bool named = model.class_names.size() == 2;
    table << "f_mean\tf_var\tp_positive\tlabel\n";
    for (const auto& p : preds) {
      predicted.push_back(named ? model.class_names[p.label() > 0 ? 0 : 1] : (p.label() > 0 ? "1" : "-1"));
      table << p.f_mean << '\t' << p.f_var << '\t' << p.p_positive << '\t' << predicted.back() << '\n';
    }
  } else {
    if (a.propagate_variance) throw std::invalid_argument("--propagate-variance applies to binary models only");
    const auto model = load_multiclass(a.model);
    const auto preds = predict_multiclass(model, bundle);
    table << "label";
    for (const auto& name : model.class_names) table << "\tscore:" << name;
    table << '\n';
    for (const auto& p : preds) {
      predicted.push_back(model.class_names[static_cast<std::size_t>(p.label)]);
      table << predicted.back();
      for (Eigen::Index c = 0; c < p.scores.size(); ++c) table << '\t' << p.scores[c];
      table << '\n';
    }
  }
  write_file_atomically(a.out, table.str());
  out << "predictions=" << predicted.size() << " written to " << a.out << '\n';

  fs::path truth_path = a.labels;
  if (truth_path.empty()) {
    const auto side = with_suffix(a.bundle, bundle.has_test() ? ".test_labels" : ".labels");
    if (fs::exists(side)) truth_path = side;
  }
  if (!truth_path.empty()) {
    const auto truth = load_labels(truth_path);
    if (truth.size() != predicted.size()) {
      throw std::invalid_argument("truth label count " + std::to_string(truth.size()) + " differs from " +
                                  std::to_string(predicted.size()) + " predictions");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
    out << "accuracy=" << num(static_cast<double>(correct) / static_cast<double>(truth.size())) << " (" << correct
        << "/" << truth.size() << ")\n";
  }
  return 0;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  require(a.dataset, "--dataset");
  require(a.out, "--out");
  ExperimentConfig cfg;
  cfg.dataset = a.dataset;
  cfg.replications = a.replications;
  cfg.train_fraction = a.train_fraction;
  cfg.scenario = a.scenario;
  cfg.base_seed = a.seed;
  cfg.iterations = a.iterations;
  cfg.nu = a.nu;
  cfg.threads = a.threads;
  cfg.selection_threshold = a.selection_threshold;
  cfg.normalize = !a.no_normalize;
  cfg.validate();
  ReplicationCallback report;
  if (a.verbose) {
    report = [&](const ReplicationResult& r) {
      out << "replication " << r.replication << " accuracy=" << num(r.accuracy) << " selected=" << r.selected
          << " seconds=" << num(r.train_seconds) << '\n';
    };
  }
  const auto result = run_benchmark(cfg, report);
  save_benchmark(result, a.out);
  const auto acc = result.accuracy(), sel = result.selected(), secs = result.train_seconds();
  out << "replications=" << result.rows.size() << " scenario=" << cfg.scenario << '\n';
  out << "accuracy=" << num(acc.mean) << "+-" << num(acc.sd) << " selected=" << num(sel.mean) << "+-"
      << num(sel.sd) << " seconds=" << num(secs.mean) << "+-" << num(secs.sd) << '\n';
  return 0;
}

}  // namespace

std::vector<std::string> subcommand_names() { return {std::begin(kSubcommands), std::end(kSubcommands)}; }

std::vector<FlagInfo> flag_registry() {
  State s;
  auto app = build_app(s);
  std::vector<FlagInfo> out;
  for (const auto* name : kSubcommands) {
    for (const auto* opt : app->get_subcommand(name)->get_options()) {
      out.push_back({name, opt->get_name(), opt->get_description()});
    }
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  State s;
  auto app = build_app(s);
  try {
    app->parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app->exit(e, out, err);
  }
  try {
    for (std::size_t i = 0; i < std::size(kSubcommands); ++i) {
      auto* sub = app->get_subcommand(kSubcommands[i]);
      if (!sub->parsed()) continue;
      if (!s.common[i].config.empty()) apply_config(sub, s.common[i].config);
      if (s.common[i].show_config) {
        show_config(sub, out);
        return 0;
      }
      switch (i) {
        case 0: return cmd_kernels(s.kernels, out);
        case 1: return cmd_train(s.train, out);
        case 2: return cmd_predict(s.predict, out);
        default: return cmd_bench(s.bench, out);
      }
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bemkl
