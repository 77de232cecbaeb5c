// Command-line front end: gen-dataset, train, ber, complexity.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dppsd/bench.hpp"

namespace {

using namespace dppsd;
using namespace dppsd::bench;

struct CommonArgs {
  std::string config;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_t;
  std::optional<int> n_r;
  std::optional<std::string> constellation;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--config", a.config, "key = value experiment file")->check(CLI::ExistingFile);
  app->add_option("--set", a.settings, "override one setting, key=value (repeatable)");
  app->add_option("--seed", a.seed, "master seed");
  app->add_option("--nt", a.n_t, "transmit antennas");
  app->add_option("--nr", a.n_r, "receive antennas");
  app->add_option("--constellation", a.constellation, "qpsk, 16qam or 64qam");
  app->add_option("--threads", a.threads, "worker threads (0: all cores)");
}

ExperimentSpec resolve(const CommonArgs& a) {
  ExperimentSpec spec;
  if (!a.config.empty()) spec = load_config(a.config, spec);
  for (const auto& kv : a.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidConfig("--set expects key=value, got '" + kv + "'");
    apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed) {
    spec.seed = *a.seed;
    spec.seed_given = true;
  }
  if (a.n_t) spec.n_t = *a.n_t;
  if (a.n_r) spec.n_r = *a.n_r;
  if (a.constellation) spec.constellation = *a.constellation;
  if (a.threads) spec.threads = *a.threads;
  if (!spec.seed_given) std::cerr << "warning: no seed given, using seed " << spec.seed << '\n';
  return spec;
}

void print_rows(const std::vector<ResultRow>& rows) {
  std::printf("%8s  %-16s %12s %14s %12s %10s\n", "snr_db", "detector", "ber", "tree_ops", "nn_ops", "subtrees");
  for (const auto& r : rows)
    std::printf("%8.2f  %-16s %12.4e %14.1f %12.1f %10.3f\n", r.snr_db, r.detector.c_str(), r.ber, r.avg_tree_ops(),
                r.avg_nn_ops(), r.avg_subtrees_searched);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-aided sphere decoding experiments"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  std::string gen_out;
  std::optional<std::size_t> gen_count;
  std::optional<double> gen_low, gen_high;
  std::string gen_csv;
  auto* gen = app.add_subcommand("gen-dataset", "simulate training samples");
  add_common(gen, gen_args);
  gen->add_option("-o,--output", gen_out, "dataset file");
  gen->add_option("--count", gen_count, "number of samples");
  gen->add_option("--snr-low", gen_low, "lower end of the uniform SNR range (dB)");
  gen->add_option("--snr-high", gen_high, "upper end of the uniform SNR range (dB)");
  gen->add_option("--csv", gen_csv, "also export the samples as CSV");

  CommonArgs train_args;
  std::string train_data, train_model, train_method, train_report;
  std::optional<int> train_epochs;
  auto* trn = app.add_subcommand("train", "fit the radius predictor");
  add_common(trn, train_args);
  trn->add_option("-d,--dataset", train_data, "dataset file");
  trn->add_option("-o,--output", train_model, "model file (JSON)");
  trn->add_option("--method", train_method, "scg or gd");
  trn->add_option("--epochs", train_epochs, "maximum epochs");
  trn->add_option("--report", train_report, "training report (JSON)");

  CommonArgs ber_args;
  std::string ber_out, ber_model, ber_detectors;
  std::optional<std::size_t> ber_trials, ber_checkpoint;
  std::vector<double> ber_snr;
  std::optional<double> ber_l1, ber_l2;
  std::optional<std::size_t> stop_after;
  bool noiseless = false;
  auto* ber = app.add_subcommand("ber", "BER and complexity sweep");
  auto* cx = app.add_subcommand("complexity", "sweep plus ratios against se-sd");
  for (auto* sub : {ber, cx}) {
    add_common(sub, ber_args);
    sub->add_option("-o,--output", ber_out, "results CSV");
    sub->add_option("-m,--model", ber_model, "model file (JSON)");
    sub->add_option("--detectors", ber_detectors, "comma separated detector ids");
    sub->add_option("--trials", ber_trials, "trials per SNR point");
    sub->add_option("--snr", ber_snr, "SNR grid in dB")->delimiter(',');
    sub->add_option("--lambda1", ber_l1, "fixed radius scale");
    sub->add_option("--lambda2", ber_l2, "fixed termination scale");
    sub->add_option("--checkpoint-every", ber_checkpoint, "trials per checkpoint block");
    sub->add_flag("--noiseless", noiseless, "transmit without noise");
    sub->add_option("--stop-after-blocks", stop_after)->group("");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ExperimentSpec spec = resolve(gen_args);
      if (!gen_out.empty()) spec.dataset_path = gen_out;
      if (gen_count) spec.sample_count = *gen_count;
      if (gen_low) spec.snr_low_db = *gen_low;
      if (gen_high) spec.snr_high_db = *gen_high;
      const auto summary = cmd_gen_dataset(spec);
      if (!gen_csv.empty()) export_dataset_csv(gen_csv, read_dataset(spec.dataset_path));
      std::printf("wrote %zu samples to %s (target mean %.4f, min %.4f, max %.4f)\n", summary.count,
                  spec.dataset_path.c_str(), summary.target_mean, summary.target_min, summary.target_max);
    } else if (*trn) {
      ExperimentSpec spec = resolve(train_args);
      if (!train_data.empty()) spec.dataset_path = train_data;
      if (!train_model.empty()) spec.model_path = train_model;
      if (!train_method.empty()) spec.trainer.method = parse_trainer_method(train_method);
      if (train_epochs) spec.trainer.max_epochs = *train_epochs;
      if (!train_report.empty()) spec.report_path = train_report;
      const auto report = cmd_train(spec);
      std::printf("trained %zu epochs, final mse %.6g, model written to %s\n", report.epochs_run, report.final_mse,
                  spec.model_path.c_str());
    } else {
      ExperimentSpec spec = resolve(ber_args);
      if (!ber_out.empty()) spec.output_path = ber_out;
      if (!ber_model.empty()) spec.model_path = ber_model;
      if (!ber_detectors.empty()) apply_setting(spec, "detectors", ber_detectors);
      if (ber_trials) spec.trials_per_point = *ber_trials;
      if (!ber_snr.empty()) spec.snr_grid_db = ber_snr;
      if (ber_l1) spec.lambda1 = *ber_l1;
      if (ber_l2) spec.lambda2 = *ber_l2;
      if (ber_checkpoint) spec.checkpoint_every = *ber_checkpoint;
      if (noiseless) spec.noiseless = true;
      SweepOptions options;
      options.stop_after_blocks = stop_after;
      if (*ber) {
        const auto result = cmd_ber(spec, options);
        if (!result.complete) {
          std::printf("stopped early; resume with the same command\n");
          return 3;
        }
        print_rows(result.rows);
      } else {
        const auto table = cmd_complexity(spec, options);
        if (table.empty()) {
          std::printf("stopped early; resume with the same command\n");
          return 3;
        }
        std::printf("%8s  %-16s %14s %10s %10s %12s\n", "snr_db", "detector", "tree_ops", "ratio", "ratio_nn",
                    "ber");
        for (const auto& c : table)
          std::printf("%8.2f  %-16s %14.1f %10.4f %10.4f %12.4e\n", c.snr_db, c.detector.c_str(), c.tree_ops,
                      c.ratio_tree, c.ratio_total, c.ber);
      }
    }
  } catch (const dppsd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
