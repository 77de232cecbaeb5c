#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dppsd/bench.hpp"
#include "dppsd/model_io.hpp"

namespace dppsd::bench {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dppsd_test_bench";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A small trained 4x4 model, written once per process.
const fs::path& model_file() {
  static const fs::path path = [] {
    ExperimentSpec spec;
    spec.n_t = spec.n_r = 4;
    spec.sample_count = 1500;
    spec.seed = 3;
    spec.dataset_path = scratch("model_ds.bin").string();
    spec.model_path = scratch("model.json").string();
    spec.trainer.max_epochs = 150;
    cmd_gen_dataset(spec);
    cmd_train(spec);
    return fs::path(spec.model_path);
  }();
  return path;
}

ExperimentSpec small_sweep() {
  ExperimentSpec spec;
  spec.n_t = spec.n_r = 4;
  spec.snr_grid_db = {5, 9};
  spec.trials_per_point = 120;
  spec.lambda1 = 1.3;
  spec.lambda2 = 1.4;
  spec.seed = 11;
  spec.detectors = {DetectorKind::SeSd, DetectorKind::DppRadius, DetectorKind::DppOrdering,
                    DetectorKind::DppOrderingEt, DetectorKind::DppFull};
  spec.model_path = model_file().string();
  return spec;
}

TEST(Config, ParsesFileSyntax) {
  const auto spec = parse_config(R"(# experiment
n_t = 16
n_r = 16   # square
snr_grid_db = 5, 7.5, 9
detectors = se-sd, dpp-full, ml
seed = 42
lambda1 = inf
noiseless = true
trainer_method = gd
)");
  EXPECT_EQ(spec.n_t, 16);
  EXPECT_EQ(spec.snr_grid_db, (std::vector<double>{5, 7.5, 9}));
  EXPECT_EQ(spec.detectors, (std::vector<DetectorKind>{DetectorKind::SeSd, DetectorKind::DppFull, DetectorKind::Ml}));
  EXPECT_EQ(spec.seed, 42u);
  EXPECT_TRUE(spec.seed_given);
  EXPECT_TRUE(std::isinf(*spec.lambda1));
  EXPECT_TRUE(spec.noiseless);
  EXPECT_EQ(spec.trainer.method, TrainerMethod::GradientDescent);
}

TEST(Config, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const InvalidConfig& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("n_t = four").find("n_t"), std::string::npos);
  EXPECT_NE(message("colour = red").find("colour"), std::string::npos);
  EXPECT_NE(message("detectors = se-sd, magic").find("magic"), std::string::npos);
  EXPECT_NE(message("just words").find("line 1"), std::string::npos);
}

TEST(Config, ValidationRules) {
  ExperimentSpec spec = small_sweep();
  spec.trials_per_point = 0;
  EXPECT_THROW(spec.validate_sweep(), InvalidConfig);
  spec = small_sweep();
  spec.model_path.clear();
  EXPECT_THROW(spec.validate_sweep(), InvalidConfig);
  spec = small_sweep();
  spec.n_t = 12;
  spec.n_r = 12;
  spec.detectors = {DetectorKind::Ml};
  EXPECT_THROW(spec.validate_sweep(), InvalidConfig);
  spec = small_sweep();
  spec.sample_count = 0;
  spec.dataset_path = scratch("never.bin").string();
  EXPECT_THROW(cmd_gen_dataset(spec), InvalidConfig);
}

TEST(Csv, RoundTripsExactly) {
  ResultRow r;
  r.snr_db = 7.25;
  r.detector = "dpp-full";
  r.trials = 1000;
  r.bit_errors = 17;
  r.bits_simulated = 32000;
  r.ber = 17.0 / 32000.0;
  r.avg_tree_mults = 1.0 / 3.0;
  r.avg_tree_adds = 123456.789012345;
  r.avg_nn_mults = 1e-300;
  r.avg_nn_adds = 2.5;
  r.avg_prep_mults = 0.1;
  r.avg_prep_adds = 0.2;
  r.avg_nodes_visited = 3.14159;
  r.avg_subtrees_searched = 1.75;
  r.early_termination_rate = 0.4;
  r.fallback_rate = 0.001;
  std::stringstream ss;
  write_results_csv(ss, {r, r});
  const auto back = read_results_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  const ResultRow& b = back[0];
  EXPECT_EQ(b.snr_db, r.snr_db);
  EXPECT_EQ(b.detector, r.detector);
  EXPECT_EQ(b.trials, r.trials);
  EXPECT_EQ(b.bit_errors, r.bit_errors);
  EXPECT_EQ(b.ber, r.ber);
  EXPECT_EQ(b.avg_tree_mults, r.avg_tree_mults);
  EXPECT_EQ(b.avg_tree_adds, r.avg_tree_adds);
  EXPECT_EQ(b.avg_nn_mults, r.avg_nn_mults);
  EXPECT_EQ(b.fallback_rate, r.fallback_rate);
  std::stringstream again;
  write_results_csv(again, back);
  std::stringstream first;
  write_results_csv(first, {r, r});
  EXPECT_EQ(again.str(), first.str());
}

TEST(Csv, MalformedInputNamesColumn) {
  auto field_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_results_csv(in);
    } catch (const FormatError& e) {
      return e.field();
    }
    return std::string("none");
  };
  std::stringstream ss;
  write_results_csv(ss, {ResultRow{}});
  std::string good = ss.str();
  EXPECT_EQ(field_of(good), "none");
  EXPECT_EQ(field_of("snr,detector\n"), "header");
  std::string bad = good;
  bad.replace(bad.find("\n0,") + 1, 1, "x");
  EXPECT_EQ(field_of(bad), "snr_db");
  EXPECT_EQ(field_of(good + "1,2,3\n"), "row");
}

TEST(Sweep, SeSdMatchesMlBitErrors) {
  ExperimentSpec spec;
  spec.n_t = spec.n_r = 4;
  spec.snr_grid_db = {4, 8};
  spec.trials_per_point = 500;
  spec.detectors = {DetectorKind::SeSd, DetectorKind::SeSdInfinite, DetectorKind::Ml};
  spec.seed = 5;
  const auto result = run_sweep(spec, std::nullopt);
  ASSERT_TRUE(result.complete);
  ASSERT_EQ(result.rows.size(), 6u);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& se = result.rows[3 * s];
    const auto& inf = result.rows[3 * s + 1];
    const auto& ml = result.rows[3 * s + 2];
    EXPECT_EQ(se.detector, "se-sd");
    EXPECT_EQ(ml.detector, "ml");
    EXPECT_EQ(inf.bit_errors, ml.bit_errors);
    // The finite radius only matters when its sphere is empty (fallback).
    if (se.fallback_rate == 0) EXPECT_EQ(se.bit_errors, ml.bit_errors);
    EXPECT_EQ(ml.bits_simulated, 500u * 4u * 2u);
    EXPECT_GT(ml.bit_errors, 0u);
  }
}

TEST(Sweep, NoiselessHasZeroBer) {
  ExperimentSpec spec = small_sweep();
  spec.noiseless = true;
  spec.trials_per_point = 100;
  const auto result = run_sweep(spec, load_model(model_file()));
  // Early termination may stop before the zero-metric sub-tree; everything else is exact.
  for (const auto& r : result.rows) {
    if (r.detector == "dpp-ordering-et" || r.detector == "dpp-full") {
      if (r.bit_errors > 0) EXPECT_GT(r.early_termination_rate, 0.0) << r.detector;
    } else {
      EXPECT_EQ(r.bit_errors, 0u) << r.detector;
    }
  }
}

TEST(Sweep, DeterministicAcrossRunsAndThreads) {
  ExperimentSpec spec = small_sweep();
  const auto model = load_model(model_file());
  spec.threads = 1;
  const auto a = run_sweep(spec, model);
  spec.threads = 3;
  const auto b = run_sweep(spec, model);
  std::stringstream sa, sb;
  write_results_csv(sa, a.rows);
  write_results_csv(sb, b.rows);
  EXPECT_EQ(sa.str(), sb.str());
  spec.seed = 12;
  std::stringstream sc;
  write_results_csv(sc, run_sweep(spec, model).rows);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Sweep, ResumeMatchesUninterruptedRun) {
  ExperimentSpec spec = small_sweep();
  spec.checkpoint_every = 50;
  spec.output_path = scratch("resume.csv").string();
  const auto ckpt = checkpoint_path_for(spec);
  fs::remove(ckpt);
  const auto model = load_model(model_file());

  const auto full = run_sweep(spec, model);
  for (std::size_t stop : {1u, 3u, 4u}) {
    SweepOptions opts;
    opts.checkpoint_path = ckpt;
    opts.stop_after_blocks = stop;
    const auto partial = run_sweep(spec, model, opts);
    EXPECT_FALSE(partial.complete);
    EXPECT_TRUE(fs::exists(ckpt));
    opts.stop_after_blocks.reset();
    const auto resumed = run_sweep(spec, model, opts);
    ASSERT_TRUE(resumed.complete);
    EXPECT_FALSE(fs::exists(ckpt));
    std::stringstream a, b;
    write_results_csv(a, full.rows);
    write_results_csv(b, resumed.rows);
    EXPECT_EQ(a.str(), b.str()) << "stopped after " << stop;
  }

  // A checkpoint from a different experiment is refused.
  SweepOptions opts;
  opts.checkpoint_path = ckpt;
  opts.stop_after_blocks = 1;
  run_sweep(spec, model, opts);
  spec.seed = 99;
  opts.stop_after_blocks.reset();
  EXPECT_THROW(run_sweep(spec, model, opts), InvalidConfig);
  fs::remove(ckpt);
}

TEST(Sweep, ModelMismatchRejected) {
  ExperimentSpec spec = small_sweep();
  spec.n_t = spec.n_r = 6;
  EXPECT_THROW(run_sweep(spec, load_model(model_file())), DimensionMismatch);
  EXPECT_THROW(run_sweep(small_sweep(), std::nullopt), InvalidConfig);
}

TEST(Complexity, RatiosAndAblationOrder) {
  ExperimentSpec spec = small_sweep();
  spec.trials_per_point = 300;
  const auto result = run_sweep(spec, load_model(model_file()));
  const auto table = complexity_table(result.rows);
  ASSERT_EQ(table.size(), result.rows.size());
  for (std::size_t s = 0; s < 2; ++s) {
    const auto* row = &table[5 * s];
    EXPECT_EQ(row[0].detector, "se-sd");
    EXPECT_DOUBLE_EQ(row[0].ratio_tree, 1.0);
    EXPECT_DOUBLE_EQ(row[0].ratio_total, 1.0);
    // ordering-only vs ordering+ET on the same corpus: termination only removes work
    EXPECT_EQ(row[2].detector, "dpp-ordering");
    EXPECT_EQ(row[3].detector, "dpp-ordering-et");
    EXPECT_GE(row[2].ratio_tree, row[3].ratio_tree);
    // Ordering alone stays close to the baseline.
    EXPECT_GT(row[2].ratio_tree, 0.5);
    EXPECT_LT(row[2].ratio_tree, 1.5);
    EXPECT_GT(row[4].total_ops, row[4].tree_ops);
  }
  std::vector<ResultRow> no_base(result.rows.begin() + 1, result.rows.begin() + 5);
  EXPECT_THROW(complexity_table(no_base), InvalidConfig);
}

TEST(Commands, FilesAreDeterministic) {
  ExperimentSpec spec;
  spec.n_t = spec.n_r = 4;
  spec.sample_count = 200;
  spec.seed = 8;
  spec.dataset_path = scratch("a.bin").string();
  cmd_gen_dataset(spec);
  const std::string first = slurp(spec.dataset_path);
  spec.dataset_path = scratch("b.bin").string();
  const auto summary = cmd_gen_dataset(spec);
  EXPECT_EQ(summary.count, 200u);
  EXPECT_EQ(first, slurp(spec.dataset_path));

  spec.trainer.max_epochs = 30;
  spec.model_path = scratch("m1.json").string();
  cmd_train(spec);
  const std::string m1 = slurp(spec.model_path);
  EXPECT_TRUE(fs::exists(scratch("m1_report.json")));
  spec.model_path = scratch("m2.json").string();
  cmd_train(spec);
  EXPECT_EQ(m1, slurp(spec.model_path));

  ExperimentSpec sweep = small_sweep();
  sweep.output_path = scratch("cx.csv").string();
  const auto table = cmd_complexity(sweep);
  EXPECT_FALSE(table.empty());
  EXPECT_TRUE(fs::exists(scratch("cx.json")));
  EXPECT_TRUE(fs::exists(scratch("cx_complexity.csv")));
  EXPECT_EQ(read_results_csv(fs::path(sweep.output_path)).size(), 10u);
}

TEST(Lambdas, ScheduleAndOverrides) {
  ExperimentSpec spec;
  spec.n_t = spec.n_r = 16;
  EXPECT_EQ(sweep_lambdas(spec, 9), std::make_pair(1.4, 1.5));
  spec.lambda2 = 2.0;
  EXPECT_EQ(sweep_lambdas(spec, 9), std::make_pair(1.4, 2.0));
  spec.n_t = spec.n_r = 8;
  spec.lambda2.reset();
  EXPECT_THROW(sweep_lambdas(spec, 9), NoSchedule);
  spec.lambda_schedule_n_t = 24;
  EXPECT_EQ(sweep_lambdas(spec, 13), std::make_pair(1.7, 1.6));
}

}  // namespace
}  // namespace dppsd::bench
