#include <gtest/gtest.h>

#include "dppsd/dataset.hpp"
#include "dppsd/model_io.hpp"
#include "dppsd/trainer.hpp"

namespace dppsd {
namespace {

Dataset small_dataset(std::size_t count, std::uint64_t seed, int n_t = 4) {
  DatasetOptions o;
  o.n_t = n_t;
  o.n_r = n_t;
  o.sample_count = count;
  o.seed = seed;
  return generate_dataset(o, Constellation::qpsk());
}

double target_variance(const Dataset& ds) {
  const Eigen::VectorXd mean = ds.targets.rowwise().mean();
  return (ds.targets.colwise() - mean).squaredNorm() / static_cast<double>(ds.size());
}

TEST(Trainer, BiasOnlyFit) {
  Dataset ds;
  ds.n_t = 2;
  ds.n_r = 2;
  ds.constellation_size = 4;
  ds.features = Eigen::MatrixXd::Zero(6, 50);
  ds.targets = Eigen::Vector4d(0.5, 1.0, 1.5, 2.0).replicate(1, 50);
  TrainerConfig cfg;
  cfg.max_epochs = 500;
  const auto [model, report] = train(ds, cfg);
  EXPECT_LT(report.final_mse, 1e-6);
  const Eigen::VectorXd out = forward(model, Eigen::VectorXd::Zero(6));
  EXPECT_LT((out - Eigen::Vector4d(0.5, 1.0, 1.5, 2.0)).norm(), 1e-3);
}

TEST(Trainer, ScgHistoryNonIncreasing) {
  const Dataset ds = small_dataset(1000, 1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainerConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = 150;
    const auto [model, report] = train(ds, cfg);
    ASSERT_FALSE(report.mse_history.empty());
    EXPECT_EQ(report.epochs_run, report.mse_history.size());
    for (std::size_t i = 1; i < report.mse_history.size(); ++i)
      EXPECT_LE(report.mse_history[i], report.mse_history[i - 1]) << "seed " << seed << " epoch " << i;
    EXPECT_EQ(report.final_mse, report.mse_history.back());
    EXPECT_NEAR(report.final_mse, batch_mse(model, normalize_features(model, ds.features), ds.targets), 1e-12);
  }
}

TEST(Trainer, BeatsConstantPredictorAt16x16) {
  const Dataset ds = small_dataset(20000, 2, 16);
  TrainerConfig cfg;
  cfg.max_epochs = 100;
  const auto [model, report] = train(ds, cfg);
  EXPECT_LT(report.final_mse, target_variance(ds));
}

// Averaged over held-out samples, the Spearman correlation between predicted
// and true sub-tree distances is positive at 99% confidence.
TEST(Trainer, PredictionsRankSubtrees) {
  const Dataset train_set = small_dataset(3000, 3);
  TrainerConfig cfg;
  cfg.max_epochs = 300;
  const auto [model, report] = train(train_set, cfg);

  DatasetOptions o;
  o.n_t = 4;
  o.n_r = 4;
  o.sample_count = 2000;
  o.seed = 4;
  o.snr_low_db = o.snr_high_db = 9;
  const Dataset held_out = generate_dataset(o, Constellation::qpsk());

  auto ranks = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      double below = 0, equal = 0;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        below += v(j) < v(i);
        equal += v(j) == v(i);
      }
      r(i) = below + (equal + 1) / 2;
    }
    return r;
  };
  std::vector<double> rho;
  for (Eigen::Index i = 0; i < held_out.size(); ++i) {
    const Eigen::VectorXd a = ranks(forward(model, held_out.features.col(i)));
    const Eigen::VectorXd b = ranks(held_out.targets.col(i));
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    const double denom = ac.norm() * bc.norm();
    rho.push_back(denom > 0 ? ac.dot(bc) / denom : 0.0);
  }
  double mean = 0;
  for (double r : rho) mean += r;
  mean /= static_cast<double>(rho.size());
  double var = 0;
  for (double r : rho) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rho.size() - 1);
  const double z = mean / std::sqrt(var / static_cast<double>(rho.size()));
  EXPECT_GT(z, 2.326);
}

TEST(Trainer, DeterministicForSeed) {
  const Dataset ds = small_dataset(300, 5);
  TrainerConfig cfg;
  cfg.max_epochs = 40;
  cfg.seed = 9;
  EXPECT_EQ(model_to_json(train(ds, cfg).first), model_to_json(train(ds, cfg).first));
  cfg.seed = 10;
  EXPECT_NE(model_to_json(train(ds, cfg).first), model_to_json(train(ds, {}).first));
}

TEST(Trainer, GradientDescentSwitch) {
  const Dataset ds = small_dataset(300, 6);
  TrainerConfig cfg;
  cfg.method = parse_trainer_method("gd");
  cfg.max_epochs = 50;
  cfg.learning_rate = 1e-2;
  const auto [model, report] = train(ds, cfg);
  for (std::size_t i = 1; i < report.mse_history.size(); ++i)
    EXPECT_LE(report.mse_history[i], report.mse_history[i - 1]);
  EXPECT_LT(report.final_mse, report.mse_history.front() + 1e-12);
  EXPECT_EQ(to_string(cfg.method), "gd");
  EXPECT_THROW(parse_trainer_method("adam"), InvalidConfig);
}

TEST(Trainer, DivergenceIsReported) {
  const Dataset ds = small_dataset(100, 7);
  TrainerConfig cfg;
  cfg.method = TrainerMethod::GradientDescent;
  cfg.learning_rate = 1e200;
  cfg.max_epochs = 20;
  EXPECT_THROW(train(ds, cfg), DivergedToNonFinite);
}

TEST(Trainer, RejectsBadInput) {
  Dataset empty;
  empty.n_t = 2;
  empty.n_r = 2;
  empty.constellation_size = 4;
  empty.features.resize(6, 0);
  empty.targets.resize(4, 0);
  EXPECT_THROW(train(empty, {}), InvalidConfig);
  const Dataset ds = small_dataset(10, 8);
  TrainerConfig cfg;
  cfg.max_epochs = 0;
  EXPECT_THROW(train(ds, cfg), InvalidConfig);
}

TEST(FeatureStatistics, ConstantRowsKeepUnitScale) {
  Eigen::MatrixXd f(2, 4);
  f << 1, 2, 3, 4, 5, 5, 5, 5;
  const auto [mean, scale] = feature_statistics(f);
  EXPECT_DOUBLE_EQ(mean(0), 2.5);
  EXPECT_DOUBLE_EQ(scale(0), std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(mean(1), 5.0);
  EXPECT_DOUBLE_EQ(scale(1), 1.0);
}

}  // namespace
}  // namespace dppsd
