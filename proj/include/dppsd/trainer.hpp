#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dppsd/dataset.hpp"
#include "dppsd/predictor.hpp"

namespace dppsd {

enum class TrainerMethod { ScaledConjugateGradient, GradientDescent };

TrainerMethod parse_trainer_method(const std::string& name);
std::string to_string(TrainerMethod method);

struct TrainerConfig {
  TrainerMethod method = TrainerMethod::ScaledConjugateGradient;
  int max_epochs = 2000;
  /// SCG finite-difference scale for the Hessian-vector product.
  double sigma = 1e-4;
  double lambda_init = 1e-6;
  /// Step size of the plain gradient-descent trainer.
  double learning_rate = 1e-4;
  /// Stop when the relative MSE improvement over `patience` epochs falls below this.
  double tolerance = 1e-8;
  int patience = 10;
  std::uint64_t seed = 1;
  bool standardize_inputs = true;
};

struct TrainingReport {
  std::size_t epochs_run = 0;
  std::vector<double> mse_history;
  double final_mse = 0;
};

/// Per-feature mean and standard deviation over the dataset columns
/// (unit scale for constant features).
std::pair<Eigen::VectorXd, Eigen::VectorXd> feature_statistics(const Eigen::MatrixXd& features);

/// Full-batch MSE minimization. Throws DivergedToNonFinite.
std::pair<RbfnModel, TrainingReport> train(const Dataset& dataset, const TrainerConfig& config);

/// Same, continuing from `initial` (its normalization is kept).
std::pair<RbfnModel, TrainingReport> train_from(RbfnModel initial, const Dataset& dataset,
                                                const TrainerConfig& config);

}  // namespace dppsd
