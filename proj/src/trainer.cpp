#include "dppsd/trainer.hpp"

#include <cmath>
#include <limits>

namespace dppsd {
namespace {

bool converged(const std::vector<double>& history, const TrainerConfig& config) {
  const auto p = static_cast<std::size_t>(config.patience);
  if (history.back() == 0.0) return true;
  if (history.size() <= p) return false;
  const double before = history[history.size() - 1 - p];
  return before - history.back() < config.tolerance * before;
}

void check_finite(double mse, std::size_t epoch) {
  if (!std::isfinite(mse)) throw DivergedToNonFinite(epoch);
}

// Scaled conjugate gradient (Moller, 1993) over the flattened parameters.
void run_scg(RbfnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g, const TrainerConfig& config,
             TrainingReport& report) {
  Eigen::VectorXd w = model.parameters();
  const Eigen::Index n = w.size();
  RbfnModel probe = model;

  auto loss_grad = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    probe.set_parameters(theta);
    return batch_mse_gradient(probe, x, g, grad);
  };

  Eigen::VectorXd grad;
  double e_w = loss_grad(w, grad);
  check_finite(e_w, 0);
  Eigen::VectorXd r = -grad;
  Eigen::VectorXd p = r;
  Eigen::VectorXd s;
  Eigen::VectorXd grad_plus;
  Eigen::VectorXd grad_new;
  double lambda = config.lambda_init;
  double lambda_bar = 0.0;
  double delta = 0.0;
  bool success = true;
  int since_restart = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double p2 = p.squaredNorm();
    if (p2 == 0.0) break;
    if (success) {
      const double sigma_k = config.sigma / std::sqrt(p2);
      loss_grad(w + sigma_k * p, grad_plus);
      s = (grad_plus - grad) / sigma_k;
      delta = p.dot(s);
    }
    double d = delta + (lambda - lambda_bar) * p2;
    if (d <= 0.0) {
      lambda_bar = 2.0 * (lambda - d / p2);
      d = -d + lambda * p2;
      lambda = lambda_bar;
    }
    const double mu = p.dot(r);
    if (!(mu > 0.0)) {
      // Not a descent direction: restart along the steepest descent.
      p = r;
      success = true;
      since_restart = 0;
      report.mse_history.push_back(e_w);
      if (converged(report.mse_history, config)) break;
      continue;
    }
    const double alpha = mu / d;
    const Eigen::VectorXd w_new = w + alpha * p;
    const double e_new = loss_grad(w_new, grad_new);
    const bool finite = std::isfinite(e_new);
    const double comparison = finite ? 2.0 * d * (e_w - e_new) / (mu * mu) : 0.0;

    if (finite && comparison >= 0.0) {
      w = w_new;
      e_w = e_new;
      const Eigen::VectorXd r_new = -grad_new;
      grad = grad_new;
      lambda_bar = 0.0;
      success = true;
      if (++since_restart >= n) {
        p = r_new;
        since_restart = 0;
      } else {
        const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
        p = r_new + beta * p;
      }
      r = r_new;
      if (comparison >= 0.75) lambda *= 0.25;
    } else {
      lambda_bar = lambda;
      success = false;
    }
    if (comparison < 0.25) lambda += d * (1.0 - comparison) / p2;
    lambda = std::min(lambda, 1e100);

    check_finite(e_w, static_cast<std::size_t>(epoch));
    report.mse_history.push_back(e_w);
    if (r.squaredNorm() == 0.0 || converged(report.mse_history, config)) break;
  }
  model.set_parameters(w);
}

void run_gradient_descent(RbfnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g,
                          const TrainerConfig& config, TrainingReport& report) {
  Eigen::VectorXd grad;
  double best = std::numeric_limits<double>::infinity();
  RbfnModel best_model = model;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    batch_mse_gradient(model, x, g, grad);
    model.set_parameters(model.parameters() - config.learning_rate * grad);
    const double mse = batch_mse(model, x, g);
    check_finite(mse, static_cast<std::size_t>(epoch));
    if (mse < best) {
      best = mse;
      best_model = model;
    }
    // Best-so-far, matching the returned parameters.
    report.mse_history.push_back(best);
    if (converged(report.mse_history, config)) break;
  }
  model = best_model;
}

}  // namespace

TrainerMethod parse_trainer_method(const std::string& name) {
  if (name == "scg") return TrainerMethod::ScaledConjugateGradient;
  if (name == "gd") return TrainerMethod::GradientDescent;
  throw InvalidConfig("unknown trainer method '" + name + "' (expected scg or gd)");
}

std::string to_string(TrainerMethod method) {
  return method == TrainerMethod::ScaledConjugateGradient ? "scg" : "gd";
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> feature_statistics(const Eigen::MatrixXd& features) {
  const double count = static_cast<double>(features.cols());
  Eigen::VectorXd mean = features.rowwise().mean();
  Eigen::VectorXd scale = ((features.colwise() - mean).array().square().rowwise().sum() / count).sqrt().matrix();
  for (Eigen::Index i = 0; i < scale.size(); ++i)
    if (!(scale(i) > 1e-12)) scale(i) = 1.0;
  return {mean, scale};
}

std::pair<RbfnModel, TrainingReport> train_from(RbfnModel model, const Dataset& dataset,
                                                const TrainerConfig& config) {
  if (dataset.size() < 1) throw InvalidConfig("train: empty dataset");
  if (dataset.features.rows() != model.input_dim() || dataset.targets.rows() != model.output_dim())
    throw DimensionMismatch("train: dataset does not match model architecture");
  if (config.max_epochs < 1 || config.patience < 1) throw InvalidConfig("train: max_epochs and patience must be >= 1");

  const Eigen::MatrixXd x = normalize_features(model, dataset.features);
  TrainingReport report;
  if (config.method == TrainerMethod::ScaledConjugateGradient)
    run_scg(model, x, dataset.targets, config, report);
  else
    run_gradient_descent(model, x, dataset.targets, config, report);

  report.epochs_run = report.mse_history.size();
  report.final_mse = report.mse_history.empty() ? batch_mse(model, x, dataset.targets) : report.mse_history.back();
  return {std::move(model), std::move(report)};
}

std::pair<RbfnModel, TrainingReport> train(const Dataset& dataset, const TrainerConfig& config) {
  Rng rng = make_rng(config.seed, {0x7472u});
  RbfnModel model = RbfnModel::initialize(dataset.n_t, dataset.constellation_size, rng);
  if (config.standardize_inputs) {
    auto [mean, scale] = feature_statistics(dataset.features);
    model.input_mean = std::move(mean);
    model.input_scale = std::move(scale);
  }
  return train_from(std::move(model), dataset, config);
}

}  // namespace dppsd
