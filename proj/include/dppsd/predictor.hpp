#pragma once

#include <Eigen/Dense>

#include "dppsd/numerics.hpp"

namespace dppsd {

/// Reduced NN input: [z^H z, Re(R^H z), Im(R^H z), sigma_v^2], length 2 N_t + 2.
using FeatureVector = Eigen::VectorXd;

constexpr int feature_dim(int n_t) noexcept { return 2 * n_t + 2; }
constexpr int hidden_dim(int n_t, int constellation_size) noexcept { return 2 * n_t + 2 * constellation_size; }

FeatureVector extract_features(const ComplexVector& z, const ComplexMatrix& r, double noise_variance,
                               OpCounter* counter = nullptr);

/// exp(-gamma^2): Gaussian RBF with zero center and unit width.
inline double gaussian_activation(double gamma) noexcept { return std::exp(-gamma * gamma); }

/// Single-hidden-layer Gaussian RBF network predicting one root-subtree
/// distance per constellation symbol.
///
/// Inputs are standardized with (e - input_mean) ./ input_scale before the
/// first layer. The statistics are part of the model and travel with it.
struct RbfnModel {
  int n_t = 0;
  int constellation_size = 0;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // output x hidden
  Eigen::VectorXd b2;

  int input_dim() const noexcept { return feature_dim(n_t); }
  int hidden_width() const noexcept { return hidden_dim(n_t, constellation_size); }
  int output_dim() const noexcept { return constellation_size; }

  /// Uniform in +-1/sqrt(fan_in), identity normalization.
  static RbfnModel initialize(int n_t, int constellation_size, Rng& rng);

  /// Throws DimensionMismatch on inconsistent shapes, InvalidConfig on non-finite values.
  void validate() const;

  Eigen::Index parameter_count() const noexcept;
  /// Flattened [w1 (column-major), b1, w2 (column-major), b2].
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  friend bool operator==(const RbfnModel& a, const RbfnModel& b);
};

/// w2 phi(w1 e_n + b1) + b2 on standardized features. Throws DimensionMismatch.
Eigen::VectorXd forward(const RbfnModel& model, const FeatureVector& features);

/// Column-wise standardization of raw feature columns.
Eigen::MatrixXd normalize_features(const RbfnModel& model, const Eigen::MatrixXd& features);

/// Network output for already standardized columns.
Eigen::MatrixXd network_output(const RbfnModel& model, const Eigen::MatrixXd& normalized);

/// d output / d parameters for one sample, |S| x parameter_count, in the
/// `parameters()` layout.
Eigen::MatrixXd output_jacobian(const RbfnModel& model, const FeatureVector& features);

/// (1/M) sum_m ||g_hat_m - g_m||^2 over standardized columns.
double batch_mse(const RbfnModel& model, const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& targets);

/// Batch MSE and its gradient in the `parameters()` layout.
double batch_mse_gradient(const RbfnModel& model, const Eigen::MatrixXd& normalized,
                          const Eigen::MatrixXd& targets, Eigen::VectorXd& gradient);

/// Inference network with the input standardization folded into the first
/// layer, so a call costs exactly `inference_cost`.
class FoldedRbfn {
public:
  explicit FoldedRbfn(const RbfnModel& model);

  Eigen::VectorXd evaluate(const FeatureVector& features, OpCounter* counter = nullptr) const;

  /// H I + |S| H + H mults and H I + |S| H + H + |S| adds with I = 2 N_t + 2,
  /// H = 2 N_t + 2|S|: one mult and one add per weight, a bias add per node,
  /// one square per activation.
  static OpCounter inference_cost(int n_t, int constellation_size) noexcept;

  int n_t() const noexcept { return n_t_; }
  int constellation_size() const noexcept { return static_cast<int>(b2_.size()); }

private:
  int n_t_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
};

}  // namespace dppsd
