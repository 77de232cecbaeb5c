#pragma once

#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "dppsd/channel.hpp"
#include "dppsd/predictor.hpp"
#include "dppsd/search.hpp"

namespace dppsd {

inline constexpr double kDisabled = std::numeric_limits<double>::infinity();

/// Switches and scale factors of the learning-aided detector. A lambda of
/// +inf disables the matching sub-scheme.
struct DetectorConfig {
  double lambda1 = kDisabled;
  double lambda2 = kDisabled;
  double epsilon_complement = 0.999;
  bool enable_nn_radius = true;
  bool enable_nn_ordering = true;
  bool enable_early_termination = true;

  static DetectorConfig all_schemes(double lambda1, double lambda2);
  static DetectorConfig radius_only(double lambda1);
  static DetectorConfig ordering_only();
  static DetectorConfig ordering_with_termination(double lambda2);

  /// Throws InvalidConfig; early termination requires NN ordering.
  void validate() const;
};

struct LambdaPoint {
  double snr_db = 0;
  double lambda1 = 1;
  double lambda2 = 1;
};

/// (lambda1, lambda2) per antenna count on a grid of SNR points. Between
/// grid points the nearest listed SNR wins, ties toward the higher SNR.
class LambdaSchedule {
public:
  /// Tuned values for 16x16 and 24x24 QPSK at 5, 7, 9, 11, 13 dB.
  static LambdaSchedule qpsk_defaults();

  void set(int n_t, std::vector<LambdaPoint> points);
  bool covers(int n_t) const { return entries_.count(n_t) != 0; }
  /// Throws NoSchedule.
  std::pair<double, double> lookup(int n_t, double snr_db) const;
  const std::map<int, std::vector<LambdaPoint>>& entries() const noexcept { return entries_; }

private:
  std::map<int, std::vector<LambdaPoint>> entries_;
};

std::pair<double, double> lambda_lookup(const LambdaSchedule& schedule, int n_t, double snr_db);

struct SortedPredictions {
  Eigen::VectorXd g_tilde;       // ascending
  std::vector<int> permutation;  // rank -> constellation index
};

/// Stable ascending sort; equal predictions keep constellation index order.
SortedPredictions sorted_predictions(const Eigen::VectorXd& raw);

/// min(lambda1 * g_tilde_1, conventional); lambda1 = +inf yields `conventional`.
double nn_initial_radius(double g_tilde_1, double lambda1, double conventional);

/// lambda2 * current_radius < next_prediction; lambda2 = +inf never terminates.
bool early_termination_check(double lambda2, double current_radius, double next_prediction);

/// QR front end shared by all detectors for one received block.
struct ReceiverFront {
  QrFactors<double> qr;
  ComplexVector z;               // Q_1^H y
  double residual_offset = 0;    // ||Q_2^H y||^2
  OpCounter ops;                 // QRD and projections
  int n_r() const noexcept { return static_cast<int>(qr.q1.rows()); }
  int n_t() const noexcept { return static_cast<int>(qr.q1.cols()); }
};

/// Throws RankDeficient.
ReceiverFront prepare_receiver(const ComplexVector& y, const ComplexMatrix& h);

struct DetectionResult {
  ComplexVector solution;
  std::vector<int> indices;
  double metric = 0;  // ||z - R x||^2 of `solution`
  bool used_fallback = false;
  int subtrees_searched = 0;
  bool terminated_early = false;
  OpCounter tree_ops;
  OpCounter nn_ops;
  OpCounter prep_ops;  // QRD, projections and feature extraction
  std::uint64_t nodes_visited = 0;
  double initial_radius = 0;  // reduced-domain distance the search started with
  double final_radius = 0;    // radius in force when the search stopped
  std::vector<int> subtree_order;
  Eigen::VectorXd g_tilde;    // sorted clamped predictions (learning-aided detector only)
};

enum class BaselineRadius { Conventional, Infinite };

/// Conventional SE sphere decoder with ZF fallback.
DetectionResult se_detect(const ReceiverFront& front, double noise_variance, const Constellation& constellation,
                          BaselineRadius radius = BaselineRadius::Conventional, double epsilon_complement = 0.999);
DetectionResult se_detect(const ComplexVector& y, const ComplexMatrix& h, double noise_variance,
                          const Constellation& constellation, BaselineRadius radius = BaselineRadius::Conventional,
                          double epsilon_complement = 0.999);

/// Learning-aided detector with a model folded for inference. Immutable and
/// shareable across threads.
class DppDetector {
public:
  /// Throws DimensionMismatch when the model does not match the constellation.
  DppDetector(const RbfnModel& model, const Constellation& constellation);

  /// Raw network output for this block (before clamping).
  Eigen::VectorXd predict(const ReceiverFront& front, double noise_variance, OpCounter* nn_ops = nullptr,
                          OpCounter* prep_ops = nullptr) const;

  DetectionResult detect(const ReceiverFront& front, double noise_variance, const DetectorConfig& config) const;

  const Constellation& constellation() const noexcept { return constellation_; }
  int n_t() const noexcept { return net_.n_t(); }

private:
  FoldedRbfn net_;
  Constellation constellation_;
};

DetectionResult dpp_detect(const ComplexVector& y, const ComplexMatrix& h, double noise_variance,
                           const RbfnModel& model, const DetectorConfig& config, const Constellation& constellation);

}  // namespace dppsd
