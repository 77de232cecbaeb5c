#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Dense>

#include "dppsd/channel.hpp"
#include "dppsd/predictor.hpp"

namespace dppsd {

struct TrainingExample {
  FeatureVector features;
  Eigen::VectorXd targets;  // g_q = sqrt(min metric of root sub-tree q), index-aligned with the constellation
};

/// Column-per-example storage, ready for full-batch training.
struct Dataset {
  int n_t = 0;
  int n_r = 0;
  int constellation_size = 0;
  Eigen::MatrixXd features;  // (2 N_t + 2) x count
  Eigen::MatrixXd targets;   // |S| x count

  Eigen::Index size() const noexcept { return features.cols(); }
  TrainingExample example(Eigen::Index i) const { return {features.col(i), targets.col(i)}; }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetOptions {
  int n_t = 16;
  int n_r = 16;
  double snr_low_db = 4.0;
  double snr_high_db = 14.0;
  std::size_t sample_count = 100000;
  std::uint64_t seed = 1;
  /// Test hook: fixed noise variance instead of a random SNR.
  std::optional<double> noise_variance_override;
};

/// Features and root-subtree targets for one received block.
TrainingExample make_training_example(const ComplexVector& z, const ComplexMatrix& r, double noise_variance,
                                      const Constellation& constellation);

/// Independent draws at uniform-random SNR; sample i uses RNG substream (seed, i).
/// Rank-deficient draws are resampled up to 16 times.
Dataset generate_dataset(const DatasetOptions& options, const Constellation& constellation);

/// Binary record stream with a self-describing header. Throws IoError.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
/// Throws IoError when unreadable, FormatError naming the field when malformed.
Dataset read_dataset(const std::filesystem::path& path);
void export_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace dppsd
