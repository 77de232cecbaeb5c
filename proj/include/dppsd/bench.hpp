#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dppsd/dataset.hpp"
#include "dppsd/dpp.hpp"
#include "dppsd/trainer.hpp"

namespace dppsd::bench {

enum class DetectorKind {
  SeSd,           // conventional radius
  SeSdInfinite,   // unbounded radius
  Ml,             // exhaustive oracle (desk-scale only)
  DppRadius,      // NN radius only
  DppOrdering,    // NN ordering only
  DppOrderingEt,  // NN ordering with early termination
  DppFull,        // all three sub-schemes
};

std::string detector_id(DetectorKind kind);
/// Throws InvalidConfig.
DetectorKind parse_detector(const std::string& id);
bool needs_model(DetectorKind kind);

/// Every experiment knob; config files use the same field names.
struct ExperimentSpec {
  int n_t = 8;
  int n_r = 8;
  std::string constellation = "qpsk";
  std::vector<double> snr_grid_db = {5, 7, 9, 11};
  std::size_t trials_per_point = 1000;
  std::vector<DetectorKind> detectors = {DetectorKind::SeSd, DetectorKind::DppFull};
  std::string model_path;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  /// Antenna count whose lambda schedule applies (0: use n_t).
  int lambda_schedule_n_t = 0;
  double epsilon_complement = 0.999;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string output_path;
  /// Trials per checkpoint block; 0 disables checkpointing.
  std::size_t checkpoint_every = 0;
  bool noiseless = false;
  unsigned threads = 0;  // 0: hardware concurrency

  // gen-dataset
  std::size_t sample_count = 100000;
  double snr_low_db = 4;
  double snr_high_db = 14;
  std::string dataset_path;

  // train
  TrainerConfig trainer;
  std::string report_path;

  /// Throws InvalidConfig with a "field: reason" message.
  void validate_sweep() const;
  void validate_dataset() const;
};

/// Assigns one field from its textual form; throws InvalidConfig naming the key.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);
/// `key = value` lines, '#' comments, list values comma separated.
ExperimentSpec parse_config(const std::string& text, ExperimentSpec base = {});
ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec base = {});

struct ResultRow {
  double snr_db = 0;
  std::string detector;
  std::uint64_t trials = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits_simulated = 0;
  double ber = 0;
  double avg_tree_mults = 0;
  double avg_tree_adds = 0;
  double avg_nn_mults = 0;
  double avg_nn_adds = 0;
  double avg_prep_mults = 0;
  double avg_prep_adds = 0;
  double avg_nodes_visited = 0;
  double avg_subtrees_searched = 0;
  double early_termination_rate = 0;
  double fallback_rate = 0;
  double wall_clock_s = 0;  // JSON only; not part of the CSV contract

  double avg_tree_ops() const noexcept { return avg_tree_mults + avg_tree_adds; }
  double avg_nn_ops() const noexcept { return avg_nn_mults + avg_nn_adds; }
};

/// Column order of the results CSV.
const std::vector<std::string>& result_csv_columns();
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
/// Throws FormatError naming the column on malformed input.
std::vector<ResultRow> read_results_csv(std::istream& in);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);
void write_results_json(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

struct ComplexityRow {
  double snr_db = 0;
  std::string detector;
  double tree_ops = 0;
  double total_ops = 0;    // tree + NN inference
  double ratio_tree = 0;   // tree / baseline tree
  double ratio_total = 0;  // (tree + NN) / (baseline tree + baseline NN)
  double ber = 0;
};

/// Ratios of every row against `baseline` at the same SNR.
std::vector<ComplexityRow> complexity_table(const std::vector<ResultRow>& rows, const std::string& baseline = "se-sd");
void write_complexity_csv(const std::filesystem::path& path, const std::vector<ComplexityRow>& rows);

struct SweepOptions {
  std::filesystem::path checkpoint_path;  // empty: no checkpointing
  /// Stop (leaving the checkpoint) after this many blocks; simulates an interruption.
  std::optional<std::size_t> stop_after_blocks;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  bool complete = false;
};

/// One Monte Carlo trial: the channel realization and its QR front end.
struct TrialInput {
  ChannelInstance instance;
  ReceiverFront front;
};

/// Trial `trial` at SNR index `snr_index`, drawn from substream
/// (seed, snr_index, trial, attempt); rank-deficient draws are redrawn.
TrialInput draw_trial(const ExperimentSpec& spec, const Constellation& constellation, std::size_t snr_index,
                      std::size_t trial);

/// Paired Monte Carlo sweep: at SNR index s, trial t draws from RNG substream
/// (seed, s, t) and every detector sees that same realization.
SweepResult run_sweep(const ExperimentSpec& spec, const std::optional<RbfnModel>& model,
                      const SweepOptions& options = {});

/// Lambdas used for the DPP variants at one SNR point.
std::pair<double, double> sweep_lambdas(const ExperimentSpec& spec, double snr_db);

struct DatasetSummary {
  std::size_t count = 0;
  double target_mean = 0;
  double target_min = 0;
  double target_max = 0;
};

DatasetSummary summarize(const Dataset& dataset);

/// gen-dataset: writes `dataset_path`.
DatasetSummary cmd_gen_dataset(const ExperimentSpec& spec);
/// train: reads `dataset_path`, writes `model_path` and the JSON report at `report_path`.
TrainingReport cmd_train(const ExperimentSpec& spec);
/// ber: writes `output_path` (CSV) and the same stem with .json.
SweepResult cmd_ber(const ExperimentSpec& spec, const SweepOptions& options = {});
/// complexity: writes the raw rows like `cmd_ber` plus `<stem>_complexity.csv`.
std::vector<ComplexityRow> cmd_complexity(const ExperimentSpec& spec, const SweepOptions& options = {});

void write_training_report(const std::filesystem::path& path, const TrainingReport& report,
                           const TrainerConfig& config);

std::filesystem::path checkpoint_path_for(const ExperimentSpec& spec);

}  // namespace dppsd::bench
