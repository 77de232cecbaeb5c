#include "dppsd/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dppsd {

DetectorConfig DetectorConfig::all_schemes(double lambda1, double lambda2) {
  return {lambda1, lambda2, 0.999, true, true, true};
}

DetectorConfig DetectorConfig::radius_only(double lambda1) {
  return {lambda1, kDisabled, 0.999, true, false, false};
}

DetectorConfig DetectorConfig::ordering_only() { return {kDisabled, kDisabled, 0.999, false, true, false}; }

DetectorConfig DetectorConfig::ordering_with_termination(double lambda2) {
  return {kDisabled, lambda2, 0.999, false, true, true};
}

void DetectorConfig::validate() const {
  if (!(lambda1 >= 1.0)) throw InvalidConfig("lambda1 must be >= 1");
  if (!(lambda2 >= 1.0)) throw InvalidConfig("lambda2 must be >= 1");
  if (!(epsilon_complement > 0.0 && epsilon_complement < 1.0))
    throw InvalidConfig("epsilon_complement must lie in (0, 1)");
  if (enable_early_termination && !enable_nn_ordering)
    throw InvalidConfig("early termination requires NN-aided sub-tree ordering");
}

LambdaSchedule LambdaSchedule::qpsk_defaults() {
  LambdaSchedule s;
  s.set(16, {{5, 1.2, 1.3}, {7, 1.3, 1.4}, {9, 1.4, 1.5}, {11, 1.5, 1.6}, {13, 1.6, 1.7}});
  s.set(24, {{5, 1.2, 1.1}, {7, 1.3, 1.2}, {9, 1.4, 1.4}, {11, 1.4, 1.5}, {13, 1.7, 1.6}});
  return s;
}

void LambdaSchedule::set(int n_t, std::vector<LambdaPoint> points) {
  if (points.empty()) throw InvalidConfig("lambda schedule needs at least one point");
  std::sort(points.begin(), points.end(),
            [](const LambdaPoint& a, const LambdaPoint& b) { return a.snr_db < b.snr_db; });
  entries_[n_t] = std::move(points);
}

std::pair<double, double> LambdaSchedule::lookup(int n_t, double snr_db) const {
  const auto it = entries_.find(n_t);
  if (it == entries_.end()) throw NoSchedule("no lambda schedule for n_t = " + std::to_string(n_t));
  const LambdaPoint* best = nullptr;
  double best_gap = 0;
  for (const auto& p : it->second) {
    const double gap = std::abs(p.snr_db - snr_db);
    // Points are ascending, so `<=` lets the higher SNR win a tie.
    if (!best || gap <= best_gap) {
      best = &p;
      best_gap = gap;
    }
  }
  return {best->lambda1, best->lambda2};
}

std::pair<double, double> lambda_lookup(const LambdaSchedule& schedule, int n_t, double snr_db) {
  return schedule.lookup(n_t, snr_db);
}

SortedPredictions sorted_predictions(const Eigen::VectorXd& raw) {
  SortedPredictions out;
  out.permutation.resize(static_cast<std::size_t>(raw.size()));
  std::iota(out.permutation.begin(), out.permutation.end(), 0);
  std::stable_sort(out.permutation.begin(), out.permutation.end(), [&](int a, int b) { return raw(a) < raw(b); });
  out.g_tilde.resize(raw.size());
  for (Eigen::Index k = 0; k < raw.size(); ++k) out.g_tilde(k) = raw(out.permutation[static_cast<std::size_t>(k)]);
  return out;
}

double nn_initial_radius(double g_tilde_1, double lambda1, double conventional) {
  if (std::isinf(lambda1)) return conventional;
  return std::min(lambda1 * g_tilde_1, conventional);
}

bool early_termination_check(double lambda2, double current_radius, double next_prediction) {
  if (std::isinf(lambda2)) return false;
  return lambda2 * current_radius < next_prediction;
}

ReceiverFront prepare_receiver(const ComplexVector& y, const ComplexMatrix& h) {
  if (y.size() != h.rows()) throw DimensionMismatch("prepare_receiver: y and H disagree");
  ReceiverFront f;
  f.qr = qrd<double>(h, &f.ops);
  f.z = f.qr.q1.adjoint() * y;
  const auto nr = static_cast<std::uint64_t>(h.rows());
  const auto nt = static_cast<std::uint64_t>(h.cols());
  f.ops.mul(nt * nr);
  f.ops.add(nt * (nr - 1));
  if (nr > nt) {
    f.residual_offset = (f.qr.q2.adjoint() * y).squaredNorm();
    f.ops.mul((nr - nt) * nr);
    f.ops.add((nr - nt) * (nr - 1));
    f.ops.abs2(nr - nt);
    f.ops.add(nr - nt - 1);
  }
  return f;
}

namespace {

void finish(DetectionResult& result, SearchOutcome<double>& outcome, const ReceiverFront& front,
            const Constellation& constellation, const SearchProblem<double>& problem) {
  result.tree_ops = problem.counter;
  result.nodes_visited = outcome.nodes_visited;
  result.subtrees_searched = std::max(outcome.subtrees_searched, 1);
  result.terminated_early = outcome.terminated_early;
  if (outcome.found()) {
    result.indices = std::move(outcome.indices);
    result.metric = *outcome.metric;
    result.final_radius = std::sqrt(*outcome.metric);
  } else {
    result.used_fallback = true;
    result.indices = zero_forcing_indices(front.z, front.qr, constellation);
    const ComplexVector x = constellation.points(result.indices);
    result.metric = (front.z - front.qr.r * x).squaredNorm();
    result.final_radius = result.initial_radius;
  }
  result.solution = constellation.points(result.indices);
}

}  // namespace

DetectionResult se_detect(const ReceiverFront& front, double noise_variance, const Constellation& constellation,
                          BaselineRadius radius, double epsilon_complement) {
  DetectionResult result;
  result.prep_ops = front.ops;
  double budget = std::numeric_limits<double>::infinity();
  if (radius == BaselineRadius::Conventional)
    budget = reduced_squared_radius(conventional_radius(noise_variance, front.n_r(), epsilon_complement),
                                    front.residual_offset);
  result.initial_radius = std::sqrt(budget);
  auto problem = SearchProblem<double>::make(front.z, front.qr.r, constellation, budget);
  auto outcome = sphere_decode(problem);
  finish(result, outcome, front, constellation, problem);
  return result;
}

DetectionResult se_detect(const ComplexVector& y, const ComplexMatrix& h, double noise_variance,
                          const Constellation& constellation, BaselineRadius radius, double epsilon_complement) {
  return se_detect(prepare_receiver(y, h), noise_variance, constellation, radius, epsilon_complement);
}

DppDetector::DppDetector(const RbfnModel& model, const Constellation& constellation)
    : net_(model), constellation_(constellation) {
  if (model.constellation_size != constellation.size())
    throw DimensionMismatch("model output size does not match the constellation");
}

Eigen::VectorXd DppDetector::predict(const ReceiverFront& front, double noise_variance, OpCounter* nn_ops,
                                     OpCounter* prep_ops) const {
  if (front.n_t() != net_.n_t()) throw DimensionMismatch("model was trained for a different N_t");
  const FeatureVector e = extract_features(front.z, front.qr.r, noise_variance, prep_ops);
  return net_.evaluate(e, nn_ops);
}

DetectionResult DppDetector::detect(const ReceiverFront& front, double noise_variance,
                                    const DetectorConfig& config) const {
  config.validate();
  DetectionResult result;
  result.prep_ops = front.ops;

  const Eigen::VectorXd raw = predict(front, noise_variance, &result.nn_ops, &result.prep_ops);
  const SortedPredictions sorted = sorted_predictions(raw.cwiseMax(0.0));
  result.g_tilde = sorted.g_tilde;

  const double conventional = std::sqrt(reduced_squared_radius(
      conventional_radius(noise_variance, front.n_r(), config.epsilon_complement), front.residual_offset));
  const double radius = config.enable_nn_radius ? nn_initial_radius(sorted.g_tilde(0), config.lambda1, conventional)
                                                : conventional;
  result.initial_radius = radius;

  auto problem = SearchProblem<double>::make(front.z, front.qr.r, constellation_, radius * radius);
  EarlyStop stop;
  if (config.enable_early_termination) {
    stop = [&](const SubtreeProgress& p) {
      return early_termination_check(config.lambda2, std::sqrt(p.radius_sq), sorted.g_tilde(p.completed));
    };
  }
  std::span<const int> order;
  if (config.enable_nn_ordering) {
    order = sorted.permutation;
    result.subtree_order = sorted.permutation;
  }
  auto outcome = sphere_decode(problem, order, stop);
  finish(result, outcome, front, constellation_, problem);
  return result;
}

DetectionResult dpp_detect(const ComplexVector& y, const ComplexMatrix& h, double noise_variance,
                           const RbfnModel& model, const DetectorConfig& config, const Constellation& constellation) {
  const DppDetector detector(model, constellation);
  return detector.detect(prepare_receiver(y, h), noise_variance, config);
}

}  // namespace dppsd
