#include "dppsd/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace dppsd {

Constellation::Constellation(std::string name, std::vector<Complex> symbols,
                             std::vector<std::uint32_t> labels, int bits)
    : name_(std::move(name)), symbols_(std::move(symbols)), labels_(std::move(labels)),
      bits_per_symbol_(bits) {}

Constellation Constellation::qpsk() {
  Constellation c = qam(4);
  c.name_ = "qpsk";
  return c;
}

Constellation Constellation::qam(int order) {
  const int levels = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  if (order < 4 || levels * levels != order || !std::has_single_bit(static_cast<unsigned>(order)))
    throw InvalidConfig("qam: order must be a square power of two >= 4");
  const int axis_bits = std::countr_zero(static_cast<unsigned>(levels));
  const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);

  std::vector<Complex> symbols(order);
  std::vector<std::uint32_t> labels(order);
  for (int i = 0; i < levels; ++i) {
    for (int k = 0; k < levels; ++k) {
      const auto gray_re = static_cast<std::uint32_t>(i ^ (i >> 1));
      const auto gray_im = static_cast<std::uint32_t>(k ^ (k >> 1));
      const std::uint32_t label = (gray_re << axis_bits) | gray_im;
      // Level 0 sits at the positive extreme.
      symbols[label] = Complex((levels - 1 - 2 * i) * scale, (levels - 1 - 2 * k) * scale);
      labels[label] = label;
    }
  }
  return Constellation(std::to_string(order) + "qam", std::move(symbols), std::move(labels), 2 * axis_bits);
}

Constellation Constellation::by_name(const std::string& name) {
  if (name == "qpsk" || name == "QPSK") return qpsk();
  if (name == "4qam") return qam(4);
  if (name == "16qam") return qam(16);
  if (name == "64qam") return qam(64);
  throw InvalidConfig("unknown constellation '" + name + "'");
}

int Constellation::nearest_index(Complex point) const noexcept {
  int best = 0;
  double best_d = std::norm(point - symbols_[0]);
  for (int q = 1; q < size(); ++q) {
    const double d = std::norm(point - symbols_[q]);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

int Constellation::index_of(Complex point) const {
  const int q = nearest_index(point);
  if (std::abs(point - symbols_[q]) > 1e-9)
    throw NotAConstellationPoint("point is not in constellation " + name_);
  return q;
}

ComplexVector Constellation::points(const std::vector<int>& indices) const {
  ComplexVector x(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) x(static_cast<Eigen::Index>(i)) = symbols_.at(indices[i]);
  return x;
}

double snr_to_noise_variance(double snr_db, int n_t) {
  if (n_t < 1) throw InvalidConfig("snr_to_noise_variance: n_t must be >= 1");
  return static_cast<double>(n_t) / std::pow(10.0, snr_db / 10.0);
}

ChannelInstance draw_channel_instance_with_noise(int n_t, int n_r, const Constellation& constellation,
                                                 double noise_variance, Rng& rng) {
  if (n_t < 1 || n_r < n_t) throw InvalidConfig("draw_channel_instance: need n_r >= n_t >= 1");
  ChannelInstance inst;
  inst.h = gaussian_complex_matrix<double>(n_r, n_t, 1.0, rng);
  std::uniform_int_distribution<int> pick(0, constellation.size() - 1);
  inst.x_indices.resize(n_t);
  for (auto& q : inst.x_indices) q = pick(rng);
  inst.x_true = constellation.points(inst.x_indices);
  inst.v = gaussian_complex_vector<double>(n_r, noise_variance, rng);
  inst.y = inst.h * inst.x_true + inst.v;
  inst.noise_variance = noise_variance;
  return inst;
}

ChannelInstance draw_channel_instance(int n_t, int n_r, const Constellation& constellation,
                                      double snr_db, Rng& rng) {
  return draw_channel_instance_with_noise(n_t, n_r, constellation, snr_to_noise_variance(snr_db, n_t), rng);
}

std::vector<int> zero_forcing_indices(const ComplexVector& z, const QrFactors<double>& qr,
                                      const Constellation& constellation) {
  const ComplexVector x = qr.r.triangularView<Eigen::Upper>().solve(z);
  std::vector<int> out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = constellation.nearest_index(x(i));
  return out;
}

std::vector<int> zero_forcing_indices(const ComplexVector& y, const ComplexMatrix& h,
                                      const Constellation& constellation) {
  if (y.size() != h.rows()) throw DimensionMismatch("zero_forcing_detect: y and H disagree");
  const auto qr = qrd<double>(h);
  const ComplexVector z = qr.q1.adjoint() * y;
  return zero_forcing_indices(z, qr, constellation);
}

ComplexVector zero_forcing_detect(const ComplexVector& y, const ComplexMatrix& h,
                                  const Constellation& constellation) {
  return constellation.points(zero_forcing_indices(y, h, constellation));
}

std::size_t bits_diff(const std::vector<int>& a, const std::vector<int>& b,
                      const Constellation& constellation) {
  if (a.size() != b.size()) throw DimensionMismatch("bits_diff: length mismatch");
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    total += static_cast<std::size_t>(
        std::popcount(constellation.labels().at(a[i]) ^ constellation.labels().at(b[i])));
  return total;
}

std::size_t bits_diff(const ComplexVector& a, const ComplexVector& b, const Constellation& constellation) {
  if (a.size() != b.size()) throw DimensionMismatch("bits_diff: length mismatch");
  std::vector<int> ia(static_cast<std::size_t>(a.size())), ib(ia.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    ia[static_cast<std::size_t>(i)] = constellation.index_of(a(i));
    ib[static_cast<std::size_t>(i)] = constellation.index_of(b(i));
  }
  return bits_diff(ia, ib, constellation);
}

}  // namespace dppsd
