#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dppsd/numerics.hpp"

namespace dppsd {

/// Ordered complex symbol alphabet with unit average energy and Gray labels.
/// Symbol index q carries the bit label `labels()[q]`.
class Constellation {
public:
  /// Gray-labeled QPSK, symbols (+-1 +- j)/sqrt(2). Index q = label; the high
  /// bit selects the sign of the real part, the low bit the imaginary part.
  static Constellation qpsk();
  /// Square M-QAM (M = 4, 16, 64, ...) with per-axis Gray labels.
  static Constellation qam(int order);
  /// "qpsk", "4qam", "16qam", "64qam".
  static Constellation by_name(const std::string& name);

  const std::vector<Complex>& symbols() const noexcept { return symbols_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  const Complex& symbol(int q) const { return symbols_.at(q); }
  int size() const noexcept { return static_cast<int>(symbols_.size()); }
  int bits_per_symbol() const noexcept { return bits_per_symbol_; }
  const std::string& name() const noexcept { return name_; }

  /// Nearest symbol by Euclidean distance; ties go to the lower index.
  int nearest_index(Complex point) const noexcept;
  /// Index of an exact constellation point (within 1e-9); throws NotAConstellationPoint.
  int index_of(Complex point) const;

  ComplexVector points(const std::vector<int>& indices) const;

private:
  Constellation(std::string name, std::vector<Complex> symbols, std::vector<std::uint32_t> labels,
                int bits);

  std::string name_;
  std::vector<Complex> symbols_;
  std::vector<std::uint32_t> labels_;
  int bits_per_symbol_ = 0;
};

/// One realization of y = H x + v.
struct ChannelInstance {
  ComplexMatrix h;
  std::vector<int> x_indices;
  ComplexVector x_true;
  ComplexVector v;
  ComplexVector y;
  double noise_variance = 0;  // per complex dimension
};

/// SNR = E_s N_t / sigma_v^2 with E_s = 1.
double snr_to_noise_variance(double snr_db, int n_t);

/// i.i.d. CN(0, 1) channel, uniform symbols, CN(0, sigma_v^2) noise.
ChannelInstance draw_channel_instance(int n_t, int n_r, const Constellation& constellation,
                                      double snr_db, Rng& rng);

/// Same as draw_channel_instance but with an explicit noise variance (0 allowed).
ChannelInstance draw_channel_instance_with_noise(int n_t, int n_r, const Constellation& constellation,
                                                 double noise_variance, Rng& rng);

/// Symbol indices of the componentwise nearest-point projection of the
/// least-squares solution (H^H H)^{-1} H^H y. Throws RankDeficient.
std::vector<int> zero_forcing_indices(const ComplexVector& y, const ComplexMatrix& h,
                                      const Constellation& constellation);

/// ZF from an existing factorization: R^{-1} z, rounded.
std::vector<int> zero_forcing_indices(const ComplexVector& z, const QrFactors<double>& qr,
                                      const Constellation& constellation);

ComplexVector zero_forcing_detect(const ComplexVector& y, const ComplexMatrix& h,
                                  const Constellation& constellation);

/// Hamming distance between the bit labels of two symbol vectors.
std::size_t bits_diff(const ComplexVector& a, const ComplexVector& b, const Constellation& constellation);
std::size_t bits_diff(const std::vector<int>& a, const std::vector<int>& b,
                      const Constellation& constellation);

}  // namespace dppsd
