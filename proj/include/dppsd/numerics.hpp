#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dppsd/error.hpp"

namespace dppsd {

template <typename Real>
using ComplexMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using ComplexVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using ComplexMatrix = ComplexMatrixT<double>;
using ComplexVector = ComplexVectorT<double>;

using Rng = std::mt19937_64;

/// Arithmetic tally in units of complex operations.
///
/// Convention: a complex multiply is one mult, a complex add or subtract is one
/// add, |w|^2 is one mult plus one add, a division by a real is one mult. Real
/// operations are charged at the same unit cost.
struct OpCounter {
  std::uint64_t complex_mults = 0;
  std::uint64_t complex_adds = 0;

  void mul(std::uint64_t n = 1) noexcept { complex_mults += n; }
  void add(std::uint64_t n = 1) noexcept { complex_adds += n; }
  /// |w|^2
  void abs2(std::uint64_t n = 1) noexcept {
    complex_mults += n;
    complex_adds += n;
  }
  void reset() noexcept { *this = {}; }
  std::uint64_t total() const noexcept { return complex_mults + complex_adds; }

  OpCounter& operator+=(const OpCounter& o) noexcept {
    complex_mults += o.complex_mults;
    complex_adds += o.complex_adds;
    return *this;
  }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

/// Deterministic generator for an independent substream identified by `path`,
/// e.g. {snr_index, trial_index}.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Circularly symmetric complex Gaussian vector; real and imaginary parts each
/// carry `variance / 2`.
template <typename Real = double>
ComplexVectorT<Real> gaussian_complex_vector(Eigen::Index n, Real variance, Rng& rng) {
  ComplexVectorT<Real> v = ComplexVectorT<Real>::Zero(n);
  if (variance <= Real(0)) return v;
  std::normal_distribution<Real> normal(Real(0), std::sqrt(variance / Real(2)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real re = normal(rng);
    const Real im = normal(rng);
    v(i) = {re, im};
  }
  return v;
}

template <typename Real = double>
ComplexMatrixT<Real> gaussian_complex_matrix(Eigen::Index rows, Eigen::Index cols, Real variance,
                                             Rng& rng) {
  ComplexMatrixT<Real> m(rows, cols);
  // Column-major fill so a matrix and its vectorized form draw the same numbers.
  for (Eigen::Index j = 0; j < cols; ++j) m.col(j) = gaussian_complex_vector<Real>(rows, variance, rng);
  return m;
}

template <typename Real>
struct QrFactors {
  ComplexMatrixT<Real> q1;  // N_r x N_t
  ComplexMatrixT<Real> q2;  // N_r x (N_r - N_t)
  ComplexMatrixT<Real> r;   // N_t x N_t, upper triangular, real positive diagonal

  ComplexMatrixT<Real> q() const {
    ComplexMatrixT<Real> full(q1.rows(), q1.rows());
    full << q1, q2;
    return full;
  }
};

inline constexpr double kRankTolerance = 1e-12;

/// Householder QR of a tall complex matrix with the column phases of Q chosen
/// so that diag(R) is real and strictly positive. Throws RankDeficient when a
/// diagonal entry of R has magnitude <= 1e-12.
template <typename Real>
QrFactors<Real> qrd(const ComplexMatrixT<Real>& h, OpCounter* counter = nullptr) {
  using C = std::complex<Real>;
  const Eigen::Index nr = h.rows();
  const Eigen::Index nt = h.cols();
  if (nt < 1 || nr < nt) throw DimensionMismatch("qrd: need N_r >= N_t >= 1");

  ComplexMatrixT<Real> a = h;
  ComplexMatrixT<Real> q = ComplexMatrixT<Real>::Identity(nr, nr);
  ComplexVectorT<Real> v;

  for (Eigen::Index k = 0; k < nt; ++k) {
    const Eigen::Index m = nr - k;
    const Eigen::Index c = nt - k;
    const Real norm = a.col(k).tail(m).norm();
    if (!(norm > Real(kRankTolerance))) throw RankDeficient("qrd: rank-deficient channel matrix");

    const C x0 = a(k, k);
    const C phase = std::abs(x0) > Real(0) ? x0 / std::abs(x0) : C(1);
    const C alpha = -phase * norm;
    v = a.col(k).tail(m);
    v(0) -= alpha;
    const Real vnorm = v.norm();

    if (counter) {
      counter->abs2(m);
      counter->add(m - 1);
      counter->mul(2);
      counter->add(1);
    }
    if (vnorm > Real(0)) {
      v /= vnorm;
      // A <- (I - 2 v v^H) A on the trailing block; Q <- Q (I - 2 v v^H).
      auto block = a.bottomRightCorner(m, c);
      const Eigen::Matrix<C, 1, Eigen::Dynamic> vha = v.adjoint() * block;
      block.noalias() -= (Real(2) * v) * vha;
      auto qcols = q.rightCols(m);
      const ComplexVectorT<Real> qv = qcols * v;
      qcols.noalias() -= (Real(2) * qv) * v.adjoint();
      if (counter) {
        counter->mul(m + 2 * m * c + 2 * nr * m + nr);
        counter->add((m - 1) * c + m * c + nr * (m - 1) + nr * m);
      }
    }
    a.col(k).tail(m - 1).setZero();
  }

  // Absorb the phase of each diagonal entry into the matching column of Q.
  for (Eigen::Index k = 0; k < nt; ++k) {
    const Real mag = std::abs(a(k, k));
    if (!(mag > Real(kRankTolerance))) throw RankDeficient("qrd: rank-deficient channel matrix");
    const C d = a(k, k) / mag;
    a.row(k).tail(nt - k) *= std::conj(d);
    a(k, k) = C(mag, Real(0));
    q.col(k) *= d;
    if (counter) counter->mul((nt - k) + nr + 1);
  }

  QrFactors<Real> f;
  f.q1 = q.leftCols(nt);
  f.q2 = q.rightCols(nr - nt);
  f.r = a.topRows(nt).template triangularView<Eigen::Upper>();
  return f;
}

/// ||z - R x||^2 for upper-triangular R, charging the counter per row.
template <typename Real>
Real counted_residual_metric(const ComplexVectorT<Real>& z, const ComplexMatrixT<Real>& r,
                             const ComplexVectorT<Real>& x, OpCounter& counter) {
  const Eigen::Index n = z.size();
  if (r.rows() != n || r.cols() != n || x.size() != n)
    throw DimensionMismatch("counted_residual_metric: dimension mismatch");
  Real total = 0;
  for (Eigen::Index l = 0; l < n; ++l) {
    std::complex<Real> e = z(l);
    for (Eigen::Index k = l; k < n; ++k) e -= r(l, k) * x(k);
    total += std::norm(e);
    counter.mul(static_cast<std::uint64_t>(n - l));
    counter.add(static_cast<std::uint64_t>(n - l));
    counter.abs2();
  }
  counter.add(static_cast<std::uint64_t>(n - 1));
  return total;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto& v = m(i, j);
      if constexpr (Eigen::NumTraits<typename Derived::Scalar>::IsComplex) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
      } else {
        if (!std::isfinite(v)) return false;
      }
    }
  return true;
}

}  // namespace dppsd
