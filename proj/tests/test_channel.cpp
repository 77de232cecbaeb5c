#include <gtest/gtest.h>

#include <bit>

#include "dppsd/channel.hpp"
#include "dppsd/error.hpp"

namespace dppsd {
namespace {

constexpr double kTol = 1e-9;

TEST(Constellation, QpskGrayLayout) {
  const auto c = Constellation::qpsk();
  const double a = 1.0 / std::sqrt(2.0);
  ASSERT_EQ(c.size(), 4);
  EXPECT_EQ(c.bits_per_symbol(), 2);
  EXPECT_NEAR(std::abs(c.symbol(0) - Complex(a, a)), 0, kTol);
  EXPECT_NEAR(std::abs(c.symbol(1) - Complex(a, -a)), 0, kTol);
  EXPECT_NEAR(std::abs(c.symbol(2) - Complex(-a, a)), 0, kTol);
  EXPECT_NEAR(std::abs(c.symbol(3) - Complex(-a, -a)), 0, kTol);
}

// Nearest neighbours on the grid differ in exactly one bit, and every
// alphabet has unit average energy.
TEST(Constellation, GrayAdjacencyAndUnitEnergy) {
  for (int order : {4, 16, 64}) {
    const auto c = Constellation::qam(order);
    double energy = 0;
    double dmin = 1e9;
    for (int i = 0; i < c.size(); ++i) {
      energy += std::norm(c.symbol(i));
      for (int j = 0; j < i; ++j) dmin = std::min(dmin, std::abs(c.symbol(i) - c.symbol(j)));
    }
    EXPECT_NEAR(energy / c.size(), 1.0, kTol) << order;
    for (int i = 0; i < c.size(); ++i)
      for (int j = 0; j < i; ++j)
        if (std::abs(std::abs(c.symbol(i) - c.symbol(j)) - dmin) < 1e-9)
          EXPECT_EQ(std::popcount(c.labels()[i] ^ c.labels()[j]), 1) << order << ' ' << i << ' ' << j;
  }
}

TEST(Constellation, LookupAndErrors) {
  const auto c = Constellation::by_name("16qam");
  for (int q = 0; q < c.size(); ++q) {
    EXPECT_EQ(c.index_of(c.symbol(q)), q);
    EXPECT_EQ(c.nearest_index(c.symbol(q) * 1.01), q);
  }
  EXPECT_THROW(c.index_of({0.123, 0.4}), NotAConstellationPoint);
  EXPECT_THROW(Constellation::by_name("8psk"), InvalidConfig);
  // The origin is equidistant from all four QPSK points.
  EXPECT_EQ(Constellation::qpsk().nearest_index({0, 0}), 0);
}

TEST(Snr, NoiseVarianceExamples) {
  EXPECT_NEAR(snr_to_noise_variance(0, 1), 1.0, kTol);
  EXPECT_NEAR(snr_to_noise_variance(10, 16), 1.6, kTol);
  EXPECT_NEAR(snr_to_noise_variance(9, 24), 24.0 / std::pow(10.0, 0.9), kTol);
}

TEST(DrawChannel, VanishingNoiseAndDeterminism) {
  const auto c = Constellation::qpsk();
  Rng rng = make_rng(1);
  const auto inst = draw_channel_instance(4, 6, c, 200, rng);
  EXPECT_LT((inst.y - inst.h * inst.x_true).norm(), 1e-6);
  EXPECT_EQ(c.points(inst.x_indices), inst.x_true);

  Rng a = make_rng(77, {3});
  Rng b = make_rng(77, {3});
  const auto ia = draw_channel_instance(4, 4, c, 9, a);
  const auto ib = draw_channel_instance(4, 4, c, 9, b);
  EXPECT_EQ(ia.h, ib.h);
  EXPECT_EQ(ia.y, ib.y);
  EXPECT_EQ(ia.x_indices, ib.x_indices);
}

TEST(DrawChannel, ChannelMoments) {
  const auto c = Constellation::qpsk();
  Rng rng = make_rng(2);
  double sum = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) sum += draw_channel_instance(16, 16, c, 10, rng).h.squaredNorm();
  const double mean = sum / (draws * 256.0);
  EXPECT_GE(mean, 0.99);
  EXPECT_LE(mean, 1.01);
}

TEST(DrawChannel, NoiseMatchesSnr) {
  const auto c = Constellation::qpsk();
  Rng rng = make_rng(3);
  double sum = 0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) sum += draw_channel_instance(8, 8, c, 7, rng).v.squaredNorm();
  EXPECT_NEAR(sum / (draws * 8.0), snr_to_noise_variance(7, 8), 0.03 * snr_to_noise_variance(7, 8));
}

TEST(ZeroForcing, IdentityAndNoiseless) {
  const auto c = Constellation::qpsk();
  const std::vector<int> idx = {3, 0, 2, 1};
  EXPECT_EQ(zero_forcing_indices(c.points(idx), ComplexMatrix::Identity(4, 4), c), idx);
  Rng rng = make_rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto inst = draw_channel_instance_with_noise(4, 6, c, 0.0, rng);
    EXPECT_EQ(zero_forcing_detect(inst.y, inst.h, c), inst.x_true);
  }
}

TEST(ZeroForcing, MatchesRoundedLeastSquares) {
  const auto c = Constellation::qam(16);
  Rng rng = make_rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto inst = draw_channel_instance(4, 4, c, 12, rng);
    const ComplexVector ls = (inst.h.adjoint() * inst.h).ldlt().solve(inst.h.adjoint() * inst.y);
    const auto got = zero_forcing_indices(inst.y, inst.h, c);
    for (int k = 0; k < 4; ++k) {
      int best = 0;
      for (int q = 1; q < c.size(); ++q)
        if (std::abs(ls(k) - c.symbol(q)) < std::abs(ls(k) - c.symbol(best))) best = q;
      EXPECT_EQ(got[static_cast<std::size_t>(k)], best);
    }
    // Same answer from an existing factorization.
    const auto qr = qrd<double>(inst.h);
    EXPECT_EQ(zero_forcing_indices(qr.q1.adjoint() * inst.y, qr, c), got);
  }
}

TEST(BitsDiff, Examples) {
  const auto c = Constellation::qpsk();
  EXPECT_EQ(bits_diff(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, c), 0u);
  EXPECT_EQ(bits_diff(std::vector<int>{0}, std::vector<int>{3}, c), 2u);
  EXPECT_EQ(bits_diff(c.points({0, 2}), c.points({1, 2}), c), 1u);
  EXPECT_THROW(bits_diff(std::vector<int>{0}, std::vector<int>{0, 1}, c), DimensionMismatch);

  const auto q16 = Constellation::qam(16);
  Rng rng = make_rng(6);
  std::uniform_int_distribution<int> pick(0, 15);
  std::vector<int> a(32), b(32);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = pick(rng);
    b[i] = pick(rng);
    expected += static_cast<std::size_t>(std::popcount(q16.labels()[a[i]] ^ q16.labels()[b[i]]));
  }
  EXPECT_EQ(bits_diff(a, b, q16), expected);
}

}  // namespace
}  // namespace dppsd
