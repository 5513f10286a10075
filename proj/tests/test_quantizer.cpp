#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ditherdac/quantizer.hpp"

using namespace ditherdac;

namespace {

QuantizerConfig unit(int bits = 6, Saturation sat = Saturation::SaturateAndCount) {
  return {bits, 1.0, sat};
}

// Literal transcription of step*round(x/step + 0.5) - step/2 with std::round
// (half away from zero); used as an independent reference.
double literal_formula(double x, double step) { return step * std::round(x / step + 0.5) - 0.5 * step; }

}  // namespace

TEST(QuantizeReal, ExamplesFromDefinition) {
  const auto q = unit();
  EXPECT_DOUBLE_EQ(quantize_real(0.2, q), 0.5);
  EXPECT_DOUBLE_EQ(quantize_real(-0.2, q), -0.5);
  EXPECT_DOUBLE_EQ(quantize_real(1.0, q), 1.5);   // tie goes away from zero
  EXPECT_DOUBLE_EQ(quantize_real(-1.0, q), -1.5);
  EXPECT_DOUBLE_EQ(quantize_real(0.0, q), 0.5);   // zero treated as positive
}

TEST(QuantizeReal, SaturatesAndCounts) {
  const auto q = unit(2);
  ClipCounter clips;
  EXPECT_DOUBLE_EQ(quantize_real(100.0, q, &clips), 1.5);
  EXPECT_EQ(clips.count, 1u);
  EXPECT_DOUBLE_EQ(quantize_real(-100.0, q, &clips), -1.5);
  EXPECT_EQ(clips.count, 2u);
  // Inside the code range but past the nominal input range: no clip.
  EXPECT_DOUBLE_EQ(quantize_real(1.7, q, &clips), 1.5);
  EXPECT_EQ(clips.count, 2u);
  // Exactly on the outer threshold the tie rule asks for a code beyond full scale.
  EXPECT_DOUBLE_EQ(quantize_real(2.0, q, &clips), 1.5);
  EXPECT_DOUBLE_EQ(quantize_real(-2.0, q, &clips), -1.5);
  EXPECT_EQ(clips.count, 4u);
}

TEST(QuantizeReal, ErrorPaths) {
  EXPECT_THROW(quantize_real(std::nan(""), unit()), InvalidInput);
  EXPECT_THROW(quantize_real(INFINITY, unit()), InvalidInput);
  const auto strict = unit(2, Saturation::AssumeInRange);
  EXPECT_NO_THROW(quantize_real(-1.0, strict));
  EXPECT_THROW(quantize_real(1.0, strict), RangeError);  // half-open upper end
  EXPECT_THROW(quantize_real(-1.01, strict), RangeError);
}

TEST(QuantizerConfig, LevelsAndFullScale) {
  const QuantizerConfig q{3, 0.25};
  EXPECT_EQ(q.levels(), 8);
  EXPECT_DOUBLE_EQ(q.full_scale_code(), 3.5 * 0.25);
  EXPECT_DOUBLE_EQ(q.input_limit(), 3.0 * 0.25);
  EXPECT_THROW((QuantizerConfig{0, 1.0}.validate()), InvalidInput);
  EXPECT_THROW((QuantizerConfig{4, 0.0}.validate()), InvalidInput);
  EXPECT_THROW((QuantizerConfig{4, -1.0}.validate()), InvalidInput);
}

TEST(QuantizeReal, MatchesLiteralFormulaAwayFromThresholds) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> dist(-30.0, 30.0);
  for (double step : {1.0, 0.17, 3.5}) {
    const QuantizerConfig q{8, step};
    for (int i = 0; i < 20000; ++i) {
      const double x = dist(gen) * step;
      EXPECT_DOUBLE_EQ(quantize_real(x, q), literal_formula(x, step)) << "x=" << x << " step=" << step;
    }
    for (int k = -20; k <= 20; ++k) {
      EXPECT_DOUBLE_EQ(quantize_real(k * step, q), literal_formula(k * step, step)) << "tie k=" << k;
    }
  }
}

TEST(QuantizeReal, PropertiesOverRandomInputs) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-31.0, 31.0);
  const auto q = unit(6, Saturation::AssumeInRange);
  for (int i = 0; i < 50000; ++i) {
    const double x = dist(gen);
    const double y = quantize_real(x, q);
    // odd multiple of step/2
    const double halves = y / 0.5;
    EXPECT_EQ(halves, std::round(halves));
    EXPECT_EQ(std::fmod(std::abs(halves), 2.0), 1.0);
    EXPECT_LE(std::abs(y - x), 0.5);
    EXPECT_EQ(quantize_real(-x, q), -y);
  }
  // Odd symmetry also holds exactly at every nonzero tie point.
  for (int k = 1; k < 31; ++k) EXPECT_EQ(quantize_real(-double(k), q), -quantize_real(double(k), q));
}

TEST(QuantizeComplex, ComponentwiseAndSymmetries) {
  const auto q = unit();
  EXPECT_EQ(quantize_complex(Complex{0.2, 0.7}, q), (Complex{0.5, 0.5}));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> dist(-20.0, 20.0);
  for (int i = 0; i < 20000; ++i) {
    const Complex x{dist(gen), dist(gen)};
    const Complex qx = quantize_complex(x, q);
    EXPECT_EQ(quantize_complex(-x, q), -qx);
    EXPECT_EQ(quantize_complex(Complex{-x.imag(), x.real()}, q), (Complex{-qx.imag(), qx.real()}));
  }
}

TEST(QuantizationError, Examples) {
  const auto q = unit();
  const auto at_code = quantization_error({0.5, 0.5}, q);
  EXPECT_EQ(at_code.value, (Complex{0.0, 0.0}));
  EXPECT_FALSE(at_code.clipped);
  EXPECT_NEAR(quantization_error({0.2, 0.5}, q).value.real(), 0.3, 1e-15);
  const auto big = quantization_error({1000.0, 0.0}, q);
  EXPECT_TRUE(big.clipped);
}

TEST(QuantizationError, UniformInputVarianceIsStepSquaredOverTwelve) {
  // 10^6 samples uniform over the full range, N = 6.
  const QuantizerConfig q{6, 0.3};
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> dist(-q.input_limit(), q.input_limit());
  const int n = 1'000'000;
  double s = 0, s2 = 0, c2 = 0;
  for (int i = 0; i < n; ++i) {
    const Complex x{dist(gen), dist(gen)};
    const auto e = quantization_error(x, q).value;
    s += e.real();
    s2 += e.real() * e.real();
    c2 += std::norm(e);
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  const double expected = q.step * q.step / 12.0;
  EXPECT_NEAR(var / expected, 1.0, 0.01);
  EXPECT_LT(std::abs(mean), 3.0 * (q.step / std::sqrt(12.0)) / std::sqrt(double(n)));
  EXPECT_NEAR((c2 / n) / (q.step * q.step / 6.0), 1.0, 0.01);
}

TEST(NeighborCodes, Examples) {
  const auto q = unit();
  auto nb = neighbor_codes(0.2, q);
  EXPECT_DOUBLE_EQ(nb.lower, -0.5);
  EXPECT_DOUBLE_EQ(nb.upper, 0.5);
  nb = neighbor_codes(0.7, q);
  EXPECT_DOUBLE_EQ(nb.lower, 0.5);
  EXPECT_DOUBLE_EQ(nb.upper, 1.5);
  EXPECT_THROW(neighbor_codes(40.0, q), RangeError);
  EXPECT_THROW(neighbor_codes(31.0, q), RangeError);
}

TEST(NeighborCodes, BracketHoldsForNegativeInputs) {
  const QuantizerConfig q{5, 0.4};
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> dist(-q.input_limit(), q.input_limit());
  for (int i = 0; i < 20000; ++i) {
    const double x = dist(gen);
    const auto nb = neighbor_codes(x, q);
    EXPECT_LE(nb.lower, x);
    EXPECT_LT(x, nb.upper);
    EXPECT_NEAR(nb.upper - nb.lower, q.step, 1e-12);
  }
}
