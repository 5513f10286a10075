#pragma once

/**
 * @file quantizer.hpp
 * @brief Uniform mid-rise DAC model.
 *
 * Output codes sit at odd multiples of step/2:
 *   Q(x) = step * round(x / step + 0.5) - step / 2
 * with round() resolving .5 ties away from zero, so Q(-x) == -Q(x) for every
 * x != 0 and x == 0 maps to +step/2. An N-bit converter has 2^N codes,
 * the extreme ones at +-(2^(N-1) - 1/2) * step.
 *
 * Nominal input range (used for AssumeInRange and neighbor_codes):
 *   -(2^(N-1) - 1) * step <= x < (2^(N-1) - 1) * step
 */

#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <string>

#include "ditherdac/common.hpp"

namespace ditherdac {

enum class Saturation {
  AssumeInRange,     ///< inputs outside the nominal range are an error
  SaturateAndCount,  ///< clamp to the extreme code and bump a counter
};

struct QuantizerConfig {
  int bits = 6;
  double step = 1.0;
  Saturation saturation = Saturation::SaturateAndCount;

  void validate() const {
    if (bits < 1 || bits > 52) {
      throw InvalidInput("quantizer bits must be in [1, 52], got " + std::to_string(bits));
    }
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw InvalidInput("quantizer step must be positive and finite");
    }
  }

  std::int64_t levels() const { return std::int64_t{1} << bits; }
  std::int64_t half_levels() const { return std::int64_t{1} << (bits - 1); }

  double full_scale_code() const { return (static_cast<double>(half_levels()) - 0.5) * step; }
  double input_limit() const { return (static_cast<double>(half_levels()) - 1.0) * step; }

  bool in_range(double x) const { return x >= -input_limit() && x < input_limit(); }
};

/// Caller-owned accumulator of saturated conversions.
struct ClipCounter {
  std::uint64_t count = 0;
};

namespace detail {

// Code index j such that the output is (j + 1/2) * step. Computed on |u| so
// that the index of -u is exactly -j - 1 (bit-exact odd symmetry).
template <std::floating_point T>
T mid_rise_index(T u) {
  return u >= T(0) ? std::floor(u) : -std::floor(-u) - T(1);
}

}  // namespace detail

template <std::floating_point T>
T quantize_real(T x, const QuantizerConfig& cfg, ClipCounter* clips = nullptr) {
  if (!std::isfinite(x)) throw InvalidInput("quantizer input is not finite");
  if (cfg.saturation == Saturation::AssumeInRange && !cfg.in_range(static_cast<double>(x))) {
    throw RangeError("quantizer input outside the converter range");
  }
  const T step = static_cast<T>(cfg.step);
  const T top = static_cast<T>(cfg.half_levels() - 1);
  const T bottom = -static_cast<T>(cfg.half_levels());
  T j = detail::mid_rise_index(x / step);
  if (j > top) {
    j = top;
    if (clips) ++clips->count;
  } else if (j < bottom) {
    j = bottom;
    if (clips) ++clips->count;
  }
  return (j + T(0.5)) * step;
}

template <std::floating_point T>
std::complex<T> quantize_complex(std::complex<T> x, const QuantizerConfig& cfg,
                                 ClipCounter* clips = nullptr) {
  return {quantize_real(x.real(), cfg, clips), quantize_real(x.imag(), cfg, clips)};
}

struct QuantizationError {
  Complex value;
  bool clipped = false;
};

/// Q(x) - x for a complex sample, flagged when either component saturated.
inline QuantizationError quantization_error(Complex x, const QuantizerConfig& cfg,
                                            ClipCounter* clips = nullptr) {
  ClipCounter local;
  const Complex q = quantize_complex(x, cfg, &local);
  if (clips) clips->count += local.count;
  return {q - x, local.count > 0};
}

struct NeighborCodes {
  double lower;
  double upper;
};

/**
 * The two codes bracketing x, lower <= x < upper, upper - lower == step.
 * Uses floor rather than truncation so the bracket is also correct for
 * negative inputs.
 */
inline NeighborCodes neighbor_codes(double x, const QuantizerConfig& cfg) {
  if (!std::isfinite(x)) throw InvalidInput("neighbor_codes input is not finite");
  if (!cfg.in_range(x)) throw RangeError("neighbor_codes input outside the converter range");
  const double lower = cfg.step * std::floor((x + 0.5 * cfg.step) / cfg.step) - 0.5 * cfg.step;
  return {lower, lower + cfg.step};
}

}  // namespace ditherdac
