#pragma once

/**
 * @file evm.hpp
 * @brief Empirical EVM and the closed-form EVM / resolution predictors.
 *
 * EVM here is a power ratio, distortion energy over desired energy, on
 * complex baseband samples. All predictors take the ensemble signal power
 * E|y|^2 at the user as an input rather than estimating it.
 */

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ditherdac/common.hpp"

namespace ditherdac {

struct EvmReport {
  double empirical_evm = 0.0;
  double empirical_evm_db = 0.0;
  std::int64_t sample_count = 0;
  double analytic_min = 0.0;       // uncorrelated conventional errors
  double analytic_max = 0.0;       // coherent conventional errors
  double analytic_dithered = 0.0;  // optimally dithered array
  std::uint64_t clipped_samples = 0;
};

inline double empirical_evm(std::span<const Complex> desired, std::span<const Complex> received) {
  if (desired.size() != received.size()) throw InvalidInput("EVM sequences differ in length");
  if (desired.empty()) throw InvalidInput("EVM needs at least one sample");
  std::vector<double> err(desired.size()), sig(desired.size());
  for (std::size_t i = 0; i < desired.size(); ++i) {
    err[i] = std::norm(received[i] - desired[i]);
    sig[i] = std::norm(desired[i]);
  }
  const double signal = pairwise_sum(sig);
  if (!(signal > 0.0)) throw UndefinedMetric("EVM is undefined for a zero-energy reference");
  return pairwise_sum(err) / signal;
}

namespace detail {

inline void check_predictor_args(double antennas, double step, double signal_power) {
  if (!(antennas >= 1.0)) throw InvalidInput("antenna count must be >= 1");
  if (!(step > 0.0)) throw InvalidInput("step must be positive");
  if (!(signal_power > 0.0)) throw InvalidInput("signal power must be positive");
}

}  // namespace detail

struct ConventionalBounds {
  double min_evm;
  double max_evm;
};

/// M*step^2/6 and M^2*step^2/6, both over E|y|^2.
inline ConventionalBounds predict_conventional_bounds(double antennas, double step,
                                                      double signal_power) {
  detail::check_predictor_args(antennas, step, signal_power);
  const double per_antenna = step * step / 6.0;
  return {antennas * per_antenna / signal_power, antennas * antennas * per_antenna / signal_power};
}

inline double predict_dithered(double antennas, double step, double signal_power) {
  detail::check_predictor_args(antennas, step, signal_power);
  return antennas * step * step / (3.0 * signal_power);
}

/// Dithered EVM in terms of resolution: peak2rms / (3 * M * 2^(2(N-1))).
inline double predict_dithered_from_resolution(double antennas, int bits, double peak2rms_linear) {
  if (!(antennas >= 1.0)) throw InvalidInput("antenna count must be >= 1");
  if (bits < 1) throw InvalidInput("bits must be >= 1");
  if (!(peak2rms_linear > 0.0)) throw InvalidInput("peak2rms must be positive");
  return peak2rms_linear / (3.0 * antennas * std::ldexp(1.0, 2 * (bits - 1)));
}

struct ResolutionTradeoff {
  double step_ratio;   // dithered step over conventional step at equal worst-case EVM
  double bit_savings;  // log4(M/2), not floored
  double gain_db;      // worst-case EVM improvement 10*log10(M/2)
};

inline ResolutionTradeoff resolution_tradeoff(double antennas) {
  if (!(antennas > 0.0)) throw InvalidInput("antenna count must be positive");
  const double half = antennas / 2.0;
  return {std::sqrt(half), std::log2(half) / 2.0, 10.0 * std::log10(half)};
}

}  // namespace ditherdac
