#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace ditherdac {

/// Complex baseband sample; real and imaginary parts drive separate DACs.
using Complex = std::complex<double>;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct Unsupported : std::logic_error {
  using std::logic_error::logic_error;
};

struct UndefinedMetric : std::domain_error {
  using std::domain_error::domain_error;
};

struct InsufficientSamples : std::length_error {
  using std::length_error::length_error;
};

/**
 * @brief Fixed-tree pairwise summation.
 *
 * The association order depends only on the length of the input, so the
 * result is bit-identical no matter how the terms were produced.
 */
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Power ratio to decibels.
inline double to_db(double power_ratio) { return 10.0 * std::log10(power_ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace ditherdac
