#pragma once

/**
 * @file array.hpp
 * @brief Line-of-sight half-wavelength ULA: steering, matched precoding and
 * superposition at the user.
 *
 * Antennas are indexed m = 0..M-1. Steering for user k is
 *   c_k(m) = exp(j * pi * m * sin(alpha_k)).
 */

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ditherdac/common.hpp"
#include "ditherdac/quantizer.hpp"

namespace ditherdac {

enum class ArrayGeometry { UniformLinearHalfWavelength };

struct ChannelScene {
  int antennas = 1;
  std::vector<double> directions{0.0};  // radians, one per user
  ArrayGeometry geometry = ArrayGeometry::UniformLinearHalfWavelength;

  std::size_t users() const { return directions.size(); }

  void validate() const {
    if (antennas < 1) throw InvalidInput("scene needs at least one antenna");
    if (directions.empty()) throw InvalidInput("scene needs at least one user");
    for (double a : directions) {
      if (!std::isfinite(a) || a < -std::numbers::pi / 2 || a > std::numbers::pi / 2) {
        throw InvalidInput("user direction must lie in [-pi/2, pi/2] radians");
      }
    }
  }
};

/**
 * exp(j * pi * t). Whole quarter turns are returned exactly, which keeps the
 * worst-case directions (where every coefficient is +-1 or +-j) bit-exact.
 */
inline Complex cis_pi(double t) {
  double r = std::fmod(t, 2.0);  // (-2, 2)
  if (r < 0) r += 2.0;           // [0, 2)
  const double quarters = 2.0 * r;
  if (quarters == std::floor(quarters)) {
    switch (static_cast<int>(quarters)) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      case 3: return {0.0, -1.0};
      default: break;
    }
  }
  const double phase = std::numbers::pi * r;
  return {std::cos(phase), std::sin(phase)};
}

inline Complex steering(const ChannelScene& scene, std::size_t user, std::size_t antenna) {
  if (user >= scene.users()) throw RangeError("user index out of range");
  if (antenna >= static_cast<std::size_t>(scene.antennas)) throw RangeError("antenna index out of range");
  return cis_pi(static_cast<double>(antenna) * std::sin(scene.directions[user]));
}

inline std::vector<Complex> steering_vector(const ChannelScene& scene, std::size_t user) {
  if (user >= scene.users()) throw RangeError("user index out of range");
  std::vector<Complex> c(static_cast<std::size_t>(scene.antennas));
  const double s = std::sin(scene.directions[user]);
  for (std::size_t m = 0; m < c.size(); ++m) c[m] = cis_pi(static_cast<double>(m) * s);
  return c;
}

/// conj(c_1(m)) * y / M for the single user of the scene.
inline Complex matched_precode(Complex y, const ChannelScene& scene, std::size_t antenna) {
  if (scene.users() != 1) throw Unsupported("matched precoding is single-user only");
  return std::conj(steering(scene, 0, antenna)) * (y / static_cast<double>(scene.antennas));
}

inline Complex receive(const ChannelScene& scene, std::size_t user,
                       std::span<const Complex> antenna_outputs) {
  if (antenna_outputs.size() != static_cast<std::size_t>(scene.antennas)) {
    throw InvalidInput("receive expects " + std::to_string(scene.antennas) + " antenna outputs, got " +
                       std::to_string(antenna_outputs.size()));
  }
  const auto c = steering_vector(scene, user);
  Complex acc{0.0, 0.0};
  for (std::size_t m = 0; m < c.size(); ++m) acc += c[m] * antenna_outputs[m];
  return acc;
}

/**
 * True when, for every y, the undithered per-antenna errors of the matched
 * precoder satisfy q_m == conj(c(m) / c(0)) * q_0 exactly. Works for any
 * single-user direction; generic directions are expected to fail.
 */
inline bool coherent_errors(const ChannelScene& scene, std::span<const Complex> signals,
                            const QuantizerConfig& cfg) {
  if (scene.users() != 1) throw Unsupported("coherence check is single-user only");
  const auto c = steering_vector(scene, 0);
  const double inv = static_cast<double>(scene.antennas);
  for (const Complex& y : signals) {
    const Complex x0 = std::conj(c[0]) * (y / inv);
    const Complex q0 = quantize_complex(x0, cfg) - x0;
    for (std::size_t m = 1; m < c.size(); ++m) {
      const Complex xm = std::conj(c[m]) * (y / inv);
      const Complex qm = quantize_complex(xm, cfg) - xm;
      if (qm != std::conj(c[m] * std::conj(c[0])) * q0) return false;
    }
  }
  return true;
}

/// Directions whose steering coefficients are all exactly +-1 or +-j.
inline bool is_quarter_turn_direction(double alpha) {
  const double twice = 2.0 * std::sin(alpha);
  return twice == std::floor(twice);
}

/**
 * Checks the coherent worst case at a direction where it is guaranteed by
 * the quantizer's symmetries. Restricted to alpha in {0, +-pi/2}.
 */
inline bool worst_case_error_check(const ChannelScene& scene, std::span<const Complex> signals,
                                   const QuantizerConfig& cfg) {
  if (scene.users() != 1) throw Unsupported("worst-case check is single-user only");
  const double alpha = scene.directions[0];
  if (!(alpha == 0.0 || std::abs(alpha) == std::numbers::pi / 2) || !is_quarter_turn_direction(alpha)) {
    throw Unsupported("worst-case check is only verified for directions 0 and +-pi/2");
  }
  return coherent_errors(scene, signals, cfg);
}

}  // namespace ditherdac
