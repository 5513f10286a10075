#pragma once

/**
 * @file montecarlo.hpp
 * @brief Seeded Monte Carlo experiments for a single-user ULA downlink with
 * conventional and dithered low-resolution DACs.
 *
 * Power conventions:
 *   signal_power        E|y|^2 at the user (complex variance)
 *   per-antenna power   E|x_m|^2 = signal_power / M^2 under matched precoding
 *   step calibration    peak2rms = (2^(N-1) * step)^2 / E|x_m|^2
 *
 * Trial t draws its user sample from stream (seed, Signal, t, 0) and the
 * dither of antenna m from (seed, Dither, t, m). Per-trial energies are
 * stored by index and reduced with pairwise_sum, so results are bit-identical
 * for any worker count. The same trial streams are reused at every sweep point.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "ditherdac/array.hpp"
#include "ditherdac/common.hpp"
#include "ditherdac/dither.hpp"
#include "ditherdac/evm.hpp"
#include "ditherdac/quantizer.hpp"
#include "ditherdac/rng.hpp"

namespace ditherdac {

inline std::vector<double> default_angle_grid() {
  std::vector<double> grid;
  for (int deg = -90; deg <= 90; deg += 3) grid.push_back(deg);
  return grid;
}

struct ExperimentConfig {
  ChannelScene scene{100, {0.0}};
  int bits = 6;
  double peak2rms_db = 15.0;
  std::int64_t samples = 10000;
  std::vector<double> angle_grid = default_angle_grid();  // degrees
  std::vector<int> antenna_grid{1, 10, 100};
  std::vector<int> bits_grid{2, 3, 4, 5, 6, 7, 8};
  std::uint64_t master_seed = 0x5eed2019u;
  /// Dither with its parameter expressed in quantizer steps (uniform 1.0 = one step wide).
  DitherSpec dither = DitherSpec::uniform(1.0);
  double signal_power = 1.0;

  double peak2rms_linear() const { return from_db(peak2rms_db); }

  void validate() const {
    scene.validate();
    if (bits < 1 || bits > 52) throw InvalidInput("bits must be in [1, 52]");
    if (!std::isfinite(peak2rms_db) || !(peak2rms_db > 0.0)) {
      throw InvalidInput("peak2rms_db must be > 0 (linear ratio > 1)");
    }
    if (samples < 1 || samples > std::numeric_limits<std::uint32_t>::max()) {
      throw InvalidInput("samples must be in [1, 2^32 - 1]");
    }
    if (angle_grid.empty()) throw InvalidInput("angle_grid must not be empty");
    for (double a : angle_grid) {
      if (!std::isfinite(a) || a < -90.0 || a > 90.0) {
        throw InvalidInput("angle_grid values must lie in [-90, 90] degrees");
      }
    }
    if (antenna_grid.empty()) throw InvalidInput("antenna_grid must not be empty");
    for (int m : antenna_grid) {
      if (m < 1) throw InvalidInput("antenna_grid values must be >= 1");
    }
    if (bits_grid.empty()) throw InvalidInput("bits_grid must not be empty");
    for (int n : bits_grid) {
      if (n < 1 || n > 52) throw InvalidInput("bits_grid values must be in [1, 52]");
    }
    dither.validate();
    if (!(signal_power > 0.0) || !std::isfinite(signal_power)) {
      throw InvalidInput("signal_power must be positive");
    }
  }
};

/// Step such that (2^(N-1) * step)^2 / per_antenna_power == peak2rms.
inline double calibrate_step(int bits, double peak2rms_linear, double per_antenna_power) {
  if (bits < 1) throw InvalidInput("bits must be >= 1");
  if (!(peak2rms_linear > 0.0) || !(per_antenna_power > 0.0)) {
    throw InvalidInput("calibrate_step needs positive peak2rms and power");
  }
  return std::sqrt(peak2rms_linear * per_antenna_power) / std::ldexp(1.0, bits - 1);
}

inline unsigned resolve_workers(unsigned workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs fn(begin, end) over contiguous chunks of [0, n) on `workers` threads.
 * The first exception thrown by any chunk is rethrown on the caller.
 */
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n, w * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back([&, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

/// User sample of trial t: circularly-symmetric complex Gaussian with E|y|^2 = power.
inline Complex user_sample(std::uint64_t seed, std::uint32_t trial, double power) {
  CounterStream stream({seed, StreamRole::Signal, trial, 0});
  const double re = stream.next_normal();
  const double im = stream.next_normal();
  return std::sqrt(0.5 * power) * Complex{re, im};
}

inline std::vector<Complex> generate_user_signal(std::size_t count, double signal_power,
                                                 std::uint64_t seed, unsigned workers = 1) {
  if (count < 1) throw InvalidInput("signal length must be >= 1");
  std::vector<Complex> out(count);
  parallel_for(count, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) out[t] = user_sample(seed, static_cast<std::uint32_t>(t), signal_power);
  });
  return out;
}

struct ChainResult {
  EvmReport conventional;
  EvmReport dithered;
  double step = 0.0;
};

namespace detail {

inline Complex cmul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline EvmReport make_report(std::span<const double> err, std::span<const double> sig,
                             std::uint64_t clips, double antennas, double step,
                             double signal_power) {
  EvmReport r;
  r.sample_count = static_cast<std::int64_t>(err.size());
  r.empirical_evm = pairwise_sum(err) / pairwise_sum(sig);
  r.empirical_evm_db = to_db(r.empirical_evm);
  const auto bounds = predict_conventional_bounds(antennas, step, signal_power);
  r.analytic_min = bounds.min_evm;
  r.analytic_max = bounds.max_evm;
  r.analytic_dithered = predict_dithered(antennas, step, signal_power);
  r.clipped_samples = clips;
  return r;
}

}  // namespace detail

/**
 * One sweep point: M antennas, N bits, user at alpha (radians). Conventional
 * and dithered chains share the same user samples.
 */
inline ChainResult simulate_point(const ExperimentConfig& cfg, int antennas, int bits, double alpha,
                                  bool conventional, bool dithered, unsigned workers = 1) {
  cfg.validate();
  ChannelScene scene{antennas, {alpha}};
  scene.validate();
  const double m_count = static_cast<double>(antennas);
  const double step =
      calibrate_step(bits, cfg.peak2rms_linear(), cfg.signal_power / (m_count * m_count));
  const QuantizerConfig q{bits, step, Saturation::SaturateAndCount};
  const DitherSpec dither = cfg.dither.scaled(step);
  const auto c = steering_vector(scene, 0);
  std::vector<Complex> c_conj(c.size());
  for (std::size_t m = 0; m < c.size(); ++m) c_conj[m] = std::conj(c[m]);

  const auto n = static_cast<std::size_t>(cfg.samples);
  std::vector<double> err_conv(conventional ? n : 0), err_dith(dithered ? n : 0), sig(n);
  std::vector<std::uint64_t> clip_conv(n, 0), clip_dith(n, 0);

  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto trial = static_cast<std::uint32_t>(t);
      const Complex y = user_sample(cfg.master_seed, trial, cfg.signal_power);
      const Complex x0 = y / m_count;
      Complex acc_conv{0.0, 0.0};
      Complex acc_dith{0.0, 0.0};
      ClipCounter cc, cd;
      for (std::size_t m = 0; m < c.size(); ++m) {
        const Complex xm = detail::cmul(c_conj[m], x0);
        if (conventional) acc_conv += detail::cmul(c[m], quantize_complex(xm, q, &cc));
        if (dithered) {
          CounterStream stream({cfg.master_seed, StreamRole::Dither, trial, static_cast<std::uint32_t>(m)});
          acc_dith += detail::cmul(c[m], dithered_quantize(xm, dither, q, stream, &cd));
        }
      }
      sig[t] = std::norm(y);
      if (conventional) err_conv[t] = std::norm(acc_conv - y);
      if (dithered) err_dith[t] = std::norm(acc_dith - y);
      clip_conv[t] = cc.count;
      clip_dith[t] = cd.count;
    }
  });

  const auto total = [](const std::vector<std::uint64_t>& v) {
    std::uint64_t s = 0;
    for (auto x : v) s += x;
    return s;
  };
  ChainResult result;
  result.step = step;
  if (conventional) {
    result.conventional = detail::make_report(err_conv, sig, total(clip_conv), m_count, step, cfg.signal_power);
  }
  if (dithered) {
    result.dithered = detail::make_report(err_dith, sig, total(clip_dith), m_count, step, cfg.signal_power);
  }
  return result;
}

/// Full chain for the configured scene and bits at direction alpha (radians).
inline EvmReport simulate_chain(const ExperimentConfig& cfg, double alpha, bool dithered,
                                unsigned workers = 1) {
  if (cfg.scene.users() != 1) throw Unsupported("simulation supports a single user");
  const auto r = simulate_point(cfg, cfg.scene.antennas, cfg.bits, alpha, !dithered, dithered, workers);
  return dithered ? r.dithered : r.conventional;
}

inline double degrees_to_radians(double deg) { return std::numbers::pi * (deg / 180.0); }

struct SweepRow {
  double angle_deg = 0.0;
  int antennas = 0;
  int bits = 0;
  double step = 0.0;
  std::int64_t samples = 0;
  double evm_conventional_db = 0.0;
  double evm_dithered_db = 0.0;
  double evm_analytic_db = 0.0;  // dithered prediction from (M, N, peak2rms)
  std::uint64_t clipped_conventional = 0;
  std::uint64_t clipped_dithered = 0;
};

namespace detail {

inline SweepRow make_row(const ExperimentConfig& cfg, double angle_deg, int antennas, int bits,
                         unsigned workers) {
  const auto r = simulate_point(cfg, antennas, bits, degrees_to_radians(angle_deg), true, true, workers);
  SweepRow row;
  row.angle_deg = angle_deg;
  row.antennas = antennas;
  row.bits = bits;
  row.step = r.step;
  row.samples = cfg.samples;
  row.evm_conventional_db = r.conventional.empirical_evm_db;
  row.evm_dithered_db = r.dithered.empirical_evm_db;
  row.evm_analytic_db = to_db(predict_dithered_from_resolution(antennas, bits, cfg.peak2rms_linear()));
  row.clipped_conventional = r.conventional.clipped_samples;
  row.clipped_dithered = r.dithered.clipped_samples;
  return row;
}

}  // namespace detail

/// EVM versus departure angle for the configured M and N.
inline std::vector<SweepRow> angle_sweep(const ExperimentConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  std::vector<SweepRow> rows;
  rows.reserve(cfg.angle_grid.size());
  for (double deg : cfg.angle_grid) {
    rows.push_back(detail::make_row(cfg, deg, cfg.scene.antennas, cfg.bits, workers));
  }
  return rows;
}

/// Worst-case (alpha = 0) EVM over the antenna and bits grids, M-major.
inline std::vector<SweepRow> resolution_sweep(const ExperimentConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  std::vector<SweepRow> rows;
  rows.reserve(cfg.antenna_grid.size() * cfg.bits_grid.size());
  for (int m : cfg.antenna_grid) {
    for (int n : cfg.bits_grid) rows.push_back(detail::make_row(cfg, 0.0, m, n, workers));
  }
  return rows;
}

}  // namespace ditherdac
