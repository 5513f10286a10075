#pragma once

/**
 * @file validation.hpp
 * @brief Statistical and exact self-checks across all modules.
 *
 * Each check records its statistic, threshold and sample count; failures are
 * report entries, not exceptions.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "ditherdac/array.hpp"
#include "ditherdac/dither.hpp"
#include "ditherdac/evm.hpp"
#include "ditherdac/montecarlo.hpp"
#include "ditherdac/quantizer.hpp"
#include "ditherdac/rng.hpp"

namespace ditherdac {

struct CheckResult {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::int64_t samples = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

struct ValidationOptions {
  std::int64_t variance_samples = 1'000'000;
  std::int64_t whiteness_samples = 100'000;
  std::int64_t coherence_draws = 1'000;
  std::int64_t grid_points = 10'000;
  std::int64_t symmetry_samples = 100'000;
  int coherence_antennas = 64;
  // Feeds both antennas of the whiteness check from one dither stream (misuse demo).
  bool shared_dither = false;
};

namespace detail {

inline double relative_error(double value, double expected) {
  return std::abs(value - expected) / std::abs(expected);
}

inline double sample_variance(std::span<const double> v) {
  const double mean = pairwise_sum(v) / static_cast<double>(v.size());
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

}  // namespace detail

inline ValidationReport validation_suite(const ExperimentConfig& cfg,
                                         const ValidationOptions& opt = {}) {
  cfg.validate();
  ValidationReport report;
  const std::uint64_t seed = cfg.master_seed;
  const int bits = cfg.bits;

  // Quantizer symmetries, bit-exact over random off-grid inputs.
  {
    const QuantizerConfig q{bits, 1.0, Saturation::SaturateAndCount};
    std::int64_t odd_failures = 0, rot_failures = 0;
    for (std::int64_t i = 0; i < opt.symmetry_samples; ++i) {
      CounterStream s({seed, StreamRole::Input, static_cast<std::uint32_t>(i), 7});
      const double lim = q.input_limit() > 0 ? q.input_limit() : q.step;
      const Complex x{lim * (2.0 * s.next_uniform() - 1.0), lim * (2.0 * s.next_uniform() - 1.0)};
      if (quantize_complex(-x, q) != -quantize_complex(x, q)) ++odd_failures;
      const Complex jx{-x.imag(), x.real()};
      const Complex qx = quantize_complex(x, q);
      if (quantize_complex(jx, q) != Complex{-qx.imag(), qx.real()}) ++rot_failures;
    }
    report.checks.push_back({"quantizer_odd_symmetry", odd_failures == 0, double(odd_failures), 0.0,
                             opt.symmetry_samples, "count of x with Q(-x) != -Q(x)"});
    report.checks.push_back({"quantizer_quarter_rotation", rot_failures == 0, double(rot_failures), 0.0,
                             opt.symmetry_samples, "count of x with Q(jx) != jQ(x)"});
  }

  // Conventional error variance, uniform input over the full range.
  double conventional_complex_variance = 0.0;
  {
    const QuantizerConfig q{6, 1.0, Saturation::SaturateAndCount};
    const auto n = static_cast<std::size_t>(opt.variance_samples);
    std::vector<double> re(n), im(n);
    const double lim = q.input_limit();
    for (std::size_t i = 0; i < n; ++i) {
      CounterStream s({seed, StreamRole::Input, static_cast<std::uint32_t>(i), 1});
      const Complex x{lim * (2.0 * s.next_uniform() - 1.0), lim * (2.0 * s.next_uniform() - 1.0)};
      const auto e = quantization_error(x, q).value;
      re[i] = e.real();
      im[i] = e.imag();
    }
    const double var_re = detail::sample_variance(re);
    const double var_im = detail::sample_variance(im);
    const double expected = q.step * q.step / 12.0;
    const double rel = std::max(detail::relative_error(var_re, expected), detail::relative_error(var_im, expected));
    report.checks.push_back({"quantization_error_variance", rel < 0.01, rel, 0.01, opt.variance_samples,
                             "max relative deviation of per-component variance from step^2/12"});
    const double mean = std::abs(pairwise_sum(re) / static_cast<double>(n));
    const double bound = 3.0 * (q.step / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
    report.checks.push_back({"quantization_error_mean", mean < bound, mean, bound, opt.variance_samples,
                             "|mean| of real error"});
  }

  // Dithered equivalent noise and conventional error on the same Gaussian input
  // at the configured peak-to-rms.
  {
    const QuantizerConfig q{6, calibrate_step(6, cfg.peak2rms_linear(), 1.0), Saturation::SaturateAndCount};
    const DitherSpec spec = DitherSpec::uniform(q.step);
    const auto n = static_cast<std::size_t>(opt.variance_samples);
    std::vector<double> dith(n), conv(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto trial = static_cast<std::uint32_t>(i);
      const Complex x = user_sample(seed ^ 0x9e3779b97f4a7c15ull, trial, 1.0);
      CounterStream ds({seed, StreamRole::Dither, trial, 2});
      dith[i] = std::norm(equivalent_noise(x, spec, q, ds));
      conv[i] = std::norm(quantization_error(x, q).value);
    }
    const double v_dith = pairwise_sum(dith) / static_cast<double>(n);
    conventional_complex_variance = pairwise_sum(conv) / static_cast<double>(n);
    const double step2 = q.step * q.step;
    const double rel_d = detail::relative_error(v_dith, step2 / 3.0);
    const double rel_c = detail::relative_error(conventional_complex_variance, step2 / 6.0);
    const double ratio = v_dith / conventional_complex_variance;
    report.checks.push_back({"equivalent_noise_variance", rel_d < 0.01, rel_d, 0.01, opt.variance_samples,
                             "relative deviation of E|n|^2 from step^2/3"});
    report.checks.push_back({"complex_error_variance", rel_c < 0.01, rel_c, 0.01, opt.variance_samples,
                             "relative deviation of E|q|^2 from step^2/6"});
    report.checks.push_back({"dither_penalty_ratio", std::abs(ratio / 2.0 - 1.0) < 0.05, ratio, 2.0,
                             opt.variance_samples, "dithered over conventional noise power, expect 2 within 5%"});
  }

  // Transfer function: closed form is the identity, quadrature agrees with it.
  {
    const QuantizerConfig q{bits, 1.0, Saturation::SaturateAndCount};
    const double lim = q.input_limit() > 0 ? q.input_limit() : 0.0;
    const auto n = static_cast<std::size_t>(opt.grid_points);
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = -lim + 2.0 * lim * static_cast<double>(i) / static_cast<double>(n);
    double identity_dev = 0.0, numeric_dev = 0.0;
    if (lim > 0) {
      const auto closed = transfer_function_closed_form_uniform(grid, q);
      const auto numeric = transfer_function_numeric(grid, DitherSpec::uniform(q.step), q);
      for (std::size_t i = 0; i < n; ++i) {
        identity_dev = std::max(identity_dev, std::abs(closed.values[i] - grid[i]));
        numeric_dev = std::max(numeric_dev, std::abs(numeric.values[i] - closed.values[i]));
      }
    }
    report.checks.push_back({"transfer_identity", lim > 0 && identity_dev <= 1e-12, identity_dev, 1e-12,
                             opt.grid_points, "max |F(x) - x| for uniform dither"});
    report.checks.push_back({"transfer_numeric_vs_closed_form", lim > 0 && numeric_dev <= 1e-9, numeric_dev,
                             1e-9, opt.grid_points, "max |numeric - closed form|"});
  }

  // Equivalent-noise properties on two antennas.
  {
    const QuantizerConfig q{6, calibrate_step(6, cfg.peak2rms_linear(), 1.0), Saturation::SaturateAndCount};
    const auto n = static_cast<std::size_t>(opt.whiteness_samples);
    std::vector<Complex> inputs(n);
    for (std::size_t i = 0; i < n; ++i) inputs[i] = user_sample(seed ^ 0x51ed270b27e8c3a5ull, static_cast<std::uint32_t>(i), 1.0);
    const DitherSpec spec = cfg.dither.family == DitherFamily::None ? DitherSpec::uniform(q.step)
                                                                    : cfg.dither.scaled(q.step);
    const auto obs = observe_equivalent_noise(inputs, spec, q, seed, 0, opt.shared_dither ? 0u : 1u);
    const auto stats = noise_property_test(obs);
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    const double in_corr = std::abs(stats.input_correlation);
    const double pair_corr = std::abs(stats.pairwise_correlation);
    report.checks.push_back({"noise_zero_mean", stats.mean_z < 3.0, stats.mean_z, 3.0, opt.whiteness_samples,
                             "z-score of pooled noise mean"});
    report.checks.push_back({"noise_input_uncorrelated", in_corr < bound, in_corr, bound, opt.whiteness_samples,
                             "|corr(n, x)|"});
    report.checks.push_back({"noise_whiteness", pair_corr < bound, pair_corr, bound, opt.whiteness_samples,
                             "|corr(n_a, n_b)| across antennas"});
  }

  // Coherent worst case.
  {
    const QuantizerConfig q{6, calibrate_step(6, cfg.peak2rms_linear(),
                                              cfg.signal_power / double(opt.coherence_antennas * opt.coherence_antennas)),
                            Saturation::SaturateAndCount};
    const auto signals = generate_user_signal(static_cast<std::size_t>(opt.coherence_draws), cfg.signal_power,
                                              seed ^ 0xc0ffeeull);
    bool ok = true;
    for (double alpha : {0.0, std::numbers::pi / 2, -std::numbers::pi / 2}) {
      ok = ok && worst_case_error_check(ChannelScene{opt.coherence_antennas, {alpha}}, signals, q);
    }
    report.checks.push_back({"worst_case_coherence", ok, ok ? 0.0 : 1.0, 0.0, opt.coherence_draws,
                             "bit-exact q_m == conj(c_m / c_0) q_0 at alpha in {0, +-pi/2}"});
  }

  // Predictor algebra over a parameter grid.
  {
    double worst = 0.0;
    std::int64_t points = 0;
    for (int mi = 0; mi < 10; ++mi) {
      for (int ni = 0; ni < 10; ++ni) {
        const double m = std::round(std::pow(10.0, 0.45 * mi));  // 1 .. ~11000
        const int n = 1 + ni;
        const double p = from_db(5.0 + 2.0 * ni);
        const double s = 0.25 + 0.5 * mi;
        const double step = calibrate_step(n, p, s / (m * m));
        const auto b = predict_conventional_bounds(m, step, s);
        const double d = predict_dithered(m, step, s);
        worst = std::max({worst, detail::relative_error(d, 2.0 * b.min_evm),
                          detail::relative_error(b.max_evm, m * b.min_evm),
                          detail::relative_error(predict_dithered_from_resolution(m, n, p), d)});
        ++points;
      }
    }
    report.checks.push_back({"predictor_consistency", worst <= 1e-12, worst, 1e-12, points,
                             "max relative deviation across the predictor identities"});
    const auto t = resolution_tradeoff(512);
    const bool exact = t.step_ratio == 16.0 && t.bit_savings == 4.0;
    report.checks.push_back({"resolution_tradeoff_512", exact, t.bit_savings, 4.0, 1,
                             "step ratio 16 and 4 bits saved at M = 512"});
  }
  return report;
}

}  // namespace ditherdac
