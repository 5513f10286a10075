#pragma once

/**
 * @file dither.hpp
 * @brief Non-subtractive dither and the equivalent model of a dithered quantizer.
 *
 * With dither w added ahead of the converter, each output splits into
 *   Q(x + w) = F(x) + n,   F(x) = E[Q(x + w) | x] = integral of Q(x + w) p(w) dw
 * where n is the equivalent noise. For uniform dither one step wide,
 * F(x) = x on the interior of the converter range. The dither is never
 * subtracted afterwards.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ditherdac/common.hpp"
#include "ditherdac/quantizer.hpp"
#include "ditherdac/rng.hpp"

namespace ditherdac {

enum class DitherFamily { None, UniformSymmetric, Gaussian, Triangular };

/**
 * Dither PDF family plus its single parameter:
 *   UniformSymmetric - full width (density 1/width on [-width/2, width/2))
 *   Gaussian         - standard deviation
 *   Triangular       - half-width of the support
 * Real and imaginary components are drawn independently from the same PDF.
 */
struct DitherSpec {
  DitherFamily family = DitherFamily::None;
  double parameter = 0.0;

  static DitherSpec none() { return {}; }
  static DitherSpec uniform(double width) { return {DitherFamily::UniformSymmetric, width}; }
  static DitherSpec gaussian(double sigma) { return {DitherFamily::Gaussian, sigma}; }
  static DitherSpec triangular(double half_width) { return {DitherFamily::Triangular, half_width}; }

  void validate() const {
    if (family != DitherFamily::None && (!(parameter > 0.0) || !std::isfinite(parameter))) {
      throw InvalidInput("dither parameter must be positive and finite");
    }
  }

  /// Same family with the parameter multiplied by `factor`.
  DitherSpec scaled(double factor) const { return {family, parameter * factor}; }

  /// Density, with both endpoints of a bounded support included.
  double density(double w) const {
    switch (family) {
      case DitherFamily::UniformSymmetric:
        return std::abs(w) <= 0.5 * parameter ? 1.0 / parameter : 0.0;
      case DitherFamily::Gaussian: {
        const double z = w / parameter;
        return std::exp(-0.5 * z * z) / (parameter * std::sqrt(2.0 * std::numbers::pi));
      }
      case DitherFamily::Triangular: {
        const double a = std::abs(w);
        return a <= parameter ? (parameter - a) / (parameter * parameter) : 0.0;
      }
      case DitherFamily::None:
        break;
    }
    throw Unsupported("degenerate dither has no density");
  }

  // Half-width outside of which the PDF mass is below 1e-12.
  double support_half_width() const {
    switch (family) {
      case DitherFamily::UniformSymmetric: return 0.5 * parameter;
      case DitherFamily::Gaussian: return 8.0 * parameter;
      case DitherFamily::Triangular: return parameter;
      case DitherFamily::None: return 0.0;
    }
    return 0.0;
  }

  // Points where the density is not smooth.
  std::vector<double> breakpoints() const {
    const double s = support_half_width();
    if (family == DitherFamily::Triangular) return {-s, 0.0, s};
    return {-s, s};
  }

  friend bool operator==(const DitherSpec&, const DitherSpec&) = default;
};

inline std::string_view family_name(DitherFamily family) {
  switch (family) {
    case DitherFamily::None: return "none";
    case DitherFamily::UniformSymmetric: return "uniform";
    case DitherFamily::Gaussian: return "gaussian";
    case DitherFamily::Triangular: return "triangular";
  }
  return "none";
}

inline DitherFamily parse_family(std::string_view name) {
  for (auto f : {DitherFamily::None, DitherFamily::UniformSymmetric, DitherFamily::Gaussian,
                 DitherFamily::Triangular}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidInput("unknown dither family '" + std::string(name) +
                     "' (expected none, uniform, gaussian or triangular)");
}

namespace detail {

inline double draw_component(const DitherSpec& spec, CounterStream& stream) {
  switch (spec.family) {
    case DitherFamily::UniformSymmetric: return spec.parameter * (stream.next_uniform() - 0.5);
    case DitherFamily::Gaussian: return spec.parameter * stream.next_normal();
    case DitherFamily::Triangular:
      return spec.parameter * (stream.next_uniform() + stream.next_uniform() - 1.0);
    case DitherFamily::None: return 0.0;
  }
  return 0.0;
}

}  // namespace detail

inline Complex draw_dither(const DitherSpec& spec, CounterStream& stream) {
  const double re = detail::draw_component(spec, stream);
  const double im = detail::draw_component(spec, stream);
  return {re, im};
}

/// Q(x + w) with a fresh dither draw; the dither stays in the output.
inline Complex dithered_quantize(Complex x, const DitherSpec& spec, const QuantizerConfig& cfg,
                                 CounterStream& stream, ClipCounter* clips = nullptr) {
  if (spec.family == DitherFamily::None) return quantize_complex(x, cfg, clips);
  return quantize_complex(x + draw_dither(spec, stream), cfg, clips);
}

enum class TransferMethod { ClosedFormUniform, NumericConvolution, MonteCarlo };

struct TransferCurve {
  std::vector<double> grid;
  std::vector<double> values;
  TransferMethod method = TransferMethod::ClosedFormUniform;
};

namespace detail {

inline void check_grid(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw InvalidInput("transfer grid contains a non-finite value");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InvalidInput("transfer grid must be strictly increasing");
    }
  }
}

inline bool matches_step(const DitherSpec& spec, const QuantizerConfig& cfg) {
  return spec.family == DitherFamily::UniformSymmetric &&
         std::abs(spec.parameter - cfg.step) <= 1e-12 * cfg.step;
}

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 48);
}

}  // namespace detail

/**
 * F(x) for uniform dither of width step, from the two bracketing codes and
 * their selection probabilities (x_U - x)/step and (x - x_L)/step.
 */
inline double closed_form_uniform_transfer(double x, const QuantizerConfig& cfg) {
  const auto [lower, upper] = neighbor_codes(x, cfg);
  const double p_lower = (upper - x) / cfg.step;
  const double p_upper = (x - lower) / cfg.step;
  return lower * p_lower + upper * p_upper;
}

inline TransferCurve transfer_function_closed_form_uniform(std::span<const double> grid,
                                                           const DitherSpec& spec,
                                                           const QuantizerConfig& cfg) {
  cfg.validate();
  if (!detail::matches_step(spec, cfg)) {
    throw Unsupported("closed-form transfer needs uniform dither exactly one step wide");
  }
  detail::check_grid(grid);
  TransferCurve curve{{grid.begin(), grid.end()}, {}, TransferMethod::ClosedFormUniform};
  curve.values.reserve(grid.size());
  for (double x : grid) curve.values.push_back(closed_form_uniform_transfer(x, cfg));
  return curve;
}

inline TransferCurve transfer_function_closed_form_uniform(std::span<const double> grid,
                                                           const QuantizerConfig& cfg) {
  return transfer_function_closed_form_uniform(grid, DitherSpec::uniform(cfg.step), cfg);
}

/**
 * Quadrature of the convolution integral. The integrand is piecewise
 * constant in w, so the support is cut at every decision threshold (and at
 * the density's own kinks) and each piece contributes code * mass.
 * The staircase saturates at the extreme codes.
 */
inline double numeric_transfer(double x, const DitherSpec& spec, const QuantizerConfig& cfg,
                               double tol = 1e-13) {
  QuantizerConfig sat = cfg;
  sat.saturation = Saturation::SaturateAndCount;
  if (spec.family == DitherFamily::None) return quantize_real(x, sat);

  const double s = spec.support_half_width();
  std::vector<double> cuts = spec.breakpoints();
  const double inner = static_cast<double>(cfg.half_levels() - 1);
  const double k_lo = std::max(std::ceil((x - s) / cfg.step), -inner);
  const double k_hi = std::min(std::floor((x + s) / cfg.step), inner);
  for (double k = k_lo; k <= k_hi; k += 1.0) {
    const double w = k * cfg.step - x;
    if (w > -s && w < s) cuts.push_back(w);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const std::function<double(double)> pdf = [&spec](double w) { return spec.density(w); };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (!(b > a)) continue;
    const double code = quantize_real(x + 0.5 * (a + b), sat);
    acc += code * detail::integrate(pdf, a, b, tol);
  }
  return acc;
}

inline TransferCurve transfer_function_numeric(std::span<const double> grid, const DitherSpec& spec,
                                               const QuantizerConfig& cfg) {
  cfg.validate();
  spec.validate();
  detail::check_grid(grid);
  TransferCurve curve{{grid.begin(), grid.end()}, {}, TransferMethod::NumericConvolution};
  curve.values.reserve(grid.size());
  for (double x : grid) curve.values.push_back(numeric_transfer(x, spec, cfg));
  return curve;
}

/// Sample-mean estimate of F on a grid, one independent stream per grid point.
inline TransferCurve transfer_function_monte_carlo(std::span<const double> grid,
                                                   const DitherSpec& spec,
                                                   const QuantizerConfig& cfg,
                                                   std::uint32_t draws, std::uint64_t seed) {
  cfg.validate();
  spec.validate();
  detail::check_grid(grid);
  if (draws == 0) throw InvalidInput("Monte Carlo transfer needs at least one draw");
  QuantizerConfig sat = cfg;
  sat.saturation = Saturation::SaturateAndCount;
  TransferCurve curve{{grid.begin(), grid.end()}, {}, TransferMethod::MonteCarlo};
  curve.values.reserve(grid.size());
  std::vector<double> outputs(draws);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CounterStream stream({seed, StreamRole::Dither, static_cast<std::uint32_t>(i), 0});
    for (auto& out : outputs) out = quantize_real(grid[i] + detail::draw_component(spec, stream), sat);
    curve.values.push_back(pairwise_sum(outputs) / draws);
  }
  return curve;
}

/// F(x) for one real input: closed form when it applies, quadrature otherwise.
inline double equivalent_transfer(double x, const DitherSpec& spec, const QuantizerConfig& cfg) {
  if (detail::matches_step(spec, cfg)) return closed_form_uniform_transfer(x, cfg);
  return numeric_transfer(x, spec, cfg);
}

inline Complex equivalent_transfer(Complex x, const DitherSpec& spec, const QuantizerConfig& cfg) {
  return {equivalent_transfer(x.real(), spec, cfg), equivalent_transfer(x.imag(), spec, cfg)};
}

/**
 * n = Q(x + w) - F(x). Only defined for a real dither; the undithered error
 * is available through quantization_error().
 */
inline Complex equivalent_noise(Complex x, const DitherSpec& spec, const QuantizerConfig& cfg,
                                CounterStream& stream, ClipCounter* clips = nullptr) {
  if (spec.family == DitherFamily::None) {
    throw Unsupported("equivalent noise is undefined without dither; use quantization_error");
  }
  return dithered_quantize(x, spec, cfg, stream, clips) - equivalent_transfer(x, spec, cfg);
}

struct NoiseObservation {
  Complex input;
  Complex noise_a;  // antenna a
  Complex noise_b;  // antenna b
};

/**
 * Equivalent noise on two antennas driven by the same inputs. Antenna index
 * selects the dither stream; passing the same index twice shares the dither.
 */
inline std::vector<NoiseObservation> observe_equivalent_noise(std::span<const Complex> inputs,
                                                              const DitherSpec& spec,
                                                              const QuantizerConfig& cfg,
                                                              std::uint64_t seed,
                                                              std::uint32_t antenna_a,
                                                              std::uint32_t antenna_b,
                                                              ClipCounter* clips = nullptr) {
  std::vector<NoiseObservation> out;
  out.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto trial = static_cast<std::uint32_t>(t);
    CounterStream stream_a({seed, StreamRole::Dither, trial, antenna_a});
    CounterStream stream_b({seed, StreamRole::Dither, trial, antenna_b});
    const Complex f = equivalent_transfer(inputs[t], spec, cfg);
    out.push_back({inputs[t], dithered_quantize(inputs[t], spec, cfg, stream_a, clips) - f,
                   dithered_quantize(inputs[t], spec, cfg, stream_b, clips) - f});
  }
  return out;
}

struct EquivalentNoiseStats {
  Complex mean;                  // pooled over both antennas
  double variance = 0.0;         // complex variance E|n - mean|^2, pooled
  Complex input_correlation;     // normalized E[conj(n_a) x]
  Complex pairwise_correlation;  // normalized E[conj(n_a) n_b]
  double mean_z = 0.0;           // max over components of |mean| / standard error
  double input_z = 0.0;          // |input_correlation| * sqrt(n)
  double pairwise_z = 0.0;       // |pairwise_correlation| * sqrt(n)
  std::size_t sample_count = 0;
};

inline EquivalentNoiseStats noise_property_test(std::span<const NoiseObservation> obs,
                                                std::size_t min_samples = 10000) {
  if (obs.size() < min_samples || obs.empty()) {
    throw InsufficientSamples("noise property test needs at least " + std::to_string(min_samples) +
                              " samples, got " + std::to_string(obs.size()));
  }
  const std::size_t n = obs.size();
  std::vector<double> re(2 * n), im(2 * n);
  for (std::size_t t = 0; t < n; ++t) {
    re[2 * t] = obs[t].noise_a.real();
    re[2 * t + 1] = obs[t].noise_b.real();
    im[2 * t] = obs[t].noise_a.imag();
    im[2 * t + 1] = obs[t].noise_b.imag();
  }
  const double pooled = static_cast<double>(2 * n);
  const Complex mean{pairwise_sum(re) / pooled, pairwise_sum(im) / pooled};

  std::vector<double> dre(2 * n), dim(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    dre[i] = (re[i] - mean.real()) * (re[i] - mean.real());
    dim[i] = (im[i] - mean.imag()) * (im[i] - mean.imag());
  }
  const double var_re = pairwise_sum(dre) / (pooled - 1.0);
  const double var_im = pairwise_sum(dim) / (pooled - 1.0);

  // Raw cross moments; the properties are stated for E[conj(n) x] and E[conj(n1) n2].
  std::vector<double> xr(n), xi(n), pr(n), pi(n), ea(n), eb(n), ex(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Complex cx = std::conj(obs[t].noise_a) * obs[t].input;
    const Complex cp = std::conj(obs[t].noise_a) * obs[t].noise_b;
    xr[t] = cx.real();
    xi[t] = cx.imag();
    pr[t] = cp.real();
    pi[t] = cp.imag();
    ea[t] = std::norm(obs[t].noise_a);
    eb[t] = std::norm(obs[t].noise_b);
    ex[t] = std::norm(obs[t].input);
  }
  const double energy_a = pairwise_sum(ea);
  const double energy_b = pairwise_sum(eb);
  const double energy_x = pairwise_sum(ex);

  EquivalentNoiseStats stats;
  stats.sample_count = n;
  stats.mean = mean;
  stats.variance = var_re + var_im;
  const double se_re = std::sqrt(var_re / pooled);
  const double se_im = std::sqrt(var_im / pooled);
  stats.mean_z = std::max(se_re > 0 ? std::abs(mean.real()) / se_re : 0.0,
                          se_im > 0 ? std::abs(mean.imag()) / se_im : 0.0);
  const double root_n = std::sqrt(static_cast<double>(n));
  if (energy_a > 0.0 && energy_x > 0.0) {
    stats.input_correlation =
        Complex{pairwise_sum(xr), pairwise_sum(xi)} / std::sqrt(energy_a * energy_x);
  }
  if (energy_a > 0.0 && energy_b > 0.0) {
    stats.pairwise_correlation =
        Complex{pairwise_sum(pr), pairwise_sum(pi)} / std::sqrt(energy_a * energy_b);
  }
  stats.input_z = std::abs(stats.input_correlation) * root_n;
  stats.pairwise_z = std::abs(stats.pairwise_correlation) * root_n;
  return stats;
}

}  // namespace ditherdac
