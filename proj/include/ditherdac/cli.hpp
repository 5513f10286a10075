#pragma once

/**
 * @file cli.hpp
 * @brief Configuration loading, CSV table output and subcommand dispatch for
 * the ditherdac command-line tool.
 *
 * Config files are JSON objects whose keys mirror ExperimentConfig:
 *
 *   {
 *     "scene": {"antennas": 1000, "directions": [0.0]},
 *     "bits": 6, "peak2rms_db": 15, "samples": 10000,
 *     "angle_grid": [-90, -87, ...], "antenna_grid": [1, 10, 100],
 *     "bits_grid": [2, 3, 4, 5, 6, 7, 8], "master_seed": 1,
 *     "dither": {"family": "uniform", "parameter": 1.0},
 *     "signal_power": 1.0
 *   }
 *
 * Unknown keys are rejected. Flags override the file, the file overrides
 * defaults. Tables are comma-separated, header first, floats with 9
 * significant digits.
 */

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ditherdac/ditherdac.hpp"

namespace ditherdac::cli {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "DITHERDAC_OUTPUT_DIR";

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kUsageError = 2 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError("config section '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + prefix + key + "'");
  }
}

template <class T>
void read_key(const json& j, const char* key, const std::string& prefix, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + prefix + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace detail

/// Applies the keys present in `j` on top of `base`.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {}) {
  detail::reject_unknown(j,
                         {"scene", "bits", "peak2rms_db", "samples", "angle_grid", "antenna_grid",
                          "bits_grid", "master_seed", "dither", "signal_power"},
                         "");
  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    detail::reject_unknown(s, {"antennas", "directions"}, "scene.");
    detail::read_key(s, "antennas", "scene.", base.scene.antennas);
    detail::read_key(s, "directions", "scene.", base.scene.directions);
  }
  detail::read_key(j, "bits", "", base.bits);
  detail::read_key(j, "peak2rms_db", "", base.peak2rms_db);
  detail::read_key(j, "samples", "", base.samples);
  detail::read_key(j, "angle_grid", "", base.angle_grid);
  detail::read_key(j, "antenna_grid", "", base.antenna_grid);
  detail::read_key(j, "bits_grid", "", base.bits_grid);
  detail::read_key(j, "master_seed", "", base.master_seed);
  detail::read_key(j, "signal_power", "", base.signal_power);
  if (j.contains("dither")) {
    const auto& d = j.at("dither");
    detail::reject_unknown(d, {"family", "parameter"}, "dither.");
    std::string family{family_name(base.dither.family)};
    detail::read_key(d, "family", "dither.", family);
    try {
      base.dither.family = parse_family(family);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("config key 'dither.family': ") + e.what());
    }
    detail::read_key(d, "parameter", "dither.", base.dither.parameter);
  }
  return base;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  return json{{"scene", {{"antennas", cfg.scene.antennas}, {"directions", cfg.scene.directions}}},
              {"bits", cfg.bits},
              {"peak2rms_db", cfg.peak2rms_db},
              {"samples", cfg.samples},
              {"angle_grid", cfg.angle_grid},
              {"antenna_grid", cfg.antenna_grid},
              {"bits_grid", cfg.bits_grid},
              {"master_seed", cfg.master_seed},
              {"dither", {{"family", std::string(family_name(cfg.dither.family))}, {"parameter", cfg.dither.parameter}}},
              {"signal_power", cfg.signal_power}};
}

struct ConfigOverrides {
  std::optional<int> antennas;
  std::optional<std::vector<double>> directions;
  std::optional<int> bits;
  std::optional<double> peak2rms_db;
  std::optional<std::int64_t> samples;
  std::optional<std::vector<double>> angle_grid;
  std::optional<std::vector<int>> antenna_grid;
  std::optional<std::vector<int>> bits_grid;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::string> dither_family;
  std::optional<double> dither_parameter;
  std::optional<double> signal_power;
};

/**
 * Defaults, then the file (if any), then flags; the result is validated and
 * any failure is reported as a ConfigError naming the offending key.
 */
inline ExperimentConfig parse_config(const std::optional<std::filesystem::path>& file,
                                     const ConfigOverrides& flags = {}) {
  ExperimentConfig cfg;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file '" + file->string() + "'");
    json j;
    try {
      j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + file->string() + "' is not valid JSON: " + e.what());
    }
    cfg = config_from_json(j, cfg);
  }
  if (flags.antennas) cfg.scene.antennas = *flags.antennas;
  if (flags.directions) cfg.scene.directions = *flags.directions;
  if (flags.bits) cfg.bits = *flags.bits;
  if (flags.peak2rms_db) cfg.peak2rms_db = *flags.peak2rms_db;
  if (flags.samples) cfg.samples = *flags.samples;
  if (flags.angle_grid) cfg.angle_grid = *flags.angle_grid;
  if (flags.antenna_grid) cfg.antenna_grid = *flags.antenna_grid;
  if (flags.bits_grid) cfg.bits_grid = *flags.bits_grid;
  if (flags.master_seed) cfg.master_seed = *flags.master_seed;
  if (flags.dither_family) {
    try {
      cfg.dither.family = parse_family(*flags.dither_family);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("dither.family: ") + e.what());
    }
  }
  if (flags.dither_parameter) cfg.dither.parameter = *flags.dither_parameter;
  if (flags.signal_power) cfg.signal_power = *flags.signal_power;
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string quoted = "\"";
      for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      return quoted + "\"";
    }
  };
  return std::visit(Visitor{}, cell);
}

inline std::string render_table(const Table& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::logic_error("table row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << '\n';
  }
  return out.str();
}

/// Writes via a temporary sibling and renames; nothing is left behind on failure.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed while writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

inline Table sweep_table(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg) {
  Table t{{"angle_deg", "antennas", "bits", "step", "peak2rms_db", "signal_power", "samples",
           "evm_conventional_db", "evm_dithered_db", "evm_analytic_db", "clipped_conventional",
           "clipped_dithered"},
          {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.angle_deg, std::int64_t{r.antennas}, std::int64_t{r.bits}, r.step, cfg.peak2rms_db,
                      cfg.signal_power, r.samples, r.evm_conventional_db, r.evm_dithered_db,
                      r.evm_analytic_db, r.clipped_conventional, r.clipped_dithered});
  }
  return t;
}

/// Transfer curves: staircase, closed form and quadrature with step = 1.
inline Table transfer_table(const ExperimentConfig& cfg, int points) {
  if (points < 2) throw ConfigError("points must be >= 2");
  const QuantizerConfig q{cfg.bits, 1.0, Saturation::SaturateAndCount};
  const double lim = q.input_limit();
  if (!(lim > 0.0)) throw ConfigError("bits: transfer-function needs bits >= 2 (empty input range at 1 bit)");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[i] = -lim + 2.0 * lim * i / points;
  const auto closed = transfer_function_closed_form_uniform(grid, q);
  const auto uniform = transfer_function_numeric(grid, DitherSpec::uniform(q.step), q);
  const auto configured = transfer_function_numeric(grid, cfg.dither.scaled(q.step), q);
  Table t{{"x", "staircase", "closed_form_uniform", "numeric_uniform", "numeric_configured"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    t.rows.push_back({grid[i], quantize_real(grid[i], q), closed.values[i], uniform.values[i], configured.values[i]});
  }
  return t;
}

inline Table noise_table(const ExperimentConfig& cfg) {
  const double step = calibrate_step(cfg.bits, cfg.peak2rms_linear(), 1.0);
  const QuantizerConfig q{cfg.bits, step, Saturation::SaturateAndCount};
  const DitherSpec spec = cfg.dither.scaled(step);
  if (spec.family == DitherFamily::None) {
    throw ConfigError("dither.family: noise-stats needs a dither (equivalent noise is undefined without one)");
  }
  if (cfg.samples < 10000) throw ConfigError("samples: noise-stats needs at least 10000 samples");
  const auto inputs = generate_user_signal(static_cast<std::size_t>(cfg.samples), 1.0, cfg.master_seed ^ 0x51ed270b27e8c3a5ull);
  const auto stats = noise_property_test(observe_equivalent_noise(inputs, spec, q, cfg.master_seed, 0, 1));
  const bool matched = spec.family == DitherFamily::UniformSymmetric && spec.parameter == step;
  const Cell expected_var = matched ? Cell{step * step / 3.0} : Cell{std::string{}};
  const auto n = static_cast<std::int64_t>(stats.sample_count);
  return Table{{"statistic", "value", "expected", "z_score", "samples"},
               {{std::string("step"), step, step, std::string{}, n},
                {std::string("mean_re"), stats.mean.real(), 0.0, stats.mean_z, n},
                {std::string("mean_im"), stats.mean.imag(), 0.0, stats.mean_z, n},
                {std::string("variance"), stats.variance, expected_var, std::string{}, n},
                {std::string("input_correlation_abs"), std::abs(stats.input_correlation), 0.0, stats.input_z, n},
                {std::string("pairwise_correlation_abs"), std::abs(stats.pairwise_correlation), 0.0,
                 stats.pairwise_z, n}}};
}

inline Table validation_table(const ValidationReport& report) {
  Table t{{"check", "passed", "statistic", "threshold", "samples", "detail"}, {}};
  for (const auto& c : report.checks) {
    t.rows.push_back({c.name, std::string(c.passed ? "true" : "false"), c.statistic, c.threshold, c.samples, c.detail});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Subcommands

enum class Subcommand { AngleSweep, ResolutionSweep, TransferFunction, NoiseStats, Validate };

inline std::string_view subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::AngleSweep: return "angle-sweep";
    case Subcommand::ResolutionSweep: return "resolution-sweep";
    case Subcommand::TransferFunction: return "transfer-function";
    case Subcommand::NoiseStats: return "noise-stats";
    case Subcommand::Validate: return "validate";
  }
  return "";
}

inline Subcommand parse_subcommand(std::string_view name) {
  for (auto s : {Subcommand::AngleSweep, Subcommand::ResolutionSweep, Subcommand::TransferFunction,
                 Subcommand::NoiseStats, Subcommand::Validate}) {
    if (subcommand_name(s) == name) return s;
  }
  throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

struct RunOptions {
  std::filesystem::path output_dir;  // empty: $DITHERDAC_OUTPUT_DIR, else "."
  unsigned workers = 0;              // 0: available parallelism
  int transfer_points = 401;
  ValidationOptions validation;
};

struct RunResult {
  int exit_code = kSuccess;
  std::filesystem::path table;
  std::filesystem::path manifest;
};

inline std::filesystem::path resolve_output_dir(const std::filesystem::path& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json make_manifest(Subcommand sub, const ExperimentConfig& cfg, const RunOptions& opt,
                          const std::filesystem::path& table) {
  return json{{"tool", "ditherdac"},
              {"version", std::string(kVersion)},
              {"timestamp", utc_timestamp()},
              {"subcommand", std::string(subcommand_name(sub))},
              {"master_seed", cfg.master_seed},
              {"config", config_to_json(cfg)},
              {"workers", resolve_workers(opt.workers)},
              {"outputs", {table.string()}},
              {"conventions",
               {{"evm", "power ratio sum|y_hat - y|^2 / sum|y|^2, dB = 10*log10"},
                {"signal_power", "E|y|^2 at the user, complex variance"},
                {"per_antenna_power", "E|x_m|^2 = signal_power / antennas^2 (matched precoding)"},
                {"step_calibration", "peak2rms = (2^(bits-1) * step)^2 / per_antenna_power"},
                {"dither_parameter", "in units of the quantizer step"},
                {"evm_analytic_db", "10*log10(peak2rms / (3 * antennas * 2^(2*(bits-1))))"}}}};
}

/**
 * Runs one subcommand and writes `<name>.csv` plus `<name>.manifest.json`
 * into the output directory. Validation failures yield kValidationFailure
 * (tables are still written).
 */
inline RunResult run_subcommand(Subcommand sub, const ExperimentConfig& cfg, const RunOptions& opt) {
  namespace fs = std::filesystem;
  const fs::path dir = resolve_output_dir(opt.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");

  RunResult result;
  Table table;
  switch (sub) {
    case Subcommand::AngleSweep: table = sweep_table(angle_sweep(cfg, opt.workers), cfg); break;
    case Subcommand::ResolutionSweep: table = sweep_table(resolution_sweep(cfg, opt.workers), cfg); break;
    case Subcommand::TransferFunction: table = transfer_table(cfg, opt.transfer_points); break;
    case Subcommand::NoiseStats: table = noise_table(cfg); break;
    case Subcommand::Validate: {
      const auto report = validation_suite(cfg, opt.validation);
      table = validation_table(report);
      if (!report.all_passed()) result.exit_code = kValidationFailure;
      break;
    }
  }
  const std::string stem(subcommand_name(sub));
  result.table = dir / (stem + ".csv");
  result.manifest = dir / (stem + ".manifest.json");
  write_text_file(result.table, render_table(table));
  write_text_file(result.manifest, make_manifest(sub, cfg, opt, result.table).dump(2) + "\n");
  return result;
}

}  // namespace ditherdac::cli
