#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ditherdac/cli.hpp"

namespace {

std::vector<int> paper_scale_antennas() { return {1, 10, 100, 1000, 10000}; }

}  // namespace

int main(int argc, char** argv) {
  using namespace ditherdac;
  using namespace ditherdac::cli;

  CLI::App app{"Low-resolution DAC array simulator with digital dithering"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  ConfigOverrides flags;
  RunOptions run;
  std::string output_dir;
  bool paper_scale = false;
  bool shared_dither = false;

  app.add_option("-c,--config", config_path, "JSON config file (keys mirror the experiment config)");
  app.add_option("--antennas", flags.antennas, "Array size M");
  app.add_option("--directions", flags.directions, "User directions in radians");
  app.add_option("--bits", flags.bits, "DAC resolution N");
  app.add_option("--peak2rms-db", flags.peak2rms_db, "DAC full-scale power over per-antenna signal power, dB");
  app.add_option("--samples", flags.samples, "Trials per sweep point");
  app.add_option("--angles", flags.angle_grid, "Angle grid in degrees");
  app.add_option("--antenna-grid", flags.antenna_grid, "Antenna counts for resolution-sweep");
  app.add_option("--bits-grid", flags.bits_grid, "Resolutions for resolution-sweep");
  app.add_option("--seed", flags.master_seed, "Master seed");
  app.add_option("--dither", flags.dither_family, "Dither family: none, uniform, gaussian, triangular");
  app.add_option("--dither-param", flags.dither_parameter, "Dither parameter in quantizer steps");
  app.add_option("--signal-power", flags.signal_power, "E|y|^2 at the user");
  app.add_option("-j,--workers", run.workers, "Worker threads (0 = available parallelism)");
  app.add_option("-o,--output-dir", output_dir, std::string("Output directory (default $") + kOutputDirEnv + " or .)");
  app.add_option("--points", run.transfer_points, "Grid points for transfer-function");
  app.add_flag("--paper-scale", paper_scale, "resolution-sweep over M in {1, 10, 100, 1000, 10000}");
  app.add_flag("--shared-dither", shared_dither, "validate: feed both antennas one dither stream");

  const std::pair<Subcommand, const char*> subcommands[] = {
      {Subcommand::AngleSweep, "EVM versus departure angle at fixed M and N"},
      {Subcommand::ResolutionSweep, "Worst-case EVM over the antenna and bits grids"},
      {Subcommand::TransferFunction, "Staircase and equivalent transfer curves (step = 1)"},
      {Subcommand::NoiseStats, "Equivalent-noise moments and correlation tests"},
      {Subcommand::Validate, "Statistical and exact self-checks; exit 1 on failure"},
  };
  for (const auto& [sub, help] : subcommands) {
    app.add_subcommand(std::string(subcommand_name(sub)), help)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    const auto* chosen = app.get_subcommands().front();
    const Subcommand sub = parse_subcommand(chosen->get_name());
    if (paper_scale && !flags.antenna_grid) flags.antenna_grid = paper_scale_antennas();
    const std::optional<std::filesystem::path> file =
        config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path);
    const ExperimentConfig cfg = parse_config(file, flags);
    run.output_dir = output_dir;
    run.validation.shared_dither = shared_dither;

    const RunResult result = run_subcommand(sub, cfg, run);
    std::cout << "wrote " << result.table.string() << "\n"
              << "wrote " << result.manifest.string() << "\n";
    if (result.exit_code == kValidationFailure) std::cerr << "validation failed\n";
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
}
