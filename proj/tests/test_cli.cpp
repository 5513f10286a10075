#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ditherdac/cli.hpp"

using namespace ditherdac;
using namespace ditherdac::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ditherdac_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(ParseConfig, EmptyInputGivesDefaults) {
  const auto cfg = parse_config(std::nullopt);
  EXPECT_EQ(cfg.peak2rms_db, 15.0);
  EXPECT_EQ(cfg.samples, 10000);
  EXPECT_EQ(cfg.angle_grid.size(), 61u);
  EXPECT_EQ(cfg.angle_grid.front(), -90.0);
  EXPECT_EQ(cfg.angle_grid.back(), 90.0);
  EXPECT_EQ(cfg.dither, DitherSpec::uniform(1.0));
}

TEST(ParseConfig, FlagsOverrideDefaults) {
  ConfigOverrides flags;
  flags.bits = 6;
  flags.antennas = 1000;
  const auto cfg = parse_config(std::nullopt, flags);
  EXPECT_EQ(cfg.bits, 6);
  EXPECT_EQ(cfg.scene.antennas, 1000);
}

TEST(ParseConfig, ZeroSamplesIsRejected) {
  ConfigOverrides flags;
  flags.samples = 0;
  try {
    parse_config(std::nullopt, flags);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("samples"), std::string::npos);
  }
}

TEST(ParseConfig, FileThenFlags) {
  const auto dir = scratch("cfg");
  const auto path = write_config(dir, R"({
    "scene": {"antennas": 32},
    "bits": 4,
    "samples": 500,
    "dither": {"family": "gaussian", "parameter": 0.5},
    "master_seed": 12345
  })");
  ConfigOverrides flags;
  flags.bits = 7;
  const auto cfg = parse_config(path, flags);
  EXPECT_EQ(cfg.scene.antennas, 32);
  EXPECT_EQ(cfg.bits, 7);
  EXPECT_EQ(cfg.samples, 500);
  EXPECT_EQ(cfg.master_seed, 12345u);
  EXPECT_EQ(cfg.dither, DitherSpec::gaussian(0.5));
  EXPECT_EQ(cfg.peak2rms_db, 15.0);
}

TEST(ParseConfig, UnknownKeysAndBadValuesNameTheKey) {
  const auto dir = scratch("cfg_bad");
  const auto expect_error_mentioning = [&](const std::string& text, const std::string& key) {
    const auto path = write_config(dir, text);
    try {
      parse_config(path);
      FAIL() << "expected ConfigError for " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  expect_error_mentioning(R"({"bitz": 3})", "bitz");
  expect_error_mentioning(R"({"scene": {"antenas": 3}})", "scene.antenas");
  expect_error_mentioning(R"({"bits": "six"})", "bits");
  expect_error_mentioning(R"({"dither": {"family": "pink"}})", "dither.family");
  expect_error_mentioning(R"({"peak2rms_db": -3})", "peak2rms_db");
  expect_error_mentioning(R"({"scene": {"antennas": 0}})", "antenna");
  expect_error_mentioning(R"({not json)", "not valid JSON");
  EXPECT_THROW(parse_config(dir / "missing.json"), ConfigError);
}

TEST(ConfigJson, RoundTrip) {
  ExperimentConfig cfg;
  cfg.scene = {77, {0.1}};
  cfg.bits = 3;
  cfg.dither = DitherSpec::triangular(1.0);
  cfg.bits_grid = {2, 9};
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(back.scene.antennas, 77);
  EXPECT_EQ(back.scene.directions, cfg.scene.directions);
  EXPECT_EQ(back.bits, 3);
  EXPECT_EQ(back.dither, cfg.dither);
  EXPECT_EQ(back.bits_grid, cfg.bits_grid);
  EXPECT_EQ(back.angle_grid, cfg.angle_grid);
}

TEST(Tables, FormattingRules) {
  EXPECT_EQ(format_double(0.1757316641219841), "0.175731664");
  EXPECT_EQ(format_double(-49.874212113594744), "-49.8742121");
  EXPECT_EQ(format_double(1.0293872591693944e-05), "1.02938726e-05");
  const Table t{{"name", "value_db"}, {{std::string("a,b"), 1.5}, {std::string("say \"hi\""), std::int64_t{3}}}};
  EXPECT_EQ(render_table(t), "name,value_db\n\"a,b\",1.5\n\"say \"\"hi\"\"\",3\n");
}

TEST(Subcommands, TransferFunctionReproducesStaircaseAndIdentity) {
  const auto dir = scratch("transfer");
  ConfigOverrides flags;
  flags.bits = 2;
  const auto cfg = parse_config(std::nullopt, flags);
  RunOptions opt;
  opt.output_dir = dir;
  opt.transfer_points = 40;
  const auto result = run_subcommand(Subcommand::TransferFunction, cfg, opt);
  EXPECT_EQ(result.exit_code, kSuccess);
  std::istringstream lines(slurp(result.table));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "x,staircase,closed_form_uniform,numeric_uniform,numeric_configured");
  int rows = 0;
  while (std::getline(lines, line)) {
    double x, stair, closed, numeric, configured;
    char c;
    std::istringstream(line) >> x >> c >> stair >> c >> closed >> c >> numeric >> c >> configured;
    // The grid opens at the lower threshold, which rounds away from zero.
    EXPECT_EQ(stair, x == -1.0 ? -1.5 : (x < 0 ? -0.5 : 0.5));
    EXPECT_NEAR(closed, x, 1e-8);
    EXPECT_NEAR(numeric, x, 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 40);
  const auto manifest = json::parse(slurp(result.manifest));
  EXPECT_EQ(manifest["subcommand"], "transfer-function");
  EXPECT_EQ(manifest["outputs"][0], result.table.string());
  EXPECT_EQ(manifest["config"]["bits"], 2);
}

TEST(Subcommands, AngleSweepTableIsByteIdenticalAcrossWorkerCounts) {
  ConfigOverrides flags;
  flags.antennas = 20;
  flags.samples = 300;
  flags.angle_grid = std::vector<double>{-90, -3, 0, 42, 90};
  const auto cfg = parse_config(std::nullopt, flags);
  RunOptions one;
  one.output_dir = scratch("sweep1");
  one.workers = 1;
  RunOptions eight = one;
  eight.output_dir = scratch("sweep8");
  eight.workers = 8;
  const auto a = run_subcommand(Subcommand::AngleSweep, cfg, one);
  const auto b = run_subcommand(Subcommand::AngleSweep, cfg, eight);
  const auto text = slurp(a.table);
  EXPECT_EQ(text, slurp(b.table));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "angle_deg,antennas,bits,step,peak2rms_db,signal_power,samples,evm_conventional_db,"
            "evm_dithered_db,evm_analytic_db,clipped_conventional,clipped_dithered");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(Subcommands, NoiseStatsAndValidate) {
  const auto dir = scratch("noise");
  ConfigOverrides flags;
  flags.samples = 20000;
  const auto cfg = parse_config(std::nullopt, flags);
  RunOptions opt;
  opt.output_dir = dir;
  EXPECT_EQ(run_subcommand(Subcommand::NoiseStats, cfg, opt).exit_code, kSuccess);
  EXPECT_NE(slurp(dir / "noise-stats.csv").find("pairwise_correlation_abs"), std::string::npos);

  opt.validation.variance_samples = 50000;
  opt.validation.shared_dither = true;
  EXPECT_EQ(run_subcommand(Subcommand::Validate, cfg, opt).exit_code, kValidationFailure);
  EXPECT_NE(slurp(dir / "validate.csv").find("noise_whiteness,false"), std::string::npos);

  flags.dither_family = "none";
  EXPECT_THROW(run_subcommand(Subcommand::NoiseStats, parse_config(std::nullopt, flags), opt), ConfigError);
}

TEST(Subcommands, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  ::setenv(kOutputDirEnv, dir.c_str(), 1);
  ConfigOverrides flags;
  flags.bits = 3;
  RunOptions opt;
  opt.transfer_points = 8;
  const auto result = run_subcommand(Subcommand::TransferFunction, parse_config(std::nullopt, flags), opt);
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(result.table, dir / "transfer-function.csv");
  EXPECT_TRUE(fs::exists(result.table));
}

TEST(Subcommands, UnwritableOutputLeavesNothingBehind) {
  const auto dir = scratch("io");
  const fs::path blocker = dir / "file";
  std::ofstream(blocker) << "x";
  RunOptions opt;
  opt.output_dir = blocker / "sub";
  ConfigOverrides flags;
  flags.bits = 3;
  EXPECT_THROW(run_subcommand(Subcommand::TransferFunction, parse_config(std::nullopt, flags), opt), IoError);
  EXPECT_THROW(write_text_file(dir / "nope" / "t.csv", "a\n"), IoError);
  EXPECT_FALSE(fs::exists(dir / "nope" / "t.csv.partial"));
}

TEST(Subcommands, NamesRoundTrip) {
  for (auto s : {Subcommand::AngleSweep, Subcommand::ResolutionSweep, Subcommand::TransferFunction,
                 Subcommand::NoiseStats, Subcommand::Validate}) {
    EXPECT_EQ(parse_subcommand(subcommand_name(s)), s);
  }
  EXPECT_THROW(parse_subcommand("plot"), ConfigError);
}
