#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "randers/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Randers toolkit: inequality campaigns, thresholds and the direct-method solver"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  const std::pair<const char*, const char*> commands[] = {
      {"check", "pointwise inequality campaign (report_check.csv)"},
      {"solve", "minimise the energy on the threshold ball (report_solve.csv, profile.csv)"},
      {"hardy", "Hardy and logarithmic-remainder campaigns plus the sharpness scan (report_hardy.csv)"},
      {"sweep", "one minimisation per lambda (sweep.csv, report_sweep.csv)"},
      {"thresholds", "embedding constant, radii and lambda threshold (report_thresholds.csv)"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "seed (overrides the config)")->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : randers::kExitConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  randers::RunConfig cfg;
  try {
    cfg = config_path.empty() ? randers::parse_config("") : randers::load_config(config_path);
  } catch (const randers::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return randers::kExitConfigError;
  }
  cfg.command = *randers::parse_command(command);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (seed >= 0) cfg.campaign.seed = static_cast<std::uint64_t>(seed);
  return randers::dispatch(cfg, std::cout);
}
