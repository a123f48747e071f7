// bwpart: optimal bandwidth partitioning for Poisson-field networks.
//
//   bwpart <solve|sweep|simulate|fz|compare-ds|fading> [--config FILE]
//          [--out FILE] [--seed N] [--threads N] [--format csv|json]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bwpart/commands.hpp"
#include "bwpart/config.hpp"
#include "bwpart/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimal bandwidth partitioning for Poisson-field wireless networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> format;

  const char* verbs[][2] = {
      {"solve", "Optimal b*, N* and density for one link budget"},
      {"sweep", "b* over grids of Eb/N0 and alpha"},
      {"simulate", "Analytic vs Monte Carlo total density per N"},
      {"fz", "Build or reuse the cached F_Z table"},
      {"compare-ds", "Direct-sequence vs frequency-division density per N"},
      {"fading", "Outage-minimizing N under fading and random distances"},
  };
  for (const auto& verb : verbs) {
    auto* sub = app.add_subcommand(verb[0], verb[1]);
    sub->add_option("--config,-c", config_path, "key=value configuration file");
    sub->add_option("--out,-o", out_path, "output file (default: standard output)");
    sub->add_option("--seed", seed, "Monte Carlo master seed");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bwpart::kExitConfig;
  }

  bwpart::RunConfig config;
  try {
    if (!config_path.empty()) config = bwpart::load_config(config_path);
  } catch (const bwpart::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return bwpart::kExitIo;
  } catch (const bwpart::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return bwpart::kExitConfig;
  }
  if (out_path) config.output.path = *out_path;
  if (seed) config.montecarlo.seed = *seed;
  if (threads) config.montecarlo.threads = *threads;
  if (format) config.output.format = *format == "json" ? bwpart::OutputFormat::json : bwpart::OutputFormat::csv;

  const std::string verb = app.get_subcommands().front()->get_name();
  return bwpart::run_command(verb, config, std::cout, std::cerr);
}
