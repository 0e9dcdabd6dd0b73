// splinemart run <config.json> [--out DIR] [--seed N]
// splinemart list [--format=json|text]

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "splinemart/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spline projection and spline-martingale experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  run->add_option("config", config, "experiment config (JSON)")->required();
  auto* out_opt = run->add_option("--out", out, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides SPLINEMART_SEED and the config)");

  auto* list = app.add_subcommand("list", "list experiments, knot families, functions and measures");
  std::string format = "text";
  list->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*list) {
    if (format == "json") {
      std::cout << splinemart::registry_json().dump(2) << "\n";
    } else {
      std::cout << splinemart::registry_text();
    }
    return 0;
  }
  std::optional<std::filesystem::path> out_dir;
  if (*out_opt) out_dir = out;
  std::optional<std::uint64_t> seed_override;
  if (*seed_opt) seed_override = seed;
  return splinemart::run_command(config, out_dir, seed_override);
}
