// Batch experiment harness for the thrust-plant toolkit: parameter sweeps,
// static-model fits, step identification and closed-loop force tracking,
// all driven by a config file and emitting CSV logs plus SVG charts.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "caudal/harness.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string fit_input;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int cycles = 0;
  bool cycles_set = false;
};

caudal::ExperimentConfig load_config(const CliOverrides& cli) {
  caudal::ConfigFile file = cli.config_path.empty()
                                ? caudal::ConfigFile::parse("", "<defaults>")
                                : caudal::ConfigFile::load(cli.config_path);
  caudal::ExperimentConfig cfg = caudal::bind_experiment_config(file);
  if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
  if (cli.seed_set) cfg.seed = cli.seed;
  if (cli.cycles_set) cfg.protocol.avg_cycles = cli.cycles;
  if (!cli.fit_input.empty()) cfg.fit.input_csv = cli.fit_input;
  return cfg;
}

void add_common(CLI::App* cmd, CliOverrides& cli) {
  cmd->add_option("--config", cli.config_path, "experiment config file");
  cmd->add_option("--out", cli.out_dir, "output directory");
  cmd->add_option("--seed", cli.seed, "noise seed")
      ->each([&cli](const std::string&) { cli.seed_set = true; });
  cmd->add_option("--cycles", cli.cycles,
                  "flapping cycles averaged per sweep point")
      ->each([&cli](const std::string&) { cli.cycles_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caudal - thrust plant identification & control toolkit"};
  app.require_subcommand(1);

  CliOverrides cli;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "measure cycle-averaged forces over a parameter sweep");
  add_common(sweep, cli);
  CLI::App* fit = app.add_subcommand(
      "fit", "fit the basket ladder to a measurements CSV");
  add_common(fit, cli);
  fit->add_option("--in", cli.fit_input, "measurements CSV to fit");
  CLI::App* step_id = app.add_subcommand(
      "step-id", "identify FOPDT models from step experiments");
  add_common(step_id, cli);
  CLI::App* track = app.add_subcommand(
      "track", "run closed-loop force tracking");
  add_common(track, cli);
  CLI::App* plant_sim = app.add_subcommand(
      "plant-sim", "open-loop plant simulation under a schedule");
  add_common(plant_sim, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const caudal::ExperimentConfig cfg = load_config(cli);
    if (sweep->parsed()) caudal::cmd_sweep(cfg, std::cout);
    if (fit->parsed()) caudal::cmd_fit(cfg, std::cout);
    if (step_id->parsed()) caudal::cmd_step_id(cfg, std::cout);
    if (track->parsed()) caudal::cmd_track(cfg, std::cout);
    if (plant_sim->parsed()) caudal::cmd_plant_sim(cfg, std::cout);
  } catch (const caudal::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const caudal::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const caudal::not_ready_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const caudal::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const caudal::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
