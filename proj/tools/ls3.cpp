#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ls3/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Latent-space safe-set planning on a pointmass navigation task"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ls3::version_string()));

  std::string config_path, out_dir, checkpoint, plot_out;
  std::vector<std::string> metrics;
  std::uint64_t seed = 0;
  std::size_t episodes = 10;
  bool resume = false;

  auto* run = app.add_subcommand("run", "offline phase, online rounds, final evaluation");
  run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "master seed");
  run->add_flag("--resume", resume, "continue from the last checkpoint in --out");

  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--episodes", episodes, "number of episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "evaluation seed");

  auto* plot = app.add_subcommand("plot", "learning curves across seeds");
  plot->add_option("metrics", metrics, "metrics.jsonl files, one per seed")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output path; .csv and .svg are written")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*run) return ls3::cmd_run(config_path, out_dir, seed, resume, std::cout, std::cerr);
  if (*eval) return ls3::cmd_eval(checkpoint, episodes, seed, std::cout, std::cerr);
  std::vector<std::filesystem::path> paths(metrics.begin(), metrics.end());
  return ls3::cmd_plot(paths, plot_out, std::cout, std::cerr);
}
