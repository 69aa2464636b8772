#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "notekit/config.hpp"
#include "notekit/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"community-note scoring and analysis pipeline"};
  app.require_subcommand(1);

  std::string stage = "all";
  notekit::RunOptions options;
  std::string config_path;
  std::string run_dir = "run";
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "execute pipeline stages");
  std::string stage_help = "stage to execute: all";
  for (const auto& name : notekit::stage_names()) stage_help += ", " + name;
  run->add_option("stage", stage, stage_help)->required();
  run->add_option("--config", config_path, "path to the key=value config file")
      ->required();
  run->add_option("--run-dir", run_dir, "output directory (default: run)");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override sim.seed for this invocation");
  run->add_flag("--force", options.force,
                "break a stale lock and accept a changed config hash");

  CLI::App* stages = app.add_subcommand("stages", "list stages in execution order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // CLI11 prints the message; nonzero on error
  }

  if (stages->parsed()) {
    for (const auto& name : notekit::stage_names()) std::cout << name << "\n";
    return 0;
  }

  options.config_path = config_path;
  options.run_dir = run_dir;
  if (seed_opt->count() > 0) options.seed_override = seed;

  try {
    auto manifest = notekit::run(stage, options);
    std::cout << "ok: " << manifest.string() << "\n";
    return 0;
  } catch (const notekit::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const notekit::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const notekit::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
