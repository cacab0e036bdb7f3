// Command-line front end. Talks to the simulator only through the C API.
#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "bondsim/bondsim.h"

namespace {

struct Args {
  std::string config;
  std::string out = "out";
  std::string blocks;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  unsigned threads = 0;
  bool full = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bonded mining simulator: reproduces the detection and block-time experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bm_version());

  Args args;
  const char* commands[][2] = {
      {"table2", "bootstrap-window detection rates"},
      {"fig3", "detection probability over a year of sliding windows"},
      {"fig4", "expected block time, cw-144 vs bonded"},
      {"fig5", "expected block time across cost tolerances"},
      {"typeI", "false-positive count for honest miners"},
      {"validate", "run the validity test over a blocks CSV"},
      {"abandon-check", "abandonment threshold for a commitment"},
      {"simulate", "emit one simulated miner's blocks CSV"},
  };
  std::vector<CLI::App*> subs;
  CLI::Option* seed_opt = nullptr;
  std::vector<CLI::Option*> seed_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "experiment config (JSON)")->required();
    seed_opts.push_back(sub->add_option("--seed", args.seed, "master seed (overrides the config)"));
    sub->add_option("--trials", args.trials, "trial count (overrides the config)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_flag("--full", args.full, "use the full trial count");
    sub->add_option("--threads", args.threads, "worker threads (0 = all cores)");
    if (std::string(name) == "validate") {
      sub->add_option("--blocks", args.blocks, "blocks CSV (overrides the config)");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage problems count as config errors
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    seed_opt = seed_opts[i];
    bm_run_options options{};
    options.config_path = args.config.c_str();
    options.out_dir = args.out.c_str();
    options.blocks_path = args.blocks.empty() ? nullptr : args.blocks.c_str();
    options.has_seed = seed_opt->count() > 0;
    options.seed = args.seed;
    options.trials = args.trials;
    options.full = args.full;
    options.threads = args.threads;
    return bm_run_command(subs[i]->get_name().c_str(), &options);
  }
  return 1;
}
