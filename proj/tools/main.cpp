#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "advirl/error.hpp"
#include "advirl/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> views;
  bool quiet = false;
};

advirl::ExperimentConfig load_config(const GlobalFlags& flags, bool demo) {
  advirl::ExperimentConfig defaults = demo ? advirl::demo_config() : advirl::ExperimentConfig{};
  if (flags.config.empty()) {
    if (!demo) advirl::fail(advirl::ErrorCode::kConfig, "config: --config <path> is required for this command");
    return defaults;
  }
  return advirl::load_experiment_config(flags.config, std::move(defaults));
}

void apply_overrides(advirl::ExperimentConfig& cfg, const GlobalFlags& flags) {
  if (flags.seed) cfg.set_seed(*flags.seed);
  if (flags.views) {
    if (*flags.views < 1) advirl::fail(advirl::ErrorCode::kConfig, "config: --views must be >= 1");
    cfg.rig.orbit.n_views = *flags.views;
    cfg.attack.num_views = *flags.views;
  }
}

// Explicit argument, else the adversarial snapshot of a previous attack in
// the output directory, else paths.snapshot.
std::filesystem::path pick_snapshot(const advirl::ExperimentConfig& cfg, const advirl::RunOptions& run,
                                    const std::string& explicit_path) {
  if (!explicit_path.empty()) {
    if (!std::filesystem::is_regular_file(explicit_path)) {
      advirl::fail(advirl::ErrorCode::kConfig, "config: snapshot '" + explicit_path + "' does not exist");
    }
    return explicit_path;
  }
  const std::filesystem::path root = !run.out.empty() ? run.out : cfg.paths.output.value_or("");
  if (!root.empty()) {
    const advirl::OutputLayout layout{root};
    if (std::filesystem::is_regular_file(layout.adversarial_snapshot())) return layout.adversarial_snapshot();
  }
  if (cfg.paths.snapshot) return *cfg.paths.snapshot;
  advirl::fail(advirl::ErrorCode::kConfig, "config: no snapshot given (pass one or set paths.snapshot)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box adversarial attacks on voxel radiance fields"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config, "Experiment config (JSON)");
  app.add_option("--seed", flags.seed, "Override the experiment seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--views", flags.views, "Number of orbit views");
  app.add_flag("--quiet", flags.quiet, "Only print errors");

  std::string snapshot_arg;
  auto* fit = app.add_subcommand("fit", "Segment, filter and fit the input views into a field snapshot");
  auto* attack = app.add_subcommand("attack", "Run the adversarial attack on a fitted snapshot");
  auto* render = app.add_subcommand("render", "Render a snapshot on the configured rig");
  render->add_option("snapshot", snapshot_arg, "Snapshot to render");
  auto* evaluate = app.add_subcommand("evaluate", "Classify the renders of a snapshot and write a report");
  evaluate->add_option("snapshot", snapshot_arg, "Snapshot to evaluate");
  auto* demo = app.add_subcommand("demo", "Synthetic end-to-end run: sphere scene, fit, targeted attack, evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    advirl::ExperimentConfig cfg = load_config(flags, demo->parsed());
    apply_overrides(cfg, flags);
    advirl::RunOptions run;
    run.out = flags.out;
    run.log = flags.quiet ? nullptr : &std::cout;
    if (fit->parsed()) {
      advirl::cmd_fit(cfg, run);
    } else if (attack->parsed()) {
      advirl::cmd_attack(cfg, run);
    } else if (render->parsed()) {
      advirl::cmd_render(cfg, pick_snapshot(cfg, run, snapshot_arg), run);
    } else if (evaluate->parsed()) {
      advirl::cmd_evaluate(cfg, pick_snapshot(cfg, run, snapshot_arg), run);
    } else if (demo->parsed()) {
      advirl::cmd_demo(cfg, run);
    }
  } catch (const advirl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == advirl::ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
