#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "fastgate/errors.hpp"

int main(int argc, char** argv) {
  using namespace fastgate;
  CLI::App app{"Fast trapped-ion gates with micromotion: trap characterization, gate optimization, evaluation and sweeps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string schedule;
  bool param_space = false, trajectory = false;

  app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Optimizer seed (overrides [optimizer] seed)");
  app.add_option("--threads", threads, "Worker threads (default: FASTGATE_THREADS, else all cores)")
      ->check(CLI::PositiveNumber);

  app.add_subcommand("characterize", "Trap report: beta, mu, chi, modes, periodic crystal")
      ->add_flag("--param-space", param_space, "Also write mu over the (a, q) grid of [param_space]");
  auto* opt = app.add_subcommand("optimize", "Optimize a gate, or a gate-time sweep when [optimizer] bounds is set");
  opt->add_flag("--trajectory", trajectory, "Export oracle trajectories of the result");
  for (const char* name : {"evaluate", "sweep", "oracle"}) {
    app.add_subcommand(name, std::string(name) == "evaluate"  ? "Analytic, Floquet and oracle infidelity of a schedule"
                             : std::string(name) == "sweep" ? "Robustness sweep from [sweep]"
                                                            : "Oracle trajectories and geometric phases of a schedule")
        ->add_option("--schedule", schedule, "Schedule or record JSON (default: [gate] taus)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cli::Invocation inv;
    inv.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) inv.config = cli::load_config(config_path);
    if (seed) inv.config.optimizer.seed = *seed;
    inv.out = out;
    inv.threads = threads;
    if (!schedule.empty()) inv.schedule_path = schedule;
    inv.param_space = param_space;
    inv.trajectory = trajectory;
    cli::run_command(inv);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';  // starts with the error name
    return e.kind() == ErrorKind::ConfigError ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
