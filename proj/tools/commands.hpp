#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "runconfig.hpp"

namespace fastgate::cli {

struct Invocation {
  std::string command;
  RunConfig config;
  std::filesystem::path out = ".";
  int threads = 0;  // 0: FASTGATE_THREADS, then hardware
  std::optional<std::string> schedule_path;
  bool param_space = false;  // characterize
  bool trajectory = false;   // optimize
};

/// Runs one subcommand, writing <out>/<command>.csv and its .json sidecar.
/// Library errors propagate; main() maps them to exit codes.
void run_command(const Invocation& inv);

/// Schedule from a file written by `optimize` or a bare schedule object.
/// Empty group lists give a schedule with no kicks.
PulseSchedule load_schedule(const std::string& path);
nlohmann::ordered_json schedule_json(const PulseSchedule& s);

}  // namespace fastgate::cli
