#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fastgate/odeoracle.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/robustness.hpp"

namespace fastgate::cli {

inline constexpr int schema_version = 1;

struct TrapSection {
  std::string type = "microtrap";  // microtrap | paul | ideal
  std::string species = "Ca40";
  std::optional<double> mass_amu;  // overrides species
  double d_um = 100.0;             // microtrap separation
  double kappa = 1.0 / 6.0;        // paul axial / radial
  double a = 0.0;
  double q = 0.0;
  std::optional<double> secular_mhz;  // at most one of these two; the other is derived
  std::optional<double> rf_mhz;
  double stray_offset = 0.0;  // microtrap second-trap frequency offset
  // ideal two-mode model
  double chi = -1.4e-2;
  double mu = 1.0;
  double rf_period = 0.0;  // secular periods between phase-pi instants, 0 = tuned drive
};

struct LaserSection {
  double eta = 0.1;
  double rep_rate = 0.0;  // kicks per secular period, 0 = instantaneous groups
};

struct GateSection {
  int n = 12;
  double time_bound = 2.0;
  int target_sign = 0;
  std::string mu_mode = "with";  // with | without
  std::string drive = "locked";  // locked | tuned
  double n_bar = 0.1;
  std::optional<std::array<double, 3>> taus;  // fixed timings for evaluate / sweep / oracle
};

struct OptimizerSection {
  int starts = 512;
  std::uint64_t seed = 1;
  int max_iterations = 300;
  double gradient_tolerance = 1e-12;
  int lattice_radius = 2;
  std::vector<double> bounds;  // gate-time sweep when nonempty
  std::vector<double> mus;     // mu columns of that sweep, default {trap mu}
};

struct SweepSection {
  std::string parameter = "phase_offset";
  std::vector<double> grid;
  bool oracle = false;
  double first_pulse_phase = 3.141592653589793;
};

struct OracleSection {
  int steps_per_rf_period = 200;
  double tail = 2.0;
  double kick_scale = 1.0;
};

struct ParamSpaceSection {
  double a_min = -0.3, a_max = 0.3;
  int a_steps = 31;
  double q_min = 0.0, q_max = 1.0;
  int q_steps = 51;
  double phi_rf = 3.141592653589793;
};

struct RunConfig {
  TrapSection trap;
  LaserSection laser;
  GateSection gate;
  OptimizerSection optimizer;
  SweepSection sweep;
  OracleSection oracle;
  ParamSpaceSection param_space;
};

/// Parses and validates INI text; errors are ConfigError naming the line and field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string to_ini(const RunConfig& config);
nlohmann::ordered_json to_json(const RunConfig& config);
RunConfig from_json(const nlohmann::json& j);

/// Shortest decimal that reads back to the same double; "inf", "nan" otherwise.
std::string format_number(double v);

double ion_mass_kg(const TrapSection& trap);
/// Physical trap; nullopt for the ideal model.
std::optional<Trap> build_trap(const RunConfig& config);
GateModel build_model(const RunConfig& config);
OptimizationConfig build_optimizer(const RunConfig& config, int threads);
OracleOptions build_oracle(const RunConfig& config);
ThermalState build_thermal(const RunConfig& config);

}  // namespace fastgate::cli
