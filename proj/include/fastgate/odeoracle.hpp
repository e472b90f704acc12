#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fastgate/fidelity.hpp"
#include "fastgate/gatescheme.hpp"
#include "fastgate/trapmodel.hpp"

namespace fastgate {

enum class BasisState { up_up, up_down, down_up, down_down };

/// +1 for up, -1 for down on each ion.
std::array<int, 2> basis_signs(BasisState state);
std::string basis_label(BasisState state);

struct OracleOptions {
  int steps_per_rf_period = 200;
  double tail_secular_periods = 2.0;  // stroboscopic read-out window after the last kick
  /// Kicks are multiplied by this factor and results rescaled back; a small
  /// value isolates the linear response.
  double kick_scale = 1.0;
  bool record = true;
  double escape_fraction = 0.1;  // of the ion spacing
  LaserConfig laser;
  CrystalOptions crystal;
};

/// Full trap model in dimensionless units plus the unkicked reference motion.
struct OracleSystem {
  Trap trap;
  ScaledTrap scaled;
  ModeSpectrum spectrum;
  std::optional<PeriodicCrystal> crystal;  // microtraps with q != 0
  std::array<double, 2> static_offset{};   // microtrap static equilibrium (q = 0)
  double x0_over_l = 0.0;                  // ground-state width sqrt(hbar / 2 M omega) over the length unit
};

OracleSystem prepare_oracle(const Trap& trap, const ModeSpectrum& spectrum, const OracleOptions& options = {});

/// Positions are deviations along the gate axis from each ion's reference
/// position, in length units; dx/dv are the kicked minus unkicked motion.
struct Trajectory {
  BasisState basis = BasisState::up_up;
  std::vector<double> times;
  std::array<std::vector<double>, 2> x, v;    // full motion along the gate axis
  std::array<std::vector<double>, 2> dx, dv;  // deviation from the reference
  std::vector<double> kick_times;
  double phase_sum = 0.0;      // sum_k c_k sum_i s_i dx_i(tau_k)
  double kick_velocity = 0.0;  // per unit kick, after kick_scale
  double kick_scale = 1.0;
  std::vector<double> strobe_times;  // RF phase pi after the last kick
  std::array<std::vector<double>, 2> strobe_dx;
  double max_deviation = 0.0;
};

Trajectory integrate_trajectories(const OracleSystem& system, const KickTrain& train, BasisState basis,
                                  const OracleOptions& options = {});

struct GeometricPhaseResult {
  BasisState basis = BasisState::up_up;
  double phase = 0.0;
  /// Per-mode displacement in the fidelity normalisation, divided by |b_p . s|;
  /// NaN where this basis state does not excite the mode.
  std::vector<double> displacement;
  std::vector<double> excitation;  // |b_p . s|
  double oracle_infidelity = 0.0;
};

GeometricPhaseResult geometric_phase(const Trajectory& trajectory, const OracleSystem& system,
                                     const LaserConfig& laser);

struct OracleResult {
  std::array<GeometricPhaseResult, 4> basis;
  GateErrors errors;
  FidelityReport report;
};

FidelityReport oracle_infidelity(const std::array<GeometricPhaseResult, 4>& results, const ThermalState& thermal,
                                 const ModeSpectrum& spectrum, GateErrors* errors_out = nullptr);

/// Integrates the four basis states concurrently and forms the report.
OracleResult run_oracle(const OracleSystem& system, const KickTrain& train, const ThermalState& thermal,
                        const OracleOptions& options = {}, int threads = 4);

/// Columns: time, x1, v1, x2, v2, then each mode projection of the deviation
/// and its one-RF-period boxcar average.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, const OracleSystem& system);

/// Mechanical energy (secular frame, q = 0 only) of the full state, used for integrator checks.
double static_energy(const OracleSystem& system, const std::array<double, 2>& x, const std::array<double, 2>& v);

}  // namespace fastgate
