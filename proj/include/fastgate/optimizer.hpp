#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fastgate/fidelity.hpp"
#include "fastgate/gatescheme.hpp"
#include "fastgate/trapmodel.hpp"

namespace fastgate {

enum class MuMode { with_micromotion, without_micromotion };

/// What the optimizer sees of the trap: mode spectrum, a common kick
/// enhancement mu, and the RF comb the pulses are locked to.
struct GateModel {
  ModeSpectrum spectrum;
  double mu = 1.0;
  /// Spacing of RF phase-pi instants in secular periods (beta / 2). Zero means
  /// the drive is assumed tuned to whatever timings are found.
  double rf_period = 0.0;
};

/// mu from the COM Mathieu solution at phase pi and the trap's own RF comb;
/// without micromotion mu = 1 and nothing is snapped.
GateModel gate_model(const Trap& trap, MuMode mode, const SpectrumOptions& options = {});

/// Two-mode harmonic system with splitting chi and a prescribed mu.
GateModel ideal_model(double chi, double mu, double rf_period = 0.0);

struct OptimizationConfig {
  double time_bound = 2.0;  // secular periods
  int n = 12;
  int starts = 512;
  std::uint64_t seed = 1;
  MuMode mu_mode = MuMode::with_micromotion;
  int target_sign = 0;  // +1 or -1 restricts the sign of the acquired phase
  LaserConfig laser;
  ThermalState thermal;
  int max_iterations = 300;
  double gradient_tolerance = 1e-12;
  int threads = 0;  // 0: hardware concurrency
  int lattice_radius = 2;  // comb-index neighbourhood searched after snapping
};

struct LocalResult {
  std::array<double, 3> taus{};
  double infidelity = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OptimizationResult {
  PulseSchedule best_schedule;
  std::array<double, 3> taus{};
  double infidelity = 0.0;
  double achieved_gate_time = 0.0;
  int starts_converged = 0;
  GateErrors errors;
};

/// Residuals whose squares sum to the analytic infidelity: phase error first,
/// then one per mode. `jacobian` (3 columns per residual) is filled if given.
std::vector<double> gate_residuals(const std::array<double, 3>& taus, const GateModel& model,
                                   const OptimizationConfig& config, std::vector<double>* jacobian = nullptr);

/// Infidelity of the FRAG schedule, snapped to the comb when the model has one.
double schedule_infidelity(const std::array<double, 3>& taus, const GateModel& model,
                           const OptimizationConfig& config);

/// Box-constrained Levenberg-Marquardt on the continuous timings.
LocalResult local_search(const std::array<double, 3>& initial, const GateModel& model,
                         const OptimizationConfig& config);

/// Halton points in (0, bound / 2]^3 with a seeded random shift.
std::vector<std::array<double, 3>> start_points(int count, double time_bound, std::uint64_t seed);

/// Best of `extra` plus config.starts local searches; extra starts come first.
OptimizationResult optimize_gate(const GateModel& model, const OptimizationConfig& config,
                                 const std::vector<std::array<double, 3>>& extra = {});
OptimizationResult optimize_gate(const Trap& trap, const OptimizationConfig& config);

/// The schedule the optimizer would report for these timings: FRAG with
/// phi_rf = pi, snapped to the comb when the model has one.
PulseSchedule model_schedule(const std::array<double, 3>& taus, const GateModel& model, int n);

struct SweepRow {
  double time_bound = 0.0;
  double achieved_gate_time = 0.0;
  double infidelity = 0.0;
  double mu = 1.0;
  int n = 0;
  std::array<double, 3> taus{};
  int converged_starts = 0;
  std::string flag;  // empty on success
};

/// One optimize_gate per (bound, mu). Each mu column is warm-started from the
/// previous bound and kept monotone: a larger bound never reports a worse gate.
/// `on_row` sees each row as soon as it is final.
std::vector<SweepRow> sweep_gate_time(const GateModel& model, const OptimizationConfig& config,
                                      const std::vector<double>& bounds, const std::vector<double>& mus,
                                      const std::function<void(const SweepRow&)>& on_row = {});

}  // namespace fastgate
