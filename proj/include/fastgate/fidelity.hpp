#pragma once

#include <array>
#include <vector>

#include "fastgate/gatescheme.hpp"
#include "fastgate/mathieu.hpp"
#include "fastgate/trapmodel.hpp"

namespace fastgate {

struct LaserConfig {
  double lamb_dicke_eta = 0.1;
};

struct ThermalState {
  double mean_occupation = 0.1;
  std::vector<double> per_mode;  // overrides mean_occupation where given

  double occupation(std::size_t mode) const {
    return mode < per_mode.size() ? per_mode[mode] : mean_occupation;
  }
};

struct GateErrors {
  double phase_error = 0.0;  // |acquired| - pi/4
  double raw_phase = 0.0;    // signed acquired phase
  std::vector<double> mode_displacements;
  double mu_used = 1.0;
  int target_sign = 1;
  bool sign_matches = false;
};

enum class FidelitySource { analytic, oracle };

struct FidelityReport {
  double infidelity = 0.0;
  double phase_term = 0.0;
  std::vector<double> restoration_terms;
  std::vector<double> mean_occupation;
  FidelitySource source = FidelitySource::analytic;
};

/// 2 mu sqrt(omega/omega_p) sum_k z_k sin(omega_p t_k) for each mode.
std::vector<double> mode_displacement(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu);
std::vector<double> mode_displacement(const KickTrain& train, const ModeSpectrum& spectrum, double mu);

/// sum_p 8 eta^2 mu (omega/omega_p) b_p1 b_p2 sum_{i != j} z_i z_j sin(omega_p |t_i - t_j|)
double acquired_phase(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu,
                      const LaserConfig& laser);
double acquired_phase(const KickTrain& train, const ModeSpectrum& spectrum, double mu, const LaserConfig& laser);

GateErrors gate_errors(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu,
                       const LaserConfig& laser, int target_sign = 1);
GateErrors gate_errors(const KickTrain& train, const ModeSpectrum& spectrum, double mu,
                       const LaserConfig& laser, int target_sign = 1);

double phase_error(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu,
                   const LaserConfig& laser, int target_sign = 1);

FidelityReport infidelity(const GateErrors& errors, const ThermalState& thermal, const ModeSpectrum& spectrum);

/// Rescales the restoration terms to a new occupation; the phase term is kept.
FidelityReport thermal_scaling(const FidelityReport& report, const ThermalState& thermal);

/// (1 - 2 N_p epsilon) F_0
double imperfect_pulse_fidelity(double fidelity0, int pulse_pairs, double epsilon);

/// Floquet data of every mode, for kicks landing at arbitrary RF phases.
struct FloquetMode {
  FloquetSolution solution;
  double frequency_ratio = 1.0;
  std::array<double, 2> coupling{};
};

struct MicromotionModel {
  double beta = 1.0;  // COM exponent; RF phase advances 4 pi / beta per secular period
  std::vector<FloquetMode> modes;
  double reference_phase = 3.141592653589793;  // stroboscopic read-out phase of the displacement
};

MicromotionModel micromotion_model(const ModeSpectrum& spectrum);

/// Gate errors from the Floquet Green's function of each mode. Identical to the
/// locked formulas (with mu_p = mu_factor of mode p) when every kick lands at
/// the reference phase. Displacements are magnitudes.
GateErrors floquet_gate_errors(const KickTrain& train, const MicromotionModel& model, const LaserConfig& laser,
                               int target_sign = 1);

}  // namespace fastgate
