#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fastgate/odeoracle.hpp"
#include "fastgate/optimizer.hpp"

namespace fastgate {

/// A designed gate together with the system it was designed for.
struct GateUnderTest {
  PulseSchedule schedule;
  GateModel model;
  LaserConfig laser;
  ThermalState thermal;
  /// Physical trap; required by the oracle-based sweeps and the first-pulse phase sweep.
  std::optional<Trap> trap;
  /// COM Mathieu parameters whose Floquet solution sets mu; used for phase offsets.
  MathieuParams com{};
};

/// Wraps an optimizer result. `com` defaults to the model's COM mode.
GateUnderTest gate_under_test(const OptimizationResult& result, const GateModel& model,
                              const OptimizationConfig& config, std::optional<Trap> trap = std::nullopt);

enum class SweepParameter { phase_offset, chi_error, rep_rate, thermal_n, stray_field, q_value };

std::string parameter_name(SweepParameter p);
SweepParameter parse_parameter(const std::string& name);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::phase_offset;
  std::vector<double> grid;
  bool with_oracle = false;  // phase offsets only; the dynamic sweeps always use it
  double first_pulse_phase = 0.0;  // q_value sweeps
  int threads = 0;
  OracleOptions oracle;
};

struct RobustnessRow {
  double value = 0.0;
  double infidelity = 0.0;         // analytic (Floquet where kicks leave phase pi)
  double oracle_infidelity = 0.0;  // NaN when not evaluated
  std::string flag;
};

struct RobustnessTable {
  SweepParameter parameter = SweepParameter::phase_offset;
  std::vector<RobustnessRow> rows;
};

/// Analytic infidelity of the gate as designed.
double base_infidelity(const GateUnderTest& gate);

/// All pulse phases shifted by each offset (radians of RF phase). Locked pulses
/// share one phase, so only mu changes: mu(pi + offset) / mu(pi).
RobustnessTable sweep_phase_offset(const GateUnderTest& gate, const std::vector<double>& offsets,
                                   bool with_oracle = false, const OracleOptions& oracle = {}, int threads = 0);

/// Schedule evaluated on a spectrum whose chi is off by the given fractions.
RobustnessTable sweep_chi_error(const GateUnderTest& gate, const std::vector<double>& fractions);

/// Groups spread over a 1 / rate comb (kicks per secular period), evaluated by
/// the oracle; an infinite rate is the instantaneous gate.
RobustnessTable sweep_rep_rate(const GateUnderTest& gate, const std::vector<double>& rates,
                               const OracleOptions& oracle = {}, int threads = 0);

/// Restoration terms rescaled to each mean occupation.
RobustnessTable sweep_thermal(const GateUnderTest& gate, const std::vector<double>& occupations);

/// Second microtrap's secular frequency offset by each fraction. RF-locked gates on a
/// physical trap go through the oracle on the re-derived trap; tuned-drive gates use
/// the common-mu formula on the shifted modes (oracle column NaN).
RobustnessTable sweep_stray_field(const GateUnderTest& gate, const std::vector<double>& offsets,
                                  const OracleOptions& oracle = {}, int threads = 0);

/// Kick phases taken from the trap's RF drive with the first pulse at each
/// given phase (for gates designed without micromotion).
RobustnessTable sweep_first_pulse_phase(const GateUnderTest& gate, const std::vector<double>& phases);

/// Same trap with q replaced and a re-chosen to keep the COM exponent, so the
/// RF / secular ratio is held fixed; first pulse at `first_pulse_phase`.
RobustnessTable sweep_q_value(const GateUnderTest& gate, const std::vector<double>& qs, double first_pulse_phase);

RobustnessTable run_sweep(const SweepSpec& spec, const GateUnderTest& gate);

/// Stray field to secular-frequency offset, dw / w = sqrt(2) dE / E, and back.
double field_to_frequency(double field_fraction);
double frequency_to_field(double frequency_fraction);

/// Fractional errors in d or in omega alone that produce a fractional chi error.
struct GeometryError {
  double separation = 0.0;
  double omega = 0.0;
};
GeometryError chi_error_to_geometry(double xi, double chi_fraction);

/// d ln chi / d ln xi for the microtrap chi(xi).
double chi_log_slope(double xi);

}  // namespace fastgate
