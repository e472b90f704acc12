#include "fastgate/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/mathieu.hpp"
#include "fastgate/parallel.hpp"

namespace fastgate {

namespace {

using constants::pi;

const double nan = std::numeric_limits<double>::quiet_NaN();

const Trap& require_trap(const GateUnderTest& gate, const char* what) {
  if (!gate.trap) throw Error(ErrorKind::ConfigError, std::string(what) + " needs a physical trap");
  return *gate.trap;
}

double analytic(const PulseSchedule& s, const ModeSpectrum& spectrum, double mu, const GateUnderTest& gate) {
  return infidelity(gate_errors(s, spectrum, mu, gate.laser), gate.thermal, spectrum).infidelity;
}

double floquet(const KickTrain& train, const ModeSpectrum& spectrum, const GateUnderTest& gate) {
  const auto e = floquet_gate_errors(train, micromotion_model(spectrum), gate.laser);
  return infidelity(e, gate.thermal, spectrum).infidelity;
}

// oracle settings with the gate's own laser, so kicks match the design
OracleOptions oracle_for(const GateUnderTest& gate, OracleOptions o) {
  o.laser = gate.laser;
  return o;
}

RobustnessRow row_at(double v) {
  RobustnessRow r;
  r.value = v;
  r.oracle_infidelity = nan;
  return r;
}

// RF phase offset that puts the earliest group at `phase`
double phase_for_first_pulse(const PulseSchedule& s, double beta, double phase) {
  const double t0 = *std::min_element(s.group_times.begin(), s.group_times.end());
  return phase - 4.0 * pi * t0 / beta;
}

Trap with_mathieu(const Trap& trap, const MathieuParams& p) {
  if (const auto* m = std::get_if<MicrotrapArray>(&trap)) {
    auto out = make_microtrap(m->separation_d, m->secular_omega, p, m->ion_mass, m->charge_number);
    out.second_trap_offset = m->second_trap_offset;
    return out;
  }
  const auto& t = std::get<PaulTrap>(trap);
  return make_paul_trap(t.secular_omega, p, t.kappa, t.ion_mass, t.charge_number);
}

}  // namespace

GateUnderTest gate_under_test(const OptimizationResult& result, const GateModel& model,
                              const OptimizationConfig& config, std::optional<Trap> trap) {
  GateUnderTest g;
  g.schedule = result.best_schedule;
  g.model = model;
  if (config.mu_mode == MuMode::without_micromotion) {
    g.model.mu = 1.0;
    g.model.rf_period = 0.0;
  }
  g.laser = config.laser;
  g.thermal = config.thermal;
  g.trap = std::move(trap);
  g.com = model.spectrum.modes.front().mathieu;
  return g;
}

std::string parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::phase_offset: return "phase_offset";
    case SweepParameter::chi_error: return "chi_error";
    case SweepParameter::rep_rate: return "rep_rate";
    case SweepParameter::thermal_n: return "thermal_n";
    case SweepParameter::stray_field: return "stray_field";
    case SweepParameter::q_value: return "q_value";
  }
  return "?";
}

SweepParameter parse_parameter(const std::string& name) {
  for (auto p : {SweepParameter::phase_offset, SweepParameter::chi_error, SweepParameter::rep_rate,
                 SweepParameter::thermal_n, SweepParameter::stray_field, SweepParameter::q_value}) {
    if (parameter_name(p) == name) return p;
  }
  throw Error(ErrorKind::ConfigError, "unknown sweep parameter '" + name + "'");
}

double base_infidelity(const GateUnderTest& gate) {
  return analytic(gate.schedule, gate.model.spectrum, gate.model.mu, gate);
}

RobustnessTable sweep_phase_offset(const GateUnderTest& gate, const std::vector<double>& offsets, bool with_oracle,
                                   const OracleOptions& requested, int threads) {
  const auto oracle = oracle_for(gate, requested);
  RobustnessTable t{SweepParameter::phase_offset, {}};
  const auto sol = floquet_solution(gate.com);
  const double mu0 = mu_factor(sol, pi);
  std::optional<OracleSystem> sys;
  if (with_oracle) {
    // a tuned-drive gate has no real RF comb to put its kicks on
    if (!(gate.model.rf_period > 0.0)) throw Error(ErrorKind::ConfigError, "phase-offset oracle needs an RF-locked gate");
    const Trap& trap = require_trap(gate, "the oracle");
    sys = prepare_oracle(trap, mode_spectrum(trap, {true, oracle.crystal}), oracle);
  }
  t.rows.resize(offsets.size());
  parallel_for(offsets.size(), threads, [&](std::size_t i) {
    const double d = offsets[i];
    auto r = row_at(d);
    const double mu = d == 0.0 ? gate.model.mu : gate.model.mu * mu_factor(sol, pi + d) / mu0;
    r.infidelity = analytic(gate.schedule, gate.model.spectrum, mu, gate);
    if (sys) {
      auto train = instantaneous_train(gate.schedule);
      train.phi_rf = gate.schedule.phi_rf + d;
      r.oracle_infidelity = run_oracle(*sys, train, gate.thermal, oracle, 1).report.infidelity;
    }
    t.rows[i] = r;
  });
  return t;
}

RobustnessTable sweep_chi_error(const GateUnderTest& gate, const std::vector<double>& fractions) {
  RobustnessTable t{SweepParameter::chi_error, {}};
  for (double f : fractions) {
    auto r = row_at(f);
    r.infidelity = analytic(gate.schedule, perturb_chi(gate.model.spectrum, f), gate.model.mu, gate);
    t.rows.push_back(r);
  }
  return t;
}

RobustnessTable sweep_rep_rate(const GateUnderTest& gate, const std::vector<double>& rates,
                               const OracleOptions& requested, int threads) {
  const auto oracle = oracle_for(gate, requested);
  RobustnessTable t{SweepParameter::rep_rate, {}};
  const Trap& trap = require_trap(gate, "the repetition-rate sweep");
  const auto sys = prepare_oracle(trap, mode_spectrum(trap, {true, oracle.crystal}), oracle);
  t.rows.resize(rates.size());
  parallel_for(rates.size(), threads, [&](std::size_t i) {
    auto r = row_at(rates[i]);
    try {
      const auto train = expand_finite_rep(gate.schedule, rates[i]);
      r.infidelity = floquet(train, sys.spectrum, gate);
      r.oracle_infidelity = run_oracle(sys, train, gate.thermal, oracle, 1).report.infidelity;
    } catch (const Error& e) {
      r.flag = std::string(error_name(e.kind()));
      r.infidelity = nan;
    }
    t.rows[i] = r;
  });
  return t;
}

RobustnessTable sweep_thermal(const GateUnderTest& gate, const std::vector<double>& occupations) {
  RobustnessTable t{SweepParameter::thermal_n, {}};
  const auto& spectrum = gate.model.spectrum;
  const auto base = infidelity(gate_errors(gate.schedule, spectrum, gate.model.mu, gate.laser), gate.thermal, spectrum);
  for (double n : occupations) {
    auto r = row_at(n);
    ThermalState th;
    th.mean_occupation = n;
    r.infidelity = thermal_scaling(base, th).infidelity;
    t.rows.push_back(r);
  }
  return t;
}

RobustnessTable sweep_stray_field(const GateUnderTest& gate, const std::vector<double>& offsets,
                                  const OracleOptions& requested, int threads) {
  const auto oracle = oracle_for(gate, requested);
  RobustnessTable t{SweepParameter::stray_field, {}};
  if (!(gate.model.rf_period > 0.0) || !gate.trap) {
    // tuned drive: every kick at phase pi, so the common-mu formula holds on the shifted modes
    for (double f : offsets) {
      auto r = row_at(f);
      r.infidelity = analytic(gate.schedule, offset_spectrum(gate.model.spectrum, f), gate.model.mu, gate);
      t.rows.push_back(r);
    }
    return t;
  }
  const Trap& trap = require_trap(gate, "the stray-field sweep");
  const auto* micro = std::get_if<MicrotrapArray>(&trap);
  if (!micro) throw Error(ErrorKind::ConfigError, "stray-field offsets apply to microtrap arrays");
  const auto train = instantaneous_train(gate.schedule);
  t.rows.resize(offsets.size());
  parallel_for(offsets.size(), threads, [&](std::size_t i) {
    auto r = row_at(offsets[i]);
    MicrotrapArray m = *micro;
    m.second_trap_offset = offsets[i];
    const Trap shifted{m};
    const auto spectrum = mode_spectrum(shifted, {true, oracle.crystal});
    const auto sys = prepare_oracle(shifted, spectrum, oracle);
    r.infidelity = floquet(train, spectrum, gate);
    r.oracle_infidelity = run_oracle(sys, train, gate.thermal, oracle, 1).report.infidelity;
    t.rows[i] = r;
  });
  return t;
}

RobustnessTable sweep_first_pulse_phase(const GateUnderTest& gate, const std::vector<double>& phases) {
  RobustnessTable t{SweepParameter::phase_offset, {}};
  const Trap& trap = require_trap(gate, "the first-pulse phase sweep");
  const auto spectrum = mode_spectrum(trap);
  const double beta = micromotion_model(spectrum).beta;
  for (double ph : phases) {
    auto r = row_at(ph);
    auto train = instantaneous_train(gate.schedule);
    train.phi_rf = phase_for_first_pulse(gate.schedule, beta, ph);
    r.infidelity = floquet(train, spectrum, gate);
    t.rows.push_back(r);
  }
  return t;
}

RobustnessTable sweep_q_value(const GateUnderTest& gate, const std::vector<double>& qs, double first_pulse_phase) {
  RobustnessTable t{SweepParameter::q_value, {}};
  const Trap& trap = require_trap(gate, "the q sweep");
  const double beta = trap_beta(trap);
  for (double q : qs) {
    auto r = row_at(q);
    try {
      const Trap tq = with_mathieu(trap, {find_a_for_beta(q, beta), q});
      GateUnderTest g = gate;
      g.trap = tq;
      r.infidelity = sweep_first_pulse_phase(g, {first_pulse_phase}).rows.front().infidelity;
    } catch (const Error& e) {
      r.flag = std::string(error_name(e.kind()));
      r.infidelity = nan;
    }
    t.rows.push_back(r);
  }
  return t;
}

RobustnessTable run_sweep(const SweepSpec& spec, const GateUnderTest& gate) {
  if (spec.grid.empty()) throw Error(ErrorKind::ConfigError, "sweep grid is empty");
  if (!std::is_sorted(spec.grid.begin(), spec.grid.end())) throw Error(ErrorKind::ConfigError, "sweep grid must be sorted");
  switch (spec.parameter) {
    case SweepParameter::phase_offset:
      return sweep_phase_offset(gate, spec.grid, spec.with_oracle, spec.oracle, spec.threads);
    case SweepParameter::chi_error: return sweep_chi_error(gate, spec.grid);
    case SweepParameter::rep_rate: return sweep_rep_rate(gate, spec.grid, spec.oracle, spec.threads);
    case SweepParameter::thermal_n: return sweep_thermal(gate, spec.grid);
    case SweepParameter::stray_field: return sweep_stray_field(gate, spec.grid, spec.oracle, spec.threads);
    case SweepParameter::q_value: return sweep_q_value(gate, spec.grid, spec.first_pulse_phase);
  }
  throw Error(ErrorKind::ConfigError, "unhandled sweep parameter");
}

double field_to_frequency(double field_fraction) { return std::sqrt(2.0) * field_fraction; }

double frequency_to_field(double frequency_fraction) { return frequency_fraction / std::sqrt(2.0); }

double chi_log_slope(double xi) {
  // static balance r = delta + 2 / r^2 with (1 + chi)^2 = 1 + 4 / r^3 =: 1 + R, delta^3 = xi
  const double c = chi_microtrap(xi).chi;
  const double big_r = c * (2.0 + c);
  const double r = std::cbrt(4.0 / big_r);
  const double delta = std::cbrt(xi);
  return -big_r * delta / (2.0 * c * (1.0 + c) * r * (1.0 + big_r));
}

GeometryError chi_error_to_geometry(double xi, double chi_fraction) {
  // xi ~ d^3 omega^2
  const double s = chi_log_slope(xi);
  return {chi_fraction / (3.0 * s), chi_fraction / (2.0 * s)};
}

}  // namespace fastgate
