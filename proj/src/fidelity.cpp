#include "fastgate/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"

namespace fastgate {

namespace {

using constants::pi;
using constants::two_pi;
using cplx = std::complex<double>;

std::vector<double> displacement_sum(const double* times, const int* counts, std::size_t n,
                                     const ModeSpectrum& spectrum, double mu) {
  std::vector<double> out;
  out.reserve(spectrum.modes.size());
  for (const auto& mode : spectrum.modes) {
    const double r = mode.frequency_ratio;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += counts[k] * std::sin(two_pi * r * times[k]);
    out.push_back(2.0 * mu * std::sqrt(1.0 / r) * s);
  }
  return out;
}

double pair_sum_direct(const double* times, const int* counts, std::size_t n, double r) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      s += counts[i] * counts[j] * std::sin(two_pi * r * std::abs(times[i] - times[j]));
    }
  }
  return s;
}

// Same sum for time-sorted kicks in linear time via running phasors.
double pair_sum_sorted(const std::vector<KickEvent>& kicks, double r) {
  cplx running{0.0, 0.0};
  double s = 0.0;
  for (const auto& k : kicks) {
    const cplx e = std::polar(1.0, two_pi * r * k.time);
    s += k.sign * std::imag(e * std::conj(running));
    running += double(k.sign) * e;
  }
  return 2.0 * s;
}

double phase_from_pairs(const ModeSpectrum& spectrum, double mu, const LaserConfig& laser,
                        const std::vector<double>& pair_sums) {
  const double eta2 = laser.lamb_dicke_eta * laser.lamb_dicke_eta;
  double total = 0.0;
  for (std::size_t p = 0; p < spectrum.modes.size(); ++p) {
    const auto& m = spectrum.modes[p];
    total += 8.0 * eta2 * mu * (1.0 / m.frequency_ratio) * m.coupling[0] * m.coupling[1] * pair_sums[p];
  }
  return total;
}

GateErrors finish(double raw, std::vector<double> displacements, double mu, int target_sign) {
  GateErrors e;
  e.raw_phase = raw;
  e.phase_error = std::abs(raw) - pi / 4.0;
  e.mode_displacements = std::move(displacements);
  e.mu_used = mu;
  e.target_sign = target_sign >= 0 ? 1 : -1;
  e.sign_matches = raw * e.target_sign > 0.0;
  return e;
}

bool sorted_by_time(const KickTrain& train) {
  return std::is_sorted(train.kicks.begin(), train.kicks.end(),
                        [](const KickEvent& a, const KickEvent& b) { return a.time < b.time; });
}

std::vector<KickEvent> time_sorted(const KickTrain& train) {
  if (sorted_by_time(train)) return train.kicks;
  auto k = train.kicks;
  std::stable_sort(k.begin(), k.end(), [](const KickEvent& a, const KickEvent& b) { return a.time < b.time; });
  return k;
}

}  // namespace

std::vector<double> mode_displacement(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu) {
  return displacement_sum(schedule.group_times.data(), schedule.group_counts.data(), 6, spectrum, mu);
}

std::vector<double> mode_displacement(const KickTrain& train, const ModeSpectrum& spectrum, double mu) {
  std::vector<double> t;
  std::vector<int> z;
  for (const auto& k : train.kicks) {
    t.push_back(k.time);
    z.push_back(k.sign);
  }
  return displacement_sum(t.data(), z.data(), t.size(), spectrum, mu);
}

double acquired_phase(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu,
                      const LaserConfig& laser) {
  std::vector<double> sums;
  for (const auto& m : spectrum.modes) {
    sums.push_back(pair_sum_direct(schedule.group_times.data(), schedule.group_counts.data(), 6, m.frequency_ratio));
  }
  return phase_from_pairs(spectrum, mu, laser, sums);
}

double acquired_phase(const KickTrain& train, const ModeSpectrum& spectrum, double mu, const LaserConfig& laser) {
  const auto kicks = time_sorted(train);
  std::vector<double> sums;
  for (const auto& m : spectrum.modes) sums.push_back(pair_sum_sorted(kicks, m.frequency_ratio));
  return phase_from_pairs(spectrum, mu, laser, sums);
}

GateErrors gate_errors(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu,
                       const LaserConfig& laser, int target_sign) {
  return finish(acquired_phase(schedule, spectrum, mu, laser), mode_displacement(schedule, spectrum, mu), mu,
                target_sign);
}

GateErrors gate_errors(const KickTrain& train, const ModeSpectrum& spectrum, double mu, const LaserConfig& laser,
                       int target_sign) {
  return finish(acquired_phase(train, spectrum, mu, laser), mode_displacement(train, spectrum, mu), mu, target_sign);
}

double phase_error(const PulseSchedule& schedule, const ModeSpectrum& spectrum, double mu,
                   const LaserConfig& laser, int target_sign) {
  return gate_errors(schedule, spectrum, mu, laser, target_sign).phase_error;
}

FidelityReport infidelity(const GateErrors& errors, const ThermalState& thermal, const ModeSpectrum& spectrum) {
  FidelityReport r;
  r.phase_term = 2.0 / 3.0 * errors.phase_error * errors.phase_error;
  r.infidelity = r.phase_term;
  for (std::size_t p = 0; p < errors.mode_displacements.size(); ++p) {
    const auto& b = spectrum.modes[p].coupling;
    const double n = thermal.occupation(p);
    const double dp = errors.mode_displacements[p];
    const double term = 4.0 / 3.0 * (0.5 + n) * (b[0] * b[0] + b[1] * b[1]) * dp * dp;
    r.restoration_terms.push_back(term);
    r.mean_occupation.push_back(n);
    r.infidelity += term;
  }
  return r;
}

FidelityReport thermal_scaling(const FidelityReport& report, const ThermalState& thermal) {
  FidelityReport r = report;
  r.infidelity = r.phase_term;
  for (std::size_t p = 0; p < r.restoration_terms.size(); ++p) {
    const double n_new = thermal.occupation(p);
    r.restoration_terms[p] *= (0.5 + n_new) / (0.5 + report.mean_occupation[p]);
    r.mean_occupation[p] = n_new;
    r.infidelity += r.restoration_terms[p];
  }
  return r;
}

double imperfect_pulse_fidelity(double fidelity0, int pulse_pairs, double epsilon) {
  return (1.0 - 2.0 * pulse_pairs * epsilon) * fidelity0;
}

MicromotionModel micromotion_model(const ModeSpectrum& spectrum) {
  if (spectrum.modes.empty()) throw Error(ErrorKind::ConfigError, "empty mode spectrum");
  MicromotionModel m;
  m.beta = spectrum.modes[0].beta / spectrum.modes[0].frequency_ratio;
  for (const auto& mode : spectrum.modes) {
    FloquetMode f;
    f.solution = floquet_solution(mode.mathieu);
    // the spectrum may carry a rescaled exponent (chi perturbation); keep its frequency
    f.frequency_ratio = mode.frequency_ratio;
    f.coupling = mode.coupling;
    m.modes.push_back(std::move(f));
  }
  return m;
}

GateErrors floquet_gate_errors(const KickTrain& train, const MicromotionModel& model, const LaserConfig& laser,
                               int target_sign) {
  const auto kicks = time_sorted(train);
  const double eta2 = laser.lamb_dicke_eta * laser.lamb_dicke_eta;
  double raw = 0.0;
  std::vector<double> displacements;
  for (const auto& mode : model.modes) {
    const auto& sol = mode.solution;
    const double r = mode.frequency_ratio;
    const double scale = sol.beta / sol.wronskian();
    const cplx f_ref = sol.envelope(model.reference_phase);
    cplx running{0.0, 0.0};
    cplx restoration{0.0, 0.0};
    double pairs = 0.0;
    for (const auto& k : kicks) {
      const double theta = 4.0 * pi * k.time / model.beta + train.phi_rf;
      const cplx a = sol.envelope(theta) * std::polar(1.0, two_pi * r * k.time);
      pairs += k.sign * std::imag(a * std::conj(running));
      running += double(k.sign) * a;
      restoration += double(k.sign) * std::conj(a);
    }
    displacements.push_back(2.0 * std::sqrt(1.0 / r) * scale * std::abs(restoration * f_ref));
    raw += 8.0 * eta2 * (1.0 / r) * mode.coupling[0] * mode.coupling[1] * 2.0 * scale * pairs;
  }
  const double mu = model.modes.empty() ? 1.0 : mu_factor(model.modes[0].solution, model.reference_phase);
  return finish(raw, std::move(displacements), mu, target_sign);
}

}  // namespace fastgate
