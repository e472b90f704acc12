#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fastgate/fidelity.hpp"
#include "fastgate/gatescheme.hpp"
#include "fastgate/trapmodel.hpp"

using namespace fastgate;
using std::numbers::pi;

namespace {

const double ca_mass = 39.9626 * 1.66053906660e-27;
const double mhz = 2 * pi * 1e6;

PulseSchedule empty_schedule() {
  PulseSchedule s;
  s.group_times = {-0.3, -0.2, -0.1, 0.1, 0.2, 0.3};
  s.group_counts = {0, 0, 0, 0, 0, 0};
  return s;
}

// Micromotion-free expressions written out independently.
double harmonic_dp(const PulseSchedule& s, double r) {
  double acc = 0;
  for (int k = 0; k < 6; ++k) acc += s.group_counts[k] * std::sin(2 * pi * r * s.group_times[k]);
  return 2 * std::sqrt(1 / r) * acc;
}

double harmonic_phase(const PulseSchedule& s, const ModeSpectrum& sp, double eta) {
  double total = 0;
  for (const auto& m : sp.modes) {
    double acc = 0;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (i == j) continue;
        acc += s.group_counts[i] * s.group_counts[j] *
               std::sin(2 * pi * m.frequency_ratio * std::abs(s.group_times[i] - s.group_times[j]));
      }
    }
    total += 8 * eta * eta * 1.0 * (1 / m.frequency_ratio) * m.coupling[0] * m.coupling[1] * acc;
  }
  return total;
}

// Stroboscopic amplitude (at RF phase pi) of a single Mathieu mode after one
// unit velocity kick at RF phase theta_k, integrated directly; returned in the
// displacement normalisation 2 sqrt(1/r) (2 pi r A).
double single_kick_dp_by_integration(const MathieuParams& p, double com_beta, double ratio, double theta_k) {
  // X_theta'' = -(a - 2 q cos theta) X / 4; tau = beta (theta - phi) / 4 pi
  const int steps = 2000;
  const double h = 2 * pi / steps;
  double x = 0.0, v = com_beta / (4 * pi);  // unit kick in tau units
  double th = theta_k;
  auto acc = [&](double t, double y) { return -0.25 * (p.a - 2 * p.q * std::cos(t)) * y; };
  // advance to the next phase pi, then sample one point per RF period
  const double to_pi = std::fmod(pi - theta_k + 4 * pi, 2 * pi);
  auto advance = [&](double span, int n) {
    const double hh = span / n;
    for (int i = 0; i < n; ++i) {
      const double k1x = v, k1v = acc(th, x);
      const double k2x = v + 0.5 * hh * k1v, k2v = acc(th + 0.5 * hh, x + 0.5 * hh * k1x);
      const double k3x = v + 0.5 * hh * k2v, k3v = acc(th + 0.5 * hh, x + 0.5 * hh * k2x);
      const double k4x = v + hh * k3v, k4v = acc(th + hh, x + hh * k3x);
      x += hh / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
      v += hh / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      th += hh;
    }
  };
  advance(to_pi, std::max(1, static_cast<int>(to_pi / h) + 1));
  std::vector<double> samples;
  const int periods = static_cast<int>(std::ceil(4.0 / (com_beta * ratio))) * 2;
  for (int n = 0; n < periods; ++n) {
    samples.push_back(x);
    advance(2 * pi, steps);
  }
  // fit y_n = A cos(pi beta_p n) + B sin(pi beta_p n)
  const double w = pi * com_beta * ratio;
  double scc = 0, sss = 0, scs = 0, syc = 0, sys = 0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const double c = std::cos(w * n), s = std::sin(w * n);
    scc += c * c;
    sss += s * s;
    scs += c * s;
    syc += samples[n] * c;
    sys += samples[n] * s;
  }
  const double det = scc * sss - scs * scs;
  const double a = (syc * sss - sys * scs) / det;
  const double b = (sys * scc - syc * scs) / det;
  return 2 * std::sqrt(1 / ratio) * 2 * pi * ratio * std::hypot(a, b);
}

}  // namespace

TEST_CASE("trivial schedules") {
  const auto sp = harmonic_spectrum(0.05);
  const LaserConfig laser;
  const auto e = gate_errors(empty_schedule(), sp, 1.7, laser);
  for (double dp : e.mode_displacements) CHECK(dp == 0.0);
  CHECK(e.phase_error == -pi / 4);
  const auto rep = infidelity(e, ThermalState{}, sp);
  CHECK(std::abs(rep.infidelity - 2.0 / 3.0 * (pi / 4) * (pi / 4)) < 1e-12);
  CHECK(rep.infidelity == doctest::Approx(0.4112).epsilon(1e-4));

  auto zero_times = frag_schedule(0.1, 0.2, 0.3, 2);
  zero_times.group_times = {0, 0, 0, 0, 0, 0};
  for (double dp : mode_displacement(zero_times, sp, 1.3)) CHECK(dp == 0.0);

  auto single = empty_schedule();
  single.group_counts[2] = 7;
  CHECK(phase_error(single, sp, 2.0, laser) == -pi / 4);

  GateErrors perfect;
  perfect.phase_error = 0;
  perfect.mode_displacements = {0.0, 0.0};
  CHECK(infidelity(perfect, ThermalState{}, sp).infidelity == 0.0);

  const KickTrain none;
  const auto model = micromotion_model(sp);
  CHECK(floquet_gate_errors(none, model, laser).phase_error == -pi / 4);
}

TEST_CASE("micromotion-free limit and linearity in mu") {
  const auto sp = harmonic_spectrum(0.0137);
  const LaserConfig laser{0.13};
  const auto s = frag_schedule(0.231, 0.617, 0.402, 3);
  const auto e = gate_errors(s, sp, 1.0, laser);
  CHECK(e.raw_phase == harmonic_phase(s, sp, 0.13));
  CHECK(e.mode_displacements[0] == harmonic_dp(s, 1.0));
  CHECK(e.mode_displacements[1] == harmonic_dp(s, 1.0137));

  const auto e2 = gate_errors(s, sp, 2.0, laser);
  CHECK(e2.raw_phase == doctest::Approx(2 * e.raw_phase).epsilon(1e-15));
  CHECK(e2.mode_displacements[1] == doctest::Approx(2 * e.mode_displacements[1]).epsilon(1e-15));

  // train of grouped kicks gives the same numbers
  const auto et = gate_errors(instantaneous_train(s), sp, 1.0, laser);
  CHECK(et.raw_phase == doctest::Approx(e.raw_phase).epsilon(1e-12));
  CHECK(et.mode_displacements[1] == doctest::Approx(e.mode_displacements[1]).epsilon(1e-12));
}

TEST_CASE("symmetries of the analytic infidelity") {
  const auto sp = harmonic_spectrum(0.2);
  const LaserConfig laser;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 1.5);
  for (int it = 0; it < 50; ++it) {
    auto s = frag_schedule(u(rng), u(rng), u(rng), 1 + static_cast<int>(rng() % 6));
    const auto base = infidelity(gate_errors(s, sp, 1.0, laser), ThermalState{}, sp);
    auto flipped = s;
    for (int& z : flipped.group_counts) z = -z;
    const auto rf = infidelity(gate_errors(flipped, sp, 1.0, laser), ThermalState{}, sp);
    CHECK(rf.infidelity == doctest::Approx(base.infidelity).epsilon(1e-14));

    // whole-schedule shift by integer secular periods: the phase depends only on
    // time differences, the COM displacement is periodic in one trap period
    auto shifted = s;
    for (double& t : shifted.group_times) t += 3.0;
    const auto es = gate_errors(shifted, sp, 1.0, laser);
    const auto e0 = gate_errors(s, sp, 1.0, laser);
    CHECK(es.raw_phase == doctest::Approx(e0.raw_phase).epsilon(1e-10));
    CHECK(es.mode_displacements[0] == doctest::Approx(e0.mode_displacements[0]).epsilon(1e-9));
    // the magnitude-based Floquet evaluation is shift invariant for every mode
    const auto model = micromotion_model(sp);
    const auto f0 = infidelity(floquet_gate_errors(instantaneous_train(s), model, laser), ThermalState{}, sp);
    const auto f1 = infidelity(floquet_gate_errors(instantaneous_train(shifted), model, laser), ThermalState{}, sp);
    CHECK(f1.infidelity == doctest::Approx(f0.infidelity).epsilon(1e-9));
  }
}

TEST_CASE("thermal occupation") {
  const auto sp = harmonic_spectrum(0.05);
  const auto s = frag_schedule(0.2, 0.5, 0.9, 2);
  const auto e = gate_errors(s, sp, 1.0, LaserConfig{});
  const auto r01 = infidelity(e, ThermalState{0.1, {}}, sp);
  const auto same = thermal_scaling(r01, ThermalState{0.1, {}});
  CHECK(same.infidelity == doctest::Approx(r01.infidelity).epsilon(1e-15));
  const auto hot = thermal_scaling(r01, ThermalState{100.0, {}});
  for (std::size_t p = 0; p < 2; ++p) {
    CHECK(hot.restoration_terms[p] == doctest::Approx(r01.restoration_terms[p] * 100.5 / 0.6).epsilon(1e-14));
  }
  CHECK(hot.phase_term == r01.phase_term);
  // direct evaluation at the new occupation agrees
  const auto direct = infidelity(e, ThermalState{100.0, {}}, sp);
  CHECK(direct.infidelity == doctest::Approx(hot.infidelity).epsilon(1e-13));
  // linear in (1/2 + n)
  const auto r1 = infidelity(e, ThermalState{1.0, {}}, sp);
  const auto r3 = infidelity(e, ThermalState{3.0, {}}, sp);
  CHECK((r3.restoration_terms[1] - r1.restoration_terms[1]) ==
        doctest::Approx(2 * (r1.restoration_terms[1] - r01.restoration_terms[1]) / 0.9 * 1.0).epsilon(1e-12));
  // per-mode occupations
  const auto mixed = infidelity(e, ThermalState{0.1, {0.1, 5.0}}, sp);
  CHECK(mixed.restoration_terms[0] == r01.restoration_terms[0]);
  CHECK(mixed.restoration_terms[1] == doctest::Approx(r01.restoration_terms[1] * 5.5 / 0.6));

  // a well-restored gate stays below threshold when hot
  FidelityReport good;
  good.phase_term = 1e-6;
  good.restoration_terms = {5e-10, 5e-10};
  good.mean_occupation = {0.1, 0.1};
  good.infidelity = 1e-6 + 1e-9;
  CHECK(thermal_scaling(good, ThermalState{100.0, {}}).infidelity < 2e-4);
}

TEST_CASE("imperfect pulses") {
  CHECK(imperfect_pulse_fidelity(0.99, 1000, 0.0) == 0.99);
  CHECK(1.0 - imperfect_pulse_fidelity(1.0, 50, 2e-6) == doctest::Approx(2e-4).epsilon(1e-9));
  CHECK(1.0 - imperfect_pulse_fidelity(1.0, 1000, 1e-7) == doctest::Approx(2e-4).epsilon(1e-9));
}

TEST_CASE("Floquet evaluation") {
  const LaserConfig laser;
  SUBCASE("no drive reduces to the harmonic expressions") {
    const auto sp = harmonic_spectrum(0.0123);
    const auto s = frag_schedule(0.31, 0.77, 1.05, 4);
    const auto e = gate_errors(s, sp, 1.0, laser);
    const auto f = floquet_gate_errors(instantaneous_train(s), micromotion_model(sp), laser);
    CHECK(f.raw_phase == doctest::Approx(e.raw_phase).epsilon(1e-12));
    for (int p = 0; p < 2; ++p) CHECK(f.mode_displacements[p] == doctest::Approx(std::abs(e.mode_displacements[p])).epsilon(1e-11));
  }
  SUBCASE("kicks locked at phase pi reduce to the mu-scaled expressions per mode") {
    const auto trap = make_paul_trap(mhz, {0.0, 0.2}, 1.0 / 6, ca_mass);
    const auto sp = mode_spectrum(Trap{trap});
    const double beta = trap_beta(Trap{trap});
    const auto s = phase_lock(frag_schedule(0.31, 0.77, 1.05, 4), beta);
    const auto model = micromotion_model(sp);
    const auto f = floquet_gate_errors(instantaneous_train(s), model, laser);
    double raw = 0;
    for (std::size_t p = 0; p < 2; ++p) {
      ModeSpectrum one;
      one.secular_omega = sp.secular_omega;
      one.modes = {sp.modes[p]};
      const double mu_p = mu_factor(model.modes[p].solution, pi);
      const auto e = gate_errors(s, one, mu_p, laser);
      raw += e.raw_phase;
      CHECK(f.mode_displacements[p] == doctest::Approx(std::abs(e.mode_displacements[0])).epsilon(1e-10));
    }
    CHECK(f.raw_phase == doctest::Approx(raw).epsilon(1e-10));
    CHECK(f.mu_used == doctest::Approx(mu_factor(floquet_solution({0.0, 0.2}), pi)).epsilon(1e-14));
  }
  SUBCASE("single-kick response matches direct integration at arbitrary phases") {
    const MathieuParams p{0.0, 0.3};
    const double beta = characteristic_exponent(p);
    ModeSpectrum sp;
    sp.secular_omega = 1.0;
    Mode m;
    m.mathieu = p;
    m.beta = beta;
    m.frequency_ratio = 1.0;
    m.coupling = {std::sqrt(0.5), std::sqrt(0.5)};
    sp.modes = {m};
    const auto model = micromotion_model(sp);
    for (double theta : {0.0, 0.7, pi, 2.0, 4.4}) {
      CAPTURE(theta);
      KickTrain t;
      t.phi_rf = theta;  // kick at tau = 0 lands at this phase
      t.kicks = {{0.0, 1, 0}};
      const double dp = floquet_gate_errors(t, model, laser).mode_displacements[0];
      CHECK(dp == doctest::Approx(single_kick_dp_by_integration(p, beta, 1.0, theta)).epsilon(1e-6));
    }
  }
}
