#include "fastgate/odeoracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <mutex>
#include <thread>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"

namespace fastgate {

namespace {

using constants::pi;
using constants::two_pi;

// two copies (kicked, reference) x two ions x (x, z, vx, vz)
using State = std::array<double, 16>;

inline std::size_t at(int copy, int ion, int field) { return static_cast<std::size_t>(8 * copy + 4 * ion + field); }

struct Dynamics {
  const ScaledTrap& s;
  double rf_phase0;  // theta at tau = 0
  double trap_scale;  // (2 pi / beta)^2
  double coulomb;     // (2 pi)^2

  explicit Dynamics(const ScaledTrap& st, double phi)
      : s(st), rf_phase0(phi), trap_scale((two_pi / st.beta) * (two_pi / st.beta)), coulomb(two_pi * two_pi * st.coulomb) {}

  void rhs(double tau, const State& y, State& d) const {
    const double c = std::cos(4.0 * pi * tau / s.beta + rf_phase0);
    for (int copy = 0; copy < 2; ++copy) {
      const double x1 = y[at(copy, 0, 0)], x2 = y[at(copy, 1, 0)];
      for (int i = 0; i < 2; ++i) {
        d[at(copy, i, 0)] = y[at(copy, i, 2)];
        d[at(copy, i, 1)] = y[at(copy, i, 3)];
      }
      if (!s.paul) {
        const double r = s.separation + x2 - x1;
        const double f = coulomb / (r * r);
        d[at(copy, 0, 2)] = -trap_scale * (s.ion[0].a - 2.0 * s.ion[0].q * c) * x1 - f;
        d[at(copy, 1, 2)] = -trap_scale * (s.ion[1].a - 2.0 * s.ion[1].q * c) * x2 + f;
        d[at(copy, 0, 3)] = 0.0;
        d[at(copy, 1, 3)] = 0.0;
      } else {
        const double half = 0.5 * s.separation;
        const double z1 = -half + y[at(copy, 0, 1)], z2 = half + y[at(copy, 1, 1)];
        const double dxr = x2 - x1, dzr = z2 - z1;
        const double rho = std::sqrt(dxr * dxr + dzr * dzr);
        const double k = coulomb / (rho * rho * rho);
        const double axial = two_pi * s.kappa * two_pi * s.kappa;
        d[at(copy, 0, 2)] = -trap_scale * (s.ion[0].a - 2.0 * s.ion[0].q * c) * x1 - k * dxr;
        d[at(copy, 1, 2)] = -trap_scale * (s.ion[1].a - 2.0 * s.ion[1].q * c) * x2 + k * dxr;
        d[at(copy, 0, 3)] = -axial * z1 - k * dzr;
        d[at(copy, 1, 3)] = -axial * z2 + k * dzr;
      }
    }
  }

  void step(double tau, double h, State& y) const {
    State k1, k2, k3, k4, t;
    rhs(tau, y, k1);
    for (std::size_t n = 0; n < 16; ++n) t[n] = y[n] + 0.5 * h * k1[n];
    rhs(tau + 0.5 * h, t, k2);
    for (std::size_t n = 0; n < 16; ++n) t[n] = y[n] + 0.5 * h * k2[n];
    rhs(tau + 0.5 * h, t, k3);
    for (std::size_t n = 0; n < 16; ++n) t[n] = y[n] + h * k3[n];
    rhs(tau + h, t, k4);
    for (std::size_t n = 0; n < 16; ++n) y[n] += h / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
  }
};

struct Event {
  double time;
  int kind;  // 0 kick, 1 strobe
  int sign;
};

}  // namespace

std::array<int, 2> basis_signs(BasisState state) {
  switch (state) {
    case BasisState::up_up: return {1, 1};
    case BasisState::up_down: return {1, -1};
    case BasisState::down_up: return {-1, 1};
    case BasisState::down_down: return {-1, -1};
  }
  return {1, 1};
}

std::string basis_label(BasisState state) {
  switch (state) {
    case BasisState::up_up: return "uu";
    case BasisState::up_down: return "ud";
    case BasisState::down_up: return "du";
    case BasisState::down_down: return "dd";
  }
  return "?";
}

OracleSystem prepare_oracle(const Trap& trap, const ModeSpectrum& spectrum, const OracleOptions& options) {
  OracleSystem sys{trap, scale_trap(trap), spectrum, std::nullopt, {0.0, 0.0}, 0.0};
  const double omega = trap_secular_omega(trap);
  const double mass = trap_ion_mass(trap);
  sys.x0_over_l = std::sqrt(constants::hbar / (2.0 * mass * omega)) / sys.scaled.length_unit;
  if (const auto* m = std::get_if<MicrotrapArray>(&trap)) {
    auto crystal = find_periodic_crystal(*m, options.crystal);
    if (m->mathieu.q == 0.0) {
      sys.static_offset = {crystal.cos_theta[0][0], crystal.cos_theta[1][0]};
    } else {
      sys.crystal = std::move(crystal);
    }
  }
  return sys;
}

Trajectory integrate_trajectories(const OracleSystem& system, const KickTrain& train, BasisState basis,
                                  const OracleOptions& options) {
  const ScaledTrap& s = system.scaled;
  const Dynamics dyn(s, train.phi_rf);
  const auto signs = basis_signs(basis);
  const double eta = options.laser.lamb_dicke_eta;

  Trajectory tr;
  tr.basis = basis;
  tr.kick_scale = options.kick_scale;
  tr.kick_velocity = options.kick_scale * 8.0 * pi * eta * system.x0_over_l;

  std::vector<Event> events;
  for (const auto& k : train.kicks) events.push_back({k.time, 0, k.sign});
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
  const double start = events.empty() ? 0.0 : events.front().time;
  const double last = events.empty() ? 0.0 : events.back().time;
  const double rf_period = 0.5 * s.beta;
  // first instant at or after the last kick where the drive phase is pi
  const double origin = s.beta / (4.0 * pi) * (pi - train.phi_rf);
  double strobe0 = origin + std::ceil((last - origin) / rf_period - 1e-12) * rf_period;
  const int n_strobe = std::max(8, static_cast<int>(std::ceil(options.tail_secular_periods / rf_period)) + 1);
  for (int n = 0; n < n_strobe; ++n) events.push_back({strobe0 + n * rf_period, 1, 0});
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.kind < b.kind;  // kicks before a coincident read-out
  });

  auto theta_at = [&](double tau) { return 4.0 * pi * tau / s.beta + train.phi_rf; };
  const double dtheta = 4.0 * pi / s.beta;
  State y{};
  for (int copy = 0; copy < 2; ++copy) {
    for (int i = 0; i < 2; ++i) {
      if (system.crystal) {
        y[at(copy, i, 0)] = system.crystal->position(i, theta_at(start));
        y[at(copy, i, 2)] = system.crystal->theta_derivative(i, theta_at(start)) * dtheta;
      } else {
        y[at(copy, i, 0)] = system.static_offset[static_cast<std::size_t>(i)];
      }
    }
  }

  const double spacing = s.separation;
  auto record = [&](double tau) {
    if (!options.record) return;
    tr.times.push_back(tau);
    for (int i = 0; i < 2; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      tr.x[iu].push_back(y[at(0, i, 0)]);
      tr.v[iu].push_back(y[at(0, i, 2)]);
      tr.dx[iu].push_back(y[at(0, i, 0)] - y[at(1, i, 0)]);
      tr.dv[iu].push_back(y[at(0, i, 2)] - y[at(1, i, 2)]);
    }
  };
  auto check = [&](double tau) {
    for (std::size_t n = 0; n < 16; ++n) {
      if (!std::isfinite(y[n])) throw Error(ErrorKind::StepFailure, "non-finite state at tau = " + std::to_string(tau));
    }
    for (int i = 0; i < 2; ++i) {
      const double dev = std::max(std::abs(y[at(0, i, 0)] - y[at(1, i, 0)]), std::abs(y[at(0, i, 1)] - y[at(1, i, 1)]));
      tr.max_deviation = std::max(tr.max_deviation, dev);
      if (dev > options.escape_fraction * spacing) {
        throw Error(ErrorKind::EscapedIon, "ion " + std::to_string(i + 1) + " left the linear regime at tau = " +
                                               std::to_string(tau));
      }
    }
  };

  const double h_max = rf_period / options.steps_per_rf_period;
  double tau = start;
  record(tau);
  for (const auto& ev : events) {
    const double span = ev.time - tau;
    if (span > 0.0) {
      const int n = std::max(1, static_cast<int>(std::ceil(span / h_max - 1e-9)));
      const double h = span / n;
      for (int k = 0; k < n; ++k) {
        dyn.step(tau + k * h, h, y);
        if (options.record && k + 1 < n) record(tau + (k + 1) * h);
      }
      tau = ev.time;
      check(tau);
      record(tau);
    }
    if (ev.kind == 0) {
      for (int i = 0; i < 2; ++i) {
        tr.phase_sum += ev.sign * signs[static_cast<std::size_t>(i)] * (y[at(0, i, 0)] - y[at(1, i, 0)]);
        y[at(0, i, 2)] += ev.sign * signs[static_cast<std::size_t>(i)] * tr.kick_velocity;
      }
      if (tr.kick_times.empty() || tr.kick_times.back() != ev.time) tr.kick_times.push_back(ev.time);
    } else {
      tr.strobe_times.push_back(ev.time);
      for (int i = 0; i < 2; ++i) tr.strobe_dx[static_cast<std::size_t>(i)].push_back(y[at(0, i, 0)] - y[at(1, i, 0)]);
    }
  }
  return tr;
}

GeometricPhaseResult geometric_phase(const Trajectory& tr, const OracleSystem& system, const LaserConfig& laser) {
  GeometricPhaseResult g;
  g.basis = tr.basis;
  const auto signs = basis_signs(tr.basis);
  g.phase = 2.0 * laser.lamb_dicke_eta / system.x0_over_l * tr.phase_sum / tr.kick_scale;
  const double beta = system.scaled.beta;
  for (const auto& mode : system.spectrum.modes) {
    const double excite = std::abs(mode.coupling[0] * signs[0] + mode.coupling[1] * signs[1]);
    g.excitation.push_back(excite);
    if (excite < 1e-9) {
      g.displacement.push_back(std::nan(""));
      continue;
    }
    const double w = pi * beta * mode.frequency_ratio;
    double scc = 0, sss = 0, scs = 0, syc = 0, sys = 0;
    for (std::size_t n = 0; n < tr.strobe_times.size(); ++n) {
      const double yv = mode.coupling[0] * tr.strobe_dx[0][n] + mode.coupling[1] * tr.strobe_dx[1][n];
      const double c = std::cos(w * n), sn = std::sin(w * n);
      scc += c * c;
      sss += sn * sn;
      scs += c * sn;
      syc += yv * c;
      sys += yv * sn;
    }
    const double det = scc * sss - scs * scs;
    const double a = (syc * sss - sys * scs) / det;
    const double b = (sys * scc - syc * scs) / det;
    const double r = mode.frequency_ratio;
    const double kick = tr.kick_velocity == 0.0 ? 1.0 : tr.kick_velocity;
    g.displacement.push_back(2.0 * std::sqrt(1.0 / r) * two_pi * r * std::hypot(a, b) / (excite * kick));
  }
  return g;
}

FidelityReport oracle_infidelity(const std::array<GeometricPhaseResult, 4>& results, const ThermalState& thermal,
                                 const ModeSpectrum& spectrum, GateErrors* errors_out) {
  double phases[4] = {0, 0, 0, 0};
  for (const auto& r : results) phases[static_cast<int>(r.basis)] = r.phase;
  const double ent = 0.25 * (phases[static_cast<int>(BasisState::up_up)] + phases[static_cast<int>(BasisState::down_down)] -
                             phases[static_cast<int>(BasisState::up_down)] -
                             phases[static_cast<int>(BasisState::down_up)]);
  GateErrors e;
  e.raw_phase = ent;
  e.phase_error = std::abs(ent) - pi / 4.0;
  e.sign_matches = ent > 0.0;
  for (std::size_t p = 0; p < spectrum.modes.size(); ++p) {
    double best_excite = -1.0, dp = 0.0;
    for (const auto& r : results) {
      if (p < r.excitation.size() && r.excitation[p] > best_excite + 1e-12) {
        best_excite = r.excitation[p];
        dp = r.displacement[p];
      }
    }
    e.mode_displacements.push_back(dp);
  }
  auto report = infidelity(e, thermal, spectrum);
  report.source = FidelitySource::oracle;
  if (errors_out) *errors_out = e;
  return report;
}

OracleResult run_oracle(const OracleSystem& system, const KickTrain& train, const ThermalState& thermal,
                        const OracleOptions& options, int threads) {
  OracleResult out;
  const BasisState states[4] = {BasisState::up_up, BasisState::up_down, BasisState::down_up, BasisState::down_down};
  OracleOptions quiet = options;
  quiet.record = false;
  auto work = [&](int k) {
    const auto tr = integrate_trajectories(system, train, states[k], quiet);
    out.basis[static_cast<std::size_t>(k)] = geometric_phase(tr, system, options.laser);
  };
  if (threads <= 1) {
    for (int k = 0; k < 4; ++k) work(k);
  } else {
    std::exception_ptr failure;
    std::mutex guard;
    std::vector<std::thread> pool;
    for (int k = 0; k < 4; ++k) {
      pool.emplace_back([&, k] {
        try {
          work(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  out.report = oracle_infidelity(out.basis, thermal, system.spectrum, &out.errors);
  for (auto& b : out.basis) b.oracle_infidelity = out.report.infidelity;
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const OracleSystem& system) {
  const auto& modes = system.spectrum.modes;
  out << "time,x1,v1,x2,v2";
  for (const auto& m : modes) out << ",mode_" << m.label << ",mode_" << m.label << "_avg";
  out << '\n';
  const std::size_t n = tr.times.size();
  // boxcar over one RF period, centred, on the recorded grid
  const double window = 0.5 * system.scaled.beta;
  std::vector<std::vector<double>> proj(modes.size(), std::vector<double>(n));
  for (std::size_t p = 0; p < modes.size(); ++p) {
    for (std::size_t k = 0; k < n; ++k) proj[p][k] = modes[p].coupling[0] * tr.dx[0][k] + modes[p].coupling[1] * tr.dx[1][k];
  }
  std::size_t lo = 0, hi = 0;
  std::vector<double> sums(modes.size(), 0.0);
  const auto old_flags = out.flags();
  const auto old_prec = out.precision();
  out.precision(17);
  for (std::size_t k = 0; k < n; ++k) {
    while (hi < n && tr.times[hi] <= tr.times[k] + 0.5 * window) {
      for (std::size_t p = 0; p < modes.size(); ++p) sums[p] += proj[p][hi];
      ++hi;
    }
    while (lo < hi && tr.times[lo] < tr.times[k] - 0.5 * window) {
      for (std::size_t p = 0; p < modes.size(); ++p) sums[p] -= proj[p][lo];
      ++lo;
    }
    out << tr.times[k] << ',' << tr.x[0][k] << ',' << tr.v[0][k] << ',' << tr.x[1][k] << ',' << tr.v[1][k];
    for (std::size_t p = 0; p < modes.size(); ++p) out << ',' << proj[p][k] << ',' << sums[p] / double(hi - lo);
    out << '\n';
  }
  out.flags(old_flags);
  out.precision(old_prec);
}

double static_energy(const OracleSystem& system, const std::array<double, 2>& x, const std::array<double, 2>& v) {
  const ScaledTrap& s = system.scaled;
  if (s.paul) throw Error(ErrorKind::ConfigError, "static energy is defined for microtrap arrays only");
  if (s.ion[0].q != 0.0 || s.ion[1].q != 0.0) throw Error(ErrorKind::ConfigError, "energy is not conserved with an RF drive");
  const double k = (two_pi / s.beta) * (two_pi / s.beta);
  const double r = s.separation + x[1] - x[0];
  return 0.5 * (v[0] * v[0] + v[1] * v[1]) + 0.5 * k * (s.ion[0].a * x[0] * x[0] + s.ion[1].a * x[1] * x[1]) +
         two_pi * two_pi * s.coulomb / r;
}

}  // namespace fastgate
