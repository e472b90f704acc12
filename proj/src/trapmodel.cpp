#include "fastgate/trapmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"

namespace fastgate {

namespace {

using constants::pi;
using constants::two_pi;

constexpr double inv_sqrt2 = 0.70710678118654752440;

double length_unit(double omega, double mass, int charge) {
  return std::cbrt(coulomb_alpha(mass, charge) / (omega * omega));
}

// u (delta + 2u)^2 = 1 style balance for two microtraps, solved as a 2D Newton
// problem so unequal traps are covered:  b_i^2 x_i = s_i b^2 / r^2,  r = delta + x2 - x1.
std::array<double, 2> static_microtrap(const ScaledTrap& s, int max_iterations) {
  std::array<double, 2> x{0.0, 0.0};
  if (s.coulomb == 0.0) return x;
  const double c = s.coulomb * s.beta * s.beta;
  const double k1 = s.ion_beta[0] * s.ion_beta[0];
  const double k2 = s.ion_beta[1] * s.ion_beta[1];
  for (int it = 0; it < max_iterations; ++it) {
    const double r = s.separation + x[1] - x[0];
    if (!(r > 0.0)) throw Error(ErrorKind::NoConvergence, "ions collapsed during equilibrium solve");
    const double f = c / (r * r);
    const double df = -2.0 * c / (r * r * r);  // d f / d r
    // residuals g1 = k1 x1 + f, g2 = k2 x2 - f
    const double g1 = k1 * x[0] + f;
    const double g2 = k2 * x[1] - f;
    // Jacobian: dr/dx1 = -1, dr/dx2 = +1
    const double j11 = k1 - df, j12 = df;
    const double j21 = df, j22 = k2 - df;
    const double det = j11 * j22 - j12 * j21;
    const double d1 = (g1 * j22 - g2 * j12) / det;
    const double d2 = (j11 * g2 - j21 * g1) / det;
    x[0] -= d1;
    x[1] -= d2;
    if (std::abs(d1) + std::abs(d2) <= 1e-15 * (std::abs(x[0]) + std::abs(x[1]))) return x;
  }
  throw Error(ErrorKind::NoConvergence, "static equilibrium did not converge");
}

double paul_half_spacing(double kappa, int max_iterations) {
  // 4 kappa^2 z^3 = 1
  double z = std::cbrt(1.0 / (4.0 * kappa * kappa)) * 1.1;
  for (int it = 0; it < max_iterations; ++it) {
    const double g = 4.0 * kappa * kappa * z * z * z - 1.0;
    const double dz = g / (12.0 * kappa * kappa * z * z);
    z -= dz;
    if (std::abs(dz) <= 1e-16 * z) return z;
  }
  throw Error(ErrorKind::NoConvergence, "axial equilibrium did not converge");
}

Mode make_mode(std::string label, const MathieuParams& p, double com_beta, double omega,
               std::array<double, 2> coupling) {
  Mode m;
  m.label = std::move(label);
  m.mathieu = p;
  m.beta = characteristic_exponent(p);
  m.frequency_ratio = m.beta / com_beta;
  m.angular_frequency = m.frequency_ratio * omega;
  m.coupling = coupling;
  return m;
}

}  // namespace

MicrotrapArray make_microtrap(double separation_d, double secular_omega, const MathieuParams& params,
                              double ion_mass, int charge_number) {
  if (!(separation_d > 0.0)) throw Error(ErrorKind::ConfigError, "trap separation must be positive");
  MicrotrapArray t;
  t.separation_d = separation_d;
  t.secular_omega = secular_omega;
  t.mathieu = params;
  t.ion_mass = ion_mass;
  t.charge_number = charge_number;
  t.rf_angular_frequency = 2.0 * secular_omega / characteristic_exponent(params);
  return t;
}

PaulTrap make_paul_trap(double radial_secular_omega, const MathieuParams& params, double kappa,
                        double ion_mass, int charge_number) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error(ErrorKind::ConfigError, "kappa must lie in (0, 1)");
  PaulTrap t;
  t.mathieu_radial = params;
  t.kappa = kappa;
  t.secular_omega = radial_secular_omega;
  t.ion_mass = ion_mass;
  t.charge_number = charge_number;
  const double beta = characteristic_exponent(params);
  t.rf_angular_frequency = 2.0 * radial_secular_omega / beta;
  // static axial confinement with no RF along z
  t.axial_a = (kappa * beta) * (kappa * beta);
  return t;
}

const MathieuParams& trap_mathieu(const Trap& trap) {
  if (const auto* m = std::get_if<MicrotrapArray>(&trap)) return m->mathieu;
  return std::get<PaulTrap>(trap).mathieu_radial;
}

double trap_secular_omega(const Trap& trap) {
  return std::visit([](const auto& t) { return t.secular_omega; }, trap);
}

double trap_ion_mass(const Trap& trap) {
  return std::visit([](const auto& t) { return t.ion_mass; }, trap);
}

double trap_beta(const Trap& trap) { return characteristic_exponent(trap_mathieu(trap)); }

ScaledTrap scale_trap(const Trap& trap, bool coulomb) {
  ScaledTrap s;
  s.coulomb = coulomb ? 1.0 : 0.0;
  if (const auto* m = std::get_if<MicrotrapArray>(&trap)) {
    s.beta = characteristic_exponent(m->mathieu);
    s.length_unit = length_unit(m->secular_omega, m->ion_mass, m->charge_number);
    s.separation = m->separation_d / s.length_unit;
    s.ion = {m->mathieu, m->mathieu};
    s.ion_beta = {s.beta, s.beta};
    if (m->second_trap_offset != 0.0) {
      s.ion_beta[1] = s.beta * (1.0 + m->second_trap_offset);
      s.ion[1] = {find_a_for_beta(m->mathieu.q, s.ion_beta[1]), m->mathieu.q};
    }
  } else {
    const auto& p = std::get<PaulTrap>(trap);
    s.paul = true;
    s.beta = characteristic_exponent(p.mathieu_radial);
    s.length_unit = length_unit(p.secular_omega, p.ion_mass, p.charge_number);
    s.kappa = p.kappa;
    s.separation = 2.0 * paul_half_spacing(p.kappa, 100);
    s.ion = {p.mathieu_radial, p.mathieu_radial};
    s.ion_beta = {s.beta, s.beta};
  }
  return s;
}

std::vector<double> equilibrium_positions(const Trap& trap, const EquilibriumOptions& options) {
  const ScaledTrap s = scale_trap(trap, options.coulomb);
  if (s.paul) {
    const double z = paul_half_spacing(s.kappa, options.max_iterations) * s.length_unit;
    return {-z, z};
  }
  const auto x = static_microtrap(s, options.max_iterations);
  const double half = 0.5 * s.separation;
  return {(-half + x[0]) * s.length_unit, (half + x[1]) * s.length_unit};
}

double PeriodicCrystal::position(int ion, double theta) const {
  const auto& c = cos_theta[static_cast<std::size_t>(ion)];
  const auto& s = sin_theta[static_cast<std::size_t>(ion)];
  double x = c[0];
  for (int j = 1; j <= harmonics; ++j) x += c[j] * std::cos(j * theta) + s[j] * std::sin(j * theta);
  return x;
}

double PeriodicCrystal::theta_derivative(int ion, double theta) const {
  const auto& c = cos_theta[static_cast<std::size_t>(ion)];
  const auto& s = sin_theta[static_cast<std::size_t>(ion)];
  double v = 0.0;
  for (int j = 1; j <= harmonics; ++j) v += j * (-c[j] * std::sin(j * theta) + s[j] * std::cos(j * theta));
  return v;
}

double PeriodicCrystal::theta_second_derivative(int ion, double theta) const {
  const auto& c = cos_theta[static_cast<std::size_t>(ion)];
  const auto& s = sin_theta[static_cast<std::size_t>(ion)];
  double v = 0.0;
  for (int j = 1; j <= harmonics; ++j) {
    v -= double(j) * j * (c[j] * std::cos(j * theta) + s[j] * std::sin(j * theta));
  }
  return v;
}

double PeriodicCrystal::u(int ion, int j, double rf_phase) const {
  const auto i = static_cast<std::size_t>(ion);
  return (cos_theta[i][j] * std::cos(j * rf_phase) + sin_theta[i][j] * std::sin(j * rf_phase)) * length_unit;
}

double PeriodicCrystal::w(int ion, int j, double rf_phase) const {
  const auto i = static_cast<std::size_t>(ion);
  return (-cos_theta[i][j] * std::sin(j * rf_phase) + sin_theta[i][j] * std::cos(j * rf_phase)) * length_unit;
}

PeriodicCrystal find_periodic_crystal(const MicrotrapArray& trap, const CrystalOptions& options) {
  const ScaledTrap s = scale_trap(Trap{trap}, options.coulomb);
  const int nj = options.harmonics;
  PeriodicCrystal out;
  out.harmonics = nj;
  out.length_unit = s.length_unit;
  const auto x_static = static_microtrap(s, 100);
  for (std::size_t i = 0; i < 2; ++i) {
    out.cos_theta[i].assign(static_cast<std::size_t>(nj) + 1, 0.0);
    out.sin_theta[i].assign(static_cast<std::size_t>(nj) + 1, 0.0);
    out.cos_theta[i][0] = x_static[i];
  }
  if (trap.mathieu.q == 0.0) return out;

  const int m = options.steps_per_rf_period;
  // secular period = 2 / beta RF periods
  const int periods = std::max(1, static_cast<int>(std::lround(options.window_secular_periods * 2.0 / s.beta)));
  const double h = two_pi / m;
  std::vector<double> cos_full(static_cast<std::size_t>(m)), cos_half(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    cos_full[static_cast<std::size_t>(k)] = std::cos(k * h);
    cos_half[static_cast<std::size_t>(k)] = std::cos((k + 0.5) * h);
  }
  const double kc = 0.25 * s.coulomb * s.beta * s.beta;
  const std::array<double, 2> sign{-1.0, 1.0};
  auto accel = [&](double c, const std::array<double, 4>& y, std::array<double, 4>& dy) {
    const double r = s.separation + y[2] - y[0];
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::ResonantCrystal, "ions escaped during crystal iteration");
    const double f = kc / (r * r);
    dy[0] = y[1];
    dy[1] = -0.25 * (s.ion[0].a - 2.0 * s.ion[0].q * c) * y[0] + sign[0] * f;
    dy[2] = y[3];
    dy[3] = -0.25 * (s.ion[1].a - 2.0 * s.ion[1].q * c) * y[2] + sign[1] * f;
  };

  std::vector<double> history;
  std::array<std::vector<double>, 2> avg;
  for (auto& a : avg) a.resize(static_cast<std::size_t>(m));
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::array<double, 4> y{out.position(0, 0.0), out.theta_derivative(0, 0.0), out.position(1, 0.0),
                            out.theta_derivative(1, 0.0)};
    for (auto& a : avg) std::fill(a.begin(), a.end(), 0.0);
    std::array<double, 4> k1, k2, k3, k4, tmp;
    for (int p = 0; p < periods; ++p) {
      for (int k = 0; k < m; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        avg[0][ku] += y[0];
        avg[1][ku] += y[2];
        const double c1 = cos_full[ku];
        const double cm = cos_half[ku];
        const double c2 = (k + 1 < m) ? cos_full[ku + 1] : 1.0;
        accel(c1, y, k1);
        for (int n = 0; n < 4; ++n) tmp[n] = y[n] + 0.5 * h * k1[n];
        accel(cm, tmp, k2);
        for (int n = 0; n < 4; ++n) tmp[n] = y[n] + 0.5 * h * k2[n];
        accel(cm, tmp, k3);
        for (int n = 0; n < 4; ++n) tmp[n] = y[n] + h * k3[n];
        accel(c2, tmp, k4);
        for (int n = 0; n < 4; ++n) y[n] += h / 6.0 * (k1[n] + 2 * k2[n] + 2 * k3[n] + k4[n]);
      }
    }
    double change = 0.0;
    std::array<std::vector<double>, 2> ec, es;
    for (std::size_t i = 0; i < 2; ++i) {
      ec[i].assign(static_cast<std::size_t>(nj) + 1, 0.0);
      es[i].assign(static_cast<std::size_t>(nj) + 1, 0.0);
      for (int k = 0; k < m; ++k) {
        const double v = avg[i][static_cast<std::size_t>(k)] / periods;
        for (int j = 0; j <= nj; ++j) {
          ec[i][j] += v * std::cos(j * k * h);
          es[i][j] += v * std::sin(j * k * h);
        }
      }
      ec[i][0] /= m;
      for (int j = 1; j <= nj; ++j) {
        ec[i][j] *= 2.0 / m;
        es[i][j] *= 2.0 / m;
      }
      for (int j = 0; j <= nj; ++j) {
        change = std::max(change, std::abs(ec[i][j] - out.cos_theta[i][j]));
        change = std::max(change, std::abs(es[i][j] - out.sin_theta[i][j]));
      }
    }
    out.iterations = it;
    out.last_change = change;
    if (change < options.tolerance * s.separation) {
      out.cos_theta = ec;
      out.sin_theta = es;
      return out;
    }
    for (std::size_t i = 0; i < 2; ++i) {
      for (int j = 0; j <= nj; ++j) {
        out.cos_theta[i][j] += options.damping * (ec[i][j] - out.cos_theta[i][j]);
        out.sin_theta[i][j] += options.damping * (es[i][j] - out.sin_theta[i][j]);
      }
    }
    history.push_back(change);
    const std::size_t n = history.size();
    if (n > 60 && change > 0.95 * history[n - 31]) {
      throw Error(ErrorKind::ResonantCrystal,
                  "crystal iteration stalled, change " + std::to_string(change) + " after " +
                      std::to_string(it) + " iterations");
    }
  }
  throw Error(ErrorKind::NoConvergence, "crystal iteration hit the cap of " +
                                            std::to_string(options.max_iterations) + " iterations");
}

double crystal_residual(const PeriodicCrystal& crystal, const MicrotrapArray& trap, int samples) {
  const ScaledTrap s = scale_trap(Trap{trap});
  const double kc = 0.25 * s.beta * s.beta;
  double worst = 0.0, peak = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double th = two_pi * k / samples;
    const double x1 = crystal.position(0, th), x2 = crystal.position(1, th);
    const double r = s.separation + x2 - x1;
    const double f = kc / (r * r);
    peak = std::max(peak, f);
    const double res1 = crystal.theta_second_derivative(0, th) +
                        0.25 * (s.ion[0].a - 2.0 * s.ion[0].q * std::cos(th)) * x1 + f;
    const double res2 = crystal.theta_second_derivative(1, th) +
                        0.25 * (s.ion[1].a - 2.0 * s.ion[1].q * std::cos(th)) * x2 - f;
    worst = std::max({worst, std::abs(res1), std::abs(res2)});
  }
  return worst / peak;
}

HillCoefficients hill_coefficients(const PeriodicCrystal& crystal, const MicrotrapArray& trap, int j_max,
                                   int quadrature_points) {
  const ScaledTrap s = scale_trap(Trap{trap});
  const double b2 = s.beta * s.beta;
  HillCoefficients h;
  h.com.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
  h.breathing.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
  std::vector<double> inv_r3(static_cast<std::size_t>(quadrature_points));
  for (int k = 0; k < quadrature_points; ++k) {
    const double th = two_pi * k / quadrature_points;
    const double r = s.separation + crystal.position(1, th) - crystal.position(0, th);
    const double v = 1.0 / (r * r * r);
    if (!(r > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::QuadratureFailure, "crystal spacing not positive");
    inv_r3[static_cast<std::size_t>(k)] = v;
  }
  // periodic trapezoid rule
  for (int j = 0; j <= j_max; ++j) {
    double acc = 0.0;
    for (int k = 0; k < quadrature_points; ++k) {
      acc += inv_r3[static_cast<std::size_t>(k)] * std::cos(two_pi * j * k / quadrature_points);
    }
    acc /= quadrature_points;
    h.breathing[static_cast<std::size_t>(j)] = (j == 0 ? 4.0 : 8.0) * b2 * acc;
  }
  if (trap.mathieu.q == 0.0) {
    for (int j = 1; j <= j_max; ++j) h.breathing[static_cast<std::size_t>(j)] = 0.0;
  }
  return h;
}

ModeSpectrum mode_spectrum(const Trap& trap, const SpectrumOptions& options) {
  ModeSpectrum spec;
  spec.secular_omega = trap_secular_omega(trap);
  const MathieuParams& p = trap_mathieu(trap);
  const double beta = characteristic_exponent(p);
  const std::array<double, 2> b_com{inv_sqrt2, inv_sqrt2};
  const std::array<double, 2> b_rel{inv_sqrt2, -inv_sqrt2};
  spec.modes.push_back(make_mode("COM", p, beta, spec.secular_omega, b_com));

  if (const auto* paul = std::get_if<PaulTrap>(&trap)) {
    const double k = options.coulomb ? paul->kappa : 0.0;
    const MathieuParams rock{p.a - beta * beta * k * k, p.q};
    spec.modes.push_back(make_mode("rocking", rock, beta, spec.secular_omega, b_rel));
    return spec;
  }

  auto sym = std::get<MicrotrapArray>(trap);
  const double offset = sym.second_trap_offset;
  sym.second_trap_offset = 0.0;
  MathieuParams br = p;
  if (options.coulomb) {
    CrystalOptions copt = options.crystal;
    copt.coulomb = true;
    const auto crystal = find_periodic_crystal(sym, copt);
    const auto h = hill_coefficients(crystal, sym, 4);
    br = {p.a + h.breathing[0], p.q - 0.5 * h.breathing[1]};
    if (h.breathing[1] != 0.0) {
      double worst = 0.0;
      for (std::size_t j = 2; j < h.breathing.size(); ++j) worst = std::max(worst, std::abs(h.breathing[j]));
      spec.hill_truncation = worst / std::abs(h.breathing[1]);
    }
  }
  spec.modes.push_back(make_mode("breathing", br, beta, spec.secular_omega, b_rel));
  if (offset != 0.0) return offset_spectrum(spec, offset);
  return spec;
}

ModeSpectrum harmonic_spectrum(double chi, double secular_omega) {
  // no RF: a nominal exponent keeps the Mathieu fields consistent (q = 0, beta = sqrt(a))
  constexpr double nominal_beta = 0.25;
  ModeSpectrum spec;
  spec.secular_omega = secular_omega;
  Mode com;
  com.label = "COM";
  com.coupling = {inv_sqrt2, inv_sqrt2};
  com.beta = nominal_beta;
  com.mathieu = {nominal_beta * nominal_beta, 0.0};
  com.angular_frequency = secular_omega;
  Mode rel = com;
  rel.label = "relative";
  rel.coupling = {inv_sqrt2, -inv_sqrt2};
  rel.frequency_ratio = 1.0 + chi;
  rel.beta = nominal_beta * rel.frequency_ratio;
  rel.mathieu = {rel.beta * rel.beta, 0.0};
  rel.angular_frequency = rel.frequency_ratio * secular_omega;
  spec.modes = {com, rel};
  return spec;
}

namespace {

void set_ratio(Mode& mode, double com_beta, double secular_omega, double ratio) {
  const double new_beta = ratio * com_beta;
  mode.mathieu.a += new_beta * new_beta - mode.beta * mode.beta;
  mode.beta = new_beta;
  mode.frequency_ratio = ratio;
  mode.angular_frequency = ratio * secular_omega;
}

}  // namespace

ModeSpectrum perturb_chi(const ModeSpectrum& base, double fraction) {
  if (fraction == 0.0 || base.modes.size() < 2) return base;
  ModeSpectrum out = base;
  const double com_beta = base.modes[0].beta / base.modes[0].frequency_ratio;
  set_ratio(out.modes[1], com_beta, base.secular_omega, 1.0 + base.chi() * (1.0 + fraction));
  return out;
}

ModeSpectrum offset_spectrum(const ModeSpectrum& base, double second_trap_offset) {
  if (second_trap_offset == 0.0 || base.modes.size() < 2) return base;
  // K = diag(r_COM^2, r_COM^2 (1 + eps)^2) + c [[1, -1], [-1, 1]] in units of omega^2
  const double r0 = base.modes[0].frequency_ratio;
  const double r1 = base.modes[1].frequency_ratio;
  const double c = 0.5 * (r1 * r1 - r0 * r0);
  const double k11 = r0 * r0 + c;
  const double k22 = r0 * r0 * (1.0 + second_trap_offset) * (1.0 + second_trap_offset) + c;
  const double k12 = -c;
  const double mean = 0.5 * (k11 + k22);
  const double rad = std::hypot(0.5 * (k11 - k22), k12);
  const std::array<double, 2> lam{mean - rad, mean + rad};
  ModeSpectrum out = base;
  const double com_beta = base.modes[0].beta / r0;
  std::array<std::array<double, 2>, 2> vecs;
  for (int n = 0; n < 2; ++n) {
    // (K - lam) v = 0, pick the better-conditioned row
    double vx, vy;
    if (std::abs(k11 - lam[n]) + std::abs(k12) >= std::abs(k22 - lam[n]) + std::abs(k12)) {
      vx = -k12;
      vy = k11 - lam[n];
    } else {
      vx = k22 - lam[n];
      vy = -k12;
    }
    const double norm = std::hypot(vx, vy);
    vecs[n] = {vx / norm, vy / norm};
  }
  // assign the eigenvector with larger (1,1) overlap to the COM slot
  const auto overlap = [](const std::array<double, 2>& v) { return std::abs(v[0] + v[1]); };
  const int com_idx = overlap(vecs[0]) >= overlap(vecs[1]) ? 0 : 1;
  for (int slot = 0; slot < 2; ++slot) {
    const int n = slot == 0 ? com_idx : 1 - com_idx;
    auto v = vecs[n];
    if (v[0] < 0.0) v = {-v[0], -v[1]};
    out.modes[slot].coupling = v;
    set_ratio(out.modes[slot], com_beta, base.secular_omega, std::sqrt(lam[n]));
  }
  return out;
}

double xi_param(double separation_d, double omega, double ion_mass, int charge_number) {
  return separation_d * separation_d * separation_d * omega * omega / coulomb_alpha(ion_mass, charge_number);
}

ChiParam chi_microtrap(double xi) {
  // chi = sqrt((9 - b g^(1/3) + b g^(2/3)) / 3) - 1 with
  // g = 1 + 3 (9 + sqrt3 sqrt(27 + 2 xi)) / xi,  b = 9 - sqrt3 sqrt(27 + 2 xi).
  // Written as sqrt(1 + t) - 1, t = (6 + b g^(1/3) (g^(1/3) - 1)) / 3, to survive large xi.
  const double root = std::sqrt(3.0) * std::sqrt(27.0 + 2.0 * xi);
  const double eps = 3.0 * (9.0 + root) / xi;
  const double b = 9.0 - root;
  const double cube_m1 = std::expm1(std::log1p(eps) / 3.0);
  const double t = (6.0 + b * (1.0 + cube_m1) * cube_m1) / 3.0;
  return {t / (std::sqrt(1.0 + t) + 1.0), xi};
}

ChiParam chi_paul(double kappa) { return {std::sqrt(1.0 - kappa * kappa) - 1.0, 0.0}; }

}  // namespace fastgate
