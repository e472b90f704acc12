#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "fastgate/mathieu.hpp"

namespace fastgate {

/// Two ions, one per microtrap, separated by d along the gate axis which is
/// also the RF-driven axis.
struct MicrotrapArray {
  double separation_d = 0.0;          // m
  double secular_omega = 0.0;         // rad/s, single-trap (= COM) frequency
  MathieuParams mathieu;
  double rf_angular_frequency = 0.0;  // rad/s
  double ion_mass = 0.0;              // kg
  int charge_number = 1;
  int ion_count = 2;
  /// Fractional secular-frequency offset of the second trap (stray fields).
  double second_trap_offset = 0.0;
};

/// Two ions in a common linear Paul trap, gate on a radial axis.
struct PaulTrap {
  MathieuParams mathieu_radial;
  double axial_a = 0.0;
  double kappa = 0.0;                 // omega_axial / omega_radial
  double rf_angular_frequency = 0.0;  // rad/s
  double secular_omega = 0.0;         // radial COM frequency, rad/s
  double ion_mass = 0.0;
  int charge_number = 1;
  int ion_count = 2;
};

using Trap = std::variant<MicrotrapArray, PaulTrap>;

/// Builds a consistent microtrap description: omega_RF = 2 omega / beta.
MicrotrapArray make_microtrap(double separation_d, double secular_omega, const MathieuParams& params,
                              double ion_mass, int charge_number = 1);
PaulTrap make_paul_trap(double radial_secular_omega, const MathieuParams& params, double kappa,
                        double ion_mass, int charge_number = 1);

const MathieuParams& trap_mathieu(const Trap& trap);
double trap_secular_omega(const Trap& trap);
double trap_ion_mass(const Trap& trap);
/// COM characteristic exponent of the trap's Mathieu parameters.
double trap_beta(const Trap& trap);

/// Internal dimensionless form. Lengths in units of (alpha / omega^2)^(1/3),
/// time in secular periods tau = omega t / 2 pi, RF phase theta = 4 pi tau / beta + phi.
struct ScaledTrap {
  bool paul = false;
  double beta = 0.0;                   // COM exponent, defines the RF period beta / 2
  std::array<MathieuParams, 2> ion{};  // per-ion drive along the gate axis
  std::array<double, 2> ion_beta{};    // per-ion exponents
  double separation = 0.0;             // microtrap: d; Paul: axial equilibrium spacing
  double kappa = 0.0;                  // Paul axial/radial ratio
  double length_unit = 0.0;            // m
  double coulomb = 1.0;                // 0 switches the interaction off
};

ScaledTrap scale_trap(const Trap& trap, bool coulomb = true);

struct EquilibriumOptions {
  bool coulomb = true;
  int max_iterations = 100;
};

/// Static equilibrium positions along the ion-ion axis (m), from the secular
/// (time-averaged) force balance.
std::vector<double> equilibrium_positions(const Trap& trap, const EquilibriumOptions& options = {});

/// RF-periodic motion of the two microtrap ions with no secular excitation.
/// Coefficients are stored against the RF phase theta; ion displacements are
/// measured from each ion's own trap centre.
struct PeriodicCrystal {
  int harmonics = 0;
  double length_unit = 0.0;                          // m
  std::array<std::vector<double>, 2> cos_theta{};    // units of length_unit
  std::array<std::vector<double>, 2> sin_theta{};
  int iterations = 0;
  double last_change = 0.0;

  /// Displacement (length units) and its derivative w.r.t. theta.
  double position(int ion, double theta) const;
  double theta_derivative(int ion, double theta) const;
  double theta_second_derivative(int ion, double theta) const;

  /// Coefficients u_{j,i}, w_{j,i} (m) of the expansion in tau for a drive whose
  /// phase at tau = 0 is rf_phase.
  double u(int ion, int j, double rf_phase = 0.0) const;
  double w(int ion, int j, double rf_phase = 0.0) const;
};

struct CrystalOptions {
  int harmonics = 8;
  int steps_per_rf_period = 800;
  double window_secular_periods = 4.0;
  double damping = 0.5;
  int max_iterations = 200;
  // relative to the trap separation; 1e-10 already counts as converged but leaves
  // an ODE residual of ~1e-5 of the Coulomb force at q = 0.5
  double tolerance = 1e-14;
  bool coulomb = true;
};

PeriodicCrystal find_periodic_crystal(const MicrotrapArray& trap, const CrystalOptions& options = {});

/// Largest ODE residual of the crystal over one RF period relative to the peak force.
double crystal_residual(const PeriodicCrystal& crystal, const MicrotrapArray& trap, int samples = 2000);

/// Coulomb contributions to the Hill coefficients, index j = 0..j_max, in the
/// Mathieu normalisation  y'' + (a + h_0 - 2 q cos 2s + sum_j h_j cos 2js) y = 0.
struct HillCoefficients {
  std::vector<double> com;
  std::vector<double> breathing;
};

HillCoefficients hill_coefficients(const PeriodicCrystal& crystal, const MicrotrapArray& trap, int j_max,
                                   int quadrature_points = 10000);

struct Mode {
  std::string label;
  double frequency_ratio = 1.0;    // omega_p / omega
  double angular_frequency = 0.0;  // rad/s
  std::array<double, 2> coupling{};
  MathieuParams mathieu;
  double beta = 0.0;
};

struct ModeSpectrum {
  double secular_omega = 0.0;
  std::vector<Mode> modes;
  /// max |h_j| for j >= 2 relative to |h_1| (microtraps), dropped by the Mathieu reduction
  double hill_truncation = 0.0;

  double chi() const { return modes.size() > 1 ? modes[1].frequency_ratio - 1.0 : 0.0; }
};

struct SpectrumOptions {
  bool coulomb = true;
  CrystalOptions crystal;
};

ModeSpectrum mode_spectrum(const Trap& trap, const SpectrumOptions& options = {});

/// Micromotion-free two-ion spectrum with the given chi.
ModeSpectrum harmonic_spectrum(double chi, double secular_omega = 1.0);

/// Same as `base` but with the breathing/rocking splitting rescaled so that chi -> chi (1 + fraction).
ModeSpectrum perturb_chi(const ModeSpectrum& base, double fraction);

/// Secular modes of two traps whose frequencies differ by the fractional
/// offset; the coupling strength is taken from `base` so offset 0 returns it.
ModeSpectrum offset_spectrum(const ModeSpectrum& base, double second_trap_offset);

struct ChiParam {
  double chi = 0.0;
  double xi = 0.0;  // microtraps only, 0 otherwise
};

double xi_param(double separation_d, double omega, double ion_mass, int charge_number = 1);
ChiParam chi_microtrap(double xi);
ChiParam chi_paul(double kappa);

}  // namespace fastgate
