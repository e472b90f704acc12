#pragma once

#include <array>
#include <complex>
#include <vector>

namespace fastgate {

/// Dimensionless Mathieu parameters of  y'' + (a - 2 q cos 2s) y = 0.
/// q is kept non-negative; a negative drive amplitude is folded into the RF
/// phase (see folded_rf_phase).
struct MathieuParams {
  double a = 0.0;
  double q = 0.0;
};

/// Raw electrode description of a single trap axis.
struct TrapDrive {
  int charge_number = 1;
  double static_voltage_term = 0.0;   // U * alpha   [V m^-2]
  double dynamic_voltage_term = 0.0;  // U~ * alpha' [V m^-2]
  double ion_mass = 0.0;              // kg
  double rf_angular_frequency = 0.0;  // rad/s
  double rf_phase = 0.0;              // rad
};

struct FloquetSolution {
  double beta = 0.0;
  int truncation_order = 0;           // J
  std::vector<double> coefficients;   // C_{-J} .. C_{J}, C_0 = 1

  double coefficient(int j) const;
  /// F(theta) = sum_j C_j exp(i j theta), the micromotion envelope at RF phase theta.
  std::complex<double> envelope(double rf_phase) const;
  /// Same Wronskian-type constant for every RF phase; equals rho / (4 pi).
  double wronskian() const;
};

struct MicromotionSums {
  double sigma_c = 0.0;
  double sigma_s = 0.0;
  double zeta_c = 0.0;
  double zeta_s = 0.0;
  double rho = 0.0;
  double phi_rf = 0.0;
};

using Monodromy = std::array<double, 4>;  // row-major 2x2 over one drive period

struct MathieuOptions {
  int steps_per_period = 10000;  // drive period resolution of the monodromy integration
  double stability_tolerance = 1e-9;
};

/// Monodromy matrix of the Mathieu equation over one drive period (s in [0, pi]).
Monodromy monodromy(const MathieuParams& params, int steps_per_period = 10000);

/// Characteristic exponent in the first stability region, 0 < beta < 1.
/// Throws Error(Unstable) otherwise.
double characteristic_exponent(const MathieuParams& params, const MathieuOptions& options = {});

bool stability(const MathieuParams& params, const MathieuOptions& options = {});

MathieuParams params_from_drive(const TrapDrive& drive);

/// RF phase after folding the sign of the raw drive amplitude into it.
double folded_rf_phase(const TrapDrive& drive);

/// Two-sided continued-fraction solution of C_{j+1} - D_j C_j + C_{j-1} = 0
/// with decaying boundary conditions beyond +-J and C_0 = 1.
FloquetSolution fourier_coefficients(const MathieuParams& params, double beta, int order);

/// beta plus coefficients, raising the truncation order from 5 to 8 if needed.
FloquetSolution floquet_solution(const MathieuParams& params, const MathieuOptions& options = {});

MicromotionSums micromotion_sums(const FloquetSolution& solution, double phi_rf);

/// Residual of the coefficient recurrence at index j (interior indices only).
double recurrence_residual(const FloquetSolution& solution, const MathieuParams& params, int j);

/// Displacement enhancement of an instantaneous kick delivered at RF phase phi_rf.
double mu_factor(const MicromotionSums& sums, double beta);
double mu_factor(const FloquetSolution& solution, double phi_rf);

/// Closed-form small-q approximation of mu_factor.
double mu_approx(const MathieuParams& params, double beta, double phi_rf);

/// Complex response weight of a kick at RF phase kick_phase, observed
/// stroboscopically at RF phase reference_phase. Equal to mu_factor when both
/// phases coincide.
std::complex<double> kick_weight(const FloquetSolution& solution, double kick_phase,
                                 double reference_phase);

/// Locates q on the line a = const where mu_factor(phi_rf) equals target_mu.
/// Bisection on q in (q_lo, q_hi); both ends must be stable.
double find_q_for_mu(double a, double target_mu, double phi_rf, double q_lo, double q_hi);


/// Static parameter a on the line q = const giving characteristic exponent target_beta.
double find_a_for_beta(double q, double target_beta);

/// (a, q) with characteristic exponent target_beta and mu_factor(phi_rf) = target_mu.
/// Searches q in (q_lo, q_hi) with a re-solved for the exponent at every step.
MathieuParams params_for_beta_and_mu(double target_beta, double target_mu, double phi_rf,
                                     double q_lo = 1e-3, double q_hi = 0.9);

}  // namespace fastgate
