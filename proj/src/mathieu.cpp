#include "fastgate/mathieu.hpp"

#include <cmath>
#include <string>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"

namespace fastgate {

namespace {

using constants::pi;

struct State2 {
  double y, dy;
};

inline double stiffness(const MathieuParams& p, double s) { return p.a - 2.0 * p.q * std::cos(2.0 * s); }

// One classical RK4 step of y'' = -(a - 2q cos 2s) y.
inline State2 rk4_step(const MathieuParams& p, double s, double h, State2 x) {
  const double q0 = stiffness(p, s);
  const double qm = stiffness(p, s + 0.5 * h);
  const double q1 = stiffness(p, s + h);
  const double k1y = x.dy, k1v = -q0 * x.y;
  const double k2y = x.dy + 0.5 * h * k1v, k2v = -qm * (x.y + 0.5 * h * k1y);
  const double k3y = x.dy + 0.5 * h * k2v, k3v = -qm * (x.y + 0.5 * h * k2y);
  const double k4y = x.dy + h * k3v, k4v = -q1 * (x.y + h * k3y);
  return {x.y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y),
          x.dy + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)};
}

// Fundamental matrix samples over one period; entry i holds (y1, y1', y2, y2').
std::vector<std::array<double, 4>> fundamental_path(const MathieuParams& p, int steps) {
  std::vector<std::array<double, 4>> path(static_cast<std::size_t>(steps) + 1);
  State2 c1{1.0, 0.0};
  State2 c2{0.0, 1.0};
  const double h = pi / steps;
  path[0] = {c1.y, c1.dy, c2.y, c2.dy};
  for (int i = 0; i < steps; ++i) {
    const double s = i * h;
    c1 = rk4_step(p, s, h, c1);
    c2 = rk4_step(p, s, h, c2);
    path[static_cast<std::size_t>(i) + 1] = {c1.y, c1.dy, c2.y, c2.dy};
  }
  return path;
}

// Unwrapped phase-plane angle accumulated by the solution y(0)=1, y'(0)=0
// over `periods` drive periods, measured clockwise so harmonic motion advances.
double accumulated_angle(const std::vector<std::array<double, 4>>& path, const Monodromy& m,
                         int periods) {
  double total = 0.0;
  double prev = 0.0;
  bool first = true;
  // v = M^k e1
  double v0 = 1.0, v1 = 0.0;
  for (int k = 0; k < periods; ++k) {
    for (std::size_t i = (k == 0 ? 0 : 1); i < path.size(); ++i) {
      const auto& f = path[i];
      const double y = f[0] * v0 + f[2] * v1;
      const double dy = f[1] * v0 + f[3] * v1;
      const double ang = std::atan2(-dy, y);
      if (!first) {
        double d = ang - prev;
        if (d > pi) d -= 2 * pi;
        if (d < -pi) d += 2 * pi;
        total += d;
      }
      prev = ang;
      first = false;
    }
    const double n0 = m[0] * v0 + m[1] * v1;
    const double n1 = m[2] * v0 + m[3] * v1;
    v0 = n0;
    v1 = n1;
  }
  return total;
}

}  // namespace

double FloquetSolution::coefficient(int j) const {
  if (j < -truncation_order || j > truncation_order) return 0.0;
  return coefficients[static_cast<std::size_t>(j + truncation_order)];
}

std::complex<double> FloquetSolution::envelope(double rf_phase) const {
  std::complex<double> f{0.0, 0.0};
  for (int j = -truncation_order; j <= truncation_order; ++j) {
    f += coefficient(j) * std::polar(1.0, j * rf_phase);
  }
  return f;
}

double FloquetSolution::wronskian() const {
  double sigma = 0.0, zeta = 0.0;
  for (int j = -truncation_order; j <= truncation_order; ++j) {
    sigma += coefficient(j);
    zeta += j * coefficient(j);
  }
  return sigma * (beta * sigma + 2.0 * zeta);
}

Monodromy monodromy(const MathieuParams& params, int steps_per_period) {
  const auto path = fundamental_path(params, steps_per_period);
  const auto& e = path.back();
  // columns are the two solutions
  return {e[0], e[2], e[1], e[3]};
}

double characteristic_exponent(const MathieuParams& params, const MathieuOptions& options) {
  if (params.q == 0.0) {
    if (params.a <= 0.0) {
      throw Error(ErrorKind::Unstable, "a <= 0 with q = 0 is not confining");
    }
    const double beta = std::sqrt(params.a);
    if (beta >= 1.0) {
      throw Error(ErrorKind::Unstable, "outside the first stability region (beta >= 1)");
    }
    return beta;
  }
  const auto path = fundamental_path(params, options.steps_per_period);
  const auto& e = path.back();
  const Monodromy m{e[0], e[2], e[1], e[3]};
  const double half_trace = 0.5 * (m[0] + m[3]);
  if (std::abs(half_trace) > 1.0 - 0.5 * options.stability_tolerance) {
    throw Error(ErrorKind::Unstable, "monodromy trace " + std::to_string(2 * half_trace) +
                                         " outside (-2, 2) for a=" + std::to_string(params.a) +
                                         ", q=" + std::to_string(params.q));
  }
  // sin(pi beta) from the off-diagonal form avoids cancellation near |trace| = 2.
  const double diff = 0.5 * (m[0] - m[3]);
  double s2 = -m[1] * m[2] - diff * diff;
  if (!(s2 > 0.0)) s2 = 1.0 - half_trace * half_trace;
  const double b = std::atan2(std::sqrt(s2), half_trace) / pi;  // in (0, 1)

  constexpr int periods = 8;
  const double estimate = accumulated_angle(path, m, periods) / (periods * pi);
  // Candidates sharing the same trace: b + 2k and 2k - b.
  double best = b;
  double best_gap = std::abs(estimate - b);
  for (int k = 1; k <= 4; ++k) {
    for (double c : {2.0 * k - b, 2.0 * k + b}) {
      if (std::abs(estimate - c) < best_gap) {
        best_gap = std::abs(estimate - c);
        best = c;
      }
    }
  }
  if (best >= 1.0) {
    throw Error(ErrorKind::Unstable, "outside the first stability region (beta = " +
                                         std::to_string(best) + ")");
  }
  return best;
}

bool stability(const MathieuParams& params, const MathieuOptions& options) {
  try {
    const double beta = characteristic_exponent(params, options);
    return beta > 0.0 && beta < 1.0;
  } catch (const Error&) {
    return false;
  }
}

MathieuParams params_from_drive(const TrapDrive& drive) {
  const double e = constants::elementary_charge;
  const double denom = drive.ion_mass * drive.rf_angular_frequency * drive.rf_angular_frequency;
  const double a = 4.0 * drive.charge_number * e * drive.static_voltage_term / denom;
  const double q = -2.0 * drive.charge_number * e * drive.dynamic_voltage_term / denom;
  return {a, std::abs(q)};
}

double folded_rf_phase(const TrapDrive& drive) {
  const double raw_q = -2.0 * drive.charge_number * drive.dynamic_voltage_term;
  return raw_q < 0.0 ? std::remainder(drive.rf_phase + pi, 2 * pi) : drive.rf_phase;
}

FloquetSolution fourier_coefficients(const MathieuParams& params, double beta, int order) {
  if (order < 3) {
    throw Error(ErrorKind::TruncationInsufficient, "truncation order must be at least 3");
  }
  if (params.q < 0.0) {
    throw Error(ErrorKind::DegenerateDrive, "q must be folded to a non-negative value");
  }
  FloquetSolution sol;
  sol.beta = beta;
  sol.truncation_order = order;
  sol.coefficients.assign(static_cast<std::size_t>(2 * order + 1), 0.0);
  const auto at = [&](int j) -> double& { return sol.coefficients[static_cast<std::size_t>(j + order)]; };
  at(0) = 1.0;
  if (params.q == 0.0) return sol;

  const auto d = [&](int j) {
    const double k = 2.0 * j + beta;
    return (params.a - k * k) / params.q;
  };
  // ratios C_j / C_{j-1} for j > 0 and C_{-j} / C_{-j+1}, tails closed at J + 1
  std::vector<double> up(static_cast<std::size_t>(order) + 2, 0.0);
  std::vector<double> down(static_cast<std::size_t>(order) + 2, 0.0);
  for (int j = order; j >= 1; --j) {
    up[static_cast<std::size_t>(j)] = 1.0 / (d(j) - up[static_cast<std::size_t>(j) + 1]);
    down[static_cast<std::size_t>(j)] = 1.0 / (d(-j) - down[static_cast<std::size_t>(j) + 1]);
  }
  for (int j = 1; j <= order; ++j) {
    at(j) = up[static_cast<std::size_t>(j)] * at(j - 1);
    at(-j) = down[static_cast<std::size_t>(j)] * at(-j + 1);
  }
  const double tail = std::max(std::abs(at(order)), std::abs(at(-order)));
  if (tail >= 1e-6) {
    throw Error(ErrorKind::TruncationInsufficient,
                "|C_{+-J}| = " + std::to_string(tail) + " at J = " + std::to_string(order));
  }
  return sol;
}

FloquetSolution floquet_solution(const MathieuParams& params, const MathieuOptions& options) {
  const double beta = characteristic_exponent(params, options);
  try {
    return fourier_coefficients(params, beta, 5);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TruncationInsufficient) throw;
    return fourier_coefficients(params, beta, 8);
  }
}

MicromotionSums micromotion_sums(const FloquetSolution& solution, double phi_rf) {
  MicromotionSums s;
  s.phi_rf = phi_rf;
  for (int j = -solution.truncation_order; j <= solution.truncation_order; ++j) {
    const double c = solution.coefficient(j);
    if (c == 0.0) continue;
    const double cj = std::cos(j * phi_rf);
    const double sj = std::sin(j * phi_rf);
    s.sigma_c += c * cj;
    s.sigma_s += c * sj;
    s.zeta_c += j * c * cj;
    s.zeta_s += j * c * sj;
  }
  const double b = solution.beta;
  s.rho = 4.0 * pi * (s.sigma_c * (b * s.sigma_c + 2.0 * s.zeta_c) + s.sigma_s * (b * s.sigma_s + 2.0 * s.zeta_s));
  return s;
}

double recurrence_residual(const FloquetSolution& solution, const MathieuParams& params, int j) {
  const double k = 2.0 * j + solution.beta;
  const double dj = (params.a - k * k) / params.q;
  return solution.coefficient(j + 1) - dj * solution.coefficient(j) + solution.coefficient(j - 1);
}

double mu_factor(const MicromotionSums& sums, double beta) {
  const double num = beta * (sums.sigma_c * sums.sigma_c + sums.sigma_s * sums.sigma_s);
  const double den = sums.sigma_c * (beta * sums.sigma_c + 2.0 * sums.zeta_c) +
                     sums.sigma_s * (beta * sums.sigma_s + 2.0 * sums.zeta_s);
  if (std::abs(den) < 1e-12 * std::max(1.0, std::abs(num))) {
    throw Error(ErrorKind::SingularDenominator, "mu denominator vanishes");
  }
  return num / den;
}

double mu_factor(const FloquetSolution& solution, double phi_rf) {
  return mu_factor(micromotion_sums(solution, phi_rf), solution.beta);
}

double mu_approx(const MathieuParams& params, double beta, double phi_rf) {
  const double b2 = beta * beta;
  const double base = 1.0 - 2.0 * (b2 + 4.0) * params.q * std::cos(phi_rf) / ((b2 - 4.0) * (b2 - 4.0));
  return base * base;
}

std::complex<double> kick_weight(const FloquetSolution& solution, double kick_phase,
                                 double reference_phase) {
  const double w = solution.wronskian();
  if (std::abs(w) < 1e-12) {
    throw Error(ErrorKind::SingularDenominator, "Floquet Wronskian vanishes");
  }
  return solution.beta * std::conj(solution.envelope(kick_phase)) * solution.envelope(reference_phase) / w;
}

double find_q_for_mu(double a, double target_mu, double phi_rf, double q_lo, double q_hi) {
  const auto g = [&](double q) { return mu_factor(floquet_solution({a, q}), phi_rf) - target_mu; };
  double glo = g(q_lo);
  const double ghi = g(q_hi);
  if (glo * ghi > 0.0) {
    throw Error(ErrorKind::NoConvergence, "target mu not bracketed on the given q interval");
  }
  for (int it = 0; it < 200 && q_hi - q_lo > 1e-13; ++it) {
    const double mid = 0.5 * (q_lo + q_hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      q_lo = mid;
      glo = gm;
    } else {
      q_hi = mid;
    }
  }
  return 0.5 * (q_lo + q_hi);
}


double find_a_for_beta(double q, double target_beta) {
  if (q == 0.0) return target_beta * target_beta;
  // beta increases with a inside the first region; bracket between the
  // lower edge (unstable below) and a point with beta above the target.
  double lo = target_beta * target_beta - q * q;  // comfortably below sqrt(a + q^2/2)
  double hi = target_beta * target_beta + 0.5;
  auto beta_or = [&](double a) {
    try {
      return characteristic_exponent({a, q});
    } catch (const Error&) {
      return a < 0.0 ? -1.0 : 2.0;
    }
  };
  while (beta_or(lo) > target_beta) lo -= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_or(mid) < target_beta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MathieuParams params_for_beta_and_mu(double target_beta, double target_mu, double phi_rf,
                                     double q_lo, double q_hi) {
  auto mu_at = [&](double q) {
    const MathieuParams p{find_a_for_beta(q, target_beta), q};
    return mu_factor(floquet_solution(p), phi_rf);
  };
  double glo = mu_at(q_lo) - target_mu;
  // shrink the upper end until the exponent is still attainable
  double ghi = 0.0;
  for (;;) {
    try {
      ghi = mu_at(q_hi) - target_mu;
      break;
    } catch (const Error&) {
      q_hi = 0.5 * (q_lo + q_hi);
      if (q_hi - q_lo < 1e-6) throw;
    }
  }
  if (glo * ghi > 0.0) {
    throw Error(ErrorKind::NoConvergence, "target mu not reachable at the requested exponent");
  }
  for (int it = 0; it < 100 && q_hi - q_lo > 1e-12; ++it) {
    const double mid = 0.5 * (q_lo + q_hi);
    const double gm = mu_at(mid) - target_mu;
    if ((gm < 0.0) == (glo < 0.0)) {
      q_lo = mid;
      glo = gm;
    } else {
      q_hi = mid;
    }
  }
  const double q = 0.5 * (q_lo + q_hi);
  return {find_a_for_beta(q, target_beta), q};
}

}  // namespace fastgate
