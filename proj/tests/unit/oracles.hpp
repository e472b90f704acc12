#pragma once

// Independent reference computations used only by the test suites.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace testing_oracles {

/// Residual of the j = 0 recurrence row with both tails closed by deep
/// continued fractions; vanishes at the characteristic exponent.
inline double continued_fraction_residual(double a, double q, double beta, int depth = 40) {
  const auto d = [&](int j) {
    const double k = 2.0 * j + beta;
    return (a - k * k) / q;
  };
  double up = 0.0, down = 0.0;
  for (int j = depth; j >= 1; --j) {
    up = 1.0 / (d(j) - up);
    down = 1.0 / (d(-j) - down);
  }
  return up + down - d(0);
}

/// Root of the continued-fraction residual bracketed around `guess`.
inline double beta_by_continued_fraction(double a, double q, double guess) {
  double width = 1e-4;
  double lo = guess - width, hi = guess + width;
  auto f = [&](double b) { return continued_fraction_residual(a, q, b); };
  while (f(lo) * f(hi) > 0.0 && width < 0.1) {
    width *= 2;
    lo = guess - width;
    hi = guess + width;
  }
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Dense solve of the truncated recurrence rows j != 0 with C_0 = 1.
inline std::vector<double> dense_coefficients(double a, double q, double beta, int order) {
  const int n = 2 * order;  // unknowns: j = -J..-1, 1..J
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  auto index = [&](int j) { return j < 0 ? j + order : j + order - 1; };
  int row = 0;
  for (int j = -order; j <= order; ++j) {
    if (j == 0) continue;
    const double k = 2.0 * j + beta;
    const double dj = (a - k * k) / q;
    m(row, index(j)) = -dj;
    for (int nb : {j - 1, j + 1}) {
      if (nb == 0) {
        rhs(row) -= 1.0;
      } else if (nb >= -order && nb <= order) {
        m(row, index(nb)) = 1.0;
      }
    }
    ++row;
  }
  const Eigen::VectorXd x = m.fullPivLu().solve(rhs);
  std::vector<double> out(static_cast<std::size_t>(2 * order + 1));
  for (int j = -order; j <= order; ++j) {
    out[static_cast<std::size_t>(j + order)] = (j == 0) ? 1.0 : x(index(j));
  }
  return out;
}

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 40) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double l, double r, double fl, double fm, double fr, double whole, double eps, int d) {
        const double m = 0.5 * (l + r);
        const double lm = 0.5 * (l + m), rm = 0.5 * (m + r);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - l) / 6 * (fl + 4 * flm + fm);
        const double right = (r - m) / 6 * (fm + 4 * frm + fr);
        if (d <= 0 || std::abs(left + right - whole) <= 15 * eps) {
          return left + right + (left + right - whole) / 15;
        }
        return rec(l, m, fl, flm, fm, left, eps / 2, d - 1) + rec(m, r, fm, frm, fr, right, eps / 2, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth);
}

}  // namespace testing_oracles
