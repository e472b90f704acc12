#include "fastgate/gatescheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"

namespace fastgate {

using constants::pi;
using constants::two_pi;

double PulseSchedule::gate_time() const {
  double m = 0.0;
  for (double t : group_times) m = std::max(m, std::abs(t));
  return 2.0 * m;
}

int PulseSchedule::total_pulse_pairs() const {
  int n = 0;
  for (int z : group_counts) n += std::abs(z);
  return n;
}

PulseSchedule frag_schedule(double tau1, double tau2, double tau3, int n, double phi_rf) {
  if (!(tau1 > 0.0 && tau2 > 0.0 && tau3 > 0.0)) {
    throw Error(ErrorKind::InvalidTiming, "group times must be positive");
  }
  if (n < 1) throw Error(ErrorKind::InvalidTiming, "scale n must be at least 1");
  PulseSchedule s;
  s.group_times = {-tau1, -tau2, -tau3, tau3, tau2, tau1};
  s.group_counts = {-n, 2 * n, -2 * n, 2 * n, -2 * n, n};
  s.scale_n = n;
  s.phi_rf = phi_rf;
  return s;
}

double rf_phase_at(double tau, double beta, double phi_rf) {
  const double th = std::fmod(4.0 * pi * tau / beta + phi_rf, two_pi);
  return th < 0.0 ? th + two_pi : th;
}

double nearest_locked_time(double tau, double beta, double phi_rf, double target_phase) {
  const double period = 0.5 * beta;
  const double origin = beta / (4.0 * pi) * (target_phase - phi_rf);
  return origin + std::nearbyint((tau - origin) / period) * period;
}

PulseSchedule phase_lock(const PulseSchedule& schedule, double beta, double target_phase) {
  PulseSchedule out = schedule;
  out.snap_displacement = 0.0;
  for (double& t : out.group_times) {
    const double snapped = nearest_locked_time(t, beta, schedule.phi_rf, target_phase);
    out.snap_displacement = std::max(out.snap_displacement, std::abs(snapped - t));
    t = snapped;
  }
  out.snap_displacement = std::max(out.snap_displacement, schedule.snap_displacement);
  return out;
}

KickTrain instantaneous_train(const PulseSchedule& schedule) {
  KickTrain train;
  train.phi_rf = schedule.phi_rf;
  for (int g = 0; g < 6; ++g) {
    const int z = schedule.group_counts[g];
    for (int k = 0; k < std::abs(z); ++k) train.kicks.push_back({schedule.group_times[g], z > 0 ? 1 : -1, g});
  }
  std::stable_sort(train.kicks.begin(), train.kicks.end(),
                   [](const KickEvent& a, const KickEvent& b) { return a.time < b.time; });
  return train;
}

KickTrain expand_finite_rep(const PulseSchedule& schedule, double rep_rate) {
  if (!(rep_rate > 0.0)) throw Error(ErrorKind::InvalidTiming, "repetition rate must be positive");
  if (std::isinf(rep_rate)) return instantaneous_train(schedule);
  KickTrain train;
  train.repetition_rate = rep_rate;
  train.phi_rf = schedule.phi_rf;
  const double spacing = 1.0 / rep_rate;
  std::array<int, 6> order{0, 1, 2, 3, 4, 5};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return schedule.group_times[a] < schedule.group_times[b]; });
  for (int g : order) {
    const int z = schedule.group_counts[g];
    const int count = std::abs(z);
    const double first = schedule.group_times[g] - 0.5 * (count - 1) * spacing;
    for (int k = 0; k < count; ++k) train.kicks.push_back({first + k * spacing, z > 0 ? 1 : -1, g});
  }
  // slot spacing is exact inside a group; only group boundaries can collide
  const double slack = 1e-9 * spacing;
  for (std::size_t i = 1; i < train.kicks.size(); ++i) {
    const double gap = train.kicks[i].time - train.kicks[i - 1].time;
    if (gap < spacing - slack) {
      throw Error(ErrorKind::GroupOverlap,
                  "groups " + std::to_string(train.kicks[i - 1].group) + " and " +
                      std::to_string(train.kicks[i].group) + " collide at repetition rate " +
                      std::to_string(rep_rate));
    }
  }
  return train;
}

}  // namespace fastgate
