#pragma once

#include <array>
#include <limits>
#include <vector>

namespace fastgate {

/// Six groups of counter-propagating pulse pairs. Times are in secular trap
/// periods; phi_rf is the RF drive phase at tau = 0.
struct PulseSchedule {
  std::array<double, 6> group_times{};
  std::array<int, 6> group_counts{};
  int scale_n = 1;
  double phi_rf = 0.0;
  /// Largest shift applied by phase_lock (0 for an unsnapped schedule).
  double snap_displacement = 0.0;

  double gate_time() const;
  int total_pulse_pairs() const;
};

struct KickEvent {
  double time = 0.0;
  int sign = 1;
  int group = 0;
};

struct KickTrain {
  std::vector<KickEvent> kicks;
  double repetition_rate = std::numeric_limits<double>::infinity();  // kicks per secular period
  double phi_rf = 0.0;
};

/// times (-t1, -t2, -t3, t3, t2, t1), counts (-n, 2n, -2n, 2n, -2n, n)
PulseSchedule frag_schedule(double tau1, double tau2, double tau3, int n, double phi_rf = 0.0);

/// RF phase (mod 2 pi) reached at dimensionless time tau.
double rf_phase_at(double tau, double beta, double phi_rf);

/// Nearest time to tau at which the drive phase equals target_phase.
double nearest_locked_time(double tau, double beta, double phi_rf, double target_phase);

/// Snaps every group onto the RF comb at phase target_phase (pi by default).
PulseSchedule phase_lock(const PulseSchedule& schedule, double beta, double target_phase = 3.141592653589793);

/// Spreads each group over consecutive slots of a 1 / rep_rate comb centred on
/// the group time. An infinite rate leaves all kicks at the group times.
KickTrain expand_finite_rep(const PulseSchedule& schedule, double rep_rate);

/// Instantaneous groups as a train of grouped kicks (one event per pulse pair).
KickTrain instantaneous_train(const PulseSchedule& schedule);

}  // namespace fastgate
