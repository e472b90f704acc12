#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fastgate/errors.hpp"
#include "fastgate/optimizer.hpp"

using namespace fastgate;
using std::numbers::pi;

namespace {

OptimizationConfig quick(double bound, int n, double eta = 0.2) {
  OptimizationConfig c;
  c.time_bound = bound;
  c.n = n;
  c.starts = 64;
  c.laser.lamb_dicke_eta = eta;
  return c;
}

}  // namespace

TEST_CASE("residuals reproduce the analytic infidelity") {
  const auto model = ideal_model(-1.4e-2, 1.7);
  for (int target : {0, 1, -1}) {
    auto c = quick(2.0, 12);
    c.thermal.mean_occupation = 0.7;
    c.target_sign = target;
    for (const std::array<double, 3> t : {std::array{0.71, 0.43, 0.22}, std::array{0.12, 0.93, 0.5}}) {
      const auto r = gate_residuals(t, model, c);
      double f = 0;
      for (double v : r) f += v * v;
      const auto e = gate_errors(frag_schedule(t[0], t[1], t[2], 12), model.spectrum, 1.7, c.laser);
      // a signed target only differs when the acquired phase has the other sign
      const double dphi = target == 0 || target * e.raw_phase > 0 ? e.phase_error : -std::abs(e.raw_phase) - pi / 4;
      auto e2 = e;
      e2.phase_error = dphi;
      CHECK(f == doctest::Approx(infidelity(e2, c.thermal, model.spectrum).infidelity).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic Jacobian matches central differences") {
  const auto c = quick(2.0, 30);
  const auto model = ideal_model(1.8e-4, 2.31);
  const std::array<double, 3> t{0.41, 0.27, 0.09};
  std::vector<double> jac;
  const auto r = gate_residuals(t, model, c, &jac);
  const double h = 1e-6;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      auto a = t, b = t;
      a[k] += h;
      b[k] -= h;
      const double fd = (gate_residuals(a, model, c)[i] - gate_residuals(b, model, c)[i]) / (2 * h);
      CHECK(jac[3 * i + k] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("snapped schedules agree with phase_lock") {
  const double comb = 1.0 / 24;
  const auto model = ideal_model(-1.4e-2, 1.3, comb);
  const auto c = quick(2.0, 5);
  const std::array<double, 3> t{0.613, 0.402, 0.157};
  const auto locked = phase_lock(frag_schedule(t[0], t[1], t[2], 5, pi), 2 * comb, pi);
  const auto e = gate_errors(locked, model.spectrum, 1.3, c.laser);
  CHECK(schedule_infidelity(t, model, c) ==
        doctest::Approx(infidelity(e, c.thermal, model.spectrum).infidelity).epsilon(1e-12));
  const auto s = model_schedule(t, model, 5);
  for (int g = 0; g < 6; ++g) {
    CHECK(s.group_times[g] == doctest::Approx(locked.group_times[g]).epsilon(1e-14));
    CHECK(std::cos(rf_phase_at(s.group_times[g], 2 * comb, pi)) == doctest::Approx(-1.0).epsilon(1e-9));
  }
}

TEST_CASE("local search") {
  const auto model = ideal_model(-1.4e-2, 1.0);
  auto c = quick(2.0, 12);
  c.mu_mode = MuMode::without_micromotion;
  SUBCASE("descent from any start") {
    for (const auto& s : start_points(40, c.time_bound, 7)) {
      const auto r = local_search(s, model, c);
      CHECK(r.infidelity <= schedule_infidelity(s, model, c));
      for (double v : r.taus) {
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("an exact optimum is a fixed point") {
    const auto best = optimize_gate(model, c);
    REQUIRE(best.infidelity < 1e-20);
    const auto again = local_search(best.taus, model, c);
    CHECK(again.converged);
    for (int k = 0; k < 3; ++k) CHECK(again.taus[k] == doctest::Approx(best.taus[k]).epsilon(1e-10));
    CHECK(again.infidelity < 1e-24);
  }
}

TEST_CASE("start points") {
  const auto a = start_points(256, 1.4, 3);
  const auto b = start_points(256, 1.4, 3);
  const auto d = start_points(256, 1.4, 4);
  CHECK(a == b);
  CHECK(a != d);
  std::array<int, 8> octants{};
  for (const auto& p : a) {
    int o = 0;
    for (int k = 0; k < 3; ++k) {
      CHECK(p[k] > 0.0);
      CHECK(p[k] <= 0.7);
      o |= (p[k] > 0.35 ? 1 : 0) << k;
    }
    ++octants[o];
  }
  // stratified to within a few points per octant
  for (int n : octants) CHECK(std::abs(n - 32) <= 4);
}

TEST_CASE("optimize_gate") {
  SUBCASE("deterministic for a fixed seed regardless of threads") {
    auto c = quick(1.2, 12);
    c.threads = 1;
    const auto model = ideal_model(-1.4e-2, 2.31);
    const auto one = optimize_gate(model, c);
    c.threads = 4;
    const auto four = optimize_gate(model, c);
    CHECK(one.infidelity == four.infidelity);
    CHECK(one.taus == four.taus);
    CHECK(one.starts_converged == four.starts_converged);
  }
  SUBCASE("gate time stays within the bound and the phase reaches the target") {
    auto c = quick(1.2, 12);
    const auto r = optimize_gate(ideal_model(-1.4e-2, 2.31), c);
    CHECK(r.achieved_gate_time <= 1.2);
    CHECK(r.infidelity < 1e-15);
    CHECK(std::abs(r.errors.raw_phase) == doctest::Approx(pi / 4).epsilon(1e-7));
    CHECK(r.errors.sign_matches);
  }
  SUBCASE("a requested sign is honoured") {
    auto c = quick(1.2, 12);
    c.target_sign = -1;
    const auto neg = optimize_gate(ideal_model(-1.4e-2, 2.31), c);
    CHECK(neg.errors.raw_phase < 0);
    CHECK(neg.errors.sign_matches);
  }
  SUBCASE("locked pulses land on the RF comb") {
    const double comb = 1.0 / 12;
    auto c = quick(2.0, 5, 0.3);
    const auto r = optimize_gate(ideal_model(-1.4e-2, 1.24, comb), c);
    for (double v : r.taus) CHECK(std::abs(v / comb - std::round(v / comb)) < 1e-9);
    CHECK(r.achieved_gate_time <= 2.0 + 1e-12);
    CHECK(r.best_schedule.snap_displacement < 1e-9);
    CHECK(r.infidelity == doctest::Approx(schedule_infidelity(r.taus, ideal_model(-1.4e-2, 1.24, comb), c)).epsilon(1e-9));
  }
  SUBCASE("without micromotion ignores mu and the comb") {
    auto c = quick(2.0, 12);
    c.mu_mode = MuMode::without_micromotion;
    const auto a = optimize_gate(ideal_model(-1.4e-2, 2.31, 0.1), c);
    const auto b = optimize_gate(ideal_model(-1.4e-2, 1.0), c);
    CHECK(a.infidelity == b.infidelity);
    CHECK(a.taus == b.taus);
  }
  SUBCASE("invalid configurations") {
    auto c = quick(0.0, 12);
    CHECK_THROWS_AS(optimize_gate(ideal_model(-1.4e-2, 1.0), c), Error);
    c = quick(1.0, 12);
    c.starts = 0;
    CHECK_THROWS_AS(optimize_gate(ideal_model(-1.4e-2, 1.0), c), Error);
    c = quick(0.05, 12);
    try {
      optimize_gate(ideal_model(-1.4e-2, 2.0, 0.1), c);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidTiming);
    }
  }
}

TEST_CASE("phase scales with n squared at fixed timings") {
  const auto model = ideal_model(-1.4e-2, 1.0);
  const LaserConfig laser;
  const double p1 = acquired_phase(frag_schedule(0.5, 0.3, 0.1, 4), model.spectrum, 1.0, laser);
  const double p3 = acquired_phase(frag_schedule(0.5, 0.3, 0.1, 12), model.spectrum, 1.0, laser);
  CHECK(p3 == doctest::Approx(9.0 * p1).epsilon(1e-12));
}

TEST_CASE("gate-time sweep") {
  auto c = quick(1.0, 12, 0.1);
  c.starts = 48;
  const std::vector<double> bounds{0.5, 0.7, 0.9, 1.1, 1.4, 1.8};
  const auto rows = sweep_gate_time(ideal_model(-1.4e-2, 1.0), c, bounds, {1.0, 2.31});
  REQUIRE(rows.size() == 12);
  for (std::size_t col = 0; col < 2; ++col) {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const auto& r = rows[col * bounds.size() + i];
      CHECK(r.flag.empty());
      CHECK(r.time_bound == bounds[i]);
      CHECK(r.achieved_gate_time <= bounds[i] + 1e-12);
      CHECK(r.mu == (col == 0 ? 1.0 : 2.31));
      if (i > 0) CHECK(r.infidelity <= rows[col * bounds.size() + i - 1].infidelity);
    }
  }
  CHECK_THROWS_AS(sweep_gate_time(ideal_model(-1.4e-2, 1.0), c, {1.0, 0.5}, {1.0}), Error);
  // a cell that cannot be built is flagged and the column carries on
  const auto flagged = sweep_gate_time(ideal_model(-1.4e-2, 1.0, 0.1), c, {0.1, 1.0}, {2.0});
  CHECK(flagged[0].flag == "InvalidTiming");
  CHECK(flagged[1].flag.empty());
}

TEST_CASE("models built from traps") {
  const double mass = 39.9626 * 1.66053906660e-27;
  const auto paul = make_paul_trap(2 * pi * 1e6, {0.0, 0.2}, 1.0 / 6, mass);
  const Trap t{paul};
  const auto with = gate_model(t, MuMode::with_micromotion);
  const auto without = gate_model(t, MuMode::without_micromotion);
  CHECK(without.mu == 1.0);
  CHECK(without.rf_period == 0.0);
  CHECK(with.mu == doctest::Approx(mu_factor(floquet_solution(with.spectrum.modes[0].mathieu), pi)));
  CHECK(with.mu > 1.0);
  CHECK(with.rf_period == doctest::Approx(0.5 * trap_beta(t)).epsilon(1e-9));
}
