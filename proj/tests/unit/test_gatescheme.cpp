#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "fastgate/errors.hpp"
#include "fastgate/gatescheme.hpp"

using namespace fastgate;
using std::numbers::pi;

TEST_CASE("FRAG schedule layout") {
  const auto s = frag_schedule(0.1, 0.2, 0.3, 1);
  CHECK(s.group_times == std::array<double, 6>{-0.1, -0.2, -0.3, 0.3, 0.2, 0.1});
  CHECK(s.group_counts == std::array<int, 6>{-1, 2, -2, 2, -2, 1});
  CHECK(s.gate_time() == doctest::Approx(0.6));
  CHECK(s.total_pulse_pairs() == 10);

  CHECK_THROWS_AS(frag_schedule(0.0, 0.2, 0.3, 1), Error);
  CHECK_THROWS_AS(frag_schedule(0.1, -0.2, 0.3, 1), Error);
  CHECK_THROWS_AS(frag_schedule(0.1, 0.2, 0.3, 0), Error);

  // permutations of the three times give six different schedules
  std::array<double, 3> t{0.1, 0.2, 0.3};
  std::set<std::array<double, 6>> seen;
  do {
    seen.insert(frag_schedule(t[0], t[1], t[2], 2).group_times);
  } while (std::next_permutation(t.begin(), t.end()));
  CHECK(seen.size() == 6);
}

TEST_CASE("FRAG invariants over random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-3, 3.0);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const auto s = frag_schedule(u(rng), u(rng), u(rng), n);
    int sum = 0;
    for (int z : s.group_counts) sum += z;
    CHECK(sum == 0);
    for (int k = 0; k < 3; ++k) CHECK(s.group_times[k] == -s.group_times[5 - k]);
    const auto train = expand_finite_rep(s, std::numeric_limits<double>::infinity());
    int signed_total = 0;
    for (const auto& k : train.kicks) signed_total += k.sign;
    CHECK(signed_total == 0);
  }
}

TEST_CASE("phase locking") {
  const double beta = 1.0 / 150;
  const auto s = frag_schedule(0.1234, 0.2345, 0.3456, 3, 0.0);
  const auto locked = phase_lock(s, beta);
  CHECK(locked.snap_displacement <= beta / 4 + 1e-15);
  for (double t : locked.group_times) {
    const double ph = rf_phase_at(t, beta, 0.0);
    CHECK(std::min(std::abs(ph - pi), 2 * pi - std::abs(ph - pi)) < 1e-9);
  }
  // grid spacing is half the exponent
  CHECK(nearest_locked_time(0.3011, beta, 0.0, pi) - nearest_locked_time(0.3011 - beta / 2, beta, 0.0, pi) ==
        doctest::Approx(beta / 2));
  // idempotent, and with phi_rf = 0 the snapped times stay antisymmetric
  const auto twice = phase_lock(locked, beta);
  CHECK(twice.group_times == locked.group_times);
  for (int k = 0; k < 3; ++k) CHECK(locked.group_times[k] == doctest::Approx(-locked.group_times[5 - k]).epsilon(1e-14));

  // a nonzero drive phase moves the comb
  const auto shifted = phase_lock(s, beta);
  const auto other = phase_lock(PulseSchedule{s.group_times, s.group_counts, 3, 1.0, 0.0}, beta);
  for (double t : other.group_times) {
    const double ph = rf_phase_at(t, beta, 1.0);
    CHECK(std::min(std::abs(ph - pi), 2 * pi - std::abs(ph - pi)) < 1e-9);
  }
  CHECK(other.group_times != shifted.group_times);
}

TEST_CASE("finite repetition rate expansion") {
  const auto s = frag_schedule(0.3, 0.7, 1.0, 5);
  SUBCASE("pairs straddle the group time") {
    const auto one = frag_schedule(0.5, 0.9, 1.3, 1);
    const auto train = expand_finite_rep(one, 100.0);
    // group with z = 2 at -0.9
    std::vector<double> g;
    for (const auto& k : train.kicks) {
      if (k.group == 1) g.push_back(k.time);
    }
    REQUIRE(g.size() == 2);
    CHECK(g[0] == doctest::Approx(-0.9 - 0.005));
    CHECK(g[1] == doctest::Approx(-0.9 + 0.005));
  }
  SUBCASE("counts, order and spacing") {
    const double rate = 120.0;
    const auto train = expand_finite_rep(s, rate);
    CHECK(train.kicks.size() == 50);
    std::array<int, 6> counts{};
    for (const auto& k : train.kicks) counts[k.group] += k.sign;
    CHECK(counts == s.group_counts);
    for (std::size_t i = 1; i < train.kicks.size(); ++i) {
      CHECK(train.kicks[i].time - train.kicks[i - 1].time >= 1.0 / rate - 1e-12);
    }
  }
  SUBCASE("too slow a rate is reported") {
    CHECK_THROWS_AS(expand_finite_rep(s, 20.0), Error);
    try {
      expand_finite_rep(s, 20.0);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GroupOverlap);
    }
  }
  SUBCASE("infinite rate keeps the groups instantaneous") {
    const auto train = expand_finite_rep(s, std::numeric_limits<double>::infinity());
    for (const auto& k : train.kicks) CHECK(k.time == s.group_times[k.group]);
  }
}
