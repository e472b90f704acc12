#include "fastgate/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/mathieu.hpp"

namespace fastgate {

namespace {

using constants::pi;
using constants::two_pi;
using Taus = std::array<double, 3>;

// group k of the FRAG schedule sits at sign * tau[index]
constexpr std::array<int, 6> group_index{0, 1, 2, 2, 1, 0};
constexpr std::array<int, 6> group_sign{-1, -1, -1, 1, 1, 1};
constexpr std::array<int, 6> group_weight{-1, 2, -2, 2, -2, 1};

double effective_mu(const GateModel& model, const OptimizationConfig& config) {
  return config.mu_mode == MuMode::without_micromotion ? 1.0 : model.mu;
}

double effective_comb(const GateModel& model, const OptimizationConfig& config) {
  return config.mu_mode == MuMode::without_micromotion ? 0.0 : model.rf_period;
}

double half_bound(const OptimizationConfig& config) { return 0.5 * config.time_bound; }

// largest comb index that keeps the gate within the bound
long max_index(double comb, const OptimizationConfig& config) {
  const long m = static_cast<long>(std::floor(half_bound(config) / comb * (1.0 + 1e-12)));
  if (m < 1) throw Error(ErrorKind::InvalidTiming, "time bound is shorter than one RF period");
  return m;
}

std::array<long, 3> comb_indices(const Taus& t, double comb, const OptimizationConfig& config) {
  const long top = max_index(comb, config);
  std::array<long, 3> m{};
  for (int k = 0; k < 3; ++k) m[k] = std::clamp(std::lround(t[k] / comb), 1L, top);
  return m;
}

Taus from_indices(const std::array<long, 3>& m, double comb) {
  return {m[0] * comb, m[1] * comb, m[2] * comb};
}

Taus snap(const Taus& t, const GateModel& model, const OptimizationConfig& config) {
  const double comb = effective_comb(model, config);
  if (comb <= 0.0) return t;
  return from_indices(comb_indices(t, comb, config), comb);
}

double objective(const Taus& t, const GateModel& model, const OptimizationConfig& config) {
  const auto r = gate_residuals(t, model, config);
  double f = 0.0;
  for (double v : r) f += v * v;
  return f;
}

// 3x3 solve by Gaussian elimination with partial pivoting; false if singular
bool solve3(std::array<double, 9> a, std::array<double, 3> b, std::array<double, 3>& x) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r * 3 + c]) > std::abs(a[piv * 3 + c])) piv = r;
    }
    if (a[piv * 3 + c] == 0.0 || !std::isfinite(a[piv * 3 + c])) return false;
    if (piv != c) {
      for (int k = 0; k < 3; ++k) std::swap(a[c * 3 + k], a[piv * 3 + k]);
      std::swap(b[c], b[piv]);
    }
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r * 3 + c] / a[c * 3 + c];
      for (int k = c; k < 3; ++k) a[r * 3 + k] -= f * a[c * 3 + k];
      b[r] -= f * b[c];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r * 3 + k] * x[k];
    x[r] = s / a[r * 3 + r];
  }
  return true;
}

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

bool lexicographically_less(const Taus& a, const Taus& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// walks the comb lattice until no neighbour within the radius improves
LocalResult lattice_polish(const Taus& t, const GateModel& model, const OptimizationConfig& config) {
  const double comb = effective_comb(model, config);
  const long top = max_index(comb, config);
  auto m = comb_indices(t, comb, config);
  double best = objective(from_indices(m, comb), model, config);
  const int rad = std::max(0, config.lattice_radius);
  for (int moves = 0; moves < 10000; ++moves) {
    auto cand_best = m;
    for (int i = -rad; i <= rad; ++i) {
      for (int j = -rad; j <= rad; ++j) {
        for (int k = -rad; k <= rad; ++k) {
          const std::array<long, 3> c{m[0] + i, m[1] + j, m[2] + k};
          if (c == m || *std::min_element(c.begin(), c.end()) < 1 || *std::max_element(c.begin(), c.end()) > top) continue;
          const double f = objective(from_indices(c, comb), model, config);
          if (f < best) {
            best = f;
            cand_best = c;
          }
        }
      }
    }
    if (cand_best == m) break;
    m = cand_best;
  }
  LocalResult r;
  r.taus = from_indices(m, comb);
  r.infidelity = best;
  return r;
}

}  // namespace

GateModel gate_model(const Trap& trap, MuMode mode, const SpectrumOptions& options) {
  GateModel g;
  g.spectrum = mode_spectrum(trap, options);
  if (mode == MuMode::with_micromotion) {
    const Mode& com = g.spectrum.modes.front();
    g.mu = mu_factor(floquet_solution(com.mathieu), pi);
    g.rf_period = 0.5 * com.beta / com.frequency_ratio;
  }
  return g;
}

GateModel ideal_model(double chi, double mu, double rf_period) {
  GateModel g;
  g.spectrum = harmonic_spectrum(chi);
  g.mu = mu;
  g.rf_period = rf_period;
  return g;
}

std::vector<double> gate_residuals(const Taus& taus, const GateModel& model, const OptimizationConfig& config,
                                   std::vector<double>* jacobian) {
  const auto& modes = model.spectrum.modes;
  const double mu = effective_mu(model, config);
  const double eta2 = config.laser.lamb_dicke_eta * config.laser.lamb_dicke_eta;
  const double n = config.n;
  std::array<double, 6> t{}, z{};
  for (int g = 0; g < 6; ++g) {
    t[g] = group_sign[g] * taus[group_index[g]];
    z[g] = group_weight[g] * n;
  }
  const std::size_t m = 1 + modes.size();
  std::vector<double> r(m, 0.0);
  if (jacobian) jacobian->assign(3 * m, 0.0);

  // raw phase and its derivative with respect to each group time
  double raw = 0.0;
  std::array<double, 6> d_raw{};
  for (std::size_t p = 0; p < modes.size(); ++p) {
    const double w = two_pi * modes[p].frequency_ratio;
    const double c = 8.0 * eta2 * mu / modes[p].frequency_ratio * modes[p].coupling[0] * modes[p].coupling[1];
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) {
        const double dt = t[i] - t[j];
        const double zz = 2.0 * c * z[i] * z[j];
        raw += zz * std::sin(w * std::abs(dt));
        if (jacobian) {
          const double d = zz * w * std::cos(w * dt) * (dt > 0 ? 1.0 : (dt < 0 ? -1.0 : 0.0));
          d_raw[i] += d;
          d_raw[j] -= d;
        }
      }
    }
  }
  // target 0 accepts either sign, as the magnitude in the phase error does
  const double s = config.target_sign > 0 ? 1.0 : (config.target_sign < 0 ? -1.0 : (raw >= 0.0 ? 1.0 : -1.0));
  const double w0 = std::sqrt(2.0 / 3.0);
  r[0] = w0 * (s * raw - pi / 4.0);
  if (jacobian) {
    for (int g = 0; g < 6; ++g) (*jacobian)[group_index[g]] += w0 * s * d_raw[g] * group_sign[g];
  }

  for (std::size_t p = 0; p < modes.size(); ++p) {
    const auto& b = modes[p].coupling;
    const double wp = std::sqrt(4.0 / 3.0 * (0.5 + config.thermal.occupation(p)) * (b[0] * b[0] + b[1] * b[1]));
    const double w = two_pi * modes[p].frequency_ratio;
    const double pre = wp * 2.0 * mu * std::sqrt(1.0 / modes[p].frequency_ratio);
    double sum = 0.0;
    for (int g = 0; g < 6; ++g) {
      sum += z[g] * std::sin(w * t[g]);
      if (jacobian) (*jacobian)[3 * (p + 1) + group_index[g]] += pre * z[g] * w * std::cos(w * t[g]) * group_sign[g];
    }
    r[p + 1] = pre * sum;
  }
  return r;
}

double schedule_infidelity(const Taus& taus, const GateModel& model, const OptimizationConfig& config) {
  return objective(snap(taus, model, config), model, config);
}

PulseSchedule model_schedule(const Taus& taus, const GateModel& model, int n) {
  auto s = frag_schedule(taus[0], taus[1], taus[2], n, pi);
  if (model.rf_period > 0.0) s = phase_lock(s, 2.0 * model.rf_period, pi);
  return s;
}

LocalResult local_search(const Taus& initial, const GateModel& model, const OptimizationConfig& config) {
  const double hi = half_bound(config);
  const double lo = 1e-9 * hi;  // groups may not sit exactly at the gate centre
  Taus x = initial;
  for (double& v : x) v = std::clamp(v, lo, hi);
  std::vector<double> jac;
  auto r = gate_residuals(x, model, config, &jac);
  auto cost = [](const std::vector<double>& v) {
    double f = 0.0;
    for (double e : v) f += e * e;
    return f;
  };
  double f = cost(r);
  double lambda = 1e-3;
  LocalResult out;
  for (int it = 0; it < config.max_iterations; ++it) {
    out.iterations = it + 1;
    std::array<double, 9> a{};
    std::array<double, 3> g{};
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        g[c] += jac[3 * i + c] * r[i];
        for (int d = 0; d < 3; ++d) a[c * 3 + d] += jac[3 * i + c] * jac[3 * i + d];
      }
    }
    // gradient with components pushing out of the box removed
    double gnorm = 0.0;
    for (int c = 0; c < 3; ++c) {
      const bool pinned = (x[c] <= lo && g[c] > 0.0) || (x[c] >= hi && g[c] < 0.0);
      if (!pinned) gnorm += g[c] * g[c];
    }
    if (std::sqrt(gnorm) < config.gradient_tolerance || f == 0.0) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      auto damped = a;
      for (int c = 0; c < 3; ++c) damped[c * 3 + c] += lambda * (a[c * 3 + c] + 1e-12);
      std::array<double, 3> step{};
      if (!solve3(damped, {-g[0], -g[1], -g[2]}, step)) {
        lambda *= 10.0;
        if (lambda > 1e20) break;
        continue;
      }
      Taus trial = x;
      double moved = 0.0;
      for (int c = 0; c < 3; ++c) {
        trial[c] = std::clamp(x[c] + step[c], lo, hi);
        moved = std::max(moved, std::abs(trial[c] - x[c]));
      }
      if (moved <= 1e-15 * std::max(1.0, hi)) {
        stalled = true;
        break;
      }
      std::vector<double> jt;
      auto rt = gate_residuals(trial, model, config, &jt);
      const double ft = cost(rt);
      if (ft < f) {
        x = trial;
        r = std::move(rt);
        jac = std::move(jt);
        f = ft;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e20) break;
      }
    }
    if (stalled || !accepted) {
      // no representable descent step left: a local minimum to machine precision
      out.converged = true;
      break;
    }
  }
  out.taus = x;
  out.infidelity = f;
  return out;
}

std::vector<Taus> start_points(int count, double time_bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::array<double, 3> shift{u(rng), u(rng), u(rng)};
  constexpr std::array<std::uint64_t, 3> bases{2, 3, 5};
  std::vector<Taus> pts;
  pts.reserve(static_cast<std::size_t>(std::max(0, count)));
  for (int i = 0; i < count; ++i) {
    Taus t{};
    for (int d = 0; d < 3; ++d) {
      double h = radical_inverse(static_cast<std::uint64_t>(i) + 1, bases[d]) + shift[d];
      h -= std::floor(h);
      t[d] = 0.5 * time_bound * (1.0 - h);
    }
    pts.push_back(t);
  }
  return pts;
}

OptimizationResult optimize_gate(const GateModel& model, const OptimizationConfig& config,
                                 const std::vector<Taus>& extra) {
  if (!(config.time_bound > 0.0)) throw Error(ErrorKind::ConfigError, "time bound must be positive");
  if (config.starts < 1) throw Error(ErrorKind::ConfigError, "at least one start is required");
  if (config.n < 1) throw Error(ErrorKind::ConfigError, "n must be positive");
  const double comb = effective_comb(model, config);
  if (comb > 0.0) max_index(comb, config);

  auto starts = extra;
  const auto pts = start_points(config.starts, config.time_bound, config.seed);
  starts.insert(starts.end(), pts.begin(), pts.end());

  std::vector<LocalResult> results(starts.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= starts.size()) return;
      try {
        auto local = local_search(starts[i], model, config);
        if (comb > 0.0) {
          const bool converged = local.converged;
          const int iterations = local.iterations;
          local = lattice_polish(local.taus, model, config);
          local.converged = converged;
          local.iterations = iterations;
        }
        results[i] = local;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(starts.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::size_t best = 0;
  int converged = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].converged) ++converged;
    const auto& a = results[i];
    const auto& b = results[best];
    if (a.infidelity < b.infidelity || (a.infidelity == b.infidelity && lexicographically_less(a.taus, b.taus))) best = i;
  }

  OptimizationResult out;
  out.taus = results[best].taus;
  out.best_schedule = model_schedule(out.taus, GateModel{model.spectrum, model.mu, comb}, config.n);
  out.achieved_gate_time = out.best_schedule.gate_time();
  out.starts_converged = converged;
  const double mu = effective_mu(model, config);
  int sign = config.target_sign;
  if (sign == 0) sign = acquired_phase(out.best_schedule, model.spectrum, mu, config.laser) >= 0.0 ? 1 : -1;
  out.errors = gate_errors(out.best_schedule, model.spectrum, mu, config.laser, sign);
  out.infidelity = infidelity(out.errors, config.thermal, model.spectrum).infidelity;
  return out;
}

OptimizationResult optimize_gate(const Trap& trap, const OptimizationConfig& config) {
  return optimize_gate(gate_model(trap, config.mu_mode), config);
}

std::vector<SweepRow> sweep_gate_time(const GateModel& model, const OptimizationConfig& config,
                                      const std::vector<double>& bounds, const std::vector<double>& mus,
                                      const std::function<void(const SweepRow&)>& on_row) {
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    if (!(bounds[i] > bounds[i - 1])) throw Error(ErrorKind::ConfigError, "sweep bounds must be increasing");
  }
  std::vector<SweepRow> rows;
  for (double mu : mus) {
    GateModel m = model;
    m.mu = mu;
    OptimizationConfig cfg = config;
    cfg.mu_mode = mu == 1.0 ? MuMode::without_micromotion : MuMode::with_micromotion;
    bool have_prev = false;
    SweepRow prev;
    for (double bound : bounds) {
      cfg.time_bound = bound;
      SweepRow row;
      row.time_bound = bound;
      row.mu = mu;
      row.n = cfg.n;
      try {
        std::vector<Taus> warm;
        if (have_prev) warm.push_back(prev.taus);
        const auto res = optimize_gate(m, cfg, warm);
        row.achieved_gate_time = res.achieved_gate_time;
        row.infidelity = res.infidelity;
        row.taus = res.taus;
        row.converged_starts = res.starts_converged;
        if (have_prev && prev.flag.empty() && prev.infidelity < row.infidelity) {
          row.achieved_gate_time = prev.achieved_gate_time;
          row.infidelity = prev.infidelity;
          row.taus = prev.taus;
        }
      } catch (const Error& e) {
        row.flag = std::string(error_name(e.kind()));
        row.infidelity = std::numeric_limits<double>::quiet_NaN();
      }
      if (row.flag.empty()) {
        prev = row;
        have_prev = true;
      }
      if (on_row) on_row(row);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace fastgate
