#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/mathieu.hpp"
#include "fastgate/parallel.hpp"

namespace fastgate::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using constants::pi;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

// one header, then rows flushed as they are written
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) config_error("cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::string num(double v) { return format_number(v); }

void write_record(const Invocation& inv, const std::string& name, const ordered_json& results) {
  ordered_json rec;
  rec["schema_version"] = schema_version;
  rec["command"] = inv.command;
  rec["config"] = to_json(inv.config);
  rec["results"] = results;
  std::ofstream out(inv.out / (name + ".json"));
  if (!out) config_error("cannot write record in '" + inv.out.string() + "'");
  out << rec.dump(2) << '\n';
}

// JSON has no NaN or infinity; they are written as strings
ordered_json jnum(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

ordered_json jvec(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

ordered_json errors_json(const GateErrors& e) {
  return {{"raw_phase", jnum(e.raw_phase)},
          {"phase_error", jnum(e.phase_error)},
          {"mode_displacements", jvec(e.mode_displacements)},
          {"mu", jnum(e.mu_used)},
          {"target_sign", e.target_sign},
          {"sign_matches", e.sign_matches}};
}

ordered_json report_json(const FidelityReport& r) {
  return {{"infidelity", jnum(r.infidelity)},
          {"phase_term", jnum(r.phase_term)},
          {"restoration_terms", jvec(r.restoration_terms)},
          {"mean_occupation", jvec(r.mean_occupation)}};
}

int sign_for(int target, double raw) {
  if (target != 0) return target;
  return raw < 0 ? -1 : 1;
}

KickTrain train_for(const PulseSchedule& s, const RunConfig& c) {
  return c.laser.rep_rate > 0 ? expand_finite_rep(s, c.laser.rep_rate) : instantaneous_train(s);
}

const Trap& need_trap(const std::optional<Trap>& t, const std::string& what) {
  if (!t) config_error(what + " needs a physical trap (trap type microtrap or paul)");
  return *t;
}

std::optional<PulseSchedule> given_schedule(const Invocation& inv, const GateModel& model) {
  if (inv.schedule_path) return load_schedule(*inv.schedule_path);
  if (inv.config.gate.taus) return model_schedule(*inv.config.gate.taus, model, inv.config.gate.n);
  return std::nullopt;
}

// --- characterize ---------------------------------------------------------

void characterize(const Invocation& inv) {
  const auto& c = inv.config;
  ordered_json res;
  CsvWriter csv(inv.out / "characterize.csv", {"mode", "frequency_ratio", "a", "q", "beta"});
  std::ostringstream text;
  const auto trap = build_trap(c);
  if (!trap) {
    const auto model = build_model(c);
    res["type"] = "ideal";
    res["chi"] = model.spectrum.chi();
    res["mu"] = model.mu;
    res["rf_period"] = model.rf_period;
    text << "ideal two-mode model: chi = " << num(model.spectrum.chi()) << ", mu = " << num(model.mu) << "\n";
    for (const auto& m : model.spectrum.modes) csv.row({m.label, num(m.frequency_ratio), "0", "0", num(m.beta)});
  } else {
    const MathieuParams p{c.trap.a, c.trap.q};
    const double beta = characteristic_exponent(p);  // throws Unstable
    const auto sol = floquet_solution(p);
    const double omega = trap_secular_omega(*trap);
    const auto spectrum = mode_spectrum(*trap);
    res["type"] = c.trap.type;
    res["a"] = p.a;
    res["q"] = p.q;
    res["stable"] = true;
    res["beta"] = beta;
    res["secular_mhz"] = omega / (2 * pi * 1e6);
    res["rf_mhz"] = 2 * omega / beta / (2 * pi * 1e6);
    res["rf_over_secular"] = 2 / beta;
    res["mu_pi"] = mu_factor(sol, pi);
    res["mu_zero"] = mu_factor(sol, 0.0);
    res["mu_approx_pi"] = mu_approx(p, beta, pi);
    res["chi"] = spectrum.chi();
    res["hill_truncation"] = spectrum.hill_truncation;
    text << "a = " << num(p.a) << ", q = " << num(p.q) << ", beta = " << num(beta) << " (f_RF / f = " << num(2 / beta)
         << ")\nmu(pi) = " << num(mu_factor(sol, pi)) << ", mu(0) = " << num(mu_factor(sol, 0.0))
         << "\nchi = " << num(spectrum.chi()) << "\n";
    if (const auto* m = std::get_if<MicrotrapArray>(&*trap)) {
      const double xi = xi_param(m->separation_d, m->secular_omega, m->ion_mass, m->charge_number);
      res["xi"] = xi;
      res["chi_static"] = chi_microtrap(xi).chi;
      text << "xi = " << num(xi) << ", static chi = " << num(chi_microtrap(xi).chi) << "\n";
      if (p.q > 0) {
        const auto crystal = find_periodic_crystal(*m);
        const double resid = crystal_residual(crystal, *m);
        res["crystal"] = {{"harmonics", crystal.harmonics},
                          {"iterations", crystal.iterations},
                          {"last_change", crystal.last_change},
                          {"residual", resid},
                          {"cos_theta", {crystal.cos_theta[0], crystal.cos_theta[1]}},
                          {"sin_theta", {crystal.sin_theta[0], crystal.sin_theta[1]}}};
        text << "periodic crystal residual = " << num(resid) << "\n";
      }
    } else {
      res["chi_static"] = chi_paul(c.trap.kappa).chi;
    }
    res["equilibrium_positions_m"] = equilibrium_positions(*trap);
    ordered_json modes = ordered_json::array();
    for (const auto& m : spectrum.modes) {
      modes.push_back({{"label", m.label},
                       {"frequency_ratio", m.frequency_ratio},
                       {"a", m.mathieu.a},
                       {"q", m.mathieu.q},
                       {"beta", m.beta}});
      csv.row({m.label, num(m.frequency_ratio), num(m.mathieu.a), num(m.mathieu.q), num(m.beta)});
      text << "mode " << m.label << ": omega_p / omega = " << num(m.frequency_ratio) << "\n";
    }
    res["modes"] = modes;
  }
  if (inv.param_space) {
    const auto& g = c.param_space;
    CsvWriter ps(inv.out / "param_space.csv", {"a", "q", "stable", "beta", "mu"});
    for (int i = 0; i < g.a_steps; ++i) {
      const double a = g.a_steps == 1 ? g.a_min : g.a_min + (g.a_max - g.a_min) * i / (g.a_steps - 1);
      for (int k = 0; k < g.q_steps; ++k) {
        const double q = g.q_steps == 1 ? g.q_min : g.q_min + (g.q_max - g.q_min) * k / (g.q_steps - 1);
        const MathieuParams p{a, q};
        if (!stability(p)) {
          ps.row({num(a), num(q), "0", "nan", "nan"});
          continue;
        }
        const auto sol = floquet_solution(p);
        ps.row({num(a), num(q), "1", num(sol.beta), num(mu_factor(sol, g.phi_rf))});
      }
    }
    res["param_space_file"] = "param_space.csv";
  }
  std::cout << text.str();
  write_record(inv, "characterize", res);
}

// --- optimize -------------------------------------------------------------

const std::vector<std::string> optimize_header = {"gate_time", "achieved_gate_time", "infidelity", "mu", "n",
                                                  "tau1", "tau2", "tau3", "converged_starts", "flag"};

std::vector<std::string> sweep_cells(const SweepRow& r) {
  return {num(r.time_bound), num(r.achieved_gate_time), num(r.infidelity), num(r.mu), std::to_string(r.n),
          num(r.taus[0]), num(r.taus[1]), num(r.taus[2]), std::to_string(r.converged_starts), r.flag};
}

ordered_json optimize_record(const OptimizationResult& r, const GateModel& model, const RunConfig& c) {
  ordered_json res;
  res["infidelity"] = jnum(r.infidelity);
  res["taus"] = r.taus;
  res["achieved_gate_time"] = r.achieved_gate_time;
  res["starts_converged"] = r.starts_converged;
  res["schedule"] = schedule_json(r.best_schedule);
  res["errors"] = errors_json(r.errors);
  res["metadata"] = {{"mu", model.mu},
                     {"a", c.trap.type == "ideal" ? 0.0 : c.trap.a},
                     {"q", c.trap.type == "ideal" ? 0.0 : c.trap.q},
                     {"lock_phase", pi},
                     {"rf_period", model.rf_period},
                     {"chi", model.spectrum.chi()},
                     {"mu_mode", c.gate.mu_mode},
                     {"drive", c.gate.drive}};
  return res;
}

void write_trajectories(const Invocation& inv, const Trap& trap, const PulseSchedule& s) {
  auto opts = build_oracle(inv.config);
  opts.record = true;
  const auto sys = prepare_oracle(trap, mode_spectrum(trap, {true, opts.crystal}), opts);
  const auto train = train_for(s, inv.config);
  for (auto b : {BasisState::up_up, BasisState::up_down, BasisState::down_up, BasisState::down_down}) {
    const auto tr = integrate_trajectories(sys, train, b, opts);
    std::ofstream out(inv.out / ("trajectory_" + basis_label(b) + ".csv"));
    write_trajectory_csv(out, tr, sys);
  }
}

void optimize(const Invocation& inv) {
  const auto& c = inv.config;
  const auto model = build_model(c);
  const auto cfg = build_optimizer(c, inv.threads);
  CsvWriter csv(inv.out / "optimize.csv", optimize_header);
  if (!c.optimizer.bounds.empty()) {
    const auto mus = c.optimizer.mus.empty() ? std::vector<double>{model.mu} : c.optimizer.mus;
    const auto rows = sweep_gate_time(model, cfg, c.optimizer.bounds, mus, [&](const SweepRow& r) { csv.row(sweep_cells(r)); });
    ordered_json res = ordered_json::array();
    for (const auto& r : rows) {
      res.push_back({{"gate_time", r.time_bound},
                     {"achieved_gate_time", r.achieved_gate_time},
                     {"infidelity", jnum(r.infidelity)},
                     {"mu", r.mu},
                     {"n", r.n},
                     {"taus", r.taus},
                     {"converged_starts", r.converged_starts},
                     {"flag", r.flag}});
    }
    write_record(inv, "optimize", {{"sweep", res}, {"chi", model.spectrum.chi()}, {"rf_period", model.rf_period}});
    return;
  }
  const auto r = optimize_gate(model, cfg);
  SweepRow row;
  row.time_bound = cfg.time_bound;
  row.achieved_gate_time = r.achieved_gate_time;
  row.infidelity = r.infidelity;
  row.mu = model.mu;
  row.n = cfg.n;
  row.taus = r.taus;
  row.converged_starts = r.starts_converged;
  csv.row(sweep_cells(row));
  write_record(inv, "optimize", optimize_record(r, model, c));
  if (inv.trajectory) write_trajectories(inv, need_trap(build_trap(c), "trajectory export"), r.best_schedule);
}

// --- evaluate ---------------------------------------------------------------

void evaluate(const Invocation& inv) {
  const auto& c = inv.config;
  const auto model = build_model(c);
  const auto schedule = given_schedule(inv, model);
  if (!schedule) config_error("evaluate needs --schedule or [gate] taus");
  const auto train = train_for(*schedule, c);
  const auto thermal = build_thermal(c);
  LaserConfig laser;
  laser.lamb_dicke_eta = c.laser.eta;
  CsvWriter csv(inv.out / "evaluate.csv", {"source", "infidelity", "phase_term", "raw_phase", "phase_error"});
  ordered_json res;
  res["schedule"] = schedule_json(*schedule);
  const auto emit = [&](const std::string& name, const GateErrors& e, const FidelityReport& f) {
    csv.row({name, num(f.infidelity), num(f.phase_term), num(e.raw_phase), num(e.phase_error)});
    auto j = report_json(f);
    j["errors"] = errors_json(e);
    res[name] = j;
  };
  {
    // designed model: common mu at phase pi
    auto e = gate_errors(train, model.spectrum, model.mu, laser);
    if (sign_for(c.gate.target_sign, e.raw_phase) < 0) e = gate_errors(train, model.spectrum, model.mu, laser, -1);
    emit("analytic", e, infidelity(e, thermal, model.spectrum));
  }
  if (const auto trap = build_trap(c)) {
    // the real drive: kicks at whatever RF phase their times fall on
    const auto spectrum = mode_spectrum(*trap);
    const auto mm = micromotion_model(spectrum);
    auto e = floquet_gate_errors(train, mm, laser);
    if (sign_for(c.gate.target_sign, e.raw_phase) < 0) e = floquet_gate_errors(train, mm, laser, -1);
    emit("floquet", e, infidelity(e, thermal, spectrum));
    auto opts = build_oracle(c);
    opts.record = false;
    const auto sys = prepare_oracle(*trap, mode_spectrum(*trap, {true, opts.crystal}), opts);
    const auto o = run_oracle(sys, train, thermal, opts, std::min(4, resolve_threads(inv.threads)));
    emit("oracle", o.errors, o.report);
  }
  write_record(inv, "evaluate", res);
}

// --- sweep ------------------------------------------------------------------

std::string value_column(SweepParameter p) {
  switch (p) {
    case SweepParameter::phase_offset: return "offset_rad";
    case SweepParameter::chi_error: return "chi_error";
    case SweepParameter::rep_rate: return "rep_rate";
    case SweepParameter::thermal_n: return "n_bar";
    case SweepParameter::stray_field: return "frequency_offset";
    case SweepParameter::q_value: return "q";
  }
  return "value";
}

void sweep(const Invocation& inv) {
  const auto& c = inv.config;
  if (c.sweep.grid.empty()) config_error("[sweep] grid: must not be empty");
  const auto model = build_model(c);
  const auto trap = build_trap(c);
  auto cfg = build_optimizer(c, inv.threads);
  GateUnderTest gate;
  gate.model = model;
  gate.laser = cfg.laser;
  gate.thermal = cfg.thermal;
  gate.trap = trap;
  gate.com = model.spectrum.modes.front().mathieu;
  ordered_json res;
  if (auto s = given_schedule(inv, model)) {
    gate.schedule = *s;
  } else {
    const auto r = optimize_gate(model, cfg);
    gate.schedule = r.best_schedule;
    res["optimized"] = optimize_record(r, model, c);
  }
  SweepSpec spec;
  spec.parameter = parse_parameter(c.sweep.parameter);
  spec.with_oracle = c.sweep.oracle;
  spec.first_pulse_phase = c.sweep.first_pulse_phase;
  spec.threads = inv.threads;
  spec.oracle = build_oracle(c);
  spec.oracle.record = false;
  const std::string name = "sweep_" + c.sweep.parameter;
  CsvWriter csv(inv.out / (name + ".csv"), {value_column(spec.parameter), "infidelity_analytic", "infidelity_oracle", "flag"});
  // grid points go out in chunks of one per worker so partial files are usable
  const std::size_t chunk = static_cast<std::size_t>(resolve_threads(inv.threads));
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < c.sweep.grid.size(); i += chunk) {
    spec.grid.assign(c.sweep.grid.begin() + i, c.sweep.grid.begin() + std::min(i + chunk, c.sweep.grid.size()));
    for (const auto& r : run_sweep(spec, gate).rows) {
      csv.row({num(r.value), num(r.infidelity), num(r.oracle_infidelity), r.flag});
      rows.push_back({{"value", r.value},
                      {"infidelity_analytic", jnum(r.infidelity)},
                      {"infidelity_oracle", jnum(r.oracle_infidelity)},
                      {"flag", r.flag}});
    }
  }
  res["parameter"] = c.sweep.parameter;
  res["base_infidelity"] = jnum(base_infidelity(gate));
  res["schedule"] = schedule_json(gate.schedule);
  res["rows"] = rows;
  write_record(inv, name, res);
}

// --- oracle -----------------------------------------------------------------

void oracle(const Invocation& inv) {
  const auto& c = inv.config;
  const auto model = build_model(c);
  const auto& trap = need_trap(build_trap(c), "the oracle");
  const auto schedule = given_schedule(inv, model);
  if (!schedule) config_error("oracle needs --schedule or [gate] taus");
  auto opts = build_oracle(c);
  opts.record = true;
  const auto sys = prepare_oracle(trap, mode_spectrum(trap, {true, opts.crystal}), opts);
  const auto train = train_for(*schedule, c);
  const auto o = run_oracle(sys, train, build_thermal(c), opts, std::min(4, resolve_threads(inv.threads)));
  CsvWriter csv(inv.out / "oracle.csv", {"basis", "phase", "displacement_com", "displacement_breathing"});
  ordered_json bases = ordered_json::array();
  for (const auto& g : o.basis) {
    const auto d = [&](std::size_t k) { return k < g.displacement.size() ? g.displacement[k] : NAN; };
    csv.row({basis_label(g.basis), num(g.phase), num(d(0)), num(d(1))});
    bases.push_back({{"basis", basis_label(g.basis)}, {"phase", g.phase}, {"displacement", jvec(g.displacement)}});
  }
  for (auto b : {BasisState::up_up, BasisState::up_down, BasisState::down_up, BasisState::down_down}) {
    const auto tr = integrate_trajectories(sys, train, b, opts);
    std::ofstream out(inv.out / ("trajectory_" + basis_label(b) + ".csv"));
    write_trajectory_csv(out, tr, sys);
  }
  ordered_json res = report_json(o.report);
  res["errors"] = errors_json(o.errors);
  res["basis"] = bases;
  res["schedule"] = schedule_json(*schedule);
  write_record(inv, "oracle", res);
}

}  // namespace

ordered_json schedule_json(const PulseSchedule& s) {
  return {{"group_times", s.group_times},
          {"group_counts", s.group_counts},
          {"scale_n", s.scale_n},
          {"phi_rf", s.phi_rf},
          {"snap_displacement", s.snap_displacement}};
}

PulseSchedule load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open schedule '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error("schedule '" + path + "': " + e.what());
  }
  // optimize, evaluate and sweep records nest it
  if (j.contains("results") && j["results"].contains("schedule")) j = j["results"]["schedule"];
  PulseSchedule s;
  try {
    const auto times = j.at("group_times").get<std::vector<double>>();
    const auto counts = j.at("group_counts").get<std::vector<int>>();
    if (times.size() != counts.size() || (times.size() != 6 && !times.empty())) {
      config_error("schedule '" + path + "': expected six groups or none");
    }
    for (std::size_t g = 0; g < times.size(); ++g) {
      s.group_times[g] = times[g];
      s.group_counts[g] = counts[g];
    }
    s.scale_n = j.value("scale_n", 1);
    s.phi_rf = j.value("phi_rf", 0.0);
    s.snap_displacement = j.value("snap_displacement", 0.0);
  } catch (const json::exception& e) {
    config_error("schedule '" + path + "': " + e.what());
  }
  return s;
}

void run_command(const Invocation& inv) {
  std::filesystem::create_directories(inv.out);
  if (inv.command == "characterize") return characterize(inv);
  if (inv.command == "optimize") return optimize(inv);
  if (inv.command == "evaluate") return evaluate(inv);
  if (inv.command == "sweep") return sweep(inv);
  if (inv.command == "oracle") return oracle(inv);
  config_error("unknown command '" + inv.command + "'");
}

}  // namespace fastgate::cli
