#include "runconfig.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/mathieu.hpp"

namespace fastgate::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

double to_double(const std::string& s) {
  if (s == "inf") return INFINITY;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

template <class Int>
Int to_int(const std::string& s) {
  Int v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

const std::string& single(const std::vector<std::string>& in) {
  if (in.size() != 1) throw std::invalid_argument("expected one value, got " + std::to_string(in.size()));
  return in.front();
}

// value conversions per field type: INI inputs, INI text, JSON

void read(double& v, const std::vector<std::string>& in) { v = to_double(single(in)); }
void read(int& v, const std::vector<std::string>& in) { v = to_int<int>(single(in)); }
void read(std::uint64_t& v, const std::vector<std::string>& in) { v = to_int<std::uint64_t>(single(in)); }
void read(bool& v, const std::vector<std::string>& in) { v = to_bool(single(in)); }
void read(std::string& v, const std::vector<std::string>& in) { v = single(in); }
void read(std::optional<double>& v, const std::vector<std::string>& in) { v = to_double(single(in)); }
void read(std::vector<double>& v, const std::vector<std::string>& in) {
  v.clear();
  for (const auto& s : in) v.push_back(to_double(s));
}
void read(std::optional<std::array<double, 3>>& v, const std::vector<std::string>& in) {
  if (in.size() != 3) throw std::invalid_argument("expected three timings");
  v = std::array<double, 3>{to_double(in[0]), to_double(in[1]), to_double(in[2])};
}

std::optional<std::string> text(double v) { return format_number(v); }
std::optional<std::string> text(int v) { return std::to_string(v); }
std::optional<std::string> text(std::uint64_t v) { return std::to_string(v); }
std::optional<std::string> text(bool v) { return v ? "true" : "false"; }
std::optional<std::string> text(const std::string& v) { return v; }
std::optional<std::string> text(const std::optional<double>& v) {
  return v ? std::optional(format_number(*v)) : std::nullopt;
}
std::optional<std::string> text(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
  return out;
}
std::optional<std::string> text(const std::optional<std::array<double, 3>>& v) {
  if (!v) return std::nullopt;
  return format_number((*v)[0]) + ", " + format_number((*v)[1]) + ", " + format_number((*v)[2]);
}

template <class T>
std::optional<ordered_json> to_j(const T& v) {
  return ordered_json(v);
}
template <class T>
std::optional<ordered_json> to_j(const std::optional<T>& v) {
  return v ? std::optional(ordered_json(*v)) : std::nullopt;
}

template <class T>
void from_j(T& v, const json& j) {
  v = j.get<T>();
}
template <class T>
void from_j(std::optional<T>& v, const json& j) {
  v = j.get<T>();
}

struct Field {
  std::string section, key;
  std::function<void(RunConfig&, const std::vector<std::string>&)> read;
  std::function<std::optional<std::string>(const RunConfig&)> text;
  std::function<std::optional<ordered_json>(const RunConfig&)> to_json;
  std::function<void(RunConfig&, const json&)> from_json;
};

template <class S, class T>
Field field(const char* section, const char* key, S RunConfig::*sec, T S::*member) {
  return {section,
          key,
          [=](RunConfig& c, const std::vector<std::string>& in) { read(c.*sec.*member, in); },
          [=](const RunConfig& c) { return text(c.*sec.*member); },
          [=](const RunConfig& c) { return to_j(c.*sec.*member); },
          [=](RunConfig& c, const json& j) { from_j(c.*sec.*member, j); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      field("trap", "type", &RunConfig::trap, &TrapSection::type),
      field("trap", "species", &RunConfig::trap, &TrapSection::species),
      field("trap", "mass_amu", &RunConfig::trap, &TrapSection::mass_amu),
      field("trap", "d_um", &RunConfig::trap, &TrapSection::d_um),
      field("trap", "kappa", &RunConfig::trap, &TrapSection::kappa),
      field("trap", "a", &RunConfig::trap, &TrapSection::a),
      field("trap", "q", &RunConfig::trap, &TrapSection::q),
      field("trap", "secular_mhz", &RunConfig::trap, &TrapSection::secular_mhz),
      field("trap", "rf_mhz", &RunConfig::trap, &TrapSection::rf_mhz),
      field("trap", "stray_offset", &RunConfig::trap, &TrapSection::stray_offset),
      field("trap", "chi", &RunConfig::trap, &TrapSection::chi),
      field("trap", "mu", &RunConfig::trap, &TrapSection::mu),
      field("trap", "rf_period", &RunConfig::trap, &TrapSection::rf_period),
      field("laser", "eta", &RunConfig::laser, &LaserSection::eta),
      field("laser", "rep_rate", &RunConfig::laser, &LaserSection::rep_rate),
      field("gate", "n", &RunConfig::gate, &GateSection::n),
      field("gate", "time_bound", &RunConfig::gate, &GateSection::time_bound),
      field("gate", "target_sign", &RunConfig::gate, &GateSection::target_sign),
      field("gate", "mu_mode", &RunConfig::gate, &GateSection::mu_mode),
      field("gate", "drive", &RunConfig::gate, &GateSection::drive),
      field("gate", "n_bar", &RunConfig::gate, &GateSection::n_bar),
      field("gate", "taus", &RunConfig::gate, &GateSection::taus),
      field("optimizer", "starts", &RunConfig::optimizer, &OptimizerSection::starts),
      field("optimizer", "seed", &RunConfig::optimizer, &OptimizerSection::seed),
      field("optimizer", "max_iterations", &RunConfig::optimizer, &OptimizerSection::max_iterations),
      field("optimizer", "gradient_tolerance", &RunConfig::optimizer, &OptimizerSection::gradient_tolerance),
      field("optimizer", "lattice_radius", &RunConfig::optimizer, &OptimizerSection::lattice_radius),
      field("optimizer", "bounds", &RunConfig::optimizer, &OptimizerSection::bounds),
      field("optimizer", "mus", &RunConfig::optimizer, &OptimizerSection::mus),
      field("sweep", "parameter", &RunConfig::sweep, &SweepSection::parameter),
      field("sweep", "grid", &RunConfig::sweep, &SweepSection::grid),
      field("sweep", "oracle", &RunConfig::sweep, &SweepSection::oracle),
      field("sweep", "first_pulse_phase", &RunConfig::sweep, &SweepSection::first_pulse_phase),
      field("oracle", "steps_per_rf_period", &RunConfig::oracle, &OracleSection::steps_per_rf_period),
      field("oracle", "tail", &RunConfig::oracle, &OracleSection::tail),
      field("oracle", "kick_scale", &RunConfig::oracle, &OracleSection::kick_scale),
      field("param_space", "a_min", &RunConfig::param_space, &ParamSpaceSection::a_min),
      field("param_space", "a_max", &RunConfig::param_space, &ParamSpaceSection::a_max),
      field("param_space", "a_steps", &RunConfig::param_space, &ParamSpaceSection::a_steps),
      field("param_space", "q_min", &RunConfig::param_space, &ParamSpaceSection::q_min),
      field("param_space", "q_max", &RunConfig::param_space, &ParamSpaceSection::q_max),
      field("param_space", "q_steps", &RunConfig::param_space, &ParamSpaceSection::q_steps),
      field("param_space", "phi_rf", &RunConfig::param_space, &ParamSpaceSection::phi_rf),
  };
  return all;
}

const std::map<std::string, double>& species_masses() {
  static const std::map<std::string, double> m = {
      {"Be9", 9.0121831},   {"Mg24", 23.9850417}, {"Ca40", 39.9626},
      {"Sr88", 87.9056125}, {"Ba138", 137.905247}, {"Yb171", 170.9363315},
  };
  return m;
}

// where each "section.key" sits in the text, for error messages
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#' || line[b] == ';') continue;
    if (line[b] == '[') {
      const auto e = line.find(']', b);
      section = line.substr(b + 1, e == std::string::npos ? std::string::npos : e - b - 1);
      continue;
    }
    const auto eq = line.find('=', b);
    if (eq == std::string::npos) continue;
    auto key = line.substr(b, eq - b);
    key.erase(key.find_last_not_of(" \t") + 1);
    out.emplace(section + "." + key, number);
  }
  return out;
}

void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) fail("[" + where + ": " + what);
}

void validate(const RunConfig& c) {
  const auto& t = c.trap;
  check(t.type == "microtrap" || t.type == "paul" || t.type == "ideal", "trap] type",
        "must be microtrap, paul or ideal, got '" + t.type + "'");
  check(t.mass_amu || species_masses().count(t.species), "trap] species", "unknown species '" + t.species + "'");
  if (t.mass_amu) check(*t.mass_amu > 0, "trap] mass_amu", "must be positive");
  check(t.d_um > 0, "trap] d_um", "must be positive");
  check(t.kappa > 0 && t.kappa < 1, "trap] kappa", "must lie in (0, 1)");
  check(t.q >= 0, "trap] q", "must be non-negative");
  check(!(t.secular_mhz && t.rf_mhz), "trap] secular_mhz",
        "give at most one of secular_mhz and rf_mhz, the other is derived");
  if (t.secular_mhz) check(*t.secular_mhz > 0, "trap] secular_mhz", "must be positive");
  if (t.rf_mhz) check(*t.rf_mhz > 0, "trap] rf_mhz", "must be positive");
  check(std::abs(t.stray_offset) < 0.5, "trap] stray_offset", "must be a small fraction");
  check(t.chi > -1, "trap] chi", "must exceed -1");
  check(t.mu > 0, "trap] mu", "must be positive");
  check(t.rf_period >= 0, "trap] rf_period", "must be non-negative");
  check(c.laser.eta > 0, "laser] eta", "must be positive");
  check(c.laser.rep_rate >= 0, "laser] rep_rate", "must be non-negative (0 = instantaneous)");
  const auto& g = c.gate;
  check(g.n >= 1, "gate] n", "must be at least 1");
  check(g.time_bound > 0, "gate] time_bound", "must be positive");
  check(g.target_sign >= -1 && g.target_sign <= 1, "gate] target_sign", "must be -1, 0 or 1");
  check(g.mu_mode == "with" || g.mu_mode == "without", "gate] mu_mode", "must be with or without");
  check(g.drive == "locked" || g.drive == "tuned", "gate] drive", "must be locked or tuned");
  check(g.n_bar >= 0, "gate] n_bar", "must be non-negative");
  if (g.taus) {
    for (double v : *g.taus) check(v > 0, "gate] taus", "timings must be positive");
  }
  const auto& o = c.optimizer;
  check(o.starts >= 1, "optimizer] starts", "must be at least 1");
  check(o.max_iterations >= 1, "optimizer] max_iterations", "must be at least 1");
  check(o.gradient_tolerance > 0, "optimizer] gradient_tolerance", "must be positive");
  check(o.lattice_radius >= 0, "optimizer] lattice_radius", "must be non-negative");
  check(std::is_sorted(o.bounds.begin(), o.bounds.end()) &&
            std::adjacent_find(o.bounds.begin(), o.bounds.end()) == o.bounds.end(),
        "optimizer] bounds", "must be strictly increasing");
  for (double b : o.bounds) check(b > 0, "optimizer] bounds", "must be positive");
  for (double m : o.mus) check(m > 0, "optimizer] mus", "must be positive");
  try {
    parse_parameter(c.sweep.parameter);
  } catch (const Error&) {
    check(false, "sweep] parameter", "unknown sweep parameter '" + c.sweep.parameter + "'");
  }
  check(std::is_sorted(c.sweep.grid.begin(), c.sweep.grid.end()), "sweep] grid", "must be sorted");
  check(c.oracle.steps_per_rf_period >= 20, "oracle] steps_per_rf_period", "must be at least 20");
  check(c.oracle.tail > 0, "oracle] tail", "must be positive");
  check(c.oracle.kick_scale > 0, "oracle] kick_scale", "must be positive");
  const auto& p = c.param_space;
  check(p.a_steps >= 1 && p.q_steps >= 1, "param_space] a_steps", "grids need at least one point");
  check(p.a_max >= p.a_min && p.q_max >= p.q_min && p.q_min >= 0, "param_space] q_min", "ranges are inverted");
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    fail(std::string("unreadable config: ") + e.what());
  }
  const auto lines = key_lines(text);
  RunConfig c;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string section = join(item.parents);
    const std::string id = section + "." + item.name;
    const auto it = lines.find(id);
    const std::string where = (it != lines.end() ? "line " + std::to_string(it->second) + ", " : std::string()) +
                              "[" + section + "] " + item.name;
    const auto f = std::find_if(fields().begin(), fields().end(),
                                [&](const Field& x) { return x.section == section && x.key == item.name; });
    if (f == fields().end()) fail(where + ": unknown setting");
    try {
      f->read(c, item.inputs);
    } catch (const std::invalid_argument& e) {
      fail(where + ": " + e.what());
    }
  }
  try {
    validate(c);
  } catch (const Error& e) {
    // attach the line of the offending key when it is present in the file
    std::string msg = e.what();
    const auto open = msg.find('[');
    const auto colon = msg.find(": ", open);
    if (open != std::string::npos && colon != std::string::npos) {
      const auto sec_end = msg.find(']', open);
      const std::string id = msg.substr(open + 1, sec_end - open - 1) + "." + msg.substr(sec_end + 2, colon - sec_end - 2);
      const auto it = lines.find(id);
      if (it != lines.end()) fail("line " + std::to_string(it->second) + ", " + msg.substr(open));
    }
    throw;
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const RunConfig& config) {
  std::string out, section;
  for (const auto& f : fields()) {
    const auto v = f.text(config);
    if (!v) continue;
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + ("[" + f.section + "]\n");
      section = f.section;
    }
    out += f.key + " = " + *v + "\n";
  }
  return out;
}

ordered_json to_json(const RunConfig& config) {
  ordered_json j = ordered_json::object();
  for (const auto& f : fields()) {
    if (auto v = f.to_json(config)) j[f.section][f.key] = *v;
  }
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  for (const auto& f : fields()) {
    if (j.contains(f.section) && j[f.section].contains(f.key)) f.from_json(c, j[f.section][f.key]);
  }
  validate(c);
  return c;
}

double ion_mass_kg(const TrapSection& trap) {
  const double amu = trap.mass_amu ? *trap.mass_amu : species_masses().at(trap.species);
  return amu * constants::atomic_mass_unit;
}

std::optional<Trap> build_trap(const RunConfig& config) {
  const auto& t = config.trap;
  if (t.type == "ideal") return std::nullopt;
  const MathieuParams p{t.a, t.q};
  double omega = 2.0 * constants::pi * 1e6;
  if (t.secular_mhz) omega = 2.0 * constants::pi * 1e6 * *t.secular_mhz;
  if (t.rf_mhz) omega = 0.5 * characteristic_exponent(p) * 2.0 * constants::pi * 1e6 * *t.rf_mhz;
  const double mass = ion_mass_kg(t);
  if (t.type == "paul") return Trap{make_paul_trap(omega, p, t.kappa, mass)};
  auto m = make_microtrap(t.d_um * 1e-6, omega, p, mass);
  m.second_trap_offset = t.stray_offset;
  return Trap{m};
}

GateModel build_model(const RunConfig& config) {
  const auto mode = config.gate.mu_mode == "with" ? MuMode::with_micromotion : MuMode::without_micromotion;
  GateModel m;
  if (const auto trap = build_trap(config)) {
    m = gate_model(*trap, mode);
  } else {
    m = ideal_model(config.trap.chi, config.trap.mu, config.trap.rf_period);
    if (mode == MuMode::without_micromotion) {
      m.mu = 1.0;
      m.rf_period = 0.0;
    }
  }
  if (config.gate.drive == "tuned") m.rf_period = 0.0;
  return m;
}

OptimizationConfig build_optimizer(const RunConfig& config, int threads) {
  OptimizationConfig o;
  o.time_bound = config.gate.time_bound;
  o.n = config.gate.n;
  o.target_sign = config.gate.target_sign;
  o.mu_mode = config.gate.mu_mode == "with" ? MuMode::with_micromotion : MuMode::without_micromotion;
  o.starts = config.optimizer.starts;
  o.seed = config.optimizer.seed;
  o.max_iterations = config.optimizer.max_iterations;
  o.gradient_tolerance = config.optimizer.gradient_tolerance;
  o.lattice_radius = config.optimizer.lattice_radius;
  o.laser.lamb_dicke_eta = config.laser.eta;
  o.thermal = build_thermal(config);
  o.threads = threads;
  return o;
}

OracleOptions build_oracle(const RunConfig& config) {
  OracleOptions o;
  o.steps_per_rf_period = config.oracle.steps_per_rf_period;
  o.tail_secular_periods = config.oracle.tail;
  o.kick_scale = config.oracle.kick_scale;
  o.laser.lamb_dicke_eta = config.laser.eta;
  return o;
}

ThermalState build_thermal(const RunConfig& config) {
  ThermalState t;
  t.mean_occupation = config.gate.n_bar;
  return t;
}

}  // namespace fastgate::cli
