#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "fastgate/constants.hpp"
#include "fastgate/errors.hpp"
#include "runconfig.hpp"

using namespace fastgate;
using namespace fastgate::cli;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fastgate_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.what();
  }
  return "";
}

const char* ideal_config = R"(# comment
[trap]
type = ideal
chi = -0.014
mu = 2.31

[laser]
eta = 0.2

[gate]
n = 12
time_bound = 1.2

[optimizer]
starts = 48
seed = 7
)";

int run_tool(const std::string& args) {
  const std::string cmd = std::string(FASTGATE_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("numbers print in shortest round-trip form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(u(rng), static_cast<int>(u(rng)));
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(NAN) == "nan");
}

TEST_CASE("configs round-trip through INI and JSON") {
  const auto c = parse_config(std::string(ideal_config) + "[sweep]\nparameter = chi_error\ngrid = -0.02, 0, 0.02\n");
  CHECK(c.trap.type == "ideal");
  CHECK(c.trap.mu == 2.31);
  CHECK(c.optimizer.seed == 7);
  CHECK(c.sweep.grid == std::vector<double>{-0.02, 0.0, 0.02});
  const auto ini = to_ini(c);
  CHECK(to_ini(parse_config(ini)) == ini);
  const auto j = to_json(c).dump();
  CHECK(to_json(from_json(nlohmann::json::parse(j))).dump() == j);
  CHECK(to_json(parse_config(ini)).dump() == j);
  // awkward values survive too
  RunConfig d;
  d.trap.kappa = 1.0 / 6;
  d.trap.rf_mhz = 300.0 / 7;
  d.gate.taus = std::array<double, 3>{0.1 + 0.2, 1.0 / 3, 2e-9};
  CHECK(to_ini(parse_config(to_ini(d))) == to_ini(d));
  CHECK(parse_config(to_ini(d)).gate.taus == d.gate.taus);
}

TEST_CASE("config errors name the line and field") {
  CHECK(error_of("[trap]\ntype = paul\nq = abc\n").find("line 3, [trap] q") != std::string::npos);
  CHECK(error_of("[trap]\nwidth = 3\n").find("[trap] width: unknown setting") != std::string::npos);
  CHECK(error_of("[lasers]\neta = 0.1\n").find("unknown setting") != std::string::npos);
  CHECK(error_of("\n[trap]\nsecular_mhz = 1\nrf_mhz = 30\n").find("line 3, [trap] secular_mhz") != std::string::npos);
  CHECK(error_of("[gate]\nmu_mode = sometimes\n").find("[gate] mu_mode") != std::string::npos);
  CHECK(error_of("[sweep]\ngrid = 1, 0\n").find("[sweep] grid") != std::string::npos);
  CHECK(error_of("[sweep]\nparameter = colour\n").find("[sweep] parameter") != std::string::npos);
  CHECK(error_of("[trap]\nspecies = Xx99\n").find("unknown species") != std::string::npos);
  CHECK(error_of("[gate]\ntaus = 0.1, 0.2\n").find("three timings") != std::string::npos);
}

TEST_CASE("trap construction") {
  auto c = parse_config("[trap]\ntype = paul\nkappa = 0.16666666666666666\nq = 0.2\nrf_mhz = 14\n");
  const auto t = build_trap(c);
  REQUIRE(t);
  // secular frequency derived from the drive: omega = beta Omega / 2
  const double beta = trap_beta(*t);
  CHECK(trap_secular_omega(*t) == doctest::Approx(0.5 * beta * 2 * pi * 14e6).epsilon(1e-12));
  CHECK(ion_mass_kg(c.trap) == doctest::Approx(calcium40().mass_kg).epsilon(1e-12));
  c.trap.mass_amu = 9.0121831;
  CHECK(ion_mass_kg(c.trap) == doctest::Approx(9.0121831 * 1.66053906660e-27));
  c.gate.drive = "tuned";
  CHECK(build_model(c).rf_period == 0.0);
  c.gate.drive = "locked";
  CHECK(build_model(c).rf_period == doctest::Approx(0.5 * beta));
  CHECK_FALSE(build_trap(parse_config(ideal_config)));
}

TEST_CASE("characterize reports") {
  const auto dir = scratch("characterize");
  Invocation inv;
  inv.command = "characterize";
  inv.out = dir;
  inv.config = parse_config("[trap]\ntype = paul\nkappa = 0.16666666666666666\na = 0\nq = 0.2\n");
  inv.param_space = true;
  inv.config.param_space.a_steps = 3;
  inv.config.param_space.q_steps = 4;
  run_command(inv);
  const auto j = nlohmann::json::parse(slurp(dir / "characterize.json"));
  CHECK(j["schema_version"] == schema_version);
  const auto& r = j["results"];
  CHECK(r["chi_static"].get<double>() == doctest::Approx(-1.399e-2).epsilon(1e-3));
  // small-q approximation of the enhancement, and the full value within 5 % of it
  CHECK(r["mu_approx_pi"].get<double>() == doctest::Approx(1.21).epsilon(0.01));
  CHECK(r["mu_pi"].get<double>() == doctest::Approx(r["mu_approx_pi"].get<double>()).epsilon(0.05));
  const auto ps = read_csv(dir / "param_space.csv");
  CHECK(ps.size() == 1 + 12);
  CHECK(ps[0] == std::vector<std::string>{"a", "q", "stable", "beta", "mu"});
  // a = -0.3 with q = 0 does not confine
  CHECK(ps[1][2] == "0");
}

TEST_CASE("optimize records are reproducible") {
  const auto a = scratch("opt_a"), b = scratch("opt_b");
  Invocation inv;
  inv.command = "optimize";
  inv.config = parse_config(ideal_config);
  inv.out = a;
  inv.threads = 1;
  run_command(inv);
  inv.out = b;
  inv.threads = 4;
  run_command(inv);
  CHECK(slurp(a / "optimize.json") == slurp(b / "optimize.json"));
  CHECK(slurp(a / "optimize.csv") == slurp(b / "optimize.csv"));
  const auto j = nlohmann::json::parse(slurp(a / "optimize.json"));
  CHECK(j["results"]["metadata"]["mu"] == 2.31);
  CHECK(j["results"]["metadata"]["lock_phase"].get<double>() == doctest::Approx(pi));
  CHECK(j["config"]["optimizer"]["seed"] == 7);
  // the embedded config is the resolved one and reads back identically
  const auto embedded = nlohmann::ordered_json::parse(slurp(a / "optimize.json"))["config"].dump();
  CHECK(to_json(from_json(nlohmann::json::parse(embedded))).dump() == embedded);
  const auto s = load_schedule((a / "optimize.json").string());
  CHECK(s.scale_n == 12);
  CHECK(s.phi_rf == doctest::Approx(pi));
}

TEST_CASE("evaluate and sweep agree at the zero point") {
  const auto dir = scratch("eval");
  auto config = parse_config(std::string(ideal_config) + "[sweep]\nparameter = thermal_n\ngrid = 0, 0.1, 1, 10, 100\n");
  config.gate.taus = std::array<double, 3>{0.55, 0.36, 0.21};
  Invocation inv;
  inv.config = config;
  inv.out = dir;
  inv.command = "evaluate";
  run_command(inv);
  inv.command = "sweep";
  run_command(inv);
  const auto ev = read_csv(dir / "evaluate.csv");
  REQUIRE(ev.size() == 2);  // ideal model: analytic only
  CHECK(ev[1][0] == "analytic");
  const auto sw = read_csv(dir / "sweep_thermal_n.csv");
  CHECK(sw[0] == std::vector<std::string>{"n_bar", "infidelity_analytic", "infidelity_oracle", "flag"});
  REQUIRE(sw.size() == 6);
  CHECK(std::stod(sw[2][1]) == doctest::Approx(std::stod(ev[1][1])).epsilon(1e-12));
  // restoration terms are linear in the occupation: regress and check the fit is exact
  std::vector<double> x, y;
  for (std::size_t i = 1; i < sw.size(); ++i) {
    x.push_back(std::stod(sw[i][0]));
    y.push_back(std::stod(sw[i][1]));
  }
  const double mx = (x[0] + x[1] + x[2] + x[3] + x[4]) / 5, my = (y[0] + y[1] + y[2] + y[3] + y[4]) / 5;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  for (int i = 0; i < 5; ++i) CHECK(y[i] == doctest::Approx(my + slope * (x[i] - mx)).epsilon(1e-9));
}

TEST_CASE("empty schedule") {
  const auto dir = scratch("empty");
  {
    std::ofstream out(dir / "empty.json");
    out << R"({"group_times": [], "group_counts": [], "phi_rf": 0})";
  }
  Invocation inv;
  inv.command = "evaluate";
  inv.config = parse_config("[trap]\ntype = paul\nkappa = 0.16666666666666666\nq = 0.2\n");
  inv.config.oracle.steps_per_rf_period = 60;
  inv.out = dir;
  inv.schedule_path = (dir / "empty.json").string();
  run_command(inv);
  const auto ev = read_csv(dir / "evaluate.csv");
  REQUIRE(ev.size() == 4);
  const double expected = 2.0 / 3.0 * (pi / 4) * (pi / 4);
  for (int i = 1; i <= 3; ++i) CHECK(std::stod(ev[i][1]) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(ev[3][0] == "oracle");
}

TEST_CASE("phase sweep file layout") {
  const auto dir = scratch("phase");
  Invocation inv;
  inv.command = "sweep";
  inv.config = parse_config(std::string(ideal_config) + "[sweep]\nparameter = phase_offset\ngrid = -0.2, 0, 0.2\n");
  inv.config.gate.taus = std::array<double, 3>{0.55, 0.36, 0.21};
  inv.out = dir;
  run_command(inv);
  const auto sw = read_csv(dir / "sweep_phase_offset.csv");
  CHECK(sw[0] == std::vector<std::string>{"offset_rad", "infidelity_analytic", "infidelity_oracle", "flag"});
  CHECK(sw.size() == 4);
  CHECK(sw[2][2] == "nan");
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  {
    std::ofstream(dir / "bad.ini") << "[trap]\nq = nope\n";
    std::ofstream(dir / "unstable.ini") << "[trap]\ntype = paul\na = 0.3\nq = 0.9\n";
    std::ofstream(dir / "ideal.ini") << ideal_config;
  }
  const std::string out = " --out " + (dir / "o").string();
  CHECK(run_tool("--config " + (dir / "ideal.ini").string() + out + " characterize") == 0);
  CHECK(run_tool("--config " + (dir / "bad.ini").string() + out + " characterize") == 2);
  CHECK(run_tool("--config " + (dir / "unstable.ini").string() + out + " characterize") == 3);
  CHECK(run_tool("--config " + (dir / "ideal.ini").string() + out + " evaluate") == 2);  // no schedule
  CHECK(run_tool("--bogus characterize") == 2);
  CHECK(run_tool("--help") == 0);
}
