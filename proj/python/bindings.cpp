#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fastgate/errors.hpp"
#include "fastgate/mathieu.hpp"
#include "fastgate/odeoracle.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/robustness.hpp"

namespace py = pybind11;
using namespace fastgate;

namespace {

void bind_mathieu(py::module_& m) {
  py::class_<MathieuParams>(m, "MathieuParams")
      .def(py::init([](double a, double q) { return MathieuParams{a, q}; }), py::arg("a") = 0.0, py::arg("q") = 0.0)
      .def_readwrite("a", &MathieuParams::a)
      .def_readwrite("q", &MathieuParams::q)
      .def("__repr__", [](const MathieuParams& p) {
        return "MathieuParams(a=" + std::to_string(p.a) + ", q=" + std::to_string(p.q) + ")";
      });
  py::class_<FloquetSolution>(m, "FloquetSolution")
      .def_readonly("beta", &FloquetSolution::beta)
      .def_readonly("truncation_order", &FloquetSolution::truncation_order)
      .def_readonly("coefficients", &FloquetSolution::coefficients)
      .def("envelope", &FloquetSolution::envelope, py::arg("rf_phase"));
  m.def("characteristic_exponent", [](const MathieuParams& p) { return characteristic_exponent(p); });
  m.def("stability", [](const MathieuParams& p) { return stability(p); });
  m.def("floquet_solution", [](const MathieuParams& p) { return floquet_solution(p); });
  m.def("mu_factor", [](const MathieuParams& p, double phi) { return mu_factor(floquet_solution(p), phi); },
        py::arg("params"), py::arg("phi_rf"), "Kick enhancement at RF phase phi_rf.");
  m.def("mu_approx", &mu_approx, py::arg("params"), py::arg("beta"), py::arg("phi_rf"));
  m.def("find_a_for_beta", &find_a_for_beta, py::arg("q"), py::arg("beta"));
}

void bind_traps(py::module_& m) {
  py::class_<MicrotrapArray>(m, "MicrotrapArray")
      .def_readonly("separation_d", &MicrotrapArray::separation_d)
      .def_readonly("secular_omega", &MicrotrapArray::secular_omega)
      .def_readonly("mathieu", &MicrotrapArray::mathieu)
      .def_readonly("rf_angular_frequency", &MicrotrapArray::rf_angular_frequency)
      .def_readonly("ion_mass", &MicrotrapArray::ion_mass)
      .def_readwrite("second_trap_offset", &MicrotrapArray::second_trap_offset);
  py::class_<PaulTrap>(m, "PaulTrap")
      .def_readonly("mathieu", &PaulTrap::mathieu_radial)
      .def_readonly("kappa", &PaulTrap::kappa)
      .def_readonly("secular_omega", &PaulTrap::secular_omega)
      .def_readonly("rf_angular_frequency", &PaulTrap::rf_angular_frequency)
      .def_readonly("ion_mass", &PaulTrap::ion_mass);
  m.def("make_microtrap", &make_microtrap, py::arg("separation_d"), py::arg("secular_omega"), py::arg("params"),
        py::arg("ion_mass"), py::arg("charge_number") = 1);
  m.def("make_paul_trap", &make_paul_trap, py::arg("radial_secular_omega"), py::arg("params"), py::arg("kappa"),
        py::arg("ion_mass"), py::arg("charge_number") = 1);
  m.def("trap_beta", &trap_beta);

  py::class_<Mode>(m, "Mode")
      .def_readonly("label", &Mode::label)
      .def_readonly("frequency_ratio", &Mode::frequency_ratio)
      .def_readonly("coupling", &Mode::coupling)
      .def_readonly("mathieu", &Mode::mathieu)
      .def_readonly("beta", &Mode::beta);
  py::class_<ModeSpectrum>(m, "ModeSpectrum")
      .def_readonly("modes", &ModeSpectrum::modes)
      .def_readonly("secular_omega", &ModeSpectrum::secular_omega)
      .def_property_readonly("chi", &ModeSpectrum::chi);
  m.def("mode_spectrum", [](const Trap& t) { return mode_spectrum(t); });
  m.def("harmonic_spectrum", &harmonic_spectrum, py::arg("chi"), py::arg("secular_omega") = 1.0);
  m.def("xi_param", &xi_param, py::arg("separation_d"), py::arg("omega"), py::arg("ion_mass"),
        py::arg("charge_number") = 1);
  m.def("chi_microtrap", [](double xi) { return chi_microtrap(xi).chi; });
  m.def("chi_paul", [](double kappa) { return chi_paul(kappa).chi; });
}

void bind_gates(py::module_& m) {
  py::class_<PulseSchedule>(m, "PulseSchedule")
      .def(py::init<>())
      .def_readwrite("group_times", &PulseSchedule::group_times)
      .def_readwrite("group_counts", &PulseSchedule::group_counts)
      .def_readwrite("scale_n", &PulseSchedule::scale_n)
      .def_readwrite("phi_rf", &PulseSchedule::phi_rf)
      .def_readonly("snap_displacement", &PulseSchedule::snap_displacement)
      .def_property_readonly("gate_time", &PulseSchedule::gate_time)
      .def_property_readonly("total_pulse_pairs", &PulseSchedule::total_pulse_pairs);
  py::class_<KickEvent>(m, "KickEvent")
      .def_readonly("time", &KickEvent::time)
      .def_readonly("sign", &KickEvent::sign)
      .def_readonly("group", &KickEvent::group);
  py::class_<KickTrain>(m, "KickTrain")
      .def_readonly("kicks", &KickTrain::kicks)
      .def_readonly("repetition_rate", &KickTrain::repetition_rate)
      .def_readwrite("phi_rf", &KickTrain::phi_rf);
  m.def("frag_schedule", &frag_schedule, py::arg("tau1"), py::arg("tau2"), py::arg("tau3"), py::arg("n"),
        py::arg("phi_rf") = 0.0);
  m.def("phase_lock", &phase_lock, py::arg("schedule"), py::arg("beta"), py::arg("target_phase") = 3.141592653589793);
  m.def("expand_finite_rep", &expand_finite_rep, py::arg("schedule"), py::arg("rep_rate"));
  m.def("instantaneous_train", &instantaneous_train);
}

void bind_fidelity(py::module_& m) {
  py::class_<LaserConfig>(m, "LaserConfig")
      .def(py::init([](double eta) { return LaserConfig{eta}; }), py::arg("eta") = 0.1)
      .def_readwrite("lamb_dicke_eta", &LaserConfig::lamb_dicke_eta);
  py::class_<ThermalState>(m, "ThermalState")
      .def(py::init([](double n) {
             ThermalState t;
             t.mean_occupation = n;
             return t;
           }),
           py::arg("mean_occupation") = 0.1)
      .def_readwrite("mean_occupation", &ThermalState::mean_occupation)
      .def_readwrite("per_mode", &ThermalState::per_mode);
  py::class_<GateErrors>(m, "GateErrors")
      .def_readonly("phase_error", &GateErrors::phase_error)
      .def_readonly("raw_phase", &GateErrors::raw_phase)
      .def_readonly("mode_displacements", &GateErrors::mode_displacements)
      .def_readonly("mu_used", &GateErrors::mu_used)
      .def_readonly("sign_matches", &GateErrors::sign_matches);
  py::class_<FidelityReport>(m, "FidelityReport")
      .def_readonly("infidelity", &FidelityReport::infidelity)
      .def_readonly("phase_term", &FidelityReport::phase_term)
      .def_readonly("restoration_terms", &FidelityReport::restoration_terms);
  m.def("gate_errors",
        py::overload_cast<const PulseSchedule&, const ModeSpectrum&, double, const LaserConfig&, int>(&gate_errors),
        py::arg("schedule"), py::arg("spectrum"), py::arg("mu"), py::arg("laser") = LaserConfig{},
        py::arg("target_sign") = 1);
  m.def("infidelity", &infidelity, py::arg("errors"), py::arg("thermal"), py::arg("spectrum"));
  m.def("floquet_infidelity",
        [](const KickTrain& train, const ModeSpectrum& spectrum, const LaserConfig& laser, const ThermalState& th) {
          return infidelity(floquet_gate_errors(train, micromotion_model(spectrum), laser), th, spectrum);
        },
        py::arg("train"), py::arg("spectrum"), py::arg("laser") = LaserConfig{}, py::arg("thermal") = ThermalState{});
}

void bind_optimizer(py::module_& m) {
  py::enum_<MuMode>(m, "MuMode")
      .value("with_micromotion", MuMode::with_micromotion)
      .value("without_micromotion", MuMode::without_micromotion);
  py::class_<GateModel>(m, "GateModel")
      .def_readwrite("spectrum", &GateModel::spectrum)
      .def_readwrite("mu", &GateModel::mu)
      .def_readwrite("rf_period", &GateModel::rf_period);
  m.def("gate_model", [](const Trap& t, MuMode mode) { return gate_model(t, mode); });
  m.def("ideal_model", &ideal_model, py::arg("chi"), py::arg("mu"), py::arg("rf_period") = 0.0);
  py::class_<OptimizationConfig>(m, "OptimizationConfig")
      .def(py::init<>())
      .def_readwrite("time_bound", &OptimizationConfig::time_bound)
      .def_readwrite("n", &OptimizationConfig::n)
      .def_readwrite("starts", &OptimizationConfig::starts)
      .def_readwrite("seed", &OptimizationConfig::seed)
      .def_readwrite("mu_mode", &OptimizationConfig::mu_mode)
      .def_readwrite("target_sign", &OptimizationConfig::target_sign)
      .def_readwrite("laser", &OptimizationConfig::laser)
      .def_readwrite("thermal", &OptimizationConfig::thermal)
      .def_readwrite("max_iterations", &OptimizationConfig::max_iterations)
      .def_readwrite("threads", &OptimizationConfig::threads)
      .def_readwrite("lattice_radius", &OptimizationConfig::lattice_radius);
  py::class_<OptimizationResult>(m, "OptimizationResult")
      .def_readonly("best_schedule", &OptimizationResult::best_schedule)
      .def_readonly("taus", &OptimizationResult::taus)
      .def_readonly("infidelity", &OptimizationResult::infidelity)
      .def_readonly("achieved_gate_time", &OptimizationResult::achieved_gate_time)
      .def_readonly("starts_converged", &OptimizationResult::starts_converged)
      .def_readonly("errors", &OptimizationResult::errors);
  m.def("optimize_gate",
        [](const GateModel& model, const OptimizationConfig& c) {
          py::gil_scoped_release release;
          return optimize_gate(model, c);
        },
        py::arg("model"), py::arg("config"));
  m.def("schedule_infidelity", &schedule_infidelity, py::arg("taus"), py::arg("model"), py::arg("config"));
}

void bind_oracle(py::module_& m) {
  py::class_<OracleOptions>(m, "OracleOptions")
      .def(py::init<>())
      .def_readwrite("steps_per_rf_period", &OracleOptions::steps_per_rf_period)
      .def_readwrite("tail_secular_periods", &OracleOptions::tail_secular_periods)
      .def_readwrite("kick_scale", &OracleOptions::kick_scale)
      .def_readwrite("laser", &OracleOptions::laser);
  m.def(
      "oracle_infidelity",
      [](const Trap& trap, const KickTrain& train, const ThermalState& th, OracleOptions o) {
        py::gil_scoped_release release;
        o.record = false;
        const auto sys = prepare_oracle(trap, mode_spectrum(trap, {true, o.crystal}), o);
        return run_oracle(sys, train, th, o).report;
      },
      py::arg("trap"), py::arg("train"), py::arg("thermal") = ThermalState{}, py::arg("options") = OracleOptions{},
      "Infidelity from integrating the full equations of motion.");
}

void bind_robustness(py::module_& m) {
  py::class_<RobustnessRow>(m, "RobustnessRow")
      .def_readonly("value", &RobustnessRow::value)
      .def_readonly("infidelity", &RobustnessRow::infidelity)
      .def_readonly("oracle_infidelity", &RobustnessRow::oracle_infidelity)
      .def_readonly("flag", &RobustnessRow::flag);
  m.def(
      "sweep",
      [](const std::string& parameter, const std::vector<double>& grid, const OptimizationResult& result,
         const GateModel& model, const OptimizationConfig& config, std::optional<Trap> trap, bool with_oracle) {
        py::gil_scoped_release release;
        SweepSpec spec;
        spec.parameter = parse_parameter(parameter);
        spec.grid = grid;
        spec.with_oracle = with_oracle;
        spec.threads = config.threads;
        return run_sweep(spec, gate_under_test(result, model, config, std::move(trap))).rows;
      },
      py::arg("parameter"), py::arg("grid"), py::arg("result"), py::arg("model"), py::arg("config"),
      py::arg("trap") = py::none(), py::arg("with_oracle") = false);
  m.def("field_to_frequency", &field_to_frequency);
  m.def("frequency_to_field", &frequency_to_field);
}

}  // namespace

PYBIND11_MODULE(_fastgate, m) {
  m.doc() = "Fast two-ion gates with RF micromotion";
  // message starts with the error kind, e.g. "Unstable: ..."
  py::register_exception<Error>(m, "FastgateError", PyExc_RuntimeError);
  bind_mathieu(m);
  bind_traps(m);
  bind_gates(m);
  bind_fidelity(m);
  bind_optimizer(m);
  bind_oracle(m);
  bind_robustness(m);
}
