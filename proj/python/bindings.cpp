// Python bindings for the solver, baselines and experiment harness.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "irsac/harness.hpp"
#include "irsac/io.hpp"
#include "irsac/oracles.hpp"

namespace py = pybind11;
using namespace irsac;

namespace {

py::dict outer_record_dict(const OuterRecord& r) {
  py::dict d;
  d["outer_iter"] = r.outer_iter;
  d["sigma"] = r.sigma;
  d["al_value"] = r.al_value;
  d["rho"] = r.rho;
  d["eta"] = r.eta;
  d["inner_tol"] = r.inner_tol;
  d["n_admitted"] = r.n_admitted;
  d["power_w"] = r.power_w;
  d["wall_time_s"] = r.wall_time_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Joint admission control and power minimisation for IRS-assisted downlinks";

  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical_error.ptr(), (e.block() + ": " + e.what()).c_str());
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    }
  });

  // ---- model ----------------------------------------------------------------------

  py::class_<Point2>(m, "Point2")
      .def(py::init<>())
      .def(py::init([](double x, double y) { return Point2{x, y}; }), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Point2::x)
      .def_readwrite("y", &Point2::y)
      .def("__repr__", [](const Point2& p) {
        return "Point2(" + format_double(p.x) + ", " + format_double(p.y) + ")";
      });

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("n_antennas", &Scenario::n_antennas)
      .def_readwrite("n_users", &Scenario::n_users)
      .def_readwrite("n_irs_elements", &Scenario::n_irs_elements)
      .def_readwrite("bs_position", &Scenario::bs_position)
      .def_readwrite("irs_position", &Scenario::irs_position)
      .def_readwrite("user_center", &Scenario::user_center)
      .def_readwrite("user_radius", &Scenario::user_radius)
      .def_readwrite("pl0_db", &Scenario::pl0_db)
      .def_readwrite("d0", &Scenario::d0)
      .def_readwrite("exp_bs_irs", &Scenario::exp_bs_irs)
      .def_readwrite("exp_irs_user", &Scenario::exp_irs_user)
      .def_readwrite("exp_bs_user", &Scenario::exp_bs_user)
      .def_readwrite("noise_power_w", &Scenario::noise_power_w)
      .def_readwrite("qos_target", &Scenario::qos_target)
      .def_readwrite("power_budget_w", &Scenario::power_budget_w)
      .def("set_uniform_noise_dbm", &Scenario::set_uniform_noise_dbm, py::arg("dbm"))
      .def("set_uniform_qos_db", &Scenario::set_uniform_qos_db, py::arg("db"))
      .def("validate", &Scenario::validate)
      .def_static("desk_default", &Scenario::desk_default)
      .def_static("full_default", &Scenario::full_default);

  py::class_<ChannelSet>(m, "ChannelSet")
      .def(py::init<MatrixXcd, std::vector<VectorXcd>, std::vector<VectorXcd>>(),
           py::arg("bs_irs"), py::arg("irs_user"), py::arg("bs_user"))
      .def_property_readonly("n_antennas", &ChannelSet::n_antennas)
      .def_property_readonly("n_users", &ChannelSet::n_users)
      .def_property_readonly("n_irs_elements", &ChannelSet::n_irs_elements)
      .def_property_readonly("G", &ChannelSet::G)
      .def("h", &ChannelSet::h, py::arg("m"))
      .def("g", &ChannelSet::g, py::arg("m"))
      .def("folded", &ChannelSet::folded, py::arg("theta"))
      .def("without_irs", &ChannelSet::without_irs)
      .def("subset", &ChannelSet::subset, py::arg("users"));

  m.def("db_to_linear", &db_to_linear);
  m.def("linear_to_db", &linear_to_db);
  m.def("dbm_to_watts", &dbm_to_watts);
  m.def("path_loss_db", &path_loss_db, py::arg("d"), py::arg("exponent"), py::arg("pl0_db"),
        py::arg("d0"));
  m.def("generate_channels", &generate_channels, py::arg("scenario"), py::arg("seed"));
  m.def("effective_channels", &effective_channels, py::arg("channels"), py::arg("theta"));
  m.def("sinr_all", &sinr_all, py::arg("channels"), py::arg("theta"), py::arg("W"),
        py::arg("noise_power_w"));
  m.def("total_power", &total_power, py::arg("W"));

  // ---- solver ---------------------------------------------------------------------

  py::class_<PddConfig>(m, "PddConfig")
      .def(py::init<>())
      .def_readwrite("rho0", &PddConfig::rho0)
      .def_readwrite("b1", &PddConfig::b1)
      .def_readwrite("b2", &PddConfig::b2)
      .def_readwrite("eta0", &PddConfig::eta0)
      .def_readwrite("theta0_tol", &PddConfig::theta0_tol)
      .def_readwrite("tau", &PddConfig::tau)
      .def_readwrite("max_outer", &PddConfig::max_outer)
      .def_readwrite("max_inner", &PddConfig::max_inner)
      .def_readwrite("lambda_", &PddConfig::lambda)
      .def_readwrite("gamma_smooth", &PddConfig::gamma_smooth)
      .def_readwrite("admit_sinr_slack", &PddConfig::admit_sinr_slack)
      .def_readwrite("power_control", &PddConfig::power_control)
      .def_readwrite("power_control_ratio", &PddConfig::power_control_ratio)
      .def_readwrite("polish", &PddConfig::polish)
      .def_readwrite("record_sweeps", &PddConfig::record_sweeps)
      .def_readwrite("seed", &PddConfig::seed)
      .def("validate", &PddConfig::validate);

  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("converged", SolveStatus::converged)
      .value("max_outer_reached", SolveStatus::max_outer_reached)
      .value("rho_floor_reached", SolveStatus::rho_floor_reached);

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("W", &SolveResult::W)
      .def_readonly("theta", &SolveResult::theta)
      .def_readonly("gaps", &SolveResult::gaps)
      .def_readonly("admitted", &SolveResult::admitted)
      .def_readonly("n_admitted", &SolveResult::n_admitted)
      .def_readonly("power_w", &SolveResult::power_w)
      .def_readonly("per_user_sinr", &SolveResult::per_user_sinr)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("lambda_", &SolveResult::lambda)
      .def_readonly("gamma_smooth", &SolveResult::gamma_smooth)
      .def_readonly("inner_counts", &SolveResult::inner_counts)
      .def_readonly("sweep_al", &SolveResult::sweep_al)
      .def_readonly("wall_time_s", &SolveResult::wall_time_s)
      .def_readonly("status", &SolveResult::status)
      .def_readonly("power_controlled", &SolveResult::power_controlled)
      .def_readonly("polished", &SolveResult::polished)
      .def_property_readonly("converged", &SolveResult::converged)
      .def_property_readonly("outer_trace", [](const SolveResult& r) {
        py::list out;
        for (const OuterRecord& rec : r.outer_trace) out.append(outer_record_dict(rec));
        return out;
      });

  m.def("pdd_solve", &pdd_solve, py::arg("channels"), py::arg("scenario"),
        py::arg("config") = PddConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def("solve_fixed_theta", &solve_fixed_theta, py::arg("channels"), py::arg("scenario"),
        py::arg("config"), py::arg("theta"), py::call_guard<py::gil_scoped_release>());
  m.def("run_no_irs", &run_no_irs, py::arg("channels"), py::arg("scenario"),
        py::arg("config") = PddConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def("random_phases", &random_phases, py::arg("n"), py::arg("seed"));
  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("stream"), py::arg("index"));
  m.attr("CHANNEL_STREAM") = kChannelStream;
  m.attr("SOLVER_STREAM") = kSolverStream;
  m.attr("PHASE_STREAM") = kPhaseStream;

  // ---- oracle -------------------------------------------------------------------

  m.def(
      "exhaustive_admission",
      [](const ChannelSet& ch, const Scenario& s, double lambda, double slack) {
        const auto r = oracle::exhaustive_admission(ch, s, lambda, slack);
        py::dict d;
        d["admitted"] = r.best;
        d["objective"] = r.objective;
        d["power_w"] = r.power;
        return d;
      },
      py::arg("channels"), py::arg("scenario"), py::arg("lambda_"), py::arg("sinr_slack") = 1e-3,
      "Global optimum over all admission sets for IRS-free instances with few users.");

  // ---- harness ------------------------------------------------------------------

  py::enum_<Algorithm>(m, "Algorithm")
      .value("pdd_irs", Algorithm::pdd_irs)
      .value("random_irs", Algorithm::random_irs)
      .value("no_irs", Algorithm::no_irs);

  py::class_<ExperimentPlan>(m, "ExperimentPlan")
      .def(py::init<>())
      .def_readwrite("scenario", &ExperimentPlan::scenario)
      .def_readwrite("pdd", &ExperimentPlan::pdd)
      .def_readwrite("qos_grid_db", &ExperimentPlan::qos_grid_db)
      .def_readwrite("algorithms", &ExperimentPlan::algorithms)
      .def_readwrite("n_trials", &ExperimentPlan::n_trials)
      .def_readwrite("base_seed", &ExperimentPlan::base_seed)
      .def("validate", &ExperimentPlan::validate);

  py::class_<MetricsRecord>(m, "MetricsRecord")
      .def_readonly("algorithm", &MetricsRecord::algorithm)
      .def_readonly("gamma_db", &MetricsRecord::gamma_db)
      .def_readonly("trial", &MetricsRecord::trial)
      .def_readonly("n_admitted", &MetricsRecord::n_admitted)
      .def_readonly("power_w", &MetricsRecord::power_w)
      .def_readonly("wall_time_s", &MetricsRecord::wall_time_s)
      .def_readonly("converged", &MetricsRecord::converged)
      .def_readonly("outer_iters", &MetricsRecord::outer_iters)
      .def_readonly("error", &MetricsRecord::error);

  py::class_<SummaryRow>(m, "SummaryRow")
      .def_readonly("algorithm", &SummaryRow::algorithm)
      .def_readonly("gamma_db", &SummaryRow::gamma_db)
      .def_readonly("n", &SummaryRow::n)
      .def_readonly("mean_admitted", &SummaryRow::mean_admitted)
      .def_readonly("std_admitted", &SummaryRow::std_admitted)
      .def_readonly("mean_power_w", &SummaryRow::mean_power_w)
      .def_readonly("std_power_w", &SummaryRow::std_power_w)
      .def_readonly("mean_time_s", &SummaryRow::mean_time_s)
      .def_readonly("std_time_s", &SummaryRow::std_time_s)
      .def_readonly("convergence_rate", &SummaryRow::convergence_rate)
      .def_readonly("n_failed", &SummaryRow::n_failed);

  m.def("monte_carlo",
        [](const ExperimentPlan& plan, int workers) {
          py::gil_scoped_release release;
          return monte_carlo(plan, workers);
        },
        py::arg("plan"), py::arg("workers") = 0);
  m.def("aggregate", &aggregate, py::arg("records"));

  // ---- configuration ----------------------------------------------------------------

  py::class_<ExperimentSettings>(m, "ExperimentSettings")
      .def_readwrite("qos_grid_db", &ExperimentSettings::qos_grid_db)
      .def_readwrite("algorithms", &ExperimentSettings::algorithms)
      .def_readwrite("n_trials", &ExperimentSettings::n_trials)
      .def_readwrite("base_seed", &ExperimentSettings::base_seed)
      .def_readwrite("workers", &ExperimentSettings::workers);

  py::class_<AppConfig>(m, "AppConfig")
      .def_readwrite("scenario", &AppConfig::scenario)
      .def_readwrite("pdd", &AppConfig::pdd)
      .def_readwrite("experiment", &AppConfig::experiment)
      .def("to_json", [](const AppConfig& c) { return config_to_json(c); })
      .def("make_plan", &make_plan);

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", &load_config, py::arg("path"));
}
