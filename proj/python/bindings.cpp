// Structured values cross the boundary as JSON text; awareplan/__init__.py
// turns them into dicts.
#include "awareplan/belief.hpp"
#include "awareplan/cli_io.hpp"
#include "awareplan/sim.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace awareplan;
using io::json;

namespace {

ScenarioConfig resolve(const std::string& scenario_or_json, std::optional<std::uint64_t> seed) {
    ScenarioConfig c;
    const auto first = scenario_or_json.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && scenario_or_json[first] == '{') {
        c = io::scenario_from_json(json::parse(scenario_or_json));
    } else {
        c = io::load_scenario(scenario_or_json);
    }
    if (seed) c.seed = *seed;
    return c;
}

std::string step_json(const StepRecord& r) {
    return json{{"t", r.t},
                {"robot", io::vec_to_json(r.robot.position)},
                {"human", io::vec_to_json(r.human.position)},
                {"robot_action", io::vec_to_json(r.robot_action.velocity)},
                {"human_action", io::vec_to_json(r.human_action.velocity)},
                {"belief", r.belief},
                {"informative", r.informative},
                {"plan_feasible", r.plan.feasible},
                {"prediction", io::prediction_to_json(r.prediction)}}
        .dump();
}

}  // namespace

PYBIND11_MODULE(_awareplan, m) {
    m.doc() = "awareplan core bindings";

    // Translators are tried newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

    m.def("builtin_scenarios", &io::builtin_scenarios);
    m.def(
        "resolve_scenario",
        [](const std::string& s, std::optional<std::uint64_t> seed) {
            return io::scenario_to_json(resolve(s, seed)).dump();
        },
        py::arg("scenario"), py::arg("seed") = py::none());
    m.def(
        "run",
        [](const std::string& s, std::optional<std::uint64_t> seed, bool distributions) {
            const ScenarioConfig c = resolve(s, seed);
            SimTrace tr;
            {
                py::gil_scoped_release nogil;
                tr = run_closed_loop(c);
            }
            io::TraceOptions opt;
            opt.include_distributions = distributions;
            return io::trace_to_json(tr, opt).dump();
        },
        py::arg("scenario"), py::arg("seed") = py::none(), py::arg("distributions") = true);
    m.def(
        "horizon_sweep",
        [](const std::string& s, const std::vector<int>& horizons) {
            const ScenarioConfig c = resolve(s, std::nullopt);
            py::gil_scoped_release nogil;
            return io::sweep_to_json(experiment_horizon_sweep(c, horizons)).dump();
        },
        py::arg("scenario"), py::arg("horizons"));
    m.def(
        "prediction_impact",
        [](const std::string& s, int horizon) {
            const ScenarioConfig c = resolve(s, std::nullopt);
            py::gil_scoped_release nogil;
            return io::impact_to_json(experiment_prediction_impact(c, horizon)).dump();
        },
        py::arg("scenario"), py::arg("horizon") = 5);
    m.def(
        "awareness",
        [](const std::string& s, int beta) {
            const ScenarioConfig c = resolve(s, std::nullopt);
            py::gil_scoped_release nogil;
            return io::awareness_to_json(experiment_awareness(c, beta)).dump();
        },
        py::arg("scenario"), py::arg("beta"));
    m.def(
        "plot_data", [](const std::string& trace_json) { return io::plot_data(json::parse(trace_json)).dump(); },
        py::arg("trace"));

    m.def(
        "lattice_action_set",
        [](double v) {
            std::vector<std::pair<double, double>> out;
            for (const auto& a : make_lattice_action_set(v)) out.emplace_back(a.velocity.x(), a.velocity.y());
            return out;
        },
        py::arg("nominal_speed"));
    m.def(
        "project_action",
        [](std::pair<double, double> v, double nominal_speed) {
            const auto a = project_action(Vec2(v.first, v.second), make_lattice_action_set(nominal_speed));
            return std::make_pair(a.velocity.x(), a.velocity.y());
        },
        py::arg("velocity"), py::arg("nominal_speed"));
    m.def(
        "belief_update",
        [](double prior, double l_concerned, double l_unconcerned) {
            return update_with_likelihoods(Belief{prior}, l_concerned, l_unconcerned).posterior.p_concerned;
        },
        py::arg("prior"), py::arg("l_concerned"), py::arg("l_unconcerned"));

    py::class_<Simulation>(m, "Simulation")
        .def(py::init([](const std::string& s, std::optional<std::uint64_t> seed) {
                 return Simulation(resolve(s, seed));
             }),
             py::arg("scenario"), py::arg("seed") = py::none())
        .def(
            "tick",
            [](Simulation& sim, std::optional<std::pair<double, double>> command) {
                std::optional<Vec2> c;
                if (command) c = Vec2(command->first, command->second);
                return step_json(sim.tick(c));
            },
            py::arg("command") = py::none())
        .def("reset", &Simulation::reset, py::arg("seed") = py::none())
        .def_property_readonly("done", &Simulation::done)
        .def_property_readonly("reached_goals", &Simulation::reached_goals)
        .def_property_readonly("tick_index", &Simulation::tick_index)
        .def_property_readonly("belief", [](const Simulation& s) { return s.belief().p_concerned; })
        .def_property_readonly("robot",
                               [](const Simulation& s) {
                                   return std::make_pair(s.robot_state().position.x(), s.robot_state().position.y());
                               })
        .def_property_readonly("human",
                               [](const Simulation& s) {
                                   return std::make_pair(s.human_state().position.x(), s.human_state().position.y());
                               })
        .def("config", [](const Simulation& s) { return io::scenario_to_json(s.config()).dump(); })
        .def("trace", [](const Simulation& s) { return io::trace_to_json(s.trace()).dump(); });
}
