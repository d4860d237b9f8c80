// Compiled core of the Python package. Structured results cross the boundary
// as JSON text and are decoded by the package wrapper, so the parsers and
// report formats are shared with the command-line tool.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "ccmg/dynamics.hpp"
#include "ccmg/equilibrium.hpp"
#include "ccmg/game.hpp"
#include "ccmg/lp.hpp"
#include "ccmg/modifications.hpp"
#include "ccmg/report.hpp"
#include "ccmg/suites.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace ccmg;

namespace {

py::array_t<double> stage_array(const StageArray& table) {
  const StageShape shape = table.shape();
  py::array_t<double> out({shape.horizon, shape.num_states, shape.num_actions});
  std::copy(table.values().begin(), table.values().end(), out.mutable_data());
  return out;
}

MarkovPolicy policy_from(const Game& game, const std::string& text) {
  return parse_policy(json::parse(text), game);
}

std::string find_json(const Game& game, std::optional<std::uint64_t> seed, int max_iters,
                      double tol, const std::string& step, const std::string& selection,
                      std::size_t cap, bool with_steps) {
  if (game.mode() != ConstraintMode::common) {
    throw ModeError("find requires common coupling constraints; this game is playerwise");
  }
  if (step != "half" && step != "proof") throw std::invalid_argument("step must be half or proof");
  if (selection != "max_gap" && selection != "round_robin") {
    throw std::invalid_argument("selection must be max_gap or round_robin");
  }
  FindOptions options;
  options.max_iters = max_iters;
  options.tol = tol;
  options.step = step == "proof" ? StepRule::proof : StepRule::half;
  options.selection =
      selection == "round_robin" ? PlayerSelection::round_robin : PlayerSelection::max_gap;
  options.cap = cap;
  std::optional<OccupancyMeasure> start;
  if (seed) {
    start = random_feasible_start(game, *seed);
    if (!start) throw EmptyFeasibleSet("no policy satisfies the coupling constraints");
  }
  const FindResult result = find_cce(game, start, options);
  const EquilibriumCertificate recheck = verify_cce(game, result.policy, tol, cap);
  return json{{"policy", policy_to_json(result.policy)["policy"]},
              {"trace", result.trace.to_json(with_steps)},
              {"certificate", result.certificate.to_json()},
              {"recheck_verdict", to_string(recheck.verdict)}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = kVersion;
  m.attr("DEFAULT_CAP") = kDefaultEnumerationCap;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ModeError>(m, "ModeError", PyExc_ValueError);
  py::register_exception<EmptyFeasibleSet>(m, "EmptyFeasibleSet", PyExc_RuntimeError);
  py::register_exception<ResourceCapError>(m, "ResourceCapError", PyExc_RuntimeError);
  // Malformed JSON text surfaces as a parse error too.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Game>(m, "Game")
      .def_static("from_json", [](const std::string& text) { return parse_game_text(text); },
                  py::arg("text"))
      .def_static("load", &load_game, py::arg("path"))
      .def_property_readonly("num_players", &Game::num_players)
      .def_property_readonly("horizon", &Game::horizon)
      .def_property_readonly("num_states", &Game::num_states)
      .def_property_readonly("num_joint_actions", &Game::num_joint_actions)
      .def_property_readonly("num_constraints", &Game::num_constraints)
      .def_property_readonly("mode", [](const Game& g) { return to_string(g.mode()); })
      .def_property_readonly("state_names", &Game::state_names)
      .def_property_readonly("action_names", &Game::action_names)
      .def("num_actions", &Game::num_actions, py::arg("player"))
      .def("digest", &game_digest)
      .def("to_json", [](const Game& g) { return game_to_json(g).dump(); })
      .def("validate", [](const Game& g) { return validate_game(g).to_json().dump(); });

  m.def("example_game", [](int which) {
    if (which == 1) return example1_game();
    if (which == 2) return example2_game();
    throw std::invalid_argument("example games are 1 and 2");
  }, py::arg("which"));

  m.def("occupancy", [](const Game& g, const std::string& policy) {
    return stage_array(compute_occupancy(g, policy_from(g, policy)));
  }, py::arg("game"), py::arg("policy"));

  m.def("feasibility", [](const Game& g, const std::string& policy, double tol) {
    return feasibility(g, policy_from(g, policy), std::nullopt, tol).to_json().dump();
  }, py::arg("game"), py::arg("policy"), py::arg("tol") = kFeasibilityTol);

  m.def("verify", [](const Game& g, const std::string& policy, double tol, std::size_t cap) {
    const MarkovPolicy p = policy_from(g, policy);
    py::gil_scoped_release release;
    return verify_cce(g, p, tol, cap).to_json().dump();
  }, py::arg("game"), py::arg("policy"), py::arg("tol") = 1e-9,
        py::arg("cap") = kDefaultEnumerationCap);

  m.def("find", &find_json, py::arg("game"), py::arg("seed") = py::none(),
        py::arg("max_iters") = 10'000, py::arg("tol") = 1e-6, py::arg("step") = "half",
        py::arg("selection") = "max_gap", py::arg("cap") = kDefaultEnumerationCap,
        py::arg("trace") = false, py::call_guard<py::gil_scoped_release>());

  m.def("slater", [](const Game& g, const std::string& mode, int samples, std::uint64_t seed,
                     std::size_t cap) {
    if (mode != "strong" && mode != "weak") throw std::invalid_argument("mode must be strong or weak");
    return slater_sampling_harness(g, mode == "weak" ? SlaterMode::weak : SlaterMode::strong,
                                   samples, seed, cap)
        .to_json()
        .dump();
  }, py::arg("game"), py::arg("mode") = "strong", py::arg("samples") = 100, py::arg("seed") = 0,
        py::arg("cap") = kDefaultEnumerationCap, py::call_guard<py::gil_scoped_release>());

  m.def("equivalence", [](const Game& g, std::optional<int> player, int samples,
                          std::uint64_t seed, const std::vector<std::string>& modifications) {
    EquivalenceOptions options;
    options.player = player;
    options.samples = samples;
    options.seed = seed;
    for (const auto& text : modifications) {
      options.extra.push_back(parse_modification(json::parse(text), g));
    }
    py::gil_scoped_release release;
    return equivalence_suite(g, options).to_json().dump();
  }, py::arg("game"), py::arg("player") = py::none(), py::arg("samples") = 10,
        py::arg("seed") = 0, py::arg("modifications") = std::vector<std::string>{});

  m.def("reproduce", [](const std::string& only, std::uint64_t seed) {
    return reproduce_examples(only, seed).to_json().dump();
  }, py::arg("only") = "", py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());

  m.def("solve_lp", [](std::vector<double> objective,
                       const std::vector<std::tuple<std::vector<double>, std::string, double>>& rows) {
    LinearProgram lp;
    lp.objective = std::move(objective);
    for (const auto& [coeffs, sense, rhs] : rows) {
      RowSense s;
      if (sense == ">=") s = RowSense::ge;
      else if (sense == "<=") s = RowSense::le;
      else if (sense == "==") s = RowSense::eq;
      else throw std::invalid_argument("row sense must be >=, <= or ==");
      lp.add_row(coeffs, s, rhs);
    }
    const LPSolution sol = solve_lp(lp);
    py::dict out;
    out["status"] = to_string(sol.status);
    out["x"] = sol.x;
    out["objective"] = sol.objective;
    out["pivots"] = sol.pivots;
    return out;
  }, py::arg("objective"), py::arg("rows"));
}
