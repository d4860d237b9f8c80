// Command-line front end. Every command writes one JSON report to stdout; a
// short human-readable summary goes to stderr when it is a terminal.

#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include "ccmg/dynamics.hpp"
#include "ccmg/equilibrium.hpp"
#include "ccmg/game.hpp"
#include "ccmg/modifications.hpp"
#include "ccmg/report.hpp"
#include "ccmg/suites.hpp"

namespace {

using nlohmann::json;
using namespace ccmg;

enum Exit : int {
  kOk = 0,
  kInvalid = 1,
  kIoError = 2,
  kNotEquilibrium = 3,
  kInfeasible = 4,
  kResourceCap = 5,
};

struct Output {
  bool json_only = false;
  bool terminal() const { return !json_only && isatty(STDERR_FILENO); }
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Game read_game(const std::string& path) {
  Game game = parse_game_text(read_file(path));
  GameReport report = validate_game(game);
  if (!report.valid()) throw ValidationError(std::move(report));
  return game;
}

int emit(const RunReport& report, const Output& out, const std::string& summary, int code) {
  std::cout << report.to_json().dump(2) << '\n';
  if (out.terminal() && !summary.empty()) std::cerr << summary;
  return code;
}

int exit_for(Verdict verdict) {
  switch (verdict) {
    case Verdict::constrained_CE: return kOk;
    case Verdict::not_CE: return kNotEquilibrium;
    case Verdict::infeasible_policy: return kInfeasible;
  }
  return kInvalid;
}

std::string certificate_summary(const EquilibriumCertificate& cert) {
  std::ostringstream s;
  s << "verdict  " << to_string(cert.verdict) << "\n";
  for (const auto& e : cert.feasibility.entries) {
    s << "  slack  player " << e.player << " constraint " << e.constraint << "  " << e.slack
      << "\n";
  }
  for (const auto& p : cert.players) {
    s << "  gap    player " << p.player << "  value " << p.value << "  best " << p.psi << "  gap "
      << p.gap << "\n";
  }
  return s.str();
}

// --- commands ------------------------------------------------------------

struct ValidateArgs {
  std::string game;
};

int run_validate(const ValidateArgs& a, const Output& out) {
  RunReport report;
  report.command = "validate";
  report.params = {{"game", a.game}};
  Game game;
  try {
    game = parse_game_text(read_file(a.game));
  } catch (const ParseError& e) {
    report.results = {{"valid", false}, {"error", {{"where", e.where()}, {"message", e.what()}}}};
    return emit(report, out, std::string("invalid: ") + e.what() + "\n", kInvalid);
  }
  const GameReport checks = validate_game(game);
  report.results = checks.to_json();
  std::ostringstream s;
  for (const auto& c : checks.checks) {
    s << (c.passed ? "ok    " : "FAIL  ") << c.invariant << "\n";
    for (const auto& v : c.violations) s << "        " << v.location << ": " << v.detail << "\n";
  }
  if (checks.valid()) {
    report.game_digest = game_digest(game);
    report.results["summary"] = {{"mode", to_string(game.mode())},
                                 {"players", game.num_players()},
                                 {"horizon", game.horizon()},
                                 {"states", game.num_states()},
                                 {"constraints", game.num_constraints()}};
  }
  return emit(report, out, s.str(), checks.valid() ? kOk : kInvalid);
}

struct VerifyArgs {
  std::string game;
  std::string policy;
  double tol = 1e-9;
  std::size_t cap = kDefaultEnumerationCap;
};

int run_verify(const VerifyArgs& a, const Output& out) {
  const Game game = read_game(a.game);
  const MarkovPolicy policy = parse_policy(json::parse(read_file(a.policy)), game);
  const EquilibriumCertificate cert = verify_cce(game, policy, a.tol, a.cap);
  RunReport report;
  report.command = "verify";
  report.game_digest = game_digest(game);
  report.params = {{"game", a.game}, {"policy", a.policy}, {"tol", a.tol}, {"cap", a.cap}};
  report.results = cert.to_json();
  return emit(report, out, certificate_summary(cert), exit_for(cert.verdict));
}

struct FindArgs {
  std::string game;
  std::optional<std::uint64_t> seed;
  int max_iters = 10'000;
  double tol = 1e-6;
  std::string step = "half";
  std::string selection = "max_gap";
  bool trace = false;
  std::size_t cap = kDefaultEnumerationCap;
};

int run_find(const FindArgs& a, const Output& out) {
  const Game game = read_game(a.game);
  if (game.mode() != ConstraintMode::common) {
    throw ModeError("find requires common coupling constraints; this game is playerwise");
  }
  FindOptions options;
  options.max_iters = a.max_iters;
  options.tol = a.tol;
  options.step = a.step == "proof" ? StepRule::proof : StepRule::half;
  options.selection =
      a.selection == "round_robin" ? PlayerSelection::round_robin : PlayerSelection::max_gap;
  options.cap = a.cap;

  // Without a seed the search starts from the phase-1 occupancy; with one,
  // from a seeded random policy pulled back into the feasible set.
  std::optional<OccupancyMeasure> start;
  if (a.seed) {
    start = random_feasible_start(game, *a.seed);
    if (!start) throw EmptyFeasibleSet("no policy satisfies the coupling constraints");
  }
  const FindResult result = find_cce(game, start, options);
  // Independent re-check before reporting success.
  const EquilibriumCertificate recheck = verify_cce(game, result.policy, a.tol, a.cap);

  RunReport report;
  report.command = "find";
  report.game_digest = game_digest(game);
  report.seed = a.seed;
  report.params = {{"game", a.game},           {"max_iters", a.max_iters},
                   {"tol", a.tol},             {"step", to_string(options.step)},
                   {"selection", a.selection}, {"cap", a.cap}};
  report.results = {{"policy", policy_to_json(result.policy)["policy"]},
                    {"trace", result.trace.to_json(a.trace)},
                    {"certificate", result.certificate.to_json()},
                    {"recheck_verdict", to_string(recheck.verdict)}};
  std::ostringstream s;
  s << "iterations " << result.trace.iterations << (result.trace.converged ? " (converged)" : "")
    << ", final max gap " << result.trace.final_max_gap << "\n"
    << certificate_summary(result.certificate);
  return emit(report, out, s.str(), exit_for(recheck.verdict));
}

struct SlaterArgs {
  std::string game;
  std::string mode = "strong";
  int samples = 100;
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultEnumerationCap;
};

int run_slater(const SlaterArgs& a, const Output& out) {
  const Game game = read_game(a.game);
  const SlaterMode mode = a.mode == "weak" ? SlaterMode::weak : SlaterMode::strong;
  const SlaterReport r = slater_sampling_harness(game, mode, a.samples, a.seed, a.cap);
  RunReport report;
  report.command = "slater";
  report.game_digest = game_digest(game);
  report.seed = a.seed;
  report.params = {{"game", a.game}, {"mode", a.mode}, {"samples", a.samples}, {"cap", a.cap}};
  report.results = r.to_json();
  std::ostringstream s;
  s << a.mode << " Slater: " << r.tested << " checks, " << r.failures.size() << " failures, "
    << r.not_applicable << " not applicable" << (r.feasible_set_empty ? ", feasible set empty" : "")
    << "\n";
  return emit(report, out, s.str(), kOk);
}

struct EquivalenceArgs {
  std::string game;
  std::optional<int> player;
  int samples = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> modifications;
  std::size_t cap = kDefaultEnumerationCap;
  std::size_t history_cap = kDefaultHistoryCap;
};

int run_equivalence(const EquivalenceArgs& a, const Output& out) {
  const Game game = read_game(a.game);
  EquivalenceOptions options;
  options.player = a.player;
  options.samples = a.samples;
  options.seed = a.seed;
  options.cap = a.cap;
  options.history_cap = a.history_cap;
  for (const auto& path : a.modifications) {
    options.extra.push_back(parse_modification(json::parse(read_file(path)), game));
  }
  const SuiteReport suite = equivalence_suite(game, options);
  RunReport report;
  report.command = "equivalence";
  report.game_digest = game_digest(game);
  report.seed = a.seed;
  report.params = {{"game", a.game},
                   {"player", a.player ? json(*a.player) : json()},
                   {"samples", a.samples},
                   {"modifications", a.modifications},
                   {"cap", a.cap},
                   {"history_cap", a.history_cap}};
  report.results = suite.to_json();
  return emit(report, out, suite.table(), suite.passed() ? kOk : kInvalid);
}

struct ReproduceArgs {
  std::string only;
  std::uint64_t seed = 0;
};

int run_reproduce(const ReproduceArgs& a, const Output& out) {
  const SuiteReport suite = reproduce_examples(a.only, a.seed);
  RunReport report;
  report.command = "reproduce-paper";
  report.seed = a.seed;
  report.params = {{"only", a.only.empty() ? json() : json(a.only)}};
  report.results = suite.to_json();
  return emit(report, out, suite.table(), suite.passed() ? kOk : kInvalid);
}

int fail(const Output& out, const std::string& command, const std::string& kind,
         const std::string& message, int code, json extra = json::object()) {
  RunReport report;
  report.command = command;
  report.results = {{"error", {{"kind", kind}, {"message", message}}}};
  for (auto& [k, v] : extra.items()) report.results["error"][k] = v;
  std::cout << report.to_json().dump(2) << '\n';
  if (!out.json_only) std::cerr << "error: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon constrained Markov games: validation, equilibrium verification "
               "and search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Output out;
  app.add_flag("--json", out.json_only, "JSON on stdout only, no terminal summary");

  ValidateArgs validate;
  auto* cmd_validate = app.add_subcommand("validate", "Check a game file against its invariants");
  cmd_validate->add_option("game", validate.game, "Game file")->required();

  VerifyArgs verify;
  auto* cmd_verify = app.add_subcommand("verify", "Certify whether a policy is an equilibrium");
  cmd_verify->add_option("game", verify.game, "Game file")->required();
  cmd_verify->add_option("policy", verify.policy, "Policy file")->required();
  cmd_verify->add_option("--tol", verify.tol, "Gap tolerance")->capture_default_str();
  cmd_verify->add_option("--cap", verify.cap, "Deterministic modification cap")
      ->capture_default_str();

  FindArgs find;
  auto* cmd_find = app.add_subcommand("find", "Search for an equilibrium (common constraints)");
  cmd_find->add_option("game", find.game, "Game file")->required();
  cmd_find->add_option("--seed", find.seed, "Start from a seeded random feasible policy");
  cmd_find->add_option("--max-iters", find.max_iters)->capture_default_str();
  cmd_find->add_option("--tol", find.tol)->capture_default_str();
  cmd_find->add_option("--step", find.step, "half (fixed 1/2) or proof (gap / 2H)")
      ->check(CLI::IsMember({"half", "proof"}))
      ->capture_default_str();
  cmd_find->add_option("--selection", find.selection)
      ->check(CLI::IsMember({"max_gap", "round_robin"}))
      ->capture_default_str();
  cmd_find->add_flag("--trace", find.trace, "Include every iteration in the report");
  cmd_find->add_option("--cap", find.cap)->capture_default_str();

  SlaterArgs slater;
  auto* cmd_slater = app.add_subcommand("slater", "Sample policies and check Slater conditions");
  cmd_slater->add_option("game", slater.game, "Game file")->required();
  cmd_slater->add_option("--mode", slater.mode)
      ->check(CLI::IsMember({"strong", "weak"}))
      ->capture_default_str();
  cmd_slater->add_option("--samples", slater.samples)->capture_default_str();
  cmd_slater->add_option("--seed", slater.seed)->capture_default_str();
  cmd_slater->add_option("--cap", slater.cap)->capture_default_str();

  EquivalenceArgs equivalence;
  auto* cmd_equivalence =
      app.add_subcommand("equivalence", "Check modification-class equivalences on a game");
  cmd_equivalence->add_option("game", equivalence.game, "Game file")->required();
  cmd_equivalence->add_option("--player", equivalence.player, "Only this player (0-based)");
  cmd_equivalence->add_option("--samples", equivalence.samples)->capture_default_str();
  cmd_equivalence->add_option("--seed", equivalence.seed)->capture_default_str();
  cmd_equivalence->add_option("--modification", equivalence.modifications,
                              "Extra Markov modification file(s) to include");
  cmd_equivalence->add_option("--cap", equivalence.cap)->capture_default_str();
  cmd_equivalence->add_option("--history-cap", equivalence.history_cap)->capture_default_str();

  ReproduceArgs reproduce;
  auto* cmd_reproduce =
      app.add_subcommand("reproduce-paper", "Recompute every claim about the two example games");
  cmd_reproduce->add_option("--only", reproduce.only)
      ->check(CLI::IsMember({"example1", "example2"}));
  cmd_reproduce->add_option("--seed", reproduce.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (cmd_validate->parsed()) return run_validate(validate, out);
    if (cmd_verify->parsed()) return run_verify(verify, out);
    if (cmd_find->parsed()) return run_find(find, out);
    if (cmd_slater->parsed()) return run_slater(slater, out);
    if (cmd_equivalence->parsed()) return run_equivalence(equivalence, out);
    if (cmd_reproduce->parsed()) return run_reproduce(reproduce, out);
  } catch (const IoError& e) {
    return fail(out, command, "io", e.what(), kIoError);
  } catch (const std::system_error& e) {
    return fail(out, command, "io", e.what(), kIoError);
  } catch (const ResourceCapError& e) {
    return fail(out, command, "resource_cap", e.what(), kResourceCap);
  } catch (const EmptyFeasibleSet& e) {
    return fail(out, command, "empty_feasible_set", e.what(), kInfeasible);
  } catch (const ValidationError& e) {
    return fail(out, command, "validation", e.what(), kInvalid, {{"report", e.report().to_json()}});
  } catch (const ParseError& e) {
    return fail(out, command, "parse", e.what(), kInvalid, {{"where", e.where()}});
  } catch (const json::exception& e) {
    return fail(out, command, "parse", e.what(), kInvalid);
  } catch (const ModeError& e) {
    return fail(out, command, "mode", e.what(), kInvalid);
  } catch (const std::invalid_argument& e) {
    return fail(out, command, "invalid_argument", e.what(), kInvalid);
  }
  return kInvalid;
}
