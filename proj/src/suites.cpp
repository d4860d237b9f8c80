#include "ccmg/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "ccmg/aux_mdps.hpp"
#include "ccmg/dynamics.hpp"
#include "ccmg/lp.hpp"

namespace ccmg {

using nlohmann::json;

namespace {

constexpr const char* kExample1 = R"({
  "num_players": 2, "horizon": 1, "states": ["s"],
  "actions": [["1", "2"], ["1", "2"]],
  "constraint_mode": "playerwise",
  "rewards": [[[[0, 1, 0, 0]]], [[[0, 1, 0, 0]]]],
  "constraints": [[[[[1, 0, 0, 0]]]], [[[[0, 1, 0, 0]]]]],
  "thresholds": [["1/2"], ["1/3"]],
  "rho": [1]
})";

constexpr const char* kExample2 = R"({
  "num_players": 2, "horizon": 1, "states": ["s"],
  "actions": [["1", "2"], ["1", "2"]],
  "constraint_mode": "common",
  "rewards": [[[[0, 1, 0, 0]]], [[[0, 1, 0, 0]]]],
  "constraints": [[[[1, 0, 0, 0]]], [[[0, 1, 0, 0]]], [[[0, 0, 1, 0]]], [[[0, 0, 0, 1]]]],
  "thresholds": ["1/4", "1/4", "1/4", "1/4"],
  "rho": [1]
})";

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) out = std::max(out, std::abs(a[k] - b[k]));
  return out;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

// Calls visit(counts) for every 4-tuple of nonnegative integers summing to n.
void for_each_grid_point(int n, const std::function<void(const int*)>& visit) {
  int c[4];
  for (c[0] = 0; c[0] <= n; ++c[0])
    for (c[1] = 0; c[0] + c[1] <= n; ++c[1])
      for (c[2] = 0; c[0] + c[1] + c[2] <= n; ++c[2]) {
        c[3] = n - c[0] - c[1] - c[2];
        visit(c);
      }
}

class SuiteBuilder {
 public:
  explicit SuiteBuilder(std::string name) { report_.name = std::move(name); }
  void add(std::string id, std::string claim, bool passed, json detail = json::object()) {
    report_.checks.push_back({std::move(id), std::move(claim), passed, std::move(detail)});
  }
  // Runs `body`; an exception fails the check instead of aborting the suite.
  void run(std::string id, std::string claim, const std::function<bool(json&)>& body) {
    json detail = json::object();
    bool passed = false;
    try {
      passed = body(detail);
    } catch (const std::exception& e) {
      detail["error"] = e.what();
    }
    add(std::move(id), std::move(claim), passed, std::move(detail));
  }
  SuiteReport take() { return std::move(report_); }

 private:
  SuiteReport report_;
};

void example1_checks(SuiteBuilder& suite, std::uint64_t seed) {
  const Game game = example1_game();
  const MarkovPolicy mixed = normal_form_policy(game, {1.0 / 2, 1.0 / 3, 0.0, 1.0 / 6});
  const MarkovPolicy corner = normal_form_policy(game, {0, 0, 0, 1});

  suite.run("example1.game", "valid playerwise game, N=2, H=1, one state, J=1", [&](json& d) {
    const bool valid = validate_game(game).valid();
    d["valid"] = valid;
    d["mode"] = to_string(game.mode());
    return valid && game.mode() == ConstraintMode::playerwise && game.num_players() == 2 &&
           game.horizon() == 1 && game.num_states() == 1 && game.num_constraints() == 1;
  });

  suite.run("example1.value", "V^{r^1}(1/2,1/3,0,1/6) = 1/3", [&](json& d) {
    const double v = expected_value(compute_occupancy(game, mixed), game.reward(0));
    d["value"] = v;
    return close(v, 1.0 / 3, 1e-12);
  });

  suite.run("example1.corner_infeasible",
            "pi=(0,0,0,1) is infeasible for both players with slacks -1/2 and -1/3", [&](json& d) {
              const FeasibilityReport r = feasibility(game, corner);
              d["feasibility"] = r.to_json();
              return !r.feasible() && r.entries.size() == 2 &&
                     close(r.entries[0].slack, -0.5, 1e-12) &&
                     close(r.entries[1].slack, -1.0 / 3, 1e-12);
            });

  suite.run("example1.always_two",
            "player 2 always playing action 2 maps (x,y,z,w) to (0,x+y,0,z+w)", [&](json& d) {
              const MarkovPolicy moved =
                  apply_modification(game, mixed, MarkovModification::constant(game, 1, 1));
              d["modified"] = moved.values();
              return max_abs_diff(moved.values(), {0.0, 5.0 / 6, 0.0, 1.0 / 6}) <= 1e-12;
            });

  suite.run("example1.best_modification",
            "player 2's best feasible mixture at (1/2,1/3,0,1/6) has value 5/6, on always-2",
            [&](json& d) {
              const ModificationTable table = tabulate_modifications(game, 1, mixed);
              const BestModification best = best_feasible_modification(table);
              const std::size_t always_two =
                  table.mods.index_of(MarkovModification::constant(game, 1, 1));
              d["psi"] = finite_or_null(best.psi);
              d["alpha"] = best.alpha;
              return best.status == LPStatus::optimal && close(best.psi, 5.0 / 6, 1e-9) &&
                     close(best.alpha[always_two], 1.0, 1e-9);
            });

  suite.run("example1.not_equilibrium", "(1/2,1/3,0,1/6) is not an equilibrium; player 2 gains 1/2",
            [&](json& d) {
              const EquilibriumCertificate cert = verify_cce(game, mixed);
              d["verdict"] = to_string(cert.verdict);
              d["gap"] = cert.players[1].gap;
              return cert.verdict == Verdict::not_CE && close(cert.players[1].gap, 0.5, 1e-9);
            });

  suite.run("example1.feasible_region",
            "on a 0.05 grid, player 1 is feasible iff x >= 1/2 and player 2 iff y >= 1/3",
            [&](json& d) {
              int points = 0, wrong = 0;
              for_each_grid_point(20, [&](const int* c) {
                ++points;
                const MarkovPolicy p =
                    normal_form_policy(game, {c[0] / 20.0, c[1] / 20.0, c[2] / 20.0, c[3] / 20.0});
                const bool first = 2 * c[0] >= 20;
                const bool second = 3 * c[1] >= 20;
                if (feasibility(game, p, 0).feasible() != first) ++wrong;
                if (feasibility(game, p, 1).feasible() != second) ++wrong;
              });
              d["points"] = points;
              d["misclassified"] = wrong;
              return wrong == 0;
            });

  suite.run("example1.no_equilibrium",
            "no feasible policy on the 0.05 grid is an equilibrium", [&](json& d) {
              int feasible = 0, equilibria = 0;
              for_each_grid_point(20, [&](const int* c) {
                if (2 * c[0] < 20 || 3 * c[1] < 20) return;
                ++feasible;
                const MarkovPolicy p =
                    normal_form_policy(game, {c[0] / 20.0, c[1] / 20.0, c[2] / 20.0, c[3] / 20.0});
                if (verify_cce(game, p).verdict == Verdict::constrained_CE) ++equilibria;
              });
              d["feasible_points"] = feasible;
              d["equilibria"] = equilibria;
              return feasible > 0 && equilibria == 0;
            });

  suite.run("example1.strong_slater_corner",
            "no strictly feasible modification exists at (0,0,0,1) for either player", [&](json& d) {
              bool any = false;
              for (int i = 0; i < 2; ++i) {
                const StrongSlaterResult r = check_strong_slater_at(game, i, corner);
                d["players"].push_back(r.to_json());
                any = any || r.holds;
              }
              return !any;
            });

  suite.run("example1.strong_slater_sampling",
            "100 sampled policies expose at least one strong Slater failure", [&](json& d) {
              const SlaterReport r = slater_sampling_harness(game, SlaterMode::strong, 100, seed);
              d["tested"] = r.tested;
              d["failures"] = r.failures.size();
              return !r.failures.empty();
            });
}

void example2_checks(SuiteBuilder& suite, std::uint64_t seed) {
  const Game game = example2_game();
  const MarkovPolicy uniform = MarkovPolicy::uniform(game.shape());

  suite.run("example2.game", "valid common-constraint game with J=4", [&](json& d) {
    const bool valid = validate_game(game).valid();
    d["valid"] = valid;
    d["mode"] = to_string(game.mode());
    return valid && game.mode() == ConstraintMode::common && game.num_constraints() == 4;
  });

  suite.run("example2.uniform_occupancy", "the uniform policy has occupancy (1/4,1/4,1/4,1/4)",
            [&](json& d) {
              const OccupancyMeasure occ = compute_occupancy(game, uniform);
              d["occupancy"] = occ.values();
              return max_abs_diff(occ.values(), {0.25, 0.25, 0.25, 0.25}) <= 1e-12;
            });

  suite.run("example2.uniform_slacks", "all four slacks are exactly 0 at the uniform policy",
            [&](json& d) {
              const FeasibilityReport r = feasibility(game, uniform, 0);
              d["feasibility"] = r.to_json();
              bool zero = r.entries.size() == 4;
              for (const auto& e : r.entries) zero = zero && e.slack == 0.0;
              return r.feasible() && zero;
            });

  suite.run("example2.modification_count", "each player has exactly 4 deterministic modifications",
            [&](json& d) {
              const auto first = enumerate_det_modifications(game, 0);
              const auto second = enumerate_det_modifications(game, 1);
              d["counts"] = {first.size(), second.size()};
              return first.size() == 4 && second.size() == 4;
            });

  suite.run("example2.unique_feasible",
            "on a 0.01 grid the uniform policy is the only feasible point", [&](json& d) {
              int points = 0, feasible = 0;
              bool uniform_found = false;
              for_each_grid_point(100, [&](const int* c) {
                ++points;
                const MarkovPolicy p = normal_form_policy(
                    game, {c[0] / 100.0, c[1] / 100.0, c[2] / 100.0, c[3] / 100.0});
                if (feasibility(game, p).feasible()) {
                  ++feasible;
                  uniform_found = uniform_found || (c[0] == 25 && c[1] == 25 && c[2] == 25);
                }
              });
              d["points"] = points;
              d["feasible"] = feasible;
              return feasible == 1 && uniform_found;
            });

  suite.run("example2.equilibrium", "the uniform policy is an equilibrium with all gaps 0",
            [&](json& d) {
              const EquilibriumCertificate cert = verify_cce(game, uniform);
              d["verdict"] = to_string(cert.verdict);
              d["max_gap"] = cert.max_gap();
              return cert.verdict == Verdict::constrained_CE && cert.max_gap() <= 1e-9;
            });

  suite.run("example2.psi", "player 1's best feasible value equals its own value 1/4",
            [&](json& d) {
              const BestModification best = best_feasible_modification(game, 0, uniform);
              const double v = expected_value(compute_occupancy(game, uniform), game.reward(0));
              d["psi"] = finite_or_null(best.psi);
              d["value"] = v;
              return close(best.psi, 0.25, 1e-9) && close(v, 0.25, 1e-12);
            });

  suite.run("example2.optimal_mixture",
            "mixing by player 1's optimal weights returns the uniform occupancy", [&](json& d) {
              const ModificationTable table = tabulate_modifications(game, 0, uniform, true);
              const BestModification best = best_feasible_modification(table);
              const OccupancyMeasure mixed = mix_occupancies(best.alpha, table.occupancies);
              d["alpha"] = best.alpha;
              d["occupancy"] = mixed.values();
              return max_abs_diff(mixed.values(), {0.25, 0.25, 0.25, 0.25}) <= 1e-9;
            });

  suite.run("example2.uniform_mixture",
            "equal weights on the four modifications give every constraint value 1/4",
            [&](json& d) {
              const ModificationTable table = tabulate_modifications(game, 0, uniform);
              bool ok = true;
              for (const auto& row : table.constraint) {
                double v = 0.0;
                for (double x : row) v += x / 4;
                d["values"].push_back(v);
                ok = ok && close(v, 0.25, 1e-12);
              }
              return ok;
            });

  suite.run("example2.strong_slater", "strong Slater fails at the uniform policy", [&](json& d) {
    bool any = false;
    for (int i = 0; i < 2; ++i) {
      const StrongSlaterResult r = check_strong_slater_at(game, i, uniform);
      d["players"].push_back(r.to_json());
      any = any || r.holds;
    }
    return !any;
  });

  suite.run("example2.weak_slater",
            "weak Slater: condition 1 fails, 2(a) holds with all minima 0, 2(b) holds with "
            "equal weights",
            [&](json& d) {
              bool ok = true;
              for (int i = 0; i < 2; ++i) {
                const WeakSlaterResult r = check_weak_slater_at(game, i, uniform);
                d["players"].push_back(r.to_json());
                bool minima_zero = r.minima.size() == 4;
                for (double m : r.minima) minima_zero = minima_zero && close(m, 0.0, 1e-9);
                ok = ok && r.applicable && r.holds && !r.condition1 && r.condition2a &&
                     r.condition2b && minima_zero && r.regularity.uniform_alpha_feasible;
              }
              return ok;
            });

  suite.run("example2.regularity",
            "mixture LP: not strictly feasible, no constant row, positive weights at 1e-3",
            [&](json& d) {
              const RegularityReport r = check_lp_regularity(game, 0, uniform);
              d["regularity"] = r.to_json();
              return !r.strictly_feasible && r.constant_rows.empty() && r.positive_weights &&
                     r.epsilon == 1e-3;
            });

  suite.run("example2.min_constraint",
            "the smallest value of g^1 over Markov modifications is 0, at always-2", [&](json& d) {
              const AuxiliaryMDP mdp = build_mdp2(game, 0, uniform);
              const AuxOptimum r = optimize_aux(
                  mdp, lift_reward(game, 0, uniform, game.constraint(0, 0)), Direction::min);
              d["value"] = r.value;
              d["argmod"] = modification_to_json(r.argmod);
              const MarkovModification always_two = MarkovModification::constant(game, 0, 1);
              return close(r.value, 0.0, 1e-9) && r.argmod.values() == always_two.values();
            });

  suite.run("example2.weak_sampling",
            "sampled boundary policies all land on the uniform policy and pass condition 2",
            [&](json& d) {
              const SlaterReport r = slater_sampling_harness(game, SlaterMode::weak, 20, seed);
              d["tested"] = r.tested;
              d["not_applicable"] = r.not_applicable;
              d["failures"] = r.failures.size();
              return r.tested == 40 && r.failures.empty();
            });

  suite.run("example2.search_at_fixed_point",
            "the search started at the uniform policy stops after 0 iterations", [&](json& d) {
              const FindResult r = find_cce(game, compute_occupancy(game, uniform));
              d["iterations"] = r.trace.iterations;
              d["verdict"] = to_string(r.certificate.verdict);
              return r.trace.converged && r.trace.iterations == 0 &&
                     r.certificate.verdict == Verdict::constrained_CE;
            });

  suite.run("example2.search", "the search from a constructed start returns the uniform policy",
            [&](json& d) {
              const FindResult r = find_cce(game, std::nullopt);
              d["policy"] = r.policy.values();
              d["verdict"] = to_string(r.certificate.verdict);
              return r.certificate.verdict == Verdict::constrained_CE &&
                     max_abs_diff(r.policy.values(), uniform.values()) <= 1e-9;
            });
}

}  // namespace

Game example1_game() { return parse_game_text(kExample1); }
Game example2_game() { return parse_game_text(kExample2); }

MarkovPolicy normal_form_policy(const Game& game, const std::vector<double>& probs) {
  if (game.horizon() != 1 || game.num_states() != 1 ||
      static_cast<int>(probs.size()) != game.num_joint_actions()) {
    throw std::invalid_argument("not a normal-form policy for this game");
  }
  return MarkovPolicy(game.shape(), probs);
}

MarkovModification random_markov_modification(const Game& game, int player, PolicySampler& rng) {
  const int n = game.num_actions(player);
  MarkovModification mod(player, game.horizon(), game.num_states(), n);
  for (int t = 0; t < game.horizon(); ++t)
    for (int s = 0; s < game.num_states(); ++s)
      for (int a = 0; a < n; ++a) {
        const auto row = rng.simplex(n);
        std::copy(row.begin(), row.end(), mod.row(t, s, a).begin());
      }
  return mod;
}

NonMarkovModification random_nonmarkov_modification(const Game& game, int player,
                                                    PolicySampler& rng, std::size_t cap) {
  NonMarkovModification mod(game, player, cap);
  const int n = mod.num_actions();
  for (int t = 0; t < game.horizon(); ++t)
    for (std::size_t h = 0; h < mod.histories().count(t); ++h)
      for (int a = 0; a < n; ++a) {
        const auto row = rng.simplex(n);
        std::copy(row.begin(), row.end(), mod.row(t, h, a).begin());
      }
  return mod;
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.passed; });
}

json SuiteReport::to_json() const {
  json out{{"suite", name}, {"passed", passed()}, {"checks", json::array()}};
  for (const auto& c : checks) {
    out["checks"].push_back(
        {{"id", c.id}, {"claim", c.claim}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return out;
}

std::string SuiteReport::table() const {
  std::size_t width = 2;
  for (const auto& c : checks) width = std::max(width, c.id.size());
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS  " : "FAIL  ") << c.id << std::string(width - c.id.size() + 2, ' ')
        << c.claim << '\n';
  }
  std::size_t ok = 0;
  for (const auto& c : checks) ok += c.passed ? 1 : 0;
  out << ok << '/' << checks.size() << " checks passed\n";
  return out.str();
}

SuiteReport reproduce_examples(const std::string& only, std::uint64_t seed) {
  if (!only.empty() && only != "example1" && only != "example2") {
    throw std::invalid_argument("unknown example '" + only + "' (expected example1 or example2)");
  }
  SuiteBuilder suite("reproduce");
  if (only.empty() || only == "example1") example1_checks(suite, seed);
  if (only.empty() || only == "example2") example2_checks(suite, seed);
  return suite.take();
}

SuiteReport equivalence_suite(const Game& game, const EquivalenceOptions& options) {
  SuiteBuilder suite("equivalence");
  std::vector<int> players;
  if (options.player) {
    if (*options.player < 0 || *options.player >= game.num_players()) {
      throw std::invalid_argument("player " + std::to_string(*options.player) + " out of range");
    }
    players.push_back(*options.player);
  } else {
    for (int i = 0; i < game.num_players(); ++i) players.push_back(i);
  }
  for (const auto& mod : options.extra) {
    if (!mod.fits(game)) throw std::invalid_argument("supplied modification does not fit the game");
  }

  PolicySampler rng(options.seed);
  for (const int i : players) {
    const std::string tag = "player" + std::to_string(i) + ".";
    const MarkovPolicy policy = rng.sample(game.shape());
    std::vector<MarkovModification> extra;
    for (const auto& mod : options.extra) {
      if (mod.player() == i) extra.push_back(mod);
    }

    suite.run(tag + "kernels", "history and pair auxiliary kernels are distributions",
              [&](json& d) {
                double worst = 0.0;
                for (const AuxiliaryMDP& mdp :
                     {build_mdp1(game, i, policy, options.history_cap), build_mdp2(game, i, policy)}) {
                  double init = 0.0;
                  for (double p : mdp.initial()) init += p;
                  worst = std::max(worst, std::abs(init - 1.0));
                  for (int t = 0; t + 1 < mdp.horizon(); ++t)
                    for (std::size_t x = 0; x < mdp.num_states(t); ++x)
                      for (int a = 0; a < mdp.num_actions(); ++a) {
                        double sum = 0.0;
                        for (const auto& tr : mdp.transitions(t, x, a)) sum += tr.prob;
                        worst = std::max(worst, std::abs(sum - 1.0));
                      }
                }
                d["worst_row_error"] = worst;
                return worst <= 1e-9;
              });

    // History-dependent modifications: Markov replacement and read-back.
    std::vector<NonMarkovModification> history_mods;
    for (int n = 0; n < options.samples; ++n) {
      history_mods.push_back(random_nonmarkov_modification(game, i, rng, options.history_cap));
    }
    for (const auto& mod : extra) {
      history_mods.push_back(NonMarkovModification::from_markov(game, mod, options.history_cap));
    }

    suite.run(tag + "markovianize",
              "a Markov modification reproduces each history-dependent occupancy", [&](json& d) {
                double worst = 0.0;
                for (const auto& mod : history_mods) {
                  const OccupancyMeasure target = apply_nonmarkov(game, policy, mod);
                  const MarkovModification markov =
                      markovianize(game, policy, mod, options.history_cap);
                  const OccupancyMeasure got =
                      compute_occupancy(game, apply_modification(game, policy, markov));
                  worst = std::max(worst, max_abs_diff(got.values(), target.values()));
                }
                d["modifications"] = history_mods.size();
                d["worst_error"] = worst;
                return worst <= 1e-9;
              });

    suite.run(tag + "read_back",
              "the auxiliary occupancy maps back to the modified game occupancy", [&](json& d) {
                const AuxiliaryMDP mdp = build_mdp1(game, i, policy, options.history_cap);
                double worst = 0.0;
                for (const auto& mod : history_mods) {
                  const OccupancyMeasure target = apply_nonmarkov(game, policy, mod);
                  const OccupancyMeasure got = game_occupancy_from_aux(
                      game, policy, mdp, aux_occupancy(mdp, aux_policy(mdp, mod)));
                  worst = std::max(worst, max_abs_diff(got.values(), target.values()));
                }
                d["worst_error"] = worst;
                return worst <= 1e-9;
              });

    const ModificationTable table =
        tabulate_modifications(game, i, policy, true, options.cap);

    suite.run(tag + "backward_induction",
              "backward induction on the pair MDP matches the best deterministic modification",
              [&](json& d) {
                const AuxiliaryMDP mdp = build_mdp2(game, i, policy);
                const AuxOptimum best =
                    optimize_aux(mdp, lift_reward(game, i, policy, game.reward(i)), Direction::max);
                const double exhaustive = *std::max_element(table.reward.begin(), table.reward.end());
                d["induction"] = best.value;
                d["enumeration"] = exhaustive;
                return close(best.value, exhaustive, 1e-9);
              });

    std::vector<MarkovModification> stochastic;
    for (int n = 0; n < 2 * options.samples; ++n) {
      stochastic.push_back(random_markov_modification(game, i, rng));
    }
    for (const auto& mod : extra) stochastic.push_back(mod);

    suite.run(tag + "hull",
              "stochastic modifications stay in the hull of the deterministic ones", [&](json& d) {
                double worst = 0.0;
                int outside = 0;
                for (const auto& mod : stochastic) {
                  const OccupancyMeasure occ =
                      compute_occupancy(game, apply_modification(game, policy, mod));
                  const HullMembership h = hull_membership(occ, table.occupancies);
                  worst = std::max(worst, h.residual);
                  if (!h.member) ++outside;
                }
                d["modifications"] = stochastic.size();
                d["worst_residual"] = worst;
                d["outside"] = outside;
                return outside == 0 && worst <= kHullTol;
              });

    suite.run(tag + "mixtures",
              "mixtures of deterministic modifications are realized by one stochastic "
              "modification",
              [&](json& d) {
                double worst = 0.0;
                for (int n = 0; n < options.samples; ++n) {
                  const std::vector<double> alpha = rng.simplex(static_cast<int>(table.size()));
                  const MarkovModification mod = realize_mixture(game, policy, table.mods, alpha);
                  const OccupancyMeasure got =
                      compute_occupancy(game, apply_modification(game, policy, mod));
                  const OccupancyMeasure want = mix_occupancies(alpha, table.occupancies);
                  worst = std::max(worst, max_abs_diff(got.values(), want.values()));
                }
                d["worst_error"] = worst;
                return worst <= 1e-9;
              });
  }
  return suite.take();
}

}  // namespace ccmg
