#include "ccmg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccmg/aux_mdps.hpp"

namespace ccmg {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

json policy_table(const MarkovPolicy& policy) { return policy_to_json(policy)["policy"]; }

void require_common(const Game& game, const char* what) {
  if (game.mode() != ConstraintMode::common) {
    throw ModeError(std::string(what) + " requires common coupling constraints");
  }
}

}  // namespace

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::constrained_CE: return "constrained_CE";
    case Verdict::not_CE: return "not_CE";
    case Verdict::infeasible_policy: return "infeasible_policy";
  }
  return "unknown";
}

std::string to_string(SlaterMode mode) { return mode == SlaterMode::strong ? "strong" : "weak"; }

std::string to_string(StepRule rule) {
  switch (rule) {
    case StepRule::proof: return "proof";
    case StepRule::half: return "half";
  }
  return "unknown";
}

double EquilibriumCertificate::max_gap() const {
  double out = 0.0;
  for (const auto& p : players) out = std::max(out, p.gap);
  return out;
}

json EquilibriumCertificate::to_json() const {
  json out;
  out["verdict"] = to_string(verdict);
  out["tolerance"] = tolerance;
  out["policy"] = policy_table(policy);
  out["max_gap"] = max_gap();
  out["players"] = json::array();
  for (const auto& p : players) {
    out["players"].push_back({{"player", p.player},
                              {"value", p.value},
                              {"lp_status", to_string(p.status)},
                              {"psi", finite_or_null(p.psi)},
                              {"gap", p.gap},
                              {"alpha", p.alpha}});
  }
  out["feasibility"] = feasibility.to_json();
  return out;
}

EquilibriumCertificate verify_cce(const Game& game, const MarkovPolicy& policy, double tol,
                                  std::size_t cap) {
  EquilibriumCertificate cert;
  cert.policy = policy;
  cert.tolerance = tol;
  const OccupancyMeasure occ = compute_occupancy(game, policy);
  cert.feasibility = feasibility(game, occ, std::nullopt, tol);
  for (int i = 0; i < game.num_players(); ++i) {
    const BestModification best =
        best_feasible_modification(tabulate_modifications(game, i, policy, false, cap));
    PlayerGap gap;
    gap.player = i;
    gap.value = expected_value(occ, game.reward(i));
    gap.status = best.status;
    gap.psi = best.psi;
    gap.alpha = best.alpha;
    gap.gap = best.status == LPStatus::optimal ? best.psi - gap.value : 0.0;
    cert.players.push_back(std::move(gap));
  }
  if (!cert.feasibility.feasible()) cert.verdict = Verdict::infeasible_policy;
  else if (cert.max_gap() <= tol) cert.verdict = Verdict::constrained_CE;
  else cert.verdict = Verdict::not_CE;
  return cert;
}

json StrongSlaterResult::to_json() const {
  return {{"holds", holds},
          {"max_min_slack", finite_or_null(max_min_slack)},
          {"identity_witness", identity_witness},
          {"witness_alpha", witness_alpha}};
}

namespace {

StrongSlaterResult strong_slater(const ModificationTable& table) {
  StrongSlaterResult out;
  const std::size_t identity = table.mods.identity_index();
  double identity_slack = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < table.constraint.size(); ++j) {
    identity_slack = std::min(identity_slack, table.constraint[j][identity] - table.threshold[j]);
  }
  if (identity_slack > kFeasibilityTol) {
    out.holds = true;
    out.identity_witness = true;
    out.max_min_slack = identity_slack;
    out.witness_alpha.assign(table.size(), 0.0);
    out.witness_alpha[identity] = 1.0;
    return out;
  }
  const MaxMinSlack best = max_min_slack(table);
  out.max_min_slack = best.value;
  out.holds = best.value > kFeasibilityTol;
  if (out.holds) out.witness_alpha = best.alpha;
  return out;
}

}  // namespace

StrongSlaterResult check_strong_slater_at(const Game& game, int player, const MarkovPolicy& policy,
                                          std::size_t cap) {
  return strong_slater(tabulate_modifications(game, player, policy, false, cap));
}

json WeakSlaterResult::to_json() const {
  json out;
  out["applicable"] = applicable;
  if (!applicable) {
    out["reason"] = reason;
    return out;
  }
  out["holds"] = holds;
  out["condition1"] = condition1;
  out["minima"] = minima;
  out["condition2a"] = condition2a;
  out["condition2b"] = condition2b;
  out["regularity"] = regularity.to_json();
  return out;
}

WeakSlaterResult check_weak_slater_at(const Game& game, int player, const MarkovPolicy& policy,
                                      std::size_t cap) {
  require_common(game, "the weak Slater check");
  WeakSlaterResult out;
  const FeasibilityReport feas = feasibility(game, policy, player);
  if (!feas.feasible()) {
    out.reason = "policy is infeasible";
    return out;
  }
  bool boundary = false;
  for (const auto& e : feas.entries) boundary = boundary || std::abs(e.slack) <= kFeasibilityTol;
  if (!boundary) {
    out.reason = "policy is in the interior of the feasible set";
    return out;
  }
  out.applicable = true;
  const ModificationTable table = tabulate_modifications(game, player, policy, false, cap);
  out.condition1 = strong_slater(table).holds;

  const AuxiliaryMDP mdp = build_mdp2(game, player, policy);
  out.condition2a = true;
  for (int j = 0; j < game.num_constraints(); ++j) {
    const double low =
        optimize_aux(mdp, lift_reward(game, player, policy, game.constraint(player, j)),
                     Direction::min)
            .value;
    out.minima.push_back(low);
    if (!(low < game.threshold(player, j) - kFeasibilityTol)) out.condition2a = false;
  }
  out.regularity = check_lp_regularity(table);
  out.condition2b = out.regularity.positive_weights;
  out.holds = out.condition1 || (out.condition2a && out.condition2b);
  return out;
}

PolicySampler::PolicySampler(std::uint64_t seed) : engine_(seed) {}

double PolicySampler::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> PolicySampler::simplex(int size) {
  std::vector<double> row(size);
  double total = 0.0;
  for (double& v : row) {
    v = -std::log(uniform());
    total += v;
  }
  for (double& v : row) v /= total;
  return row;
}

MarkovPolicy PolicySampler::sample(StageShape shape) {
  MarkovPolicy policy(shape);
  for (int t = 0; t < shape.horizon; ++t)
    for (int s = 0; s < shape.num_states; ++s) {
      const auto row = simplex(shape.num_actions);
      std::copy(row.begin(), row.end(), policy.row(t, s).begin());
    }
  return policy;
}

json SlaterReport::to_json() const {
  json out;
  out["mode"] = to_string(mode);
  out["samples"] = samples;
  out["seed"] = seed;
  out["tested"] = tested;
  out["not_applicable"] = not_applicable;
  out["feasible_set_empty"] = feasible_set_empty;
  out["failures"] = json::array();
  for (const auto& f : failures) {
    out["failures"].push_back({{"sample", f.sample},
                               {"player", f.player},
                               {"condition", f.condition},
                               {"policy", policy_table(f.policy)}});
  }
  return out;
}

namespace {

OccupancyMeasure blend(const OccupancyMeasure& a, const OccupancyMeasure& b, double theta) {
  OccupancyMeasure out(a.shape());
  for (std::size_t c = 0; c < out.values().size(); ++c) {
    out.values()[c] = (1.0 - theta) * a.values()[c] + theta * b.values()[c];
  }
  return out;
}

}  // namespace

OccupancyMeasure feasible_blend(const Game& game, const OccupancyMeasure& anchor,
                                const OccupancyMeasure& target) {
  if (feasibility(game, target).feasible()) return target;
  // Largest theta with the blend still feasible, by bisection. Half the usual
  // tolerance leaves room for rounding when the point is mapped to a policy.
  const double tol = kFeasibilityTol / 2;
  double lo = 0.0, hi = 1.0;
  for (int step = 0; step < 60; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (feasibility(game, blend(anchor, target, mid), std::nullopt, tol).feasible()) lo = mid;
    else hi = mid;
  }
  return blend(anchor, target, lo);
}

std::optional<OccupancyMeasure> random_feasible_start(const Game& game, std::uint64_t seed) {
  auto anchor = find_feasible_occupancy(game);
  if (!anchor) return std::nullopt;
  PolicySampler sampler(seed);
  return feasible_blend(game, *anchor, compute_occupancy(game, sampler.sample(game.shape())));
}

SlaterReport slater_sampling_harness(const Game& game, SlaterMode mode, int num_samples,
                                     std::uint64_t seed, std::size_t cap) {
  SlaterReport report;
  report.mode = mode;
  report.samples = num_samples;
  report.seed = seed;
  PolicySampler sampler(seed);

  std::optional<OccupancyMeasure> anchor;
  if (mode == SlaterMode::weak) {
    require_common(game, "the weak Slater harness");
    anchor = find_feasible_occupancy(game);
    if (!anchor) {
      report.feasible_set_empty = true;
      return report;
    }
  }

  for (int n = 0; n < num_samples; ++n) {
    MarkovPolicy policy = sampler.sample(game.shape());
    if (mode == SlaterMode::strong) {
      for (int i = 0; i < game.num_players(); ++i) {
        ++report.tested;
        if (!check_strong_slater_at(game, i, policy, cap).holds) {
          report.failures.push_back({n, i, "no strictly feasible modification", policy});
        }
      }
      continue;
    }
    policy = occupancy_to_policy(game, feasible_blend(game, *anchor, compute_occupancy(game, policy)));
    for (int i = 0; i < game.num_players(); ++i) {
      const WeakSlaterResult r = check_weak_slater_at(game, i, policy, cap);
      if (!r.applicable) {
        ++report.not_applicable;
        continue;
      }
      ++report.tested;
      if (!r.holds) {
        report.failures.push_back(
            {n, i,
             std::string("neither condition holds (2a ") + (r.condition2a ? "true" : "false") +
                 ", 2b " + (r.condition2b ? "true" : "false") + ")",
             policy});
      }
    }
  }
  return report;
}

json FixedPointTrace::to_json(bool with_steps) const {
  json out;
  out["converged"] = converged;
  out["iterations"] = iterations;
  out["final_max_gap"] = final_max_gap;
  out["worst_slack"] = finite_or_null(worst_slack);
  if (with_steps) {
    out["steps"] = json::array();
    for (const auto& s : steps) {
      out["steps"].push_back({{"iteration", s.iteration},
                              {"player", s.player},
                              {"max_gap", s.max_gap},
                              {"gap", s.gap},
                              {"step", s.step},
                              {"min_slack", finite_or_null(s.min_slack)}});
    }
  }
  return out;
}

namespace {

struct PlayerState {
  ModificationTable table;
  BestModification best;
  double value = 0.0;
  double gap = 0.0;
};

struct IterateState {
  MarkovPolicy policy;
  OccupancyMeasure occupancy;
  std::vector<PlayerState> players;
  double max_gap = 0.0;
  double min_slack = 0.0;
};

IterateState evaluate_iterate(const Game& game, const OccupancyMeasure& d, std::size_t cap) {
  IterateState state;
  state.policy = occupancy_to_policy(game, d);
  state.occupancy = compute_occupancy(game, state.policy);
  state.min_slack = feasibility(game, state.occupancy).min_slack();
  for (int i = 0; i < game.num_players(); ++i) {
    PlayerState p;
    p.table = tabulate_modifications(game, i, state.policy, true, cap);
    p.best = best_feasible_modification(p.table);
    p.value = expected_value(state.occupancy, game.reward(i));
    p.gap = p.best.status == LPStatus::optimal ? std::max(0.0, p.best.psi - p.value) : 0.0;
    state.max_gap = std::max(state.max_gap, p.gap);
    state.players.push_back(std::move(p));
  }
  return state;
}

}  // namespace

FindResult find_cce(const Game& game, const std::optional<OccupancyMeasure>& initial,
                    const FindOptions& options) {
  require_common(game, "the equilibrium search");
  OccupancyMeasure d;
  if (initial) {
    d = *initial;
  } else {
    auto start = find_feasible_occupancy(game);
    if (!start) throw EmptyFeasibleSet("no policy satisfies the coupling constraints");
    d = std::move(*start);
  }

  FindResult result;
  auto& trace = result.trace;
  trace.worst_slack = std::numeric_limits<double>::infinity();
  IterateState state = evaluate_iterate(game, d, options.cap);
  int next_player = 0;
  for (int iter = 0;; ++iter) {
    trace.worst_slack = std::min(trace.worst_slack, state.min_slack);
    if (options.keep_iterates) trace.iterates.push_back(state.occupancy);
    if (state.max_gap <= options.tol) {
      trace.converged = true;
      break;
    }
    if (iter >= options.max_iters) break;

    int player = 0;
    if (options.selection == PlayerSelection::max_gap) {
      for (int i = 1; i < game.num_players(); ++i) {
        if (state.players[i].gap > state.players[player].gap) player = i;
      }
    } else {
      // Next player in cyclic order with a positive gap.
      for (int k = 0; k < game.num_players(); ++k) {
        const int i = (next_player + k) % game.num_players();
        if (state.players[i].gap > options.tol) {
          player = i;
          break;
        }
      }
      next_player = (player + 1) % game.num_players();
    }
    const PlayerState& chosen = state.players[player];
    const OccupancyMeasure target = mix_occupancies(chosen.best.alpha, chosen.table.occupancies);
    const double lambda = options.step == StepRule::half
                              ? 0.5
                              : std::clamp(chosen.gap / (2.0 * game.horizon()), 0.0, 0.5);
    IterateState next = evaluate_iterate(game, blend(state.occupancy, target, lambda), options.cap);
    trace.steps.push_back({iter, player, state.max_gap, chosen.gap, lambda, state.min_slack});
    trace.iterations = iter + 1;
    state = std::move(next);
  }

  trace.final_max_gap = state.max_gap;
  result.policy = state.policy;
  result.occupancy = state.occupancy;
  result.certificate = verify_cce(game, state.policy, options.tol, options.cap);
  return result;
}

}  // namespace ccmg
