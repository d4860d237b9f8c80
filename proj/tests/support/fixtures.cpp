#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ccmg::testing {

Game random_game(const RandomGameSpec& spec, PolicySampler& rng) {
  Game::Tables t;
  t.horizon = spec.horizon;
  for (int s = 0; s < spec.states; ++s) t.states.push_back("s" + std::to_string(s));
  for (int i = 0; i < spec.players; ++i) {
    auto& names = t.actions.emplace_back();
    for (int a = 0; a < spec.actions; ++a) names.push_back(std::to_string(a + 1));
  }
  t.mode = spec.mode;
  t.num_constraints = spec.constraints;
  int joint = 1;
  for (int i = 0; i < spec.players; ++i) joint *= spec.actions;
  const std::size_t cells = static_cast<std::size_t>(spec.horizon) * spec.states * joint;
  auto random_table = [&] {
    std::vector<double> v(cells);
    for (double& x : v) x = rng.uniform();
    return v;
  };
  for (int i = 0; i < spec.players; ++i) t.rewards.push_back(random_table());
  const int owners = spec.mode == ConstraintMode::common ? 1 : spec.players;
  for (int k = 0; k < owners * spec.constraints; ++k) {
    auto table = random_table();
    double low = 0.0, mean = 0.0;
    for (int h = 0; h < spec.horizon; ++h) {
      const auto begin = table.begin() + static_cast<std::ptrdiff_t>(h) * spec.states * joint;
      const auto end = begin + static_cast<std::ptrdiff_t>(spec.states) * joint;
      low += *std::min_element(begin, end);
      mean += std::accumulate(begin, end, 0.0) / (spec.states * joint);
    }
    t.thresholds.push_back(low + spec.looseness * (mean - low));
    t.constraints.push_back(std::move(table));
  }
  for (int h = 0; h + 1 < spec.horizon; ++h)
    for (int s = 0; s < spec.states; ++s)
      for (int a = 0; a < joint; ++a) {
        const auto row = rng.simplex(spec.states);
        t.kernel.insert(t.kernel.end(), row.begin(), row.end());
      }
  t.rho = rng.simplex(spec.states);
  return Game::from_tables(std::move(t));
}

std::filesystem::path games_dir() { return CCMG_GAMES_DIR; }

Game bundled(const char* name) { return load_game(games_dir() / name); }

namespace {

// Walks every trajectory; `act` yields (probability, realized action) pairs
// for the step given the history so far.
using Choice = std::pair<double, int>;
using Chooser = std::function<std::vector<Choice>(int t, const std::vector<int>& states,
                                                  const std::vector<int>& actions)>;

void walk(const Game& game, const Chooser& choose, int t, double prob, std::vector<int>& states,
          std::vector<int>& actions, OccupancyMeasure& out) {
  const int s = states.back();
  for (const auto& [p, a] : choose(t, states, actions)) {
    const double q = prob * p;
    if (q == 0.0) continue;
    out(t, s, a) += q;
    if (t + 1 == game.horizon()) continue;
    actions.push_back(a);
    for (int s2 = 0; s2 < game.num_states(); ++s2) {
      const double r = game.transition(t, s, a, s2);
      if (r == 0.0) continue;
      states.push_back(s2);
      walk(game, choose, t + 1, q * r, states, actions, out);
      states.pop_back();
    }
    actions.pop_back();
  }
}

OccupancyMeasure enumerate(const Game& game, const Chooser& choose) {
  OccupancyMeasure out(game.shape());
  std::vector<int> states, actions;
  for (int s = 0; s < game.num_states(); ++s) {
    states.assign(1, s);
    walk(game, choose, 0, game.initial_distribution()[s], states, actions, out);
  }
  return out;
}

std::size_t history_key(const Game& game, const std::vector<int>& states,
                        const std::vector<int>& actions) {
  std::size_t key = states[0];
  for (std::size_t k = 0; k < actions.size(); ++k) {
    key = (key * game.num_joint_actions() + actions[k]) * game.num_states() + states[k + 1];
  }
  return key;
}

}  // namespace

OccupancyMeasure trajectory_occupancy(const Game& game, const MarkovPolicy& policy) {
  return enumerate(game, [&](int t, const std::vector<int>& states, const std::vector<int>&) {
    std::vector<Choice> out;
    for (int a = 0; a < game.num_joint_actions(); ++a) out.emplace_back(policy(t, states.back(), a), a);
    return out;
  });
}

OccupancyMeasure trajectory_occupancy(const Game& game, const MarkovPolicy& policy,
                                      const NonMarkovModification& mod) {
  const auto& joint = game.joint_actions();
  const int player = mod.player();
  return enumerate(game, [&](int t, const std::vector<int>& states,
                             const std::vector<int>& actions) {
    const std::size_t key = history_key(game, states, actions);
    std::vector<Choice> out;
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const double p = policy(t, states.back(), a);
      for (int target = 0; target < mod.num_actions(); ++target) {
        out.emplace_back(p * mod(t, key, joint.component(a, player), target),
                         joint.replace(a, player, target));
      }
    }
    return out;
  });
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) out = std::max(out, std::abs(a[k] - b[k]));
  return out;
}

}  // namespace ccmg::testing
