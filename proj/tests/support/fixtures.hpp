#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ccmg/equilibrium.hpp"
#include "ccmg/game.hpp"
#include "ccmg/modifications.hpp"
#include "ccmg/suites.hpp"

namespace ccmg::testing {

struct RandomGameSpec {
  int players = 2;
  int horizon = 1;
  int states = 1;
  int actions = 2;  // per player
  int constraints = 1;
  ConstraintMode mode = ConstraintMode::common;
  // Threshold = min + loose * (mean - min) over the constraint table's
  // per-step joint-action values, summed over steps.
  double looseness = 0.5;
};

Game random_game(const RandomGameSpec& spec, PolicySampler& rng);

/// Directory holding the bundled game files.
std::filesystem::path games_dir();
Game bundled(const char* name);

/// Occupancy by summing the probability of every complete trajectory
/// (s_1, a_1, ..., s_H, a_H). Independent of the library's recursion.
OccupancyMeasure trajectory_occupancy(const Game& game, const MarkovPolicy& policy);

/// Same, for a history-dependent modification of `policy`; histories carry
/// realized joint actions.
OccupancyMeasure trajectory_occupancy(const Game& game, const MarkovPolicy& policy,
                                      const NonMarkovModification& mod);

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ccmg::testing
