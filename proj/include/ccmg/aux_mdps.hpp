#pragma once

#include <span>
#include <vector>

#include "ccmg/dynamics.hpp"
#include "ccmg/game.hpp"
#include "ccmg/modifications.hpp"

namespace ccmg {

/// `history`: states are (history, s_t, recommended a^i_t).
/// `pair`: states are (s_t, recommended a^i_t).
/// Both add an absorbing state as the last index of every step.
enum class AuxKind { history, pair };

struct AuxTransition {
  std::size_t next = 0;
  double prob = 0.0;
};

/// Single-agent MDP seen by one player when the others follow the joint
/// recommendation of a fixed policy. Its actions are the player's
/// replacement actions; recommendations are drawn uniformly so that any
/// modification is a policy of this MDP.
class AuxiliaryMDP {
 public:
  AuxKind kind() const { return kind_; }
  int player() const { return player_; }
  int horizon() const { return horizon_; }
  int num_actions() const { return num_actions_; }
  int num_game_states() const { return num_game_states_; }

  /// State count at step t, absorbing state included.
  std::size_t num_states(int t) const { return num_states_[t]; }
  std::size_t absorbing(int t) const { return num_states_[t] - 1; }
  std::size_t total_states() const;

  /// Game state of a non-absorbing state.
  int game_state(std::size_t x) const {
    return kind_ == AuxKind::pair ? static_cast<int>(x / num_actions_)
                                  : histories_.current_state(x / num_actions_);
  }
  int recommended(std::size_t x) const { return static_cast<int>(x % num_actions_); }
  /// History index of a non-absorbing state (history kind only).
  std::size_t history(std::size_t x) const { return x / num_actions_; }
  const HistoryIndex& histories() const { return histories_; }

  /// Sparse kernel row for t < H-1. The absorbing state maps to itself.
  std::span<const AuxTransition> transitions(int t, std::size_t x, int action) const;
  const std::vector<double>& initial() const { return initial_; }

 private:
  friend AuxiliaryMDP build_mdp1(const Game&, int, const MarkovPolicy&, std::size_t);
  friend AuxiliaryMDP build_mdp2(const Game&, int, const MarkovPolicy&);

  void add_row(int t, std::vector<AuxTransition> row);

  AuxKind kind_ = AuxKind::pair;
  int player_ = 0;
  int horizon_ = 0;
  int num_actions_ = 0;
  int num_game_states_ = 0;
  HistoryIndex histories_;
  std::vector<std::size_t> num_states_;
  std::vector<double> initial_;
  // Per step: row r = x * num_actions + action spans entries[offsets[r], offsets[r+1]).
  std::vector<std::vector<std::size_t>> offsets_;
  std::vector<std::vector<AuxTransition>> entries_;
};

/// History-expanded construction; throws ResourceCapError above `cap` states.
AuxiliaryMDP build_mdp1(const Game& game, int player, const MarkovPolicy& policy,
                        std::size_t cap = kDefaultHistoryCap);
AuxiliaryMDP build_mdp2(const Game& game, int player, const MarkovPolicy& policy);

/// Per-step table over (auxiliary state, action).
struct AuxTable {
  int num_actions = 0;
  std::vector<std::vector<double>> steps;

  double operator()(int t, std::size_t x, int a) const { return steps[t][x * num_actions + a]; }
  double& operator()(int t, std::size_t x, int a) { return steps[t][x * num_actions + a]; }
};

using AuxPolicy = AuxTable;
using AuxOccupancy = AuxTable;

/// Modification read as a policy of the auxiliary MDP; uniform at the absorbing state.
AuxPolicy aux_policy(const AuxiliaryMDP& mdp, const MarkovModification& mod);
/// History kind only.
AuxPolicy aux_policy(const AuxiliaryMDP& mdp, const NonMarkovModification& mod);

AuxOccupancy aux_occupancy(const AuxiliaryMDP& mdp, const AuxPolicy& policy);

/// Reward on (t, s, recommended, replacement), zero at the absorbing state:
/// |A^i|^t * sum over others' actions of signal(s, (replacement, others)) * pi((recommended, others) | s),
/// with t counted from 1.
class LiftedReward {
 public:
  LiftedReward() = default;
  LiftedReward(int horizon, int num_states, int num_actions)
      : horizon_(horizon), num_states_(num_states), num_actions_(num_actions),
        values_(static_cast<std::size_t>(horizon) * num_states * num_actions * num_actions, 0.0) {}

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double& operator()(int t, int s, int a, int target) { return values_[index(t, s, a, target)]; }
  double operator()(int t, int s, int a, int target) const {
    return values_[index(t, s, a, target)];
  }

 private:
  std::size_t index(int t, int s, int a, int target) const {
    return ((static_cast<std::size_t>(t) * num_states_ + s) * num_actions_ + a) * num_actions_ +
           target;
  }
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

LiftedReward lift_reward(const Game& game, int player, const MarkovPolicy& policy,
                         const SignalTable& signal);

/// Expected lifted reward under an auxiliary occupancy.
double aux_value(const AuxiliaryMDP& mdp, const AuxOccupancy& occupancy,
                 const LiftedReward& lifted);

enum class Direction { max, min };

struct AuxOptimum {
  double value = 0.0;
  MarkovModification argmod;
};

/// Backward induction over the pair construction; ties go to the smallest action.
AuxOptimum optimize_aux(const AuxiliaryMDP& mdp, const LiftedReward& lifted, Direction direction);

/// Game occupancy of the modified policy read back from an auxiliary
/// occupancy: |A^i|^t * sum over recommendations (and histories) of
/// aux(x, replacement) * pi((recommended, others) | s).
OccupancyMeasure game_occupancy_from_aux(const Game& game, const MarkovPolicy& policy,
                                         const AuxiliaryMDP& mdp, const AuxOccupancy& occupancy);

/// Markov modification whose auxiliary marginals over (t, s, recommended,
/// replacement) match `occupancy`; uniform rows where the marginal vanishes.
MarkovModification markov_from_aux(const Game& game, const AuxiliaryMDP& mdp,
                                   const AuxOccupancy& occupancy);

/// Stochastic Markov modification whose modified occupancy equals the
/// alpha-mixture of the deterministic modifications' occupancies.
MarkovModification realize_mixture(const Game& game, const MarkovPolicy& policy,
                                   const DeterministicModifications& mods,
                                   std::span<const double> alpha);

}  // namespace ccmg
