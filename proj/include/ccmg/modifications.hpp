#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ccmg/dynamics.hpp"
#include "ccmg/game.hpp"

namespace ccmg {

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;
inline constexpr std::size_t kDefaultHistoryCap = 100'000;

/// Markov modification of one player: phi_t(target | s, recommended).
class MarkovModification {
 public:
  MarkovModification() = default;
  MarkovModification(int player, int horizon, int num_states, int num_actions, double fill = 0.0);

  static MarkovModification identity(const Game& game, int player);
  static MarkovModification uniform(const Game& game, int player);
  /// Every recommendation is replaced by `target`.
  static MarkovModification constant(const Game& game, int player, int target);

  int player() const { return player_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  std::size_t num_cells() const {
    return static_cast<std::size_t>(horizon_) * num_states_ * num_actions_;
  }

  double& operator()(int t, int s, int a, int target) { return values_[index(t, s, a) + target]; }
  double operator()(int t, int s, int a, int target) const {
    return values_[index(t, s, a) + target];
  }
  std::span<double> row(int t, int s, int a) {
    return {values_.data() + index(t, s, a), static_cast<std::size_t>(num_actions_)};
  }
  std::span<const double> row(int t, int s, int a) const {
    return {values_.data() + index(t, s, a), static_cast<std::size_t>(num_actions_)};
  }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool is_deterministic() const;
  /// Rows are distributions within `tol`; empty when valid.
  std::vector<Violation> check(double tol = kStructuralTol) const;
  /// Whether the dimensions agree with `game` for this player.
  bool fits(const Game& game) const;

 private:
  std::size_t index(int t, int s, int a) const {
    return ((static_cast<std::size_t>(t) * num_states_ + s) * num_actions_ + a) * num_actions_;
  }

  int player_ = 0;
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

/// Enumerates histories (s_1, a_1, ..., s_t) with realized joint actions.
/// The index of a history at step t extends its prefix as
/// (prefix * |A| + a) * |S| + s, so the current state is index % |S|.
class HistoryIndex {
 public:
  HistoryIndex() = default;
  HistoryIndex(int horizon, int num_states, int num_joint_actions);

  /// Number of histories ending at step t (0-based); (|S||A|)^t |S|.
  std::size_t count(int t) const { return counts_[t]; }
  std::size_t extend(std::size_t prefix, int joint_action, int next_state) const {
    return (prefix * num_joint_ + joint_action) * num_states_ + next_state;
  }
  int current_state(std::size_t history) const {
    return static_cast<int>(history % num_states_);
  }
  /// Unpacks into states s_0..s_t and joint actions a_0..a_{t-1}.
  void decode(int t, std::size_t history, std::vector<int>& states, std::vector<int>& actions) const;

 private:
  int num_states_ = 0;
  int num_joint_ = 0;
  std::vector<std::size_t> counts_;
};

/// History-dependent modification phi_t(target | history, recommended).
/// Rows are stored for every history, reachable or not.
class NonMarkovModification {
 public:
  NonMarkovModification() = default;
  /// Identity modification; throws ResourceCapError if the table exceeds `cap` rows.
  NonMarkovModification(const Game& game, int player, std::size_t cap = kDefaultHistoryCap);

  /// History-independent copy of a Markov modification.
  static NonMarkovModification from_markov(const Game& game, const MarkovModification& mod,
                                           std::size_t cap = kDefaultHistoryCap);

  int player() const { return player_; }
  int horizon() const { return static_cast<int>(tables_.size()); }
  int num_actions() const { return num_actions_; }
  const HistoryIndex& histories() const { return histories_; }

  double& operator()(int t, std::size_t history, int a, int target) {
    return tables_[t][(history * num_actions_ + a) * num_actions_ + target];
  }
  double operator()(int t, std::size_t history, int a, int target) const {
    return tables_[t][(history * num_actions_ + a) * num_actions_ + target];
  }
  std::span<double> row(int t, std::size_t history, int a) {
    return {tables_[t].data() + (history * num_actions_ + a) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  std::span<const double> row(int t, std::size_t history, int a) const {
    return {tables_[t].data() + (history * num_actions_ + a) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }

  std::vector<Violation> check(double tol = kStructuralTol) const;

 private:
  int player_ = 0;
  int num_actions_ = 0;
  HistoryIndex histories_;
  std::vector<std::vector<double>> tables_;
};

/// (phi o pi)_t(target, others | s) = sum_a phi_t(target | s, a) pi_t((a, others) | s).
MarkovPolicy apply_modification(const Game& game, const MarkovPolicy& policy,
                                const MarkovModification& mod);

/// Occupancy of the history-dependent modified process, by exact forward
/// propagation over histories.
OccupancyMeasure apply_nonmarkov(const Game& game, const MarkovPolicy& policy,
                                 const NonMarkovModification& mod);

/// All deterministic Markov modifications of one player, generated on demand.
/// Modification k writes its targets as base-|A^i| digits of k over cells
/// (t, s, a) in lexicographic order, the first cell being most significant.
class DeterministicModifications {
 public:
  DeterministicModifications() = default;
  DeterministicModifications(const Game& game, int player,
                             std::size_t cap = kDefaultEnumerationCap);

  int player() const { return player_; }
  std::size_t size() const { return count_; }
  std::size_t identity_index() const { return identity_; }

  /// Target action chosen at `cell` by modification k.
  int target(std::size_t k, std::size_t cell) const;
  MarkovModification at(std::size_t k) const;
  /// Position of a deterministic modification in the ordering.
  std::size_t index_of(const MarkovModification& mod) const;

 private:
  int player_ = 0;
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::size_t num_cells_ = 0;
  std::size_t count_ = 0;
  std::size_t identity_ = 0;
};

DeterministicModifications enumerate_det_modifications(const Game& game, int player,
                                                       std::size_t cap = kDefaultEnumerationCap);

/// Markov modification inducing the same game occupancy as `mod` under
/// `policy`, read off the history-expanded auxiliary MDP. Cells with no
/// auxiliary mass get the uniform row.
MarkovModification markovianize(const Game& game, const MarkovPolicy& policy,
                                const NonMarkovModification& mod,
                                std::size_t cap = kDefaultHistoryCap);

/// File format: {"player": i, "table": [t][state][recommended][target]}.
MarkovModification parse_modification(const nlohmann::json& doc, const Game& game);
MarkovModification load_modification(const std::filesystem::path& path, const Game& game);
nlohmann::json modification_to_json(const MarkovModification& mod);

}  // namespace ccmg
