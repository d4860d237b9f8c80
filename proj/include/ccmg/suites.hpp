#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccmg/equilibrium.hpp"
#include "ccmg/game.hpp"
#include "ccmg/modifications.hpp"

namespace ccmg {

/// The two-player one-shot games with playerwise (example 1) and common
/// (example 2) constraints that the reproduction suite is built around.
Game example1_game();
Game example2_game();

/// Normal-form policy from joint-action probabilities (H = 1, one state).
MarkovPolicy normal_form_policy(const Game& game, const std::vector<double>& probs);

MarkovModification random_markov_modification(const Game& game, int player, PolicySampler& rng);
NonMarkovModification random_nonmarkov_modification(const Game& game, int player,
                                                    PolicySampler& rng,
                                                    std::size_t cap = kDefaultHistoryCap);

struct SuiteCheck {
  std::string id;
  std::string claim;
  bool passed = false;
  nlohmann::json detail;
};

struct SuiteReport {
  std::string name;
  std::vector<SuiteCheck> checks;

  bool passed() const;
  nlohmann::json to_json() const;
  /// Fixed-width pass/fail table for terminals.
  std::string table() const;
};

/// Every published claim about the two example games, recomputed.
/// `only` is empty, "example1" or "example2"; the seed drives the sampling
/// checks.
SuiteReport reproduce_examples(const std::string& only = "", std::uint64_t seed = 0);

struct EquivalenceOptions {
  std::optional<int> player;  // all players when absent
  int samples = 10;           // random modifications per check
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultEnumerationCap;
  std::size_t history_cap = kDefaultHistoryCap;
  /// Extra user-supplied modifications, checked alongside the random ones.
  std::vector<MarkovModification> extra;
};

/// Auxiliary MDP kernels, markovianization, the occupancy read-back
/// identity, backward induction against enumeration, hull membership of
/// modified occupancies and reconstruction of mixtures, at one seeded
/// policy per player.
SuiteReport equivalence_suite(const Game& game, const EquivalenceOptions& options = {});

}  // namespace ccmg
