#pragma once

#include <optional>
#include <vector>

#include "ccmg/game.hpp"

namespace ccmg {

/// Slack tolerance for constraint feasibility.
inline constexpr double kFeasibilityTol = 1e-9;
/// State marginals at or below this are treated as unreachable.
inline constexpr double kZeroMarginal = 1e-12;

/// State-action occupancy d_t(s, a) over joint actions.
class OccupancyMeasure : public StageArray {
 public:
  using StageArray::StageArray;

  /// Sum over joint actions of d_t(s, .).
  double state_marginal(int t, int s) const;
};

struct ValueVector {
  std::vector<double> rewards;                  // [i]
  std::vector<std::vector<double>> constraints;  // [i][j]
};

OccupancyMeasure compute_occupancy(const Game& game, const MarkovPolicy& policy);

/// sum_t sum_{s,a} d_t(s,a) * signal_t(s,a).
double expected_value(const OccupancyMeasure& occupancy, const SignalTable& signal);

ValueVector evaluate(const Game& game, const OccupancyMeasure& occupancy);

struct SlackEntry {
  int player = 0;
  int constraint = 0;
  double value = 0.0;
  double threshold = 0.0;
  double slack = 0.0;  // value - threshold
};

struct FeasibilityReport {
  std::vector<SlackEntry> entries;
  double tolerance = kFeasibilityTol;

  bool feasible() const;
  /// Smallest slack, +inf when there are no constraints.
  double min_slack() const;
  nlohmann::json to_json() const;
};

FeasibilityReport feasibility(const Game& game, const OccupancyMeasure& occupancy,
                              std::optional<int> player = std::nullopt,
                              double tol = kFeasibilityTol);
FeasibilityReport feasibility(const Game& game, const MarkovPolicy& policy,
                              std::optional<int> player = std::nullopt,
                              double tol = kFeasibilityTol);

/// Policy recovered from an occupancy: conditional d_t(s,.)/sum where the
/// state marginal is positive, uniform over joint actions elsewhere.
MarkovPolicy occupancy_to_policy(const Game& game, const OccupancyMeasure& occupancy);

/// Nonnegativity, per-step normalization and flow consistency, all at `tol`.
std::vector<Violation> check_occupancy(const Game& game, const OccupancyMeasure& occupancy,
                                       double tol = 1e-9);

}  // namespace ccmg
