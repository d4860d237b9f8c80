#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccmg/dynamics.hpp"
#include "ccmg/game.hpp"
#include "ccmg/modifications.hpp"

namespace ccmg {

enum class RowSense { ge, le, eq };

/// maximize objective . x  subject to  rows, x >= 0.
struct LinearProgram {
  struct Row {
    std::vector<double> coeffs;
    RowSense sense = RowSense::ge;
    double rhs = 0.0;
  };

  std::vector<double> objective;
  std::vector<Row> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  void add_row(std::vector<double> coeffs, RowSense sense, double rhs) {
    rows.push_back({std::move(coeffs), sense, rhs});
  }
};

enum class LPStatus { optimal, infeasible, unbounded };
std::string to_string(LPStatus status);

struct LPSolution {
  LPStatus status = LPStatus::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's rule. Deterministic: on
/// degenerate or tied optima the vertex returned is the one Bland's rule reaches.
LPSolution solve_lp(const LinearProgram& lp);

/// Largest violation of `x` against the rows and nonnegativity.
double max_violation(const LinearProgram& lp, std::span<const double> x);

/// Values of every deterministic modification of one player, in the
/// canonical ordering.
struct ModificationTable {
  int player = 0;
  DeterministicModifications mods;
  std::vector<double> reward;                  // [k]
  std::vector<std::vector<double>> constraint;  // [j][k]
  std::vector<double> threshold;               // [j]
  std::vector<OccupancyMeasure> occupancies;   // [k], empty unless requested

  std::size_t size() const { return reward.size(); }
};

ModificationTable tabulate_modifications(const Game& game, int player, const MarkovPolicy& policy,
                                         bool keep_occupancies = false,
                                         std::size_t cap = kDefaultEnumerationCap);

/// max sum_k alpha_k reward_k  s.t.  sum_k alpha_k constraint_jk >= threshold_j, alpha in simplex.
LinearProgram build_best_modification_lp(const ModificationTable& table);
LinearProgram build_best_modification_lp(const Game& game, int player, const MarkovPolicy& policy,
                                         std::size_t cap = kDefaultEnumerationCap);

struct BestModification {
  LPStatus status = LPStatus::infeasible;
  double psi = 0.0;
  std::vector<double> alpha;
};

BestModification best_feasible_modification(const ModificationTable& table);
BestModification best_feasible_modification(const Game& game, int player,
                                            const MarkovPolicy& policy,
                                            std::size_t cap = kDefaultEnumerationCap);

inline constexpr double kHullTol = 1e-7;

struct HullMembership {
  bool member = false;
  double residual = 0.0;  // smallest achievable max-coordinate error
  std::vector<double> alpha;
};

/// Minimizes the largest coordinate error of sum_k alpha_k vertex_k - point
/// over the simplex; a member iff that error is at most kHullTol.
HullMembership hull_membership(const OccupancyMeasure& point,
                               std::span<const OccupancyMeasure> vertices);

/// Entrywise convex combination; throws std::invalid_argument unless alpha
/// is a distribution within 1e-9.
OccupancyMeasure mix_occupancies(std::span<const double> alpha,
                                 std::span<const OccupancyMeasure> occupancies);

/// Largest achievable minimum slack over mixtures (epigraph LP). +inf when
/// there are no constraint rows.
struct MaxMinSlack {
  double value = 0.0;
  std::vector<double> alpha;
};
MaxMinSlack max_min_slack(const ModificationTable& table);

struct RegularityReport {
  bool strictly_feasible = false;
  double max_min_slack = 0.0;
  std::vector<double> strict_alpha;
  std::vector<int> constant_rows;
  bool positive_weights = false;
  double epsilon = 0.0;  // largest swept epsilon that admits a feasible alpha
  std::vector<double> positive_alpha;
  bool uniform_alpha_feasible = false;

  nlohmann::json to_json() const;
};

RegularityReport check_lp_regularity(const ModificationTable& table);
RegularityReport check_lp_regularity(const Game& game, int player, const MarkovPolicy& policy,
                                     std::size_t cap = kDefaultEnumerationCap);

/// Some occupancy satisfying flow consistency and every constraint row of
/// every player, from a phase-1 LP over occupancy variables.
std::optional<OccupancyMeasure> find_feasible_occupancy(const Game& game);

}  // namespace ccmg
