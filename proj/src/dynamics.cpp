#include "ccmg/dynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ccmg {

double OccupancyMeasure::state_marginal(int t, int s) const {
  double sum = 0.0;
  for (double v : row(t, s)) sum += v;
  return sum;
}

namespace {

void require_shape(const Game& game, const StageArray& table, const char* what) {
  if (table.shape() != game.shape()) {
    throw std::invalid_argument(std::string(what) + " dimensions do not match the game");
  }
}

}  // namespace

OccupancyMeasure compute_occupancy(const Game& game, const MarkovPolicy& policy) {
  require_shape(game, policy, "policy");
  const int horizon = game.horizon();
  const int num_states = game.num_states();
  const int num_joint = game.num_joint_actions();
  OccupancyMeasure d(game.shape());
  std::vector<double> marginal = game.initial_distribution();
  for (int t = 0; t < horizon; ++t) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_joint; ++a) d(t, s, a) = marginal[s] * policy(t, s, a);
    }
    if (t + 1 == horizon) break;
    std::fill(marginal.begin(), marginal.end(), 0.0);
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_joint; ++a) {
        const double mass = d(t, s, a);
        if (mass == 0.0) continue;
        const auto next = game.transition_row(t, s, a);
        for (int s2 = 0; s2 < num_states; ++s2) marginal[s2] += mass * next[s2];
      }
  }
  return d;
}

double expected_value(const OccupancyMeasure& occupancy, const SignalTable& signal) {
  const auto& d = occupancy.values();
  const auto& r = signal.values();
  double sum = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) sum += d[k] * r[k];
  return sum;
}

ValueVector evaluate(const Game& game, const OccupancyMeasure& occupancy) {
  require_shape(game, occupancy, "occupancy");
  ValueVector out;
  for (int i = 0; i < game.num_players(); ++i) {
    out.rewards.push_back(expected_value(occupancy, game.reward(i)));
    auto& row = out.constraints.emplace_back();
    for (int j = 0; j < game.num_constraints(); ++j) {
      row.push_back(expected_value(occupancy, game.constraint(i, j)));
    }
  }
  return out;
}

bool FeasibilityReport::feasible() const {
  for (const auto& e : entries) {
    if (e.slack < -tolerance) return false;
  }
  return true;
}

double FeasibilityReport::min_slack() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) out = std::min(out, e.slack);
  return out;
}

nlohmann::json FeasibilityReport::to_json() const {
  nlohmann::json out;
  out["feasible"] = feasible();
  out["tolerance"] = tolerance;
  out["slacks"] = nlohmann::json::array();
  for (const auto& e : entries) {
    out["slacks"].push_back({{"player", e.player},
                             {"constraint", e.constraint},
                             {"value", e.value},
                             {"threshold", e.threshold},
                             {"slack", e.slack}});
  }
  return out;
}

FeasibilityReport feasibility(const Game& game, const OccupancyMeasure& occupancy,
                              std::optional<int> player, double tol) {
  require_shape(game, occupancy, "occupancy");
  FeasibilityReport report;
  report.tolerance = tol;
  const int first = player.value_or(0);
  const int last = player ? *player + 1 : game.num_players();
  for (int i = first; i < last; ++i)
    for (int j = 0; j < game.num_constraints(); ++j) {
      const double value = expected_value(occupancy, game.constraint(i, j));
      const double cut = game.threshold(i, j);
      report.entries.push_back({i, j, value, cut, value - cut});
    }
  return report;
}

FeasibilityReport feasibility(const Game& game, const MarkovPolicy& policy,
                              std::optional<int> player, double tol) {
  return feasibility(game, compute_occupancy(game, policy), player, tol);
}

MarkovPolicy occupancy_to_policy(const Game& game, const OccupancyMeasure& occupancy) {
  require_shape(game, occupancy, "occupancy");
  MarkovPolicy policy(game.shape());
  const double uniform = 1.0 / game.num_joint_actions();
  for (int t = 0; t < game.horizon(); ++t)
    for (int s = 0; s < game.num_states(); ++s) {
      const double marginal = occupancy.state_marginal(t, s);
      auto out = policy.row(t, s);
      const auto in = occupancy.row(t, s);
      for (std::size_t a = 0; a < out.size(); ++a) {
        out[a] = marginal > kZeroMarginal ? in[a] / marginal : uniform;
      }
    }
  return policy;
}

std::vector<Violation> check_occupancy(const Game& game, const OccupancyMeasure& occupancy,
                                       double tol) {
  std::vector<Violation> out;
  if (occupancy.shape() != game.shape()) {
    out.push_back({"shape", 0.0, "occupancy shape does not match the game"});
    return out;
  }
  const int num_states = game.num_states();
  const int num_joint = game.num_joint_actions();
  for (int t = 0; t < game.horizon(); ++t) {
    double total = 0.0;
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_joint; ++a) {
        const double v = occupancy(t, s, a);
        if (v < -tol) {
          out.push_back({"t=" + std::to_string(t) + " s=" + std::to_string(s) + " a=" +
                             std::to_string(a),
                         -v, "negative mass"});
        }
        total += v;
      }
    if (std::abs(total - 1.0) > tol) {
      out.push_back({"t=" + std::to_string(t), 1.0 - total, "total mass " + std::to_string(total)});
    }
    for (int s = 0; s < num_states; ++s) {
      double inflow = 0.0;
      if (t == 0) {
        inflow = game.initial_distribution()[s];
      } else {
        for (int s0 = 0; s0 < num_states; ++s0)
          for (int a = 0; a < num_joint; ++a) {
            inflow += occupancy(t - 1, s0, a) * game.transition(t - 1, s0, a, s);
          }
      }
      const double gap = occupancy.state_marginal(t, s) - inflow;
      if (std::abs(gap) > tol) {
        out.push_back({"t=" + std::to_string(t) + " s=" + std::to_string(s), gap,
                       "flow mismatch"});
      }
    }
  }
  return out;
}

}  // namespace ccmg
