#include "ccmg/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccmg {

std::string to_string(LPStatus status) {
  switch (status) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-10;
constexpr double kPhaseOneTol = 1e-9;
constexpr double kRatioSlack = 1e-9;
constexpr int kMaxPivots = 1'000'000;
// Rounding residue below this is cleared after each pivot. Left in place it
// makes degenerate vertices look distinct, and Bland's rule can then cycle.
constexpr double kSnapTol = 1e-13;

// Dense tableau. Column `width` holds the right-hand side; `cost` is the
// reduced-cost row of a maximization with cost[width] the objective value.
class Tableau {
 public:
  Tableau(int rows, int width) : width_(width), cells_(static_cast<std::size_t>(rows) * (width + 1), 0.0), basis_(rows, -1), cost_(width + 1, 0.0) {}

  int rows() const { return static_cast<int>(basis_.size()); }
  int width() const { return width_; }
  double& at(int i, int j) { return cells_[static_cast<std::size_t>(i) * (width_ + 1) + j]; }
  double rhs(int i) const { return cells_[static_cast<std::size_t>(i) * (width_ + 1) + width_]; }
  double& rhs(int i) { return at(i, width_); }
  int& basis(int i) { return basis_[i]; }
  std::vector<double>& cost() { return cost_; }
  int pivots() const { return pivots_; }

  void pivot(int r, int c) {
    if (++pivots_ > kMaxPivots) throw std::runtime_error("simplex pivot limit reached");
    double* row = &at(r, 0);
    const double inv = 1.0 / row[c];
    for (int j = 0; j <= width_; ++j) row[j] *= inv;
    row[c] = 1.0;
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      double* other = &at(i, 0);
      const double f = other[c];
      if (f == 0.0) continue;
      for (int j = 0; j <= width_; ++j) {
        other[j] -= f * row[j];
        if (std::abs(other[j]) < kSnapTol) other[j] = 0.0;
      }
      other[c] = 0.0;
    }
    const double f = cost_[c];
    if (f != 0.0) {
      for (int j = 0; j <= width_; ++j) {
        cost_[j] -= f * row[j];
        if (std::abs(cost_[j]) < kSnapTol) cost_[j] = 0.0;
      }
      cost_[c] = 0.0;
    }
    basis_[r] = c;
  }

  /// Sets the cost row for `maximize c . x` given the current basis.
  void price(const std::vector<double>& c) {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (int j = 0; j < width_; ++j) cost_[j] = -c[j];
    for (int i = 0; i < rows(); ++i) {
      const double f = cost_[basis_[i]];
      if (f == 0.0) continue;
      const double* row = &at(i, 0);
      for (int j = 0; j <= width_; ++j) cost_[j] -= f * row[j];
      cost_[basis_[i]] = 0.0;
    }
  }

  /// Bland's rule over columns [0, allowed). Returns false when unbounded.
  bool optimize(int allowed) {
    for (;;) {
      int enter = -1;
      for (int j = 0; j < allowed; ++j) {
        if (cost_[j] < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      // Two-pass ratio test: bound the step with a small feasibility
      // allowance, then pivot on the largest element within that bound.
      // Rounding can leave a basic value slightly negative; it counts as zero.
      double bound = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        const double a = at(i, enter);
        if (a > kPivotTol) bound = std::min(bound, (std::max(rhs(i), 0.0) + kRatioSlack) / a);
      }
      if (!std::isfinite(bound)) return false;
      int leave = -1;
      for (int i = 0; i < rows(); ++i) {
        const double a = at(i, enter);
        if (a <= kPivotTol || std::max(rhs(i), 0.0) / a > bound) continue;
        if (leave < 0 || a > at(leave, enter) * (1 + 1e-9) ||
            (a >= at(leave, enter) * (1 - 1e-9) && basis_[i] < basis_[leave])) {
          leave = i;
        }
      }
      pivot(leave, enter);
    }
  }

  void drop_row(int r) {
    const auto begin = cells_.begin() + static_cast<std::ptrdiff_t>(r) * (width_ + 1);
    cells_.erase(begin, begin + (width_ + 1));
    basis_.erase(basis_.begin() + r);
  }

 private:
  int width_;
  std::vector<double> cells_;
  std::vector<int> basis_;
  std::vector<double> cost_;
  int pivots_ = 0;
};

}  // namespace

LPSolution solve_lp(const LinearProgram& lp) {
  const int n = lp.num_vars();
  if (n == 0) throw std::invalid_argument("linear program has no variables");
  for (const auto& row : lp.rows) {
    if (static_cast<int>(row.coeffs.size()) != n) {
      throw std::invalid_argument("row length does not match the variable count");
    }
  }

  // Normalize to nonnegative right-hand sides.
  struct Normalized {
    const std::vector<double>* coeffs;
    double sign;
    RowSense sense;
    double rhs;
  };
  std::vector<Normalized> rows;
  int num_slack = 0, num_art = 0;
  for (const auto& row : lp.rows) {
    Normalized r{&row.coeffs, 1.0, row.sense, row.rhs};
    if (row.rhs < 0.0) {
      r.sign = -1.0;
      r.rhs = -row.rhs;
      if (row.sense == RowSense::ge) r.sense = RowSense::le;
      else if (row.sense == RowSense::le) r.sense = RowSense::ge;
    }
    if (r.sense != RowSense::eq) ++num_slack;
    if (r.sense != RowSense::le) ++num_art;
    rows.push_back(r);
  }

  const int m = static_cast<int>(rows.size());
  const int first_art = n + num_slack;
  const int width = first_art + num_art;
  Tableau tab(m, width);
  int slack = n, art = first_art;
  double rhs_scale = 1.0;
  for (int i = 0; i < m; ++i) {
    const auto& r = rows[i];
    for (int j = 0; j < n; ++j) tab.at(i, j) = r.sign * (*r.coeffs)[j];
    tab.rhs(i) = r.rhs;
    rhs_scale = std::max(rhs_scale, r.rhs);
    if (r.sense == RowSense::le) {
      tab.at(i, slack) = 1.0;
      tab.basis(i) = slack++;
    } else {
      if (r.sense == RowSense::ge) tab.at(i, slack++) = -1.0;
      tab.at(i, art) = 1.0;
      tab.basis(i) = art++;
    }
  }

  LPSolution out;
  if (num_art > 0) {
    std::vector<double> phase_one(width, 0.0);
    for (int j = first_art; j < width; ++j) phase_one[j] = -1.0;
    tab.price(phase_one);
    tab.optimize(width);
    if (tab.cost()[width] < -kPhaseOneTol * rhs_scale) {
      out.status = LPStatus::infeasible;
      out.pivots = tab.pivots();
      return out;
    }
    // Drive remaining artificials out of the basis; rows that cannot be
    // pivoted are redundant.
    for (int i = tab.rows() - 1; i >= 0; --i) {
      if (tab.basis(i) < first_art) continue;
      int col = -1;
      for (int j = 0; j < first_art; ++j) {
        if (std::abs(tab.at(i, j)) > kPivotTol) {
          col = j;
          break;
        }
      }
      if (col >= 0) tab.pivot(i, col);
      else tab.drop_row(i);
    }
  }

  std::vector<double> cost(width, 0.0);
  std::copy(lp.objective.begin(), lp.objective.end(), cost.begin());
  tab.price(cost);
  const bool bounded = tab.optimize(first_art);
  out.pivots = tab.pivots();
  if (!bounded) {
    out.status = LPStatus::unbounded;
    return out;
  }
  out.status = LPStatus::optimal;
  out.x.assign(n, 0.0);
  for (int i = 0; i < tab.rows(); ++i) {
    if (tab.basis(i) < n) out.x[tab.basis(i)] = std::max(0.0, tab.rhs(i));
  }
  for (int j = 0; j < n; ++j) out.objective += lp.objective[j] * out.x[j];
  return out;
}

double max_violation(const LinearProgram& lp, std::span<const double> x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& row : lp.rows) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += row.coeffs[j] * x[j];
    switch (row.sense) {
      case RowSense::ge: worst = std::max(worst, row.rhs - lhs); break;
      case RowSense::le: worst = std::max(worst, lhs - row.rhs); break;
      case RowSense::eq: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

ModificationTable tabulate_modifications(const Game& game, int player, const MarkovPolicy& policy,
                                         bool keep_occupancies, std::size_t cap) {
  ModificationTable table{player, DeterministicModifications(game, player, cap), {}, {}, {}, {}};
  const int num_constraints = game.num_constraints();
  const std::size_t count = table.mods.size();
  table.reward.resize(count);
  table.constraint.assign(num_constraints, std::vector<double>(count));
  for (int j = 0; j < num_constraints; ++j) table.threshold.push_back(game.threshold(player, j));
  if (keep_occupancies) table.occupancies.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    OccupancyMeasure occ =
        compute_occupancy(game, apply_modification(game, policy, table.mods.at(k)));
    table.reward[k] = expected_value(occ, game.reward(player));
    for (int j = 0; j < num_constraints; ++j) {
      table.constraint[j][k] = expected_value(occ, game.constraint(player, j));
    }
    if (keep_occupancies) table.occupancies.push_back(std::move(occ));
  }
  return table;
}

namespace {

// A policy within kFeasibilityTol of a threshold counts as feasible, so the
// threshold is lowered to the identity's value there. Exactly feasible
// policies keep the exact threshold.
double effective_threshold(const ModificationTable& table, std::size_t j) {
  const double identity = table.constraint[j][table.mods.identity_index()];
  const double c = table.threshold[j];
  return identity < c && identity >= c - kFeasibilityTol ? identity : c;
}

}  // namespace

LinearProgram build_best_modification_lp(const ModificationTable& table) {
  LinearProgram lp;
  lp.objective = table.reward;
  for (std::size_t j = 0; j < table.constraint.size(); ++j) {
    lp.add_row(table.constraint[j], RowSense::ge, effective_threshold(table, j));
  }
  lp.add_row(std::vector<double>(table.size(), 1.0), RowSense::eq, 1.0);
  return lp;
}

LinearProgram build_best_modification_lp(const Game& game, int player, const MarkovPolicy& policy,
                                         std::size_t cap) {
  return build_best_modification_lp(tabulate_modifications(game, player, policy, false, cap));
}

BestModification best_feasible_modification(const ModificationTable& table) {
  const LPSolution sol = solve_lp(build_best_modification_lp(table));
  BestModification out;
  out.status = sol.status;
  if (sol.status == LPStatus::optimal) {
    out.psi = sol.objective;
    out.alpha = sol.x;
  } else {
    out.psi = -std::numeric_limits<double>::infinity();
  }
  return out;
}

BestModification best_feasible_modification(const Game& game, int player,
                                            const MarkovPolicy& policy, std::size_t cap) {
  return best_feasible_modification(tabulate_modifications(game, player, policy, false, cap));
}

HullMembership hull_membership(const OccupancyMeasure& point,
                               std::span<const OccupancyMeasure> vertices) {
  if (vertices.empty()) throw std::invalid_argument("hull membership needs at least one vertex");
  for (const auto& v : vertices) {
    if (v.shape() != point.shape()) throw std::invalid_argument("vertex shape mismatch");
  }
  const int count = static_cast<int>(vertices.size());
  const std::size_t coords = point.values().size();
  // Variables: alpha_0..alpha_{K-1}, then the error bound e.
  LinearProgram lp;
  lp.objective.assign(count + 1, 0.0);
  lp.objective[count] = -1.0;
  for (std::size_t c = 0; c < coords; ++c) {
    std::vector<double> row(count + 1);
    for (int k = 0; k < count; ++k) row[k] = vertices[k].values()[c];
    row[count] = -1.0;
    lp.add_row(row, RowSense::le, point.values()[c]);
    row[count] = 1.0;
    lp.add_row(std::move(row), RowSense::ge, point.values()[c]);
  }
  std::vector<double> simplex(count + 1, 1.0);
  simplex[count] = 0.0;
  lp.add_row(std::move(simplex), RowSense::eq, 1.0);

  const LPSolution sol = solve_lp(lp);
  HullMembership out;
  if (sol.status != LPStatus::optimal) return out;
  out.alpha.assign(sol.x.begin(), sol.x.begin() + count);
  // Pivoting error can leave the weights slightly off the simplex; project
  // back so the residual below is that of a genuine convex combination.
  double total = 0.0;
  for (double& a : out.alpha) total += (a = std::max(a, 0.0));
  for (double& a : out.alpha) a /= total;
  // Report the realized error of the returned weights, not the LP's bound.
  const OccupancyMeasure mixed = mix_occupancies(out.alpha, vertices);
  for (std::size_t c = 0; c < coords; ++c) {
    out.residual = std::max(out.residual, std::abs(mixed.values()[c] - point.values()[c]));
  }
  out.member = out.residual <= kHullTol;
  return out;
}

OccupancyMeasure mix_occupancies(std::span<const double> alpha,
                                 std::span<const OccupancyMeasure> occupancies) {
  if (alpha.size() != occupancies.size() || occupancies.empty()) {
    throw std::invalid_argument("weights and occupancies are not aligned");
  }
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= -1e-9)) throw std::invalid_argument("weights must be nonnegative");
    total += a;
  }
  if (!(std::abs(total - 1.0) <= 1e-9)) throw std::invalid_argument("weights must sum to one");
  OccupancyMeasure out(occupancies.front().shape());
  auto& values = out.values();
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (occupancies[k].shape() != out.shape()) throw std::invalid_argument("occupancy shape mismatch");
    if (alpha[k] == 0.0) continue;
    const auto& v = occupancies[k].values();
    for (std::size_t c = 0; c < values.size(); ++c) values[c] += alpha[k] * v[c];
  }
  return out;
}

MaxMinSlack max_min_slack(const ModificationTable& table) {
  const int count = static_cast<int>(table.size());
  MaxMinSlack out;
  if (table.constraint.empty()) {
    out.value = std::numeric_limits<double>::infinity();
    out.alpha.assign(count, 0.0);
    out.alpha[table.mods.identity_index()] = 1.0;
    return out;
  }
  // Variables: alpha, then the free bound split as t_plus - t_minus.
  LinearProgram lp;
  lp.objective.assign(count + 2, 0.0);
  lp.objective[count] = 1.0;
  lp.objective[count + 1] = -1.0;
  for (std::size_t j = 0; j < table.constraint.size(); ++j) {
    std::vector<double> row(table.constraint[j]);
    row.push_back(-1.0);
    row.push_back(1.0);
    lp.add_row(std::move(row), RowSense::ge, table.threshold[j]);
  }
  std::vector<double> simplex(count + 2, 1.0);
  simplex[count] = simplex[count + 1] = 0.0;
  lp.add_row(std::move(simplex), RowSense::eq, 1.0);
  const LPSolution sol = solve_lp(lp);
  if (sol.status != LPStatus::optimal) throw std::logic_error("max-min slack LP must be optimal");
  out.alpha.assign(sol.x.begin(), sol.x.begin() + count);
  // Pivoting error can leave the weights slightly off the simplex; project
  // back so the residual below is that of a genuine convex combination.
  double total = 0.0;
  for (double& a : out.alpha) total += (a = std::max(a, 0.0));
  for (double& a : out.alpha) a /= total;
  // Recompute from the weights rather than trusting the epigraph variable.
  out.value = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < table.constraint.size(); ++j) {
    double v = 0.0;
    for (int k = 0; k < count; ++k) v += out.alpha[k] * table.constraint[j][k];
    out.value = std::min(out.value, v - table.threshold[j]);
  }
  return out;
}

nlohmann::json RegularityReport::to_json() const {
  nlohmann::json out;
  out["strictly_feasible"] = strictly_feasible;
  out["max_min_slack"] = std::isfinite(max_min_slack) ? nlohmann::json(max_min_slack) : nlohmann::json();
  out["strict_alpha"] = strict_alpha;
  out["constant_rows"] = constant_rows;
  out["positive_weights"] = positive_weights;
  out["epsilon"] = epsilon;
  out["positive_alpha"] = positive_alpha;
  out["uniform_alpha_feasible"] = uniform_alpha_feasible;
  return out;
}

RegularityReport check_lp_regularity(const ModificationTable& table) {
  RegularityReport report;
  const int count = static_cast<int>(table.size());
  const std::size_t num_rows = table.constraint.size();

  const MaxMinSlack slack = max_min_slack(table);
  report.max_min_slack = slack.value;
  report.strictly_feasible = slack.value > kFeasibilityTol;
  if (report.strictly_feasible) report.strict_alpha = slack.alpha;

  for (std::size_t j = 0; j < num_rows; ++j) {
    const auto [lo, hi] = std::minmax_element(table.constraint[j].begin(), table.constraint[j].end());
    if (*hi - *lo <= kStructuralTol) report.constant_rows.push_back(static_cast<int>(j));
  }

  report.uniform_alpha_feasible = true;
  for (std::size_t j = 0; j < num_rows; ++j) {
    double v = 0.0;
    for (double g : table.constraint[j]) v += g / count;
    if (v < table.threshold[j] - kFeasibilityTol) report.uniform_alpha_feasible = false;
  }

  // alpha = eps + beta with beta >= 0 keeps every weight at least eps.
  for (double eps = 1e-3; eps >= 1e-9 * 0.999; eps /= 10.0) {
    if (eps * count > 1.0) continue;
    LinearProgram lp;
    lp.objective.assign(count, 0.0);
    for (std::size_t j = 0; j < num_rows; ++j) {
      double floor_mass = 0.0;
      for (double g : table.constraint[j]) floor_mass += eps * g;
      lp.add_row(table.constraint[j], RowSense::ge, effective_threshold(table, j) - floor_mass);
    }
    lp.add_row(std::vector<double>(count, 1.0), RowSense::eq, 1.0 - eps * count);
    const LPSolution sol = solve_lp(lp);
    if (sol.status != LPStatus::optimal) continue;
    report.positive_weights = true;
    report.epsilon = eps;
    report.positive_alpha.resize(count);
    for (int k = 0; k < count; ++k) report.positive_alpha[k] = eps + sol.x[k];
    break;
  }
  return report;
}

RegularityReport check_lp_regularity(const Game& game, int player, const MarkovPolicy& policy,
                                     std::size_t cap) {
  return check_lp_regularity(tabulate_modifications(game, player, policy, false, cap));
}

std::optional<OccupancyMeasure> find_feasible_occupancy(const Game& game) {
  const StageShape shape = game.shape();
  const int num_vars = static_cast<int>(shape.size());
  LinearProgram lp;
  lp.objective.assign(num_vars, 0.0);
  for (int t = 0; t < shape.horizon; ++t)
    for (int s = 0; s < shape.num_states; ++s) {
      std::vector<double> row(num_vars, 0.0);
      for (int a = 0; a < shape.num_actions; ++a) row[shape.index(t, s, a)] = 1.0;
      double rhs = 0.0;
      if (t == 0) {
        rhs = game.initial_distribution()[s];
      } else {
        for (int s0 = 0; s0 < shape.num_states; ++s0)
          for (int a = 0; a < shape.num_actions; ++a) {
            row[shape.index(t - 1, s0, a)] -= game.transition(t - 1, s0, a, s);
          }
      }
      lp.add_row(std::move(row), RowSense::eq, rhs);
    }
  const int owners = game.mode() == ConstraintMode::common ? 1 : game.num_players();
  for (int i = 0; i < owners; ++i)
    for (int j = 0; j < game.num_constraints(); ++j) {
      lp.add_row(game.constraint(i, j).values(), RowSense::ge, game.threshold(i, j));
    }
  const LPSolution sol = solve_lp(lp);
  if (sol.status != LPStatus::optimal) return std::nullopt;
  return OccupancyMeasure(shape, sol.x);
}

}  // namespace ccmg
