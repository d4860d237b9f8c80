#pragma once

#include <vector>

#include "ccmg/lp.hpp"
#include "ccmg/equilibrium.hpp"

namespace ccmg::testing {

/// Brute-force reference for solve_lp. Enumerates every basic solution of
/// {rows, x >= 0} by picking n active constraints, keeps the feasible ones
/// and takes the best objective. Unboundedness is decided the same way on
/// the recession cone cut by sum(d) = 1.
struct OracleResult {
  LPStatus status = LPStatus::infeasible;
  double objective = 0.0;
};
OracleResult enumerate_bfs(const LinearProgram& lp);

/// Random LP with small integer data; sizes uniform in [1, max_vars] x [1, max_rows].
LinearProgram random_lp(PolicySampler& rng, int max_vars, int max_rows);

}  // namespace ccmg::testing
