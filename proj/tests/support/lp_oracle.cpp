#include "lp_oracle.hpp"

#include <cmath>
#include <limits>

namespace ccmg::testing {

namespace {

struct Halfspace {
  std::vector<double> a;
  RowSense sense;
  double b;
};

// Solves the square system by Gaussian elimination with partial pivoting.
bool solve_square(std::vector<std::vector<double>> m, std::vector<double> rhs,
                  std::vector<double>& x) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
    if (std::abs(m[p][c]) < 1e-10) return false;
    std::swap(m[p], m[c]);
    std::swap(rhs[p], rhs[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t c = n; c-- > 0;) {
    double v = rhs[c];
    for (std::size_t k = c + 1; k < n; ++k) v -= m[c][k] * x[k];
    x[c] = v / m[c][c];
  }
  return true;
}

bool satisfies(const std::vector<Halfspace>& hs, const std::vector<double>& x) {
  for (const auto& h : hs) {
    double v = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) v += h.a[k] * x[k];
    const double tol = 1e-9 * std::max(1.0, std::abs(h.b));
    if (h.sense == RowSense::ge && v < h.b - tol) return false;
    if (h.sense == RowSense::le && v > h.b + tol) return false;
    if (h.sense == RowSense::eq && std::abs(v - h.b) > tol) return false;
  }
  return true;
}

// Best objective over the vertices of {hs}; nullopt-like flag when none.
bool best_vertex(const std::vector<Halfspace>& hs, const std::vector<double>& c, double& best) {
  const std::size_t n = c.size();
  const std::size_t m = hs.size();
  bool found = false;
  best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(n);
  // Lexicographic n-subsets of m constraints.
  for (std::size_t k = 0; k < n; ++k) pick[k] = k;
  if (n > m) return false;
  for (;;) {
    std::vector<std::vector<double>> mat;
    std::vector<double> rhs;
    for (std::size_t k : pick) {
      mat.push_back(hs[k].a);
      rhs.push_back(hs[k].b);
    }
    std::vector<double> x;
    if (solve_square(mat, rhs, x) && satisfies(hs, x)) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += c[k] * x[k];
      if (!found || v > best) best = v;
      found = true;
    }
    std::size_t k = n;
    while (k > 0 && pick[k - 1] == m - n + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t j = k; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return found;
}

}  // namespace

OracleResult enumerate_bfs(const LinearProgram& lp) {
  const std::size_t n = lp.objective.size();
  std::vector<Halfspace> primal, cone;
  for (const auto& row : lp.rows) {
    primal.push_back({row.coeffs, row.sense, row.rhs});
    cone.push_back({row.coeffs, row.sense, 0.0});
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    primal.push_back({e, RowSense::ge, 0.0});
    cone.push_back({e, RowSense::ge, 0.0});
  }
  cone.push_back({std::vector<double>(n, 1.0), RowSense::eq, 1.0});

  OracleResult out;
  double best = 0.0;
  if (!best_vertex(primal, lp.objective, best)) return out;
  double ray = 0.0;
  if (best_vertex(cone, lp.objective, ray) && ray > 1e-9) {
    out.status = LPStatus::unbounded;
    return out;
  }
  out.status = LPStatus::optimal;
  out.objective = best;
  return out;
}

LinearProgram random_lp(PolicySampler& rng, int max_vars, int max_rows) {
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
  };
  LinearProgram lp;
  const int n = pick(1, max_vars);
  const int m = pick(1, max_rows);
  // Most instances are built around a known feasible point, and most of
  // those get a bounding row, so every status shows up.
  const bool anchored = rng.uniform() < 0.8;
  const bool bounded = anchored && rng.uniform() < 0.6;
  std::vector<double> x0(n);
  for (double& v : x0) v = pick(0, 3);
  for (int k = 0; k < n; ++k) lp.objective.push_back(pick(-5, 5));
  for (int r = 0; r < m; ++r) {
    if (bounded && r == 0) {
      double total = 0.0;
      for (double v : x0) total += v;
      lp.add_row(std::vector<double>(n, 1.0), RowSense::le, total + pick(0, 5));
      continue;
    }
    std::vector<double> a(n);
    double at = 0.0;
    for (int k = 0; k < n; ++k) {
      a[k] = pick(-5, 5);
      at += a[k] * x0[k];
    }
    const double u = rng.uniform();
    const RowSense sense = u < 0.45 ? RowSense::le : (u < 0.9 ? RowSense::ge : RowSense::eq);
    double rhs = pick(-4, 10);
    if (anchored) {
      rhs = sense == RowSense::le ? at + pick(0, 3) : sense == RowSense::ge ? at - pick(0, 3) : at;
    }
    lp.add_row(std::move(a), sense, rhs);
  }
  return lp;
}

}  // namespace ccmg::testing
