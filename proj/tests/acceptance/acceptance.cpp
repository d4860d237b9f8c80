// One PASS/FAIL line per acceptance criterion. Reference values come from
// the test-side oracles (trajectory enumeration, basic-solution enumeration,
// closed-form regions of the example games), not from the library.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "ccmg/aux_mdps.hpp"
#include "ccmg/dynamics.hpp"
#include "ccmg/equilibrium.hpp"
#include "ccmg/lp.hpp"
#include "ccmg/suites.hpp"
#include "fixtures.hpp"
#include "lp_oracle.hpp"

using namespace ccmg;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (passed) note << "failed: ";
      else note << "; ";
      note << what;
      passed = false;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void for_each_grid_point(int n, const std::function<void(const std::array<int, 4>&)>& visit) {
  std::array<int, 4> c{};
  for (c[0] = 0; c[0] <= n; ++c[0])
    for (c[1] = 0; c[0] + c[1] <= n; ++c[1])
      for (c[2] = 0; c[0] + c[1] + c[2] <= n; ++c[2]) {
        c[3] = n - c[0] - c[1] - c[2];
        visit(c);
      }
}

MarkovPolicy grid_policy(const Game& g, const std::array<int, 4>& c, int n) {
  return normal_form_policy(g, {double(c[0]) / n, double(c[1]) / n, double(c[2]) / n,
                                double(c[3]) / n});
}

// Example 1: region {x >= 1/2} x {y >= 1/3}, corner infeasibility, strong
// Slater failure, and the gap of 1/2.
void example1(Outcome& out) {
  const auto start = Clock::now();
  const Game g = testing::bundled("example1.game");
  int points = 0, wrong = 0;
  for_each_grid_point(20, [&](const std::array<int, 4>& c) {
    ++points;
    const MarkovPolicy p = grid_policy(g, c, 20);
    if (feasibility(g, p, 0, 1e-9).feasible() != (2 * c[0] >= 20)) ++wrong;
    if (feasibility(g, p, 1, 1e-9).feasible() != (3 * c[1] >= 20)) ++wrong;
  });
  out.require(wrong == 0, std::to_string(wrong) + " misclassified grid points");

  const MarkovPolicy corner = normal_form_policy(g, {0, 0, 0, 1});
  out.require(!feasibility(g, corner, 0).feasible() && !feasibility(g, corner, 1).feasible(),
              "corner policy should be infeasible for both players");
  out.require(!check_strong_slater_at(g, 0, corner).holds && !check_strong_slater_at(g, 1, corner).holds,
              "strong Slater should fail at the corner");

  const EquilibriumCertificate cert = verify_cce(g, normal_form_policy(g, {0.5, 1.0 / 3, 0, 1.0 / 6}));
  out.require(cert.verdict == Verdict::not_CE, "mixed policy should be not_CE");
  out.require(std::abs(cert.players[1].gap - 0.5) <= 1e-9, "player 2 gap should be 1/2");

  const double secs = seconds_since(start);
  out.require(secs < 1.0, "runtime over 1 s");
  out.note << (out.passed ? "" : " | ") << points << " grid policies, gap "
           << cert.players[1].gap << ", " << secs << " s";
}

// Example 2: uniform is the only feasible grid point and an equilibrium;
// strong Slater fails, weak Slater holds through condition 2.
void example2(Outcome& out) {
  const auto start = Clock::now();
  const Game g = testing::bundled("example2.game");
  int feasible = 0;
  bool only_uniform = true;
  for_each_grid_point(100, [&](const std::array<int, 4>& c) {
    if (!feasibility(g, grid_policy(g, c, 100)).feasible()) return;
    ++feasible;
    only_uniform = only_uniform && c == std::array<int, 4>{25, 25, 25, 25};
  });
  out.require(feasible == 1 && only_uniform, "uniform should be the unique feasible grid point");

  const MarkovPolicy uniform = MarkovPolicy::uniform(g.shape());
  const EquilibriumCertificate cert = verify_cce(g, uniform);
  out.require(cert.verdict == Verdict::constrained_CE && cert.max_gap() <= 1e-9,
              "uniform should be constrained_CE with gaps <= 1e-9");
  for (int i = 0; i < 2; ++i) {
    out.require(!check_strong_slater_at(g, i, uniform).holds, "strong Slater should fail");
    const WeakSlaterResult w = check_weak_slater_at(g, i, uniform);
    bool zero_minima = w.minima.size() == 4;
    for (double m : w.minima) zero_minima = zero_minima && std::abs(m) <= 1e-9;
    out.require(!w.condition1, "weak condition 1 should fail");
    out.require(w.condition2a && zero_minima, "condition 2(a) should hold with minima 0");
    out.require(w.condition2b && w.regularity.uniform_alpha_feasible,
                "condition 2(b) should hold with uniform weights");
  }
  const double secs = seconds_since(start);
  out.require(secs < 1.0, "runtime over 1 s");
  out.note << (out.passed ? "" : " | ") << "max gap " << cert.max_gap() << ", " << secs << " s";
}

void occupancy_oracle(Outcome& out) {
  PolicySampler rng(3003);
  double worst = 0.0;
  int compared = 0;
  for (int n = 0; n < 50; ++n) {
    testing::RandomGameSpec spec;
    spec.horizon = 1 + static_cast<int>(rng.uniform() * 3);
    spec.states = 1 + static_cast<int>(rng.uniform() * 3);
    const Game g = testing::random_game(spec, rng);
    for (int k = 0; k < 10; ++k) {
      const MarkovPolicy p = rng.sample(g.shape());
      worst = std::max(worst, testing::max_abs_diff(compute_occupancy(g, p).values(),
                                                    testing::trajectory_occupancy(g, p).values()));
      ++compared;
    }
  }
  out.require(worst <= 1e-12, "occupancy differs from trajectory enumeration");
  out.note << (out.passed ? "" : " | ") << compared << " policies, worst entry error " << worst;
}

struct Instance {
  Game game;
  MarkovPolicy policy;
};

std::vector<Instance> small_markov_instances() {
  PolicySampler rng(4004);
  std::vector<Instance> out;
  for (int n = 0; n < 25; ++n) {
    testing::RandomGameSpec spec;
    spec.horizon = 2;
    spec.states = 2;
    Game g = testing::random_game(spec, rng);
    MarkovPolicy p = rng.sample(g.shape());
    out.push_back({std::move(g), std::move(p)});
  }
  return out;
}

double worst_row_error(const AuxiliaryMDP& mdp) {
  double worst = 0.0;
  for (int t = 0; t + 1 < mdp.horizon(); ++t)
    for (std::size_t x = 0; x < mdp.num_states(t); ++x)
      for (int a = 0; a < mdp.num_actions(); ++a) {
        double sum = 0.0;
        for (const auto& tr : mdp.transitions(t, x, a)) sum += tr.prob;
        worst = std::max(worst, std::abs(sum - 1.0));
      }
  return worst;
}

void auxiliary_suite(Outcome& out, const std::vector<Instance>& instances) {
  PolicySampler rng(4005);
  double kernel = 0.0, markov = 0.0, read_back = 0.0, induction = 0.0;
  for (const auto& [g, p] : instances) {
    for (int i = 0; i < g.num_players(); ++i) {
      const AuxiliaryMDP one = build_mdp1(g, i, p);
      const AuxiliaryMDP two = build_mdp2(g, i, p);
      kernel = std::max({kernel, worst_row_error(one), worst_row_error(two)});

      for (int k = 0; k < 10; ++k) {
        const NonMarkovModification mod = random_nonmarkov_modification(g, i, rng);
        const OccupancyMeasure truth = testing::trajectory_occupancy(g, p, mod);
        const MarkovModification m = markovianize(g, p, mod);
        markov = std::max(markov,
                          testing::max_abs_diff(
                              testing::trajectory_occupancy(g, apply_modification(g, p, m)).values(),
                              truth.values()));
        const OccupancyMeasure back =
            game_occupancy_from_aux(g, p, one, aux_occupancy(one, aux_policy(one, mod)));
        read_back = std::max(read_back, testing::max_abs_diff(back.values(), truth.values()));
      }

      const DeterministicModifications mods = enumerate_det_modifications(g, i);
      double exhaustive = -INFINITY;
      for (std::size_t k = 0; k < mods.size(); ++k) {
        exhaustive = std::max(
            exhaustive,
            expected_value(testing::trajectory_occupancy(g, apply_modification(g, p, mods.at(k))),
                           g.reward(i)));
      }
      const double best =
          optimize_aux(two, lift_reward(g, i, p, g.reward(i)), Direction::max).value;
      induction = std::max(induction, std::abs(best - exhaustive));
    }
  }
  out.require(kernel <= 1e-9, "(a) auxiliary kernel rows");
  out.require(markov <= 1e-9, "(b) markovianized occupancy");
  out.require(read_back <= 1e-9, "(c) auxiliary read-back");
  out.require(induction <= 1e-9, "(d) backward induction vs enumeration");
  out.note << (out.passed ? "" : " | ") << "worst errors: kernel " << kernel << ", markovianize "
           << markov << ", read-back " << read_back << ", induction " << induction;
}

void hull_suite(Outcome& out, const std::vector<Instance>& instances) {
  PolicySampler rng(5005);
  double residual = 0.0, converse = 0.0;
  int outside = 0, checked = 0;
  for (const auto& [g, p] : instances) {
    for (int i = 0; i < g.num_players(); ++i) {
      const DeterministicModifications mods = enumerate_det_modifications(g, i);
      std::vector<OccupancyMeasure> vertices;
      for (std::size_t k = 0; k < mods.size(); ++k) {
        vertices.push_back(testing::trajectory_occupancy(g, apply_modification(g, p, mods.at(k))));
      }
      for (int k = 0; k < 20; ++k) {
        const MarkovModification mod = random_markov_modification(g, i, rng);
        const OccupancyMeasure d = testing::trajectory_occupancy(g, apply_modification(g, p, mod));
        const HullMembership h = hull_membership(d, vertices);
        ++checked;
        if (!h.member) ++outside;
        // Certificate residual recomputed from the returned weights.
        double mass = 0.0, worst = 0.0;
        for (double a : h.alpha) {
          mass += a;
          if (a < -1e-12) worst = INFINITY;
        }
        std::vector<double> mixed(d.values().size(), 0.0);
        for (std::size_t v = 0; v < vertices.size(); ++v)
          for (std::size_t e = 0; e < mixed.size(); ++e) mixed[e] += h.alpha[v] * vertices[v].values()[e];
        worst = std::max({worst, std::abs(mass - 1.0), testing::max_abs_diff(mixed, d.values())});
        residual = std::max(residual, worst);
      }
      for (int k = 0; k < 5; ++k) {
        const std::vector<double> alpha = rng.simplex(static_cast<int>(mods.size()));
        std::vector<double> want(vertices.front().values().size(), 0.0);
        for (std::size_t v = 0; v < vertices.size(); ++v)
          for (std::size_t e = 0; e < want.size(); ++e) want[e] += alpha[v] * vertices[v].values()[e];
        const MarkovModification m = realize_mixture(g, p, mods, alpha);
        converse = std::max(
            converse, testing::max_abs_diff(
                          testing::trajectory_occupancy(g, apply_modification(g, p, m)).values(), want));
      }
    }
  }
  out.require(outside == 0 && residual <= 1e-7, "hull membership");
  out.require(converse <= 1e-9, "mixture reconstruction");
  out.note << (out.passed ? "" : " | ") << checked << " modifications, worst residual " << residual
           << ", reconstruction error " << converse;
}

void lp_oracle(Outcome& out) {
  PolicySampler rng(6006);
  int agree = 0, statuses[3] = {0, 0, 0};
  double worst = 0.0;
  for (int n = 0; n < 200; ++n) {
    const LinearProgram lp = testing::random_lp(rng, 8, 12);
    const testing::OracleResult want = testing::enumerate_bfs(lp);
    const LPSolution got = solve_lp(lp);
    ++statuses[static_cast<int>(want.status)];
    if (got.status != want.status) continue;
    if (want.status == LPStatus::optimal) {
      const double err = std::abs(got.objective - want.objective);
      worst = std::max(worst, err);
      if (err > 1e-9) continue;
    }
    ++agree;
  }
  out.require(agree == 200, std::to_string(200 - agree) + " LPs disagree with enumeration");

  LinearProgram infeasible;
  infeasible.objective = {1, 1};
  infeasible.add_row({1, 1}, RowSense::le, 1);
  infeasible.add_row({1, 0}, RowSense::ge, 2);
  LinearProgram unbounded;
  unbounded.objective = {1, 1};
  unbounded.add_row({1, -1}, RowSense::le, 1);
  out.require(solve_lp(infeasible).status == LPStatus::infeasible, "constructed infeasible LP");
  out.require(solve_lp(unbounded).status == LPStatus::unbounded, "constructed unbounded LP");
  out.note << (out.passed ? "" : " | ") << "200 LPs (" << statuses[0] << " optimal, " << statuses[1]
           << " infeasible, " << statuses[2] << " unbounded), worst objective error " << worst;
}

void search_batch(Outcome& out) {
  const auto start = Clock::now();
  PolicySampler rng(20240917);
  int runs = 0, converged = 0, false_certificates = 0, certified = 0;
  while (runs < 50) {
    testing::RandomGameSpec spec;
    spec.constraints = 1 + static_cast<int>(rng.uniform() * 2);
    const Game g = testing::random_game(spec, rng);
    if (!find_feasible_occupancy(g)) continue;
    ++runs;
    const FindResult r = find_cce(g, std::nullopt);
    if (!r.certificate.players.empty()) ++certified;
    if (r.trace.converged) {
      ++converged;
      if (verify_cce(g, r.policy, 1e-6).verdict != Verdict::constrained_CE) ++false_certificates;
    }
  }
  const double secs = seconds_since(start);
  out.require(certified == runs, "every run returns a certificate");
  out.require(converged >= 45, "convergence below 90%");
  out.require(false_certificates == 0, "false certificates");
  out.require(secs < 300.0, "runtime over 5 min");
  out.note << (out.passed ? "" : " | ") << converged << "/" << runs << " converged, "
           << false_certificates << " false certificates, " << secs << " s";
}

std::string run_cli(const std::string& args, int& status) {
  const std::string command = std::string(CCMG_CLI_PATH) + " " + args;
  FILE* pipe = popen(command.c_str(), "r");
  std::string text;
  if (!pipe) {
    status = -1;
    return text;
  }
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), n);
  status = pclose(pipe);
  return text;
}

void determinism(Outcome& out) {
  int first_status = 0, second_status = 0;
  const std::string first = run_cli("--json reproduce-paper --seed 2024", first_status);
  const std::string second = run_cli("--json reproduce-paper --seed 2024", second_status);
  out.require(first_status == 0 && second_status == 0, "reproduce-paper exited nonzero");
  out.require(!first.empty() && first == second, "reports differ");
  out.note << (out.passed ? "" : " | ") << first.size() << " bytes, identical";
}

}  // namespace

// With a criterion number as argument only that criterion runs.
int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  std::vector<Instance> instances;
  const std::vector<Criterion> criteria = {
      {1, "first example reproduction", example1},
      {2, "second example reproduction", example2},
      {3, "occupancy vs trajectory enumeration", occupancy_oracle},
      {4, "auxiliary MDP suite",
       [&](Outcome& o) {
         if (instances.empty()) instances = small_markov_instances();
         auxiliary_suite(o, instances);
       }},
      {5, "hull membership and mixture reconstruction",
       [&](Outcome& o) {
         if (instances.empty()) instances = small_markov_instances();
         hull_suite(o, instances);
       }},
      {6, "LP solver vs basic-solution enumeration", lp_oracle},
      {7, "equilibrium search batch", search_batch},
      {8, "determinism of reproduce-paper", determinism},
  };
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "no criterion " << argv[1] << '\n';
    return 2;
  }
  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome out;
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.passed = false;
      out.note << " exception: " << e.what();
    }
    std::cout << (out.passed ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << out.note.str() << std::endl;
    if (!out.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
