#include <doctest.h>

#include "ccmg/dynamics.hpp"
#include "ccmg/suites.hpp"
#include "fixtures.hpp"

using namespace ccmg;

TEST_CASE("occupancy matches trajectory enumeration on random games") {
  PolicySampler rng(101);
  for (int n = 0; n < 20; ++n) {
    testing::RandomGameSpec spec;
    spec.horizon = 1 + n % 3;
    spec.states = 1 + (n / 3) % 3;
    const Game g = testing::random_game(spec, rng);
    const MarkovPolicy p = rng.sample(g.shape());
    CHECK(testing::max_abs_diff(compute_occupancy(g, p).values(),
                                testing::trajectory_occupancy(g, p).values()) <= 1e-12);
  }
}

TEST_CASE("uniform policy in the second example spreads mass evenly") {
  const Game g = example2_game();
  const OccupancyMeasure d = compute_occupancy(g, MarkovPolicy::uniform(g.shape()));
  for (int a = 0; a < 4; ++a) CHECK(d(0, 0, a) == 0.25);
}

TEST_CASE("values are linear in the occupancy") {
  PolicySampler rng(7);
  testing::RandomGameSpec spec;
  spec.horizon = 3;
  spec.states = 2;
  spec.constraints = 2;
  const Game g = testing::random_game(spec, rng);
  const OccupancyMeasure d1 = compute_occupancy(g, rng.sample(g.shape()));
  const OccupancyMeasure d2 = compute_occupancy(g, rng.sample(g.shape()));
  const double lambda = 0.3;
  OccupancyMeasure mix(d1.shape());
  for (std::size_t k = 0; k < mix.values().size(); ++k) {
    mix.values()[k] = lambda * d1.values()[k] + (1 - lambda) * d2.values()[k];
  }
  const ValueVector v1 = evaluate(g, d1), v2 = evaluate(g, d2), vm = evaluate(g, mix);
  for (int i = 0; i < 2; ++i) {
    CHECK(vm.rewards[i] == doctest::Approx(lambda * v1.rewards[i] + (1 - lambda) * v2.rewards[i]).epsilon(1e-12));
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(vm.constraints[i][j] -
                     (lambda * v1.constraints[i][j] + (1 - lambda) * v2.constraints[i][j])) <= 1e-12);
    }
  }
}

TEST_CASE("first example values and slacks") {
  const Game g = example1_game();
  const MarkovPolicy p = normal_form_policy(g, {0.5, 1.0 / 3, 0.0, 1.0 / 6});
  const ValueVector v = evaluate(g, compute_occupancy(g, p));
  CHECK(v.rewards[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(v.rewards[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const FeasibilityReport corner = feasibility(g, normal_form_policy(g, {0, 0, 0, 1}));
  CHECK_FALSE(corner.feasible());
  REQUIRE(corner.entries.size() == 2);
  CHECK(corner.entries[0].slack == -0.5);
  CHECK(corner.entries[1].slack == doctest::Approx(-1.0 / 3).epsilon(1e-12));
  CHECK(corner.min_slack() == -0.5);
  CHECK_FALSE(feasibility(g, normal_form_policy(g, {0, 0, 0, 1}), 1).feasible());
  CHECK(feasibility(g, p).feasible());
}

TEST_CASE("policy recovered from its occupancy reproduces it") {
  PolicySampler rng(3);
  testing::RandomGameSpec spec;
  spec.horizon = 3;
  spec.states = 3;
  const Game g = testing::random_game(spec, rng);
  const OccupancyMeasure d = compute_occupancy(g, rng.sample(g.shape()));
  const OccupancyMeasure again = compute_occupancy(g, occupancy_to_policy(g, d));
  CHECK(testing::max_abs_diff(d.values(), again.values()) <= 1e-12);
  CHECK(check_occupancy(g, d).empty());
}

TEST_CASE("unreachable states get the uniform row") {
  Game::Tables t;
  t.horizon = 2;
  t.states = {"start", "never"};
  t.actions = {{"a", "b"}};
  t.rewards = {std::vector<double>(8, 0.0)};
  t.kernel = {1, 0, 1, 0, 1, 0, 1, 0};
  t.rho = {1, 0};
  const Game g = Game::from_tables(std::move(t));
  const MarkovPolicy p(g.shape(), {1, 0, 0.5, 0.5, 0, 1, 0.5, 0.5});
  const OccupancyMeasure d = compute_occupancy(g, p);
  CHECK(d.state_marginal(1, 1) == 0.0);
  const MarkovPolicy back = occupancy_to_policy(g, d);
  CHECK(back(1, 1, 0) == 0.5);
  CHECK(back(1, 1, 1) == 0.5);
  CHECK(back(0, 1, 0) == 0.5);
  CHECK(back(1, 0, 1) == 1.0);
}

TEST_CASE("occupancy checks flag flow and mass violations") {
  const Game g = testing::bundled("two_state.game");
  OccupancyMeasure d = compute_occupancy(g, MarkovPolicy::uniform(g.shape()));
  CHECK(check_occupancy(g, d).empty());
  d(1, 0, 0) += 0.1;
  d(1, 1, 0) -= 0.1;
  CHECK_FALSE(check_occupancy(g, d).empty());
  d(1, 1, 0) -= 1.0;
  CHECK_FALSE(check_occupancy(g, d).empty());
}
