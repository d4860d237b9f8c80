#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ccmg/game.hpp"
#include "ccmg/suites.hpp"
#include "fixtures.hpp"

using namespace ccmg;
using nlohmann::json;

namespace {

json example1_doc() {
  std::ifstream in(testing::games_dir() / "example1.game");
  return json::parse(in);
}

}  // namespace

TEST_CASE("bundled example games load with the expected dimensions") {
  const Game one = testing::bundled("example1.game");
  CHECK(one.mode() == ConstraintMode::playerwise);
  CHECK(one.num_players() == 2);
  CHECK(one.horizon() == 1);
  CHECK(one.num_states() == 1);
  CHECK(one.num_constraints() == 1);
  CHECK(one.threshold(0, 0) == 0.5);
  CHECK(one.threshold(1, 0) == 1.0 / 3);

  const Game two = testing::bundled("example2.game");
  CHECK(two.mode() == ConstraintMode::common);
  CHECK(two.num_constraints() == 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(two.threshold(0, j) == 0.25);
    CHECK(two.threshold(1, j) == 0.25);
    CHECK(two.constraint(0, j).values() == two.constraint(1, j).values());
  }
}

TEST_CASE("bundled files and built-in examples are the same games") {
  CHECK(game_digest(testing::bundled("example1.game")) == game_digest(example1_game()));
  CHECK(game_digest(testing::bundled("example2.game")) == game_digest(example2_game()));
}

TEST_CASE("two-state toy game is valid") {
  const Game g = testing::bundled("two_state.game");
  CHECK(g.horizon() == 2);
  CHECK(g.num_states() == 2);
  CHECK(g.transition(0, 1, 3, 1) == 1.0);
  CHECK(g.transition(0, 1, 1, 1) == 0.75);
}

TEST_CASE("numbers parse as decimals or exact fractions") {
  CHECK(parse_number(json(0.25), "x") == 0.25);
  CHECK(parse_number(json("1/3"), "x") == 1.0 / 3);
  CHECK(parse_number(json("-2/4"), "x") == -0.5);
  CHECK(parse_number(json("0.125"), "x") == 0.125);
  CHECK_THROWS_AS(parse_number(json("1/0"), "x"), ParseError);
  CHECK_THROWS_AS(parse_number(json("abc"), "x"), ParseError);
  CHECK_THROWS_AS(parse_number(json(true), "x"), ParseError);
}

TEST_CASE("joint actions are row-major with player 0 most significant") {
  const JointActionSpace space({2, 3});
  CHECK(space.size() == 6);
  const int profile[] = {1, 2};
  CHECK(space.encode(profile) == 5);
  CHECK(space.decode(4) == std::vector<int>{1, 1});
  CHECK(space.component(4, 0) == 1);
  CHECK(space.component(4, 1) == 1);
  CHECK(space.replace(4, 0, 0) == 1);
  CHECK(space.replace(4, 1, 2) == 5);
}

TEST_CASE("unknown fields and bad shapes are rejected with a location") {
  json doc = example1_doc();
  doc["extra"] = 1;
  CHECK_THROWS_AS(parse_game(doc), ParseError);

  doc = example1_doc();
  doc["rewards"][0][0][0].push_back(0);
  const Game g = parse_game(doc);
  const GameReport r = validate_game(g);
  CHECK_FALSE(r.valid());
}

TEST_CASE("a broken kernel row is reported at its cell") {
  std::ifstream in(testing::games_dir() / "two_state.game");
  json doc = json::parse(in);
  doc["kernel"][0][1][2] = json::array({"1/4", "1/2"});
  const GameReport r = validate_game(parse_game(doc));
  CHECK_FALSE(r.valid());
  bool located = false;
  for (const auto& c : r.checks)
    for (const auto& v : c.violations) located = located || v.location.find("s=1") != std::string::npos;
  CHECK(located);
}

TEST_CASE("kernel is required beyond one step") {
  std::ifstream in(testing::games_dir() / "two_state.game");
  json doc = json::parse(in);
  doc.erase("kernel");
  CHECK_THROWS_AS(parse_game(doc), ParseError);
}

TEST_CASE("malformed JSON reports the line") {
  try {
    parse_game_text("{\n\"horizon\": 1,\n oops\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.where() == "line 3");
  }
}

TEST_CASE("load_game raises on invalid content and on missing files") {
  CHECK_THROWS(load_game(testing::games_dir() / "missing.game"));
  std::ifstream in(testing::games_dir() / "example1.game");
  json doc = json::parse(in);
  doc["rho"] = json::array({"1/2"});
  const auto path = std::filesystem::temp_directory_path() / "ccmg_bad_rho.game";
  std::ofstream(path) << doc.dump();
  CHECK_THROWS_AS(load_game(path), ValidationError);
  std::filesystem::remove(path);
}

TEST_CASE("save and load round-trip preserves the digest") {
  const Game g = testing::bundled("two_state.game");
  const auto path = std::filesystem::temp_directory_path() / "ccmg_roundtrip.game";
  save_game(g, path);
  CHECK(game_digest(load_game(path)) == game_digest(g));
  std::filesystem::remove(path);
}

TEST_CASE("policies accept the normal-form shorthand and full tables") {
  const Game g = example1_game();
  const MarkovPolicy p = parse_policy(json{{"policy", {"1/2", "1/3", 0, "1/6"}}}, g);
  CHECK(p(0, 0, 1) == 1.0 / 3);
  const MarkovPolicy q = parse_policy(policy_to_json(p), g);
  CHECK(q.values() == p.values());
  CHECK_THROWS_AS(parse_policy(json{{"policy", {0.5, 0.5, 0.5, 0.0}}}, g), ParseError);
  CHECK_THROWS_AS(parse_policy(json{{"policy", {1, 0, 0}}}, g), ParseError);
  CHECK_THROWS_AS(parse_policy(json{{"pi", {1, 0, 0, 0}}}, g), ParseError);
}
