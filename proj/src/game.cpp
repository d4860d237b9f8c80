#include "ccmg/game.hpp"
#include "json_detail.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

namespace ccmg {

using nlohmann::json;

std::string to_string(ConstraintMode mode) {
  return mode == ConstraintMode::common ? "common" : "playerwise";
}

StageArray::StageArray(StageShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw std::invalid_argument("StageArray: value count " + std::to_string(values_.size()) +
                                " does not match shape size " + std::to_string(shape_.size()));
  }
}

MarkovPolicy MarkovPolicy::uniform(StageShape shape) {
  return MarkovPolicy(shape, 1.0 / shape.num_actions);
}

JointActionSpace::JointActionSpace(std::vector<int> actions_per_player)
    : sizes_(std::move(actions_per_player)), strides_(sizes_.size(), 1) {
  total_ = 1;
  for (int i = static_cast<int>(sizes_.size()) - 1; i >= 0; --i) {
    strides_[i] = total_;
    total_ *= std::max(sizes_[i], 0);
  }
}

int JointActionSpace::encode(std::span<const int> profile) const {
  int joint = 0;
  for (std::size_t i = 0; i < sizes_.size(); ++i) joint += profile[i] * strides_[i];
  return joint;
}

std::vector<int> JointActionSpace::decode(int joint) const {
  std::vector<int> profile(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) profile[i] = (joint / strides_[i]) % sizes_[i];
  return profile;
}

const SignalTable& Game::constraint(int player, int j) const {
  if (mode_ == ConstraintMode::common) return constraints_[j];
  return constraints_[static_cast<std::size_t>(player) * num_constraints_ + j];
}

double Game::threshold(int player, int j) const {
  if (mode_ == ConstraintMode::common) return thresholds_[j];
  return thresholds_[static_cast<std::size_t>(player) * num_constraints_ + j];
}

namespace {

std::vector<double> fit(std::vector<double> values, std::size_t expected, const std::string& what,
                        std::vector<Violation>& issues) {
  if (values.size() != expected) {
    issues.push_back({what,
                      std::abs(static_cast<double>(values.size()) - static_cast<double>(expected)),
                      "has " + std::to_string(values.size()) + " entries, expected " +
                          std::to_string(expected)});
    values.resize(expected, 0.0);
  }
  return values;
}

}  // namespace

Game Game::from_tables(Tables tables) {
  Game g;
  g.shape_issues_ = std::move(tables.shape_issues);
  g.horizon_ = tables.horizon;
  g.mode_ = tables.mode;
  g.num_constraints_ = tables.num_constraints;
  g.state_names_ = std::move(tables.states);
  g.action_names_ = std::move(tables.actions);
  std::vector<int> sizes;
  for (const auto& a : g.action_names_) sizes.push_back(static_cast<int>(a.size()));
  g.joint_ = JointActionSpace(std::move(sizes));

  const int n = g.num_players();
  const int num_states = g.num_states();
  if (g.horizon_ < 1 || n < 1 || num_states < 1 || g.joint_.size() < 1 || g.num_constraints_ < 0) {
    // Nothing meaningful can be sized; validate_game reports the dimensions.
    g.shape_issues_.push_back({"dimensions", 0.0,
                               "horizon, players, states, actions must be positive and J >= 0"});
    g.horizon_ = std::max(g.horizon_, 0);
    g.num_constraints_ = std::max(g.num_constraints_, 0);
    return g;
  }
  const StageShape shape = g.shape();
  auto& issues = g.shape_issues_;

  if (tables.rewards.size() != static_cast<std::size_t>(n)) {
    issues.push_back({"rewards", 0.0,
                      "has " + std::to_string(tables.rewards.size()) + " players, expected " +
                          std::to_string(n)});
    tables.rewards.resize(n);
  }
  for (int i = 0; i < n; ++i) {
    g.rewards_.emplace_back(shape, fit(std::move(tables.rewards[i]), shape.size(),
                                       "rewards[" + std::to_string(i) + "]", issues));
  }

  const std::size_t tables_expected =
      static_cast<std::size_t>(g.num_constraints_) * (g.mode_ == ConstraintMode::common ? 1 : n);
  if (tables.constraints.size() != tables_expected) {
    issues.push_back({"constraints", 0.0,
                      "has " + std::to_string(tables.constraints.size()) + " tables, expected " +
                          std::to_string(tables_expected)});
    tables.constraints.resize(tables_expected);
  }
  for (std::size_t k = 0; k < tables_expected; ++k) {
    g.constraints_.emplace_back(shape, fit(std::move(tables.constraints[k]), shape.size(),
                                           "constraints[" + std::to_string(k) + "]", issues));
  }
  g.thresholds_ = fit(std::move(tables.thresholds), tables_expected, "thresholds", issues);
  g.kernel_ = fit(std::move(tables.kernel),
                  static_cast<std::size_t>(g.horizon_ - 1) * num_states * g.joint_.size() *
                      num_states,
                  "kernel", issues);
  g.rho_ = fit(std::move(tables.rho), num_states, "rho", issues);
  return g;
}

bool GameReport::valid() const {
  return std::all_of(checks.begin(), checks.end(), [](const GameCheck& c) { return c.passed; });
}

json GameReport::to_json() const {
  json out;
  out["valid"] = valid();
  out["checks"] = json::array();
  for (const auto& c : checks) {
    json jc;
    jc["invariant"] = c.invariant;
    jc["passed"] = c.passed;
    jc["violations"] = json::array();
    for (const auto& v : c.violations) {
      jc["violations"].push_back({{"location", v.location}, {"magnitude", v.magnitude},
                                  {"detail", v.detail}});
    }
    out["checks"].push_back(std::move(jc));
  }
  return out;
}

namespace {

std::string cell(int t, int s, int a) {
  return "t=" + std::to_string(t) + " s=" + std::to_string(s) + " a=" + std::to_string(a);
}

void add(GameCheck& check, std::string location, double magnitude, std::string detail) {
  check.passed = false;
  check.violations.push_back({std::move(location), magnitude, std::move(detail)});
}

void check_unit_interval(const SignalTable& table, const std::string& prefix, GameCheck& check) {
  const auto& sh = table.shape();
  for (int t = 0; t < sh.horizon; ++t)
    for (int s = 0; s < sh.num_states; ++s)
      for (int a = 0; a < sh.num_actions; ++a) {
        const double v = table(t, s, a);
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
          const double mag = std::isfinite(v) ? (v < 0.0 ? -v : v - 1.0) : INFINITY;
          add(check, cell(t, s, a) + " " + prefix, mag, "value " + std::to_string(v));
        }
      }
}

}  // namespace

GameReport validate_game(const Game& game) {
  GameReport report;

  GameCheck dims{"table dimensions match (players, horizon, states, joint actions)", true, {}};
  for (const auto& v : game.shape_issues_) add(dims, v.location, v.magnitude, v.detail);
  for (int i = 0; i < game.num_players(); ++i) {
    if (game.num_actions(i) < 1) add(dims, "actions[" + std::to_string(i) + "]", 1.0, "empty");
  }
  report.checks.push_back(dims);
  if (!dims.passed) return report;

  const int n = game.num_players();
  const int horizon = game.horizon();
  const int num_states = game.num_states();
  const int num_joint = game.num_joint_actions();

  GameCheck kernel_range{"kernel entries lie in [0,1]", true, {}};
  GameCheck kernel_rows{"kernel rows sum to 1 within 1e-12", true, {}};
  for (int t = 0; t + 1 < horizon; ++t)
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_joint; ++a) {
        double sum = 0.0;
        for (int next = 0; next < num_states; ++next) {
          const double p = game.transition(t, s, a, next);
          if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            add(kernel_range, cell(t, s, a) + " next=" + std::to_string(next),
                std::isfinite(p) ? std::max(-p, p - 1.0) : INFINITY, "value " + std::to_string(p));
          }
          sum += p;
        }
        if (!(std::abs(sum - 1.0) <= kStructuralTol)) {
          add(kernel_rows, cell(t, s, a), 1.0 - sum, "row sums to " + std::to_string(sum));
        }
      }
  report.checks.push_back(kernel_range);
  report.checks.push_back(kernel_rows);

  GameCheck rewards{"reward entries lie in [0,1]", true, {}};
  for (int i = 0; i < n; ++i) check_unit_interval(game.reward(i), "i=" + std::to_string(i), rewards);
  report.checks.push_back(rewards);

  GameCheck constraints{"constraint entries lie in [0,1]", true, {}};
  GameCheck thresholds{"thresholds are finite", true, {}};
  const int owners = game.mode() == ConstraintMode::common ? 1 : n;
  for (int i = 0; i < owners; ++i)
    for (int j = 0; j < game.num_constraints(); ++j) {
      const std::string tag = game.mode() == ConstraintMode::common
                                  ? "j=" + std::to_string(j)
                                  : "i=" + std::to_string(i) + " j=" + std::to_string(j);
      check_unit_interval(game.constraint(i, j), tag, constraints);
      if (!std::isfinite(game.threshold(i, j))) add(thresholds, tag, INFINITY, "non-finite");
    }
  report.checks.push_back(constraints);
  report.checks.push_back(thresholds);

  GameCheck rho{"rho is a distribution (entries >= 0, sum 1 within 1e-12)", true, {}};
  double sum = 0.0;
  for (int s = 0; s < num_states; ++s) {
    const double p = game.initial_distribution()[s];
    if (!std::isfinite(p) || p < 0.0) add(rho, "s=" + std::to_string(s), -p, "negative mass");
    sum += p;
  }
  if (!(std::abs(sum - 1.0) <= kStructuralTol)) {
    add(rho, "rho", 1.0 - sum, "sums to " + std::to_string(sum));
  }
  report.checks.push_back(rho);

  if (game.mode() == ConstraintMode::common) {
    GameCheck shared{"common mode: constraint tables and thresholds identical across players",
                     true, {}};
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < game.num_constraints(); ++j) {
        if (&game.constraint(i, j) != &game.constraint(0, j)) {
          add(shared, "i=" + std::to_string(i) + " j=" + std::to_string(j), 0.0, "not shared");
        }
      }
    report.checks.push_back(shared);
  }
  return report;
}

ValidationError::ValidationError(GameReport report)
    : std::runtime_error([&] {
        std::string msg = "game failed validation";
        for (const auto& c : report.checks) {
          if (c.passed) continue;
          msg += "; " + c.invariant;
          if (!c.violations.empty()) {
            msg += " (" + c.violations.front().location + ": " + c.violations.front().detail + ")";
          }
        }
        return msg;
      }()),
      report_(std::move(report)) {}

namespace {

std::string trim(const std::string& text) {
  const auto b = text.find_first_not_of(" \t\n\r");
  if (b == std::string::npos) return {};
  const auto e = text.find_last_not_of(" \t\n\r");
  return text.substr(b, e - b + 1);
}

std::int64_t parse_integer(const std::string& text, const std::string& where) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw ParseError(where, "bad integer '" + text + "'");
  return value;
}

}  // namespace

double parse_number(const json& value, const std::string& where) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw ParseError(where, "expected a number or a \"p/q\" string");
  const std::string text = trim(value.get<std::string>());
  const auto slash = text.find('/');
  if (slash == std::string::npos) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
      throw ParseError(where, "bad number '" + text + "'");
    }
    return out;
  }
  std::int64_t p = parse_integer(trim(text.substr(0, slash)), where);
  std::int64_t q = parse_integer(trim(text.substr(slash + 1)), where);
  if (q == 0) throw ParseError(where, "zero denominator in '" + text + "'");
  const std::int64_t g = std::gcd(p, q);
  p /= g;
  q /= g;
  if (q < 0) {
    p = -p;
    q = -q;
  }
  constexpr std::int64_t kExact = std::int64_t{1} << 53;
  if (p > kExact || p < -kExact || q > kExact) {
    throw ParseError(where, "fraction '" + text + "' not exactly representable");
  }
  // Both operands are exact doubles, so the quotient is rounded once.
  return static_cast<double>(p) / static_cast<double>(q);
}

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw ParseError(name, "missing field");
  return doc.at(name);
}

int parse_int(const json& value, const std::string& where) {
  if (!value.is_number_integer()) throw ParseError(where, "expected an integer");
  return value.get<int>();
}

std::vector<std::string> parse_names(const json& value, const std::string& where) {
  if (!value.is_array()) throw ParseError(where, "expected a list of names");
  std::vector<std::string> names;
  for (std::size_t k = 0; k < value.size(); ++k) {
    const auto& v = value[k];
    if (v.is_string()) names.push_back(v.get<std::string>());
    else if (v.is_number()) names.push_back(v.dump());
    else throw ParseError(where + "[" + std::to_string(k) + "]", "expected a name");
  }
  return names;
}

// Flattens a nested array of the given extents in row-major order. Length
// mismatches are recorded (and padded/dropped) so they surface in validation.
void flatten(const json& value, std::span<const std::size_t> extents, const std::string& where,
             std::vector<double>& out, std::vector<Violation>& issues) {
  if (extents.empty()) {
    out.push_back(parse_number(value, where));
    return;
  }
  if (!value.is_array()) throw ParseError(where, "expected an array");
  const std::size_t expected = extents.front();
  if (value.size() != expected) {
    issues.push_back(
        {where,
         std::abs(static_cast<double>(value.size()) - static_cast<double>(expected)),
         "has " + std::to_string(value.size()) + " entries, expected " + std::to_string(expected)});
  }
  std::size_t inner = 1;
  for (std::size_t k = 1; k < extents.size(); ++k) inner *= extents[k];
  for (std::size_t k = 0; k < expected; ++k) {
    if (k < value.size()) {
      flatten(value[k], extents.subspan(1), where + "[" + std::to_string(k) + "]", out, issues);
    } else {
      out.insert(out.end(), inner, 0.0);
    }
  }
}

constexpr const char* kGameFields[] = {"num_players", "horizon", "states", "actions",
                                       "rewards", "constraints", "thresholds", "kernel",
                                       "rho", "constraint_mode"};

}  // namespace

Game parse_game(const json& doc) {
  if (!doc.is_object()) throw ParseError("document", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(std::begin(kGameFields), std::end(kGameFields), key) == std::end(kGameFields)) {
      throw ParseError(key, "unknown field");
    }
  }
  Game::Tables tables;
  const int n = parse_int(field(doc, "num_players"), "num_players");
  tables.horizon = parse_int(field(doc, "horizon"), "horizon");
  tables.states = parse_names(field(doc, "states"), "states");
  const auto& actions = field(doc, "actions");
  if (!actions.is_array()) throw ParseError("actions", "expected a list per player");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    tables.actions.push_back(parse_names(actions[i], "actions[" + std::to_string(i) + "]"));
  }
  if (static_cast<int>(tables.actions.size()) != n) {
    tables.shape_issues.push_back({"actions", std::abs(n - static_cast<double>(tables.actions.size())),
                                   "lists " + std::to_string(tables.actions.size()) +
                                       " players, num_players is " + std::to_string(n)});
  }
  const std::string mode = field(doc, "constraint_mode").is_string()
                               ? doc.at("constraint_mode").get<std::string>()
                               : std::string{};
  if (mode == "common") tables.mode = ConstraintMode::common;
  else if (mode == "playerwise") tables.mode = ConstraintMode::playerwise;
  else throw ParseError("constraint_mode", "expected \"playerwise\" or \"common\"");

  std::size_t joint = 1;
  for (const auto& a : tables.actions) joint *= a.size();
  const std::size_t horizon = static_cast<std::size_t>(std::max(tables.horizon, 0));
  const std::size_t num_states = tables.states.size();
  const std::size_t players = tables.actions.size();
  const std::size_t stage[] = {horizon, num_states, joint};
  auto& issues = tables.shape_issues;

  const auto& rewards = field(doc, "rewards");
  if (!rewards.is_array()) throw ParseError("rewards", "expected an array");
  for (std::size_t i = 0; i < std::max(players, rewards.size()); ++i) {
    if (i >= rewards.size()) {
      issues.push_back({"rewards", 1.0, "missing player " + std::to_string(i)});
      break;
    }
    std::vector<double> flat;
    flatten(rewards[i], stage, "rewards[" + std::to_string(i) + "]", flat, issues);
    tables.rewards.push_back(std::move(flat));
  }

  const auto& constraints = field(doc, "constraints");
  const auto& thresholds = field(doc, "thresholds");
  if (!constraints.is_array()) throw ParseError("constraints", "expected an array");
  if (!thresholds.is_array()) throw ParseError("thresholds", "expected an array");
  if (tables.mode == ConstraintMode::common) {
    tables.num_constraints = static_cast<int>(constraints.size());
    for (std::size_t j = 0; j < constraints.size(); ++j) {
      std::vector<double> flat;
      flatten(constraints[j], stage, "constraints[" + std::to_string(j) + "]", flat, issues);
      tables.constraints.push_back(std::move(flat));
    }
    const std::size_t extent[] = {constraints.size()};
    flatten(thresholds, extent, "thresholds", tables.thresholds, issues);
  } else {
    tables.num_constraints = constraints.empty() ? 0 : static_cast<int>(constraints[0].size());
    if (constraints.size() != players) {
      issues.push_back({"constraints", 1.0,
                        "has " + std::to_string(constraints.size()) + " players, expected " +
                            std::to_string(players)});
    }
    const std::size_t per_player[] = {static_cast<std::size_t>(tables.num_constraints), horizon,
                                      num_states, joint};
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      std::vector<double> flat;
      flatten(constraints[i], per_player, "constraints[" + std::to_string(i) + "]", flat, issues);
      for (int j = 0; j < tables.num_constraints; ++j) {
        const auto begin = flat.begin() + static_cast<std::ptrdiff_t>(j * horizon * num_states * joint);
        tables.constraints.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(horizon * num_states * joint));
      }
    }
    const std::size_t extent[] = {constraints.size(), static_cast<std::size_t>(tables.num_constraints)};
    flatten(thresholds, extent, "thresholds", tables.thresholds, issues);
  }

  if (doc.contains("kernel")) {
    const std::size_t kernel_extent[] = {horizon > 0 ? horizon - 1 : 0, num_states, joint, num_states};
    flatten(doc.at("kernel"), kernel_extent, "kernel", tables.kernel, issues);
  } else if (tables.horizon > 1) {
    throw ParseError("kernel", "missing field (required when horizon > 1)");
  }
  const std::size_t rho_extent[] = {num_states};
  flatten(field(doc, "rho"), rho_extent, "rho", tables.rho, issues);
  return Game::from_tables(std::move(tables));
}

Game parse_game_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    throw ParseError("line " + std::to_string(line), e.what());
  }
  return parse_game(doc);
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

Game load_game(const std::filesystem::path& path) {
  Game game = parse_game_text(read_file(path));
  GameReport report = validate_game(game);
  if (!report.valid()) throw ValidationError(std::move(report));
  return game;
}

namespace {

json nest(std::span<const double> flat, std::span<const std::size_t> extents) {
  if (extents.empty()) return flat.front();
  json out = json::array();
  std::size_t inner = 1;
  for (std::size_t k = 1; k < extents.size(); ++k) inner *= extents[k];
  for (std::size_t k = 0; k < extents.front(); ++k) {
    out.push_back(nest(flat.subspan(k * inner, inner), extents.subspan(1)));
  }
  return out;
}

}  // namespace

json game_to_json(const Game& game) {
  json doc;
  const auto horizon = static_cast<std::size_t>(game.horizon());
  const auto num_states = static_cast<std::size_t>(game.num_states());
  const auto joint = static_cast<std::size_t>(game.num_joint_actions());
  const std::size_t stage[] = {horizon, num_states, joint};
  doc["num_players"] = game.num_players();
  doc["horizon"] = game.horizon();
  doc["states"] = game.state_names();
  doc["actions"] = game.action_names();
  doc["constraint_mode"] = to_string(game.mode());
  doc["rewards"] = json::array();
  for (int i = 0; i < game.num_players(); ++i) {
    doc["rewards"].push_back(nest(game.reward(i).values(), stage));
  }
  doc["constraints"] = json::array();
  doc["thresholds"] = json::array();
  const int owners = game.mode() == ConstraintMode::common ? 1 : game.num_players();
  for (int i = 0; i < owners; ++i) {
    json tables = json::array();
    json cuts = json::array();
    for (int j = 0; j < game.num_constraints(); ++j) {
      tables.push_back(nest(game.constraint(i, j).values(), stage));
      cuts.push_back(game.threshold(i, j));
    }
    if (game.mode() == ConstraintMode::common) {
      doc["constraints"] = std::move(tables);
      doc["thresholds"] = std::move(cuts);
    } else {
      doc["constraints"].push_back(std::move(tables));
      doc["thresholds"].push_back(std::move(cuts));
    }
  }
  std::vector<double> kernel;
  for (std::size_t t = 0; t + 1 < horizon; ++t)
    for (std::size_t s = 0; s < num_states; ++s)
      for (std::size_t a = 0; a < joint; ++a) {
        const auto row = game.transition_row(static_cast<int>(t), static_cast<int>(s), static_cast<int>(a));
        kernel.insert(kernel.end(), row.begin(), row.end());
      }
  const std::size_t kernel_extent[] = {horizon - 1, num_states, joint, num_states};
  doc["kernel"] = horizon > 1 ? nest(kernel, kernel_extent) : json::array();
  doc["rho"] = game.initial_distribution();
  return doc;
}

void save_game(const Game& game, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + path.string());
  out << game_to_json(game).dump(2) << '\n';
}

std::string game_digest(const Game& game) {
  const std::string text = game_to_json(game).dump();
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

MarkovPolicy parse_policy(const json& doc, const Game& game) {
  if (!doc.is_object()) throw ParseError("document", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "policy") throw ParseError(key, "unknown field");
  }
  const auto& table = field(doc, "policy");
  const StageShape shape = game.shape();
  std::vector<double> flat;
  std::vector<Violation> issues;
  // Normal-form shorthand: a flat list over joint actions.
  if (shape.horizon == 1 && shape.num_states == 1 && table.is_array() && !table.empty() &&
      !table[0].is_array()) {
    const std::size_t extent[] = {static_cast<std::size_t>(shape.num_actions)};
    flatten(table, extent, "policy", flat, issues);
  } else {
    const std::size_t extent[] = {static_cast<std::size_t>(shape.horizon),
                                  static_cast<std::size_t>(shape.num_states),
                                  static_cast<std::size_t>(shape.num_actions)};
    flatten(table, extent, "policy", flat, issues);
  }
  if (!issues.empty()) throw ParseError(issues.front().location, issues.front().detail);
  MarkovPolicy policy(shape, std::move(flat));
  if (auto bad = check_policy(game, policy); !bad.empty()) {
    throw ParseError("policy " + bad.front().location, bad.front().detail);
  }
  return policy;
}

MarkovPolicy load_policy(const std::filesystem::path& path, const Game& game) {
  return parse_policy(detail::read_json(path), game);
}

json policy_to_json(const MarkovPolicy& policy) {
  const std::size_t extent[] = {static_cast<std::size_t>(policy.horizon()),
                                static_cast<std::size_t>(policy.num_states()),
                                static_cast<std::size_t>(policy.num_actions())};
  return json{{"policy", nest(policy.values(), extent)}};
}

std::vector<Violation> check_policy(const Game& game, const MarkovPolicy& policy) {
  std::vector<Violation> out;
  if (policy.shape() != game.shape()) {
    out.push_back({"shape", 0.0, "policy shape does not match the game"});
    return out;
  }
  for (int t = 0; t < policy.horizon(); ++t)
    for (int s = 0; s < policy.num_states(); ++s) {
      double sum = 0.0;
      for (int a = 0; a < policy.num_actions(); ++a) {
        const double p = policy(t, s, a);
        if (!(p >= 0.0)) out.push_back({cell(t, s, a), -p, "negative probability"});
        sum += p;
      }
      if (!(std::abs(sum - 1.0) <= kStructuralTol)) {
        out.push_back({"t=" + std::to_string(t) + " s=" + std::to_string(s), 1.0 - sum,
                       "row sums to " + std::to_string(sum)});
      }
    }
  return out;
}

namespace detail {

std::string read_text(const std::filesystem::path& path) { return read_file(path); }

json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const auto line =
        1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    throw ParseError(path.string() + " line " + std::to_string(line), e.what());
  }
}

void flatten(const json& value, std::span<const std::size_t> extents, const std::string& where,
             std::vector<double>& out, std::vector<Violation>& issues) {
  ccmg::flatten(value, extents, where, out, issues);
}

json nest(std::span<const double> flat, std::span<const std::size_t> extents) {
  return ccmg::nest(flat, extents);
}

}  // namespace detail

}  // namespace ccmg
