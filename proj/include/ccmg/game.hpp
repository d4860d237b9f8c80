#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ccmg {

/// Structural tolerance for probability rows (kernel, policies, rho).
inline constexpr double kStructuralTol = 1e-12;

enum class ConstraintMode { playerwise, common };

std::string to_string(ConstraintMode mode);

/// Dimensions of a (timestep, state, joint action) table.
struct StageShape {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(horizon) * num_states * num_actions;
  }
  std::size_t index(int t, int s, int a) const {
    return (static_cast<std::size_t>(t) * num_states + s) * num_actions + a;
  }
  friend bool operator==(const StageShape&, const StageShape&) = default;
};

/// Dense array indexed by (t, s, a); base for policies, occupancies and
/// per-step signal tables.
class StageArray {
 public:
  StageArray() = default;
  explicit StageArray(StageShape shape, double fill = 0.0)
      : shape_(shape), values_(shape.size(), fill) {}
  StageArray(StageShape shape, std::vector<double> values);

  const StageShape& shape() const { return shape_; }
  int horizon() const { return shape_.horizon; }
  int num_states() const { return shape_.num_states; }
  int num_actions() const { return shape_.num_actions; }

  double& operator()(int t, int s, int a) { return values_[shape_.index(t, s, a)]; }
  double operator()(int t, int s, int a) const { return values_[shape_.index(t, s, a)]; }

  std::span<double> row(int t, int s) {
    return {values_.data() + shape_.index(t, s, 0), static_cast<std::size_t>(shape_.num_actions)};
  }
  std::span<const double> row(int t, int s) const {
    return {values_.data() + shape_.index(t, s, 0), static_cast<std::size_t>(shape_.num_actions)};
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 protected:
  StageShape shape_;
  std::vector<double> values_;
};

/// Per-step reward or constraint signal r_t(s, a).
class SignalTable : public StageArray {
 public:
  using StageArray::StageArray;
};

/// Joint Markov policy: pi_t(a | s) over joint actions.
class MarkovPolicy : public StageArray {
 public:
  using StageArray::StageArray;

  /// Every (t, s) row is the uniform distribution over joint actions.
  static MarkovPolicy uniform(StageShape shape);
};

/// Row-major enumeration of joint actions: player 0 is the most significant
/// digit, the last player varies fastest.
class JointActionSpace {
 public:
  JointActionSpace() = default;
  explicit JointActionSpace(std::vector<int> actions_per_player);

  int num_players() const { return static_cast<int>(sizes_.size()); }
  int size() const { return total_; }
  int num_actions(int player) const { return sizes_[player]; }
  const std::vector<int>& sizes() const { return sizes_; }

  int encode(std::span<const int> profile) const;
  std::vector<int> decode(int joint) const;
  int component(int joint, int player) const { return (joint / strides_[player]) % sizes_[player]; }
  /// Joint index with player's component replaced by `action`.
  int replace(int joint, int player, int action) const {
    return joint + (action - component(joint, player)) * strides_[player];
  }
  int stride(int player) const { return strides_[player]; }

 private:
  std::vector<int> sizes_;
  std::vector<int> strides_;
  int total_ = 0;
};

struct Violation {
  std::string location;  // e.g. "t=0 s=1 a=2 i=0 j=1"
  double magnitude = 0.0;
  std::string detail;
};

struct GameCheck {
  std::string invariant;
  bool passed = true;
  std::vector<Violation> violations;
};

struct GameReport {
  std::vector<GameCheck> checks;
  bool valid() const;
  nlohmann::json to_json() const;
};

class Game;
GameReport validate_game(const Game& game);

/// Finite-horizon Markov game with coupling constraints. Constraint tables
/// are stored once per (player, j) in playerwise mode and once per j in
/// common mode, so common-mode players share storage.
class Game {
 public:
  Game() = default;

  int num_players() const { return joint_.num_players(); }
  int horizon() const { return horizon_; }
  int num_states() const { return static_cast<int>(state_names_.size()); }
  int num_joint_actions() const { return joint_.size(); }
  int num_actions(int player) const { return joint_.num_actions(player); }
  int num_constraints() const { return num_constraints_; }
  ConstraintMode mode() const { return mode_; }
  StageShape shape() const { return {horizon_, num_states(), num_joint_actions()}; }

  const JointActionSpace& joint_actions() const { return joint_; }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::vector<std::vector<std::string>>& action_names() const { return action_names_; }

  const SignalTable& reward(int player) const { return rewards_[player]; }
  const SignalTable& constraint(int player, int j) const;
  double threshold(int player, int j) const;

  /// P_t(s' | s, a), t in [0, H-1).
  double transition(int t, int s, int a, int next) const {
    return kernel_[((static_cast<std::size_t>(t) * num_states() + s) * num_joint_actions() + a) *
                       num_states() +
                   next];
  }
  std::span<const double> transition_row(int t, int s, int a) const {
    const auto n = static_cast<std::size_t>(num_states());
    return {kernel_.data() + ((static_cast<std::size_t>(t) * n + s) * num_joint_actions() + a) * n,
            n};
  }
  const std::vector<double>& initial_distribution() const { return rho_; }

  /// Builds a game from raw tables. Shapes are checked by validate_game,
  /// not here, so malformed inputs can be reported rather than rejected.
  struct Tables {
    int horizon = 1;
    std::vector<std::string> states;
    std::vector<std::vector<std::string>> actions;
    ConstraintMode mode = ConstraintMode::playerwise;
    int num_constraints = 0;
    std::vector<std::vector<double>> rewards;                  // [i] -> (t,s,a)
    std::vector<std::vector<double>> constraints;              // [i*J + j] or [j] -> (t,s,a)
    std::vector<double> thresholds;                            // [i*J + j] or [j]
    std::vector<double> kernel;                                // (t,s,a,s')
    std::vector<double> rho;
    std::vector<Violation> shape_issues;  // found by the parser
  };
  static Game from_tables(Tables tables);

 private:
  int horizon_ = 0;
  int num_constraints_ = 0;
  ConstraintMode mode_ = ConstraintMode::playerwise;
  JointActionSpace joint_;
  std::vector<std::string> state_names_;
  std::vector<std::vector<std::string>> action_names_;
  std::vector<SignalTable> rewards_;
  std::vector<SignalTable> constraints_;
  std::vector<double> thresholds_;
  std::vector<double> kernel_;
  std::vector<double> rho_;
  // Shape problems found while building; reported by validate_game.
  std::vector<Violation> shape_issues_;

  friend GameReport validate_game(const Game& game);
};

/// Raised on unparseable input; `where` names the field path or line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// Raised when a parsed game fails validation; carries the full report.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(GameReport report);
  const GameReport& report() const { return report_; }

 private:
  GameReport report_;
};

/// Raised when an enumeration or history table would exceed its cap.
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a number given as JSON number, decimal string or exact "p/q".
double parse_number(const nlohmann::json& value, const std::string& where);

/// Parses without validating; shape problems are left for validate_game.
Game parse_game(const nlohmann::json& doc);
Game parse_game_text(const std::string& text);
/// Parses and validates; throws ParseError or ValidationError.
Game load_game(const std::filesystem::path& path);
nlohmann::json game_to_json(const Game& game);
void save_game(const Game& game, const std::filesystem::path& path);

/// 64-bit FNV-1a digest of the canonical serialization.
std::string game_digest(const Game& game);

/// Policy file: {"policy": [t][state][joint_action]} with the same number
/// conventions as game files.
MarkovPolicy parse_policy(const nlohmann::json& doc, const Game& game);
MarkovPolicy load_policy(const std::filesystem::path& path, const Game& game);
nlohmann::json policy_to_json(const MarkovPolicy& policy);

/// Checks rows sum to one and entries are nonnegative; empty when valid.
std::vector<Violation> check_policy(const Game& game, const MarkovPolicy& policy);

}  // namespace ccmg
