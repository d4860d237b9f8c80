#include "ccmg/modifications.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ccmg/aux_mdps.hpp"
#include "json_detail.hpp"

namespace ccmg {

namespace {

constexpr std::size_t kSaturated = std::numeric_limits<std::size_t>::max();

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

std::string cell_name(int t, int s, int a) {
  return "t=" + std::to_string(t) + " s=" + std::to_string(s) + " a=" + std::to_string(a);
}

void check_row(std::span<const double> row, const std::string& where, double tol,
               std::vector<Violation>& out) {
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) out.push_back({where, -p, "negative probability"});
    sum += p;
  }
  if (!(std::abs(sum - 1.0) <= tol)) {
    out.push_back({where, 1.0 - sum, "row sums to " + std::to_string(sum)});
  }
}

}  // namespace

MarkovModification::MarkovModification(int player, int horizon, int num_states, int num_actions,
                                       double fill)
    : player_(player),
      horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      values_(static_cast<std::size_t>(horizon) * num_states * num_actions * num_actions, fill) {}

MarkovModification MarkovModification::identity(const Game& game, int player) {
  const int n = game.num_actions(player);
  MarkovModification mod(player, game.horizon(), game.num_states(), n);
  for (int t = 0; t < game.horizon(); ++t)
    for (int s = 0; s < game.num_states(); ++s)
      for (int a = 0; a < n; ++a) mod(t, s, a, a) = 1.0;
  return mod;
}

MarkovModification MarkovModification::uniform(const Game& game, int player) {
  const int n = game.num_actions(player);
  return MarkovModification(player, game.horizon(), game.num_states(), n, 1.0 / n);
}

MarkovModification MarkovModification::constant(const Game& game, int player, int target) {
  const int n = game.num_actions(player);
  MarkovModification mod(player, game.horizon(), game.num_states(), n);
  for (int t = 0; t < game.horizon(); ++t)
    for (int s = 0; s < game.num_states(); ++s)
      for (int a = 0; a < n; ++a) mod(t, s, a, target) = 1.0;
  return mod;
}

bool MarkovModification::is_deterministic() const {
  for (std::size_t r = 0; r < num_cells(); ++r) {
    int ones = 0;
    for (int b = 0; b < num_actions_; ++b) {
      const double p = values_[r * num_actions_ + b];
      if (p == 1.0) ++ones;
      else if (p != 0.0) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

std::vector<Violation> MarkovModification::check(double tol) const {
  std::vector<Violation> out;
  for (int t = 0; t < horizon_; ++t)
    for (int s = 0; s < num_states_; ++s)
      for (int a = 0; a < num_actions_; ++a) check_row(row(t, s, a), cell_name(t, s, a), tol, out);
  return out;
}

bool MarkovModification::fits(const Game& game) const {
  return player_ >= 0 && player_ < game.num_players() && horizon_ == game.horizon() &&
         num_states_ == game.num_states() && num_actions_ == game.num_actions(player_);
}

HistoryIndex::HistoryIndex(int horizon, int num_states, int num_joint_actions)
    : num_states_(num_states), num_joint_(num_joint_actions) {
  std::size_t count = static_cast<std::size_t>(num_states);
  for (int t = 0; t < horizon; ++t) {
    counts_.push_back(count);
    count = saturating_mul(saturating_mul(count, num_joint_actions), num_states);
  }
}

void HistoryIndex::decode(int t, std::size_t history, std::vector<int>& states,
                          std::vector<int>& actions) const {
  states.assign(t + 1, 0);
  actions.assign(t, 0);
  for (int k = t; k >= 0; --k) {
    states[k] = static_cast<int>(history % num_states_);
    history /= num_states_;
    if (k > 0) {
      actions[k - 1] = static_cast<int>(history % num_joint_);
      history /= num_joint_;
    }
  }
}

NonMarkovModification::NonMarkovModification(const Game& game, int player, std::size_t cap)
    : player_(player),
      num_actions_(game.num_actions(player)),
      histories_(game.horizon(), game.num_states(), game.num_joint_actions()) {
  std::size_t rows = 0;
  for (int t = 0; t < game.horizon(); ++t) {
    rows = std::min(kSaturated - 1, rows) + saturating_mul(histories_.count(t), num_actions_);
    if (rows > cap) {
      throw ResourceCapError("history table needs more than " + std::to_string(cap) +
                             " rows; raise the history cap or use a smaller game");
    }
  }
  for (int t = 0; t < game.horizon(); ++t) {
    auto& table = tables_.emplace_back(histories_.count(t) * num_actions_ * num_actions_, 0.0);
    for (std::size_t r = 0; r < histories_.count(t) * num_actions_; ++r) {
      table[r * num_actions_ + r % num_actions_] = 1.0;
    }
  }
}

NonMarkovModification NonMarkovModification::from_markov(const Game& game,
                                                         const MarkovModification& mod,
                                                         std::size_t cap) {
  NonMarkovModification out(game, mod.player(), cap);
  for (int t = 0; t < out.horizon(); ++t)
    for (std::size_t h = 0; h < out.histories_.count(t); ++h) {
      const int s = out.histories_.current_state(h);
      for (int a = 0; a < out.num_actions_; ++a) {
        const auto src = mod.row(t, s, a);
        std::copy(src.begin(), src.end(), out.row(t, h, a).begin());
      }
    }
  return out;
}

std::vector<Violation> NonMarkovModification::check(double tol) const {
  std::vector<Violation> out;
  for (int t = 0; t < horizon(); ++t)
    for (std::size_t h = 0; h < histories_.count(t); ++h)
      for (int a = 0; a < num_actions_; ++a) {
        check_row(row(t, h, a),
                  "t=" + std::to_string(t) + " history=" + std::to_string(h) +
                      " a=" + std::to_string(a),
                  tol, out);
      }
  return out;
}

MarkovPolicy apply_modification(const Game& game, const MarkovPolicy& policy,
                                const MarkovModification& mod) {
  if (policy.shape() != game.shape() || !mod.fits(game)) {
    throw std::invalid_argument("modification or policy dimensions do not match the game");
  }
  const auto& joint = game.joint_actions();
  const int player = mod.player();
  const int n = mod.num_actions();
  MarkovPolicy out(game.shape());
  for (int t = 0; t < game.horizon(); ++t)
    for (int s = 0; s < game.num_states(); ++s)
      for (int a = 0; a < game.num_joint_actions(); ++a) {
        const double p = policy(t, s, a);
        if (p == 0.0) continue;
        const int own = joint.component(a, player);
        for (int target = 0; target < n; ++target) {
          out(t, s, joint.replace(a, player, target)) += mod(t, s, own, target) * p;
        }
      }
  return out;
}

OccupancyMeasure apply_nonmarkov(const Game& game, const MarkovPolicy& policy,
                                 const NonMarkovModification& mod) {
  if (policy.shape() != game.shape() || mod.horizon() != game.horizon() ||
      mod.num_actions() != game.num_actions(mod.player())) {
    throw std::invalid_argument("modification or policy dimensions do not match the game");
  }
  const auto& joint = game.joint_actions();
  const auto& histories = mod.histories();
  const int player = mod.player();
  const int num_states = game.num_states();
  OccupancyMeasure d(game.shape());
  // mass[h] = probability of the realized history h at the current step.
  std::vector<double> mass(game.initial_distribution());
  for (int t = 0; t < game.horizon(); ++t) {
    const bool last = t + 1 == game.horizon();
    std::vector<double> next(last ? 0 : histories.count(t + 1), 0.0);
    for (std::size_t h = 0; h < mass.size(); ++h) {
      if (mass[h] == 0.0) continue;
      const int s = histories.current_state(h);
      for (int a = 0; a < game.num_joint_actions(); ++a) {
        const double p = mass[h] * policy(t, s, a);
        if (p == 0.0) continue;
        const auto row = mod.row(t, h, joint.component(a, player));
        for (int target = 0; target < mod.num_actions(); ++target) {
          const double q = p * row[target];
          if (q == 0.0) continue;
          const int realized = joint.replace(a, player, target);
          d(t, s, realized) += q;
          if (last) continue;
          const auto kernel = game.transition_row(t, s, realized);
          for (int s2 = 0; s2 < num_states; ++s2) {
            if (kernel[s2] != 0.0) next[histories.extend(h, realized, s2)] += q * kernel[s2];
          }
        }
      }
    }
    mass = std::move(next);
  }
  return d;
}

DeterministicModifications::DeterministicModifications(const Game& game, int player,
                                                       std::size_t cap)
    : player_(player),
      horizon_(game.horizon()),
      num_states_(game.num_states()),
      num_actions_(game.num_actions(player)) {
  num_cells_ = static_cast<std::size_t>(horizon_) * num_states_ * num_actions_;
  count_ = 1;
  for (std::size_t c = 0; c < num_cells_; ++c) {
    count_ = saturating_mul(count_, num_actions_);
    if (count_ > cap) {
      throw ResourceCapError("player " + std::to_string(player) +
                             " has more than " + std::to_string(cap) +
                             " deterministic modifications; raise the enumeration cap");
    }
  }
  // Identity: every cell's digit is its own recommended action.
  identity_ = 0;
  for (std::size_t c = 0; c < num_cells_; ++c) {
    identity_ = identity_ * num_actions_ + c % num_actions_;
  }
}

int DeterministicModifications::target(std::size_t k, std::size_t cell) const {
  for (std::size_t c = num_cells_ - 1; c > cell; --c) k /= num_actions_;
  return static_cast<int>(k % num_actions_);
}

MarkovModification DeterministicModifications::at(std::size_t k) const {
  if (k >= count_) throw std::out_of_range("modification index out of range");
  MarkovModification mod(player_, horizon_, num_states_, num_actions_);
  auto& values = mod.values();
  for (std::size_t c = num_cells_; c-- > 0;) {
    values[c * num_actions_ + k % num_actions_] = 1.0;
    k /= num_actions_;
  }
  return mod;
}

std::size_t DeterministicModifications::index_of(const MarkovModification& mod) const {
  if (!mod.is_deterministic() || mod.num_cells() != num_cells_) {
    throw std::invalid_argument("not a deterministic modification of this player");
  }
  std::size_t k = 0;
  const auto& values = mod.values();
  for (std::size_t c = 0; c < num_cells_; ++c) {
    int digit = 0;
    while (values[c * num_actions_ + digit] != 1.0) ++digit;
    k = k * num_actions_ + digit;
  }
  return k;
}

DeterministicModifications enumerate_det_modifications(const Game& game, int player,
                                                       std::size_t cap) {
  return DeterministicModifications(game, player, cap);
}

MarkovModification markovianize(const Game& game, const MarkovPolicy& policy,
                                const NonMarkovModification& mod, std::size_t cap) {
  const AuxiliaryMDP mdp = build_mdp1(game, mod.player(), policy, cap);
  return markov_from_aux(game, mdp, aux_occupancy(mdp, aux_policy(mdp, mod)));
}

MarkovModification parse_modification(const nlohmann::json& doc, const Game& game) {
  if (!doc.is_object()) throw ParseError("document", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "player" && key != "table") throw ParseError(key, "unknown field");
  }
  if (!doc.contains("player") || !doc["player"].is_number_integer()) {
    throw ParseError("player", "expected an integer player index");
  }
  const int player = doc["player"].get<int>();
  if (player < 0 || player >= game.num_players()) {
    throw ParseError("player", "index " + std::to_string(player) + " out of range");
  }
  if (!doc.contains("table")) throw ParseError("table", "missing field");
  const int n = game.num_actions(player);
  const std::size_t extent[] = {static_cast<std::size_t>(game.horizon()),
                                static_cast<std::size_t>(game.num_states()),
                                static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  std::vector<double> flat;
  std::vector<Violation> issues;
  detail::flatten(doc["table"], extent, "table", flat, issues);
  if (!issues.empty()) throw ParseError(issues.front().location, issues.front().detail);
  MarkovModification mod(player, game.horizon(), game.num_states(), n);
  mod.values() = std::move(flat);
  if (auto bad = mod.check(); !bad.empty()) {
    throw ParseError("table " + bad.front().location, bad.front().detail);
  }
  return mod;
}

MarkovModification load_modification(const std::filesystem::path& path, const Game& game) {
  return parse_modification(detail::read_json(path), game);
}

nlohmann::json modification_to_json(const MarkovModification& mod) {
  const std::size_t extent[] = {static_cast<std::size_t>(mod.horizon()),
                                static_cast<std::size_t>(mod.num_states()),
                                static_cast<std::size_t>(mod.num_actions()),
                                static_cast<std::size_t>(mod.num_actions())};
  return {{"player", mod.player()}, {"table", detail::nest(mod.values(), extent)}};
}

}  // namespace ccmg
