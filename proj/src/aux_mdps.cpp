#include "ccmg/aux_mdps.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ccmg {

std::size_t AuxiliaryMDP::total_states() const {
  std::size_t total = 0;
  for (std::size_t n : num_states_) total += n;
  return total;
}

std::span<const AuxTransition> AuxiliaryMDP::transitions(int t, std::size_t x, int action) const {
  const auto& offsets = offsets_[t];
  const std::size_t r = x * num_actions_ + action;
  return {entries_[t].data() + offsets[r], offsets[r + 1] - offsets[r]};
}

void AuxiliaryMDP::add_row(int t, std::vector<AuxTransition> row) {
  auto& entries = entries_[t];
  entries.insert(entries.end(), row.begin(), row.end());
  offsets_[t].push_back(entries.size());
}

namespace {

double power(int base, int exponent) {
  double out = 1.0;
  for (int k = 0; k < exponent; ++k) out *= base;
  return out;
}

// Probability that the recommendation to `player` at s is `own`.
double recommendation_mass(const Game& game, const MarkovPolicy& policy, int t, int s, int player,
                           int own) {
  const auto& joint = game.joint_actions();
  double sum = 0.0;
  for (int a = 0; a < game.num_joint_actions(); ++a) {
    if (joint.component(a, player) == own) sum += policy(t, s, a);
  }
  return sum;
}

void require_fit(const Game& game, int player, const MarkovPolicy& policy) {
  if (player < 0 || player >= game.num_players()) throw std::out_of_range("player out of range");
  if (policy.shape() != game.shape()) {
    throw std::invalid_argument("policy dimensions do not match the game");
  }
}

}  // namespace

AuxiliaryMDP build_mdp1(const Game& game, int player, const MarkovPolicy& policy,
                        std::size_t cap) {
  require_fit(game, player, policy);
  AuxiliaryMDP mdp;
  mdp.kind_ = AuxKind::history;
  mdp.player_ = player;
  mdp.horizon_ = game.horizon();
  mdp.num_actions_ = game.num_actions(player);
  mdp.num_game_states_ = game.num_states();
  mdp.histories_ = HistoryIndex(game.horizon(), game.num_states(), game.num_joint_actions());
  const int n = mdp.num_actions_;
  std::size_t total = 0;
  for (int t = 0; t < mdp.horizon_; ++t) {
    const std::size_t count = mdp.histories_.count(t);
    if (count > cap || count * n + 1 > cap - std::min(cap, total)) {
      throw ResourceCapError("history-expanded MDP needs more than " + std::to_string(cap) +
                             " states; raise the history cap or use a smaller game");
    }
    mdp.num_states_.push_back(count * n + 1);
    total += count * n + 1;
  }

  mdp.initial_.assign(mdp.num_states_[0], 0.0);
  for (int s = 0; s < game.num_states(); ++s)
    for (int a = 0; a < n; ++a) mdp.initial_[s * n + a] = game.initial_distribution()[s] / n;

  const auto& joint = game.joint_actions();
  mdp.offsets_.resize(mdp.horizon_ > 0 ? mdp.horizon_ - 1 : 0, std::vector<std::size_t>{0});
  mdp.entries_.resize(mdp.offsets_.size());
  for (int t = 0; t + 1 < mdp.horizon_; ++t) {
    const std::size_t b_next = mdp.num_states_[t + 1] - 1;
    for (std::size_t x = 0; x + 1 < mdp.num_states_[t]; ++x) {
      const std::size_t h = x / n;
      const int s = mdp.histories_.current_state(h);
      const int own = static_cast<int>(x % n);
      const double stay = recommendation_mass(game, policy, t, s, player, own);
      for (int target = 0; target < n; ++target) {
        std::vector<AuxTransition> row;
        for (int a = 0; a < game.num_joint_actions(); ++a) {
          if (joint.component(a, player) != own) continue;
          const double p = policy(t, s, a);
          if (p == 0.0) continue;
          const int realized = joint.replace(a, player, target);
          const auto kernel = game.transition_row(t, s, realized);
          for (int s2 = 0; s2 < game.num_states(); ++s2) {
            if (kernel[s2] == 0.0) continue;
            const std::size_t base = mdp.histories_.extend(h, realized, s2) * n;
            for (int a2 = 0; a2 < n; ++a2) row.push_back({base + a2, p * kernel[s2] / n});
          }
        }
        row.push_back({b_next, 1.0 - stay});
        mdp.add_row(t, std::move(row));
      }
    }
    for (int target = 0; target < n; ++target) mdp.add_row(t, {{b_next, 1.0}});
  }
  return mdp;
}

AuxiliaryMDP build_mdp2(const Game& game, int player, const MarkovPolicy& policy) {
  require_fit(game, player, policy);
  AuxiliaryMDP mdp;
  mdp.kind_ = AuxKind::pair;
  mdp.player_ = player;
  mdp.horizon_ = game.horizon();
  mdp.num_actions_ = game.num_actions(player);
  mdp.num_game_states_ = game.num_states();
  const int n = mdp.num_actions_;
  const int num_states = game.num_states();
  const std::size_t per_step = static_cast<std::size_t>(num_states) * n + 1;
  mdp.num_states_.assign(mdp.horizon_, per_step);

  mdp.initial_.assign(per_step, 0.0);
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < n; ++a) mdp.initial_[s * n + a] = game.initial_distribution()[s] / n;

  const auto& joint = game.joint_actions();
  mdp.offsets_.resize(mdp.horizon_ > 0 ? mdp.horizon_ - 1 : 0, std::vector<std::size_t>{0});
  mdp.entries_.resize(mdp.offsets_.size());
  std::vector<double> next_state(num_states);
  for (int t = 0; t + 1 < mdp.horizon_; ++t) {
    const std::size_t b = per_step - 1;
    for (int s = 0; s < num_states; ++s)
      for (int own = 0; own < n; ++own) {
        const double stay = recommendation_mass(game, policy, t, s, player, own);
        for (int target = 0; target < n; ++target) {
          std::fill(next_state.begin(), next_state.end(), 0.0);
          for (int a = 0; a < game.num_joint_actions(); ++a) {
            if (joint.component(a, player) != own) continue;
            const double p = policy(t, s, a);
            if (p == 0.0) continue;
            const auto kernel = game.transition_row(t, s, joint.replace(a, player, target));
            for (int s2 = 0; s2 < num_states; ++s2) next_state[s2] += p * kernel[s2];
          }
          std::vector<AuxTransition> row;
          for (int s2 = 0; s2 < num_states; ++s2) {
            if (next_state[s2] == 0.0) continue;
            for (int a2 = 0; a2 < n; ++a2) {
              row.push_back({static_cast<std::size_t>(s2) * n + a2, next_state[s2] / n});
            }
          }
          row.push_back({b, 1.0 - stay});
          mdp.add_row(t, std::move(row));
        }
      }
    for (int target = 0; target < n; ++target) mdp.add_row(t, {{b, 1.0}});
  }
  return mdp;
}

namespace {

AuxTable empty_table(const AuxiliaryMDP& mdp) {
  AuxTable table;
  table.num_actions = mdp.num_actions();
  for (int t = 0; t < mdp.horizon(); ++t) table.steps.emplace_back(mdp.num_states(t) * mdp.num_actions(), 0.0);
  return table;
}

void fill_absorbing_uniform(const AuxiliaryMDP& mdp, AuxPolicy& policy) {
  const int n = mdp.num_actions();
  for (int t = 0; t < mdp.horizon(); ++t)
    for (int a = 0; a < n; ++a) policy(t, mdp.absorbing(t), a) = 1.0 / n;
}

}  // namespace

AuxPolicy aux_policy(const AuxiliaryMDP& mdp, const MarkovModification& mod) {
  if (mod.player() != mdp.player() || mod.horizon() != mdp.horizon() ||
      mod.num_actions() != mdp.num_actions() || mod.num_states() != mdp.num_game_states()) {
    throw std::invalid_argument("modification does not match the auxiliary MDP");
  }
  AuxPolicy policy = empty_table(mdp);
  for (int t = 0; t < mdp.horizon(); ++t)
    for (std::size_t x = 0; x < mdp.absorbing(t); ++x) {
      const auto row = mod.row(t, mdp.game_state(x), mdp.recommended(x));
      for (int a = 0; a < mdp.num_actions(); ++a) policy(t, x, a) = row[a];
    }
  fill_absorbing_uniform(mdp, policy);
  return policy;
}

AuxPolicy aux_policy(const AuxiliaryMDP& mdp, const NonMarkovModification& mod) {
  if (mdp.kind() != AuxKind::history) {
    throw std::invalid_argument("history-dependent modifications need the history-expanded MDP");
  }
  if (mod.player() != mdp.player() || mod.horizon() != mdp.horizon() ||
      mod.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("modification does not match the auxiliary MDP");
  }
  AuxPolicy policy = empty_table(mdp);
  for (int t = 0; t < mdp.horizon(); ++t)
    for (std::size_t x = 0; x < mdp.absorbing(t); ++x) {
      const auto row = mod.row(t, mdp.history(x), mdp.recommended(x));
      for (int a = 0; a < mdp.num_actions(); ++a) policy(t, x, a) = row[a];
    }
  fill_absorbing_uniform(mdp, policy);
  return policy;
}

AuxOccupancy aux_occupancy(const AuxiliaryMDP& mdp, const AuxPolicy& policy) {
  AuxOccupancy occ = empty_table(mdp);
  const int n = mdp.num_actions();
  std::vector<double> mass = mdp.initial();
  for (int t = 0; t < mdp.horizon(); ++t) {
    for (std::size_t x = 0; x < mdp.num_states(t); ++x)
      for (int a = 0; a < n; ++a) occ(t, x, a) = mass[x] * policy(t, x, a);
    if (t + 1 == mdp.horizon()) break;
    std::vector<double> next(mdp.num_states(t + 1), 0.0);
    for (std::size_t x = 0; x < mdp.num_states(t); ++x)
      for (int a = 0; a < n; ++a) {
        const double m = occ(t, x, a);
        if (m == 0.0) continue;
        for (const auto& tr : mdp.transitions(t, x, a)) next[tr.next] += m * tr.prob;
      }
    mass = std::move(next);
  }
  return occ;
}

LiftedReward lift_reward(const Game& game, int player, const MarkovPolicy& policy,
                         const SignalTable& signal) {
  require_fit(game, player, policy);
  const auto& joint = game.joint_actions();
  const int n = game.num_actions(player);
  LiftedReward lifted(game.horizon(), game.num_states(), n);
  for (int t = 0; t < game.horizon(); ++t) {
    const double scale = power(n, t + 1);
    for (int s = 0; s < game.num_states(); ++s)
      for (int a = 0; a < game.num_joint_actions(); ++a) {
        const double p = policy(t, s, a);
        if (p == 0.0) continue;
        const int own = joint.component(a, player);
        for (int target = 0; target < n; ++target) {
          lifted(t, s, own, target) += scale * signal(t, s, joint.replace(a, player, target)) * p;
        }
      }
  }
  return lifted;
}

double aux_value(const AuxiliaryMDP& mdp, const AuxOccupancy& occupancy,
                 const LiftedReward& lifted) {
  double sum = 0.0;
  for (int t = 0; t < mdp.horizon(); ++t)
    for (std::size_t x = 0; x < mdp.absorbing(t); ++x)
      for (int a = 0; a < mdp.num_actions(); ++a) {
        sum += occupancy(t, x, a) * lifted(t, mdp.game_state(x), mdp.recommended(x), a);
      }
  return sum;
}

AuxOptimum optimize_aux(const AuxiliaryMDP& mdp, const LiftedReward& lifted, Direction direction) {
  if (mdp.kind() != AuxKind::pair) {
    throw std::invalid_argument("backward induction runs on the (state, recommendation) MDP");
  }
  constexpr double kTieTol = 1e-12;
  const int n = mdp.num_actions();
  const double sign = direction == Direction::max ? 1.0 : -1.0;
  AuxOptimum out;
  out.argmod = MarkovModification(mdp.player(), mdp.horizon(), mdp.num_game_states(), n);
  std::vector<double> value_next;
  for (int t = mdp.horizon(); t-- > 0;) {
    std::vector<double> value(mdp.num_states(t), 0.0);
    for (std::size_t x = 0; x < mdp.absorbing(t); ++x) {
      const int s = mdp.game_state(x);
      const int own = mdp.recommended(x);
      int best_action = 0;
      double best = 0.0;
      for (int a = 0; a < n; ++a) {
        double q = lifted(t, s, own, a);
        if (t + 1 < mdp.horizon()) {
          for (const auto& tr : mdp.transitions(t, x, a)) q += tr.prob * value_next[tr.next];
        }
        if (a == 0 || sign * q > sign * best + kTieTol) {
          best = q;
          best_action = a;
        }
      }
      value[x] = best;
      out.argmod(t, s, own, best_action) = 1.0;
    }
    value_next = std::move(value);
  }
  for (std::size_t x = 0; x < mdp.num_states(0); ++x) out.value += mdp.initial()[x] * value_next[x];
  return out;
}

OccupancyMeasure game_occupancy_from_aux(const Game& game, const MarkovPolicy& policy,
                                         const AuxiliaryMDP& mdp, const AuxOccupancy& occupancy) {
  require_fit(game, mdp.player(), policy);
  const auto& joint = game.joint_actions();
  const int player = mdp.player();
  const int n = mdp.num_actions();
  OccupancyMeasure d(game.shape());
  for (int t = 0; t < mdp.horizon(); ++t) {
    const double scale = power(n, t + 1);
    for (std::size_t x = 0; x < mdp.absorbing(t); ++x) {
      const int s = mdp.game_state(x);
      const int own = mdp.recommended(x);
      for (int a = 0; a < game.num_joint_actions(); ++a) {
        if (joint.component(a, player) != own) continue;
        const double p = policy(t, s, a);
        if (p == 0.0) continue;
        for (int target = 0; target < n; ++target) {
          const double m = occupancy(t, x, target);
          if (m != 0.0) d(t, s, joint.replace(a, player, target)) += scale * m * p;
        }
      }
    }
  }
  return d;
}

MarkovModification markov_from_aux(const Game& game, const AuxiliaryMDP& mdp,
                                   const AuxOccupancy& occupancy) {
  const int n = mdp.num_actions();
  MarkovModification mod(mdp.player(), mdp.horizon(), game.num_states(), n);
  for (int t = 0; t < mdp.horizon(); ++t)
    for (std::size_t x = 0; x < mdp.absorbing(t); ++x) {
      auto row = mod.row(t, mdp.game_state(x), mdp.recommended(x));
      for (int a = 0; a < n; ++a) row[a] += occupancy(t, x, a);
    }
  for (int t = 0; t < mdp.horizon(); ++t)
    for (int s = 0; s < game.num_states(); ++s)
      for (int own = 0; own < n; ++own) {
        auto row = mod.row(t, s, own);
        double total = 0.0;
        for (double v : row) total += v;
        for (double& v : row) v = total > kZeroMarginal ? v / total : 1.0 / n;
      }
  return mod;
}

MarkovModification realize_mixture(const Game& game, const MarkovPolicy& policy,
                                   const DeterministicModifications& mods,
                                   std::span<const double> alpha) {
  if (alpha.size() != mods.size()) {
    throw std::invalid_argument("weight vector length does not match the modification count");
  }
  const AuxiliaryMDP mdp = build_mdp2(game, mods.player(), policy);
  AuxOccupancy mixed = empty_table(mdp);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (alpha[k] == 0.0) continue;
    const AuxOccupancy occ = aux_occupancy(mdp, aux_policy(mdp, mods.at(k)));
    for (std::size_t t = 0; t < occ.steps.size(); ++t)
      for (std::size_t r = 0; r < occ.steps[t].size(); ++r) mixed.steps[t][r] += alpha[k] * occ.steps[t][r];
  }
  return markov_from_aux(game, mdp, mixed);
}

}  // namespace ccmg
