#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ccmg/dynamics.hpp"
#include "ccmg/game.hpp"
#include "ccmg/lp.hpp"

namespace ccmg {

/// Raised when an operation needs common coupling constraints.
class ModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when no policy satisfies the constraints.
class EmptyFeasibleSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Verdict { constrained_CE, not_CE, infeasible_policy };
std::string to_string(Verdict verdict);

struct PlayerGap {
  int player = 0;
  double value = 0.0;  // reward of the policy itself
  LPStatus status = LPStatus::infeasible;
  double psi = 0.0;    // best feasible mixture of deterministic modifications
  double gap = 0.0;    // psi - value, or 0 when no mixture is feasible
  std::vector<double> alpha;
};

struct EquilibriumCertificate {
  MarkovPolicy policy;
  std::vector<PlayerGap> players;
  FeasibilityReport feasibility;
  Verdict verdict = Verdict::not_CE;
  double tolerance = 0.0;

  double max_gap() const;
  nlohmann::json to_json() const;
};

EquilibriumCertificate verify_cce(const Game& game, const MarkovPolicy& policy, double tol = 1e-9,
                                  std::size_t cap = kDefaultEnumerationCap);

struct StrongSlaterResult {
  bool holds = false;
  double max_min_slack = 0.0;
  bool identity_witness = false;
  std::vector<double> witness_alpha;

  nlohmann::json to_json() const;
};

/// Whether some mixture of the player's deterministic modifications makes
/// every one of the player's constraints strictly slack (by more than 1e-9).
StrongSlaterResult check_strong_slater_at(const Game& game, int player, const MarkovPolicy& policy,
                                          std::size_t cap = kDefaultEnumerationCap);

struct WeakSlaterResult {
  bool applicable = false;  // some slack within 1e-9 of zero
  std::string reason;       // why not applicable
  bool holds = false;
  bool condition1 = false;
  std::vector<double> minima;  // smallest value of each constraint over Markov modifications
  bool condition2a = false;
  bool condition2b = false;
  RegularityReport regularity;

  nlohmann::json to_json() const;
};

/// Common mode only; throws ModeError otherwise.
WeakSlaterResult check_weak_slater_at(const Game& game, int player, const MarkovPolicy& policy,
                                      std::size_t cap = kDefaultEnumerationCap);

enum class SlaterMode { strong, weak };
std::string to_string(SlaterMode mode);

struct SlaterFailure {
  int sample = 0;
  int player = 0;
  std::string condition;
  MarkovPolicy policy;
};

struct SlaterReport {
  SlaterMode mode = SlaterMode::strong;
  int samples = 0;
  std::uint64_t seed = 0;
  int tested = 0;       // pointwise checks run (per player)
  int not_applicable = 0;
  bool feasible_set_empty = false;
  std::vector<SlaterFailure> failures;

  nlohmann::json to_json() const;
};

/// Samples policies with Dirichlet(1) rows. In weak mode each sample is
/// pulled back toward a feasible anchor by bisection so that the checked
/// policy sits on the boundary of the feasible set.
SlaterReport slater_sampling_harness(const Game& game, SlaterMode mode, int num_samples,
                                     std::uint64_t seed,
                                     std::size_t cap = kDefaultEnumerationCap);

/// Seeded sampler over std::mt19937_64, whose output sequence is fixed by the
/// standard. Library distributions are avoided because their algorithms vary
/// between implementations.
class PolicySampler {
 public:
  explicit PolicySampler(std::uint64_t seed);
  /// Uniform in (0, 1) from the top 53 bits of one engine draw.
  double uniform();
  MarkovPolicy sample(StageShape shape);
  /// Dirichlet(1) row of the given length.
  std::vector<double> simplex(int size);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// The point of the segment from a feasible `anchor` toward `target` that is
/// closest to `target` while still feasible.
OccupancyMeasure feasible_blend(const Game& game, const OccupancyMeasure& anchor,
                                const OccupancyMeasure& target);
/// A seeded random policy pulled back into the feasible set; empty when the
/// feasible set is.
std::optional<OccupancyMeasure> random_feasible_start(const Game& game, std::uint64_t seed);

enum class PlayerSelection { max_gap, round_robin };
/// half: lambda = 1/2 every iteration. proof: lambda = gap / (2H), which
/// stays in [0, 1/2] but shrinks with the gap and stalls near a fixed point.
enum class StepRule { half, proof };
std::string to_string(StepRule rule);

struct FindOptions {
  int max_iters = 10'000;
  double tol = 1e-6;
  PlayerSelection selection = PlayerSelection::max_gap;
  StepRule step = StepRule::half;
  std::size_t cap = kDefaultEnumerationCap;
  bool keep_iterates = false;
};

struct TraceStep {
  int iteration = 0;
  int player = 0;
  double max_gap = 0.0;
  double gap = 0.0;
  double step = 0.0;
  double min_slack = 0.0;
};

struct FixedPointTrace {
  std::vector<TraceStep> steps;
  std::vector<OccupancyMeasure> iterates;  // only with keep_iterates
  bool converged = false;
  int iterations = 0;
  double final_max_gap = 0.0;
  double worst_slack = 0.0;  // smallest slack seen across iterates

  nlohmann::json to_json(bool with_steps) const;
};

struct FindResult {
  MarkovPolicy policy;
  OccupancyMeasure occupancy;
  FixedPointTrace trace;
  EquilibriumCertificate certificate;
};

/// Iterates d <- (1 - lambda) d + lambda * mix(alpha) for the selected
/// player. Common mode only. Starts from `initial` or, if absent, from a
/// phase-1 occupancy (throws EmptyFeasibleSet when there is none). The
/// final certificate is computed independently at `tol`.
FindResult find_cce(const Game& game, const std::optional<OccupancyMeasure>& initial,
                    const FindOptions& options = {});

}  // namespace ccmg
