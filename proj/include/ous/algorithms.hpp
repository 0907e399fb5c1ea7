#pragma once

// Stage-wise online policies. Each keeps a running guess tilde_tau of the
// number of risk times; once the arrival index passes the randomized-rounded
// guess (offset by L for the interval-aware variants) the guess is scaled by
// e and the emitted probability drops. Output is therefore non-increasing.

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "ous/core.hpp"
#include "ous/rng.hpp"

namespace ous {

/// Which update/emission rule a policy runs.
///   Sub1: T <= be,        p = b / min(T, tau(e-1))
///   Sub2: be < T <= be^2, p = b / (tau(e-1)) for j <= 2, b / (tau e) after
///   Sub3: T > be^2,       p = b_j / (tau e), b_j decays by (1-1/e) from j = 3
///   Sub4: p = b / min(U, tau + L)
///   Sub5: p = b / min(U, tau e + L)
///   Sub6: p = b / (tau(e-1) + L) in stage 1, then b_j / (tau e)
enum class Regime { Sub1, Sub2, Sub3, Sub4, Sub5, Sub6 };

std::string_view to_string(Regime regime);

/// How the stage boundary Int(tilde_tau) is drawn.
enum class Rounding {
  kPerStage,    // once per stage, cached until the next transition
  kPerArrival,  // redrawn at every arrival, as the pseudocode reads literally
};

struct PolicyState {
  Regime regime = Regime::Sub1;
  double alpha = 0.0;
  double tilde_tau = 0.0;
  int stage_j = 1;
  double budget = 0.0;          // b as given
  double working_budget = 0.0;  // decayed copy used by Sub3/Sub6
  std::int64_t horizon = 0;
  std::int64_t stage_boundary = 0;  // Int(tilde_tau), plus L for Sub4/5/6
  std::optional<PredictionInterval> interval;
  Rounding rounding = Rounding::kPerStage;
  std::int64_t next_index = 1;
};

/// Chooses the regime from T and b (no interval).
Regime select_regime_rand(std::int64_t horizon, double budget) noexcept;
/// Chooses the regime from U, U - L and b.
Regime select_regime_learn(const PredictionInterval& interval, double budget) noexcept;

PolicyState alg1_init(const ProblemSpec& spec, RngStream& rng,
                      Rounding rounding = Rounding::kPerStage);
/// Same as alg1_init with alpha supplied instead of drawn.
PolicyState alg1_init_with_alpha(const ProblemSpec& spec, double alpha, RngStream& rng,
                                 Rounding rounding = Rounding::kPerStage);
/// Emits p_i for arrival i (1-based, strictly sequential).
double alg1_next(PolicyState& state, std::int64_t i, RngStream& rng);

PolicyState alg2_init(const ProblemSpec& spec, const PredictionInterval& interval,
                      RngStream& rng, Rounding rounding = Rounding::kPerStage);
PolicyState alg2_init_with_alpha(const ProblemSpec& spec, const PredictionInterval& interval,
                                 double alpha, RngStream& rng,
                                 Rounding rounding = Rounding::kPerStage);
double alg2_next(PolicyState& state, std::int64_t i, RngStream& rng);

/// Behavioral contract shared by every policy the harness can drive.
class OnlinePolicy {
 public:
  virtual ~OnlinePolicy() = default;
  /// Probability for arrival i. Must be called with i = 1, 2, ... in order;
  /// implementations never see tau*.
  virtual double next_probability(std::int64_t i) = 0;
};

/// Algorithm-1/2 policy: owns its state and its random stream.
class StagedPolicy final : public OnlinePolicy {
 public:
  StagedPolicy(PolicyState state, RngStream rng) : state_(state), rng_(rng) {}

  double next_probability(std::int64_t i) override;
  const PolicyState& state() const noexcept { return state_; }

 private:
  PolicyState state_;
  RngStream rng_;
};

std::unique_ptr<StagedPolicy> make_randomized_policy(const ProblemSpec& spec, RngStream rng,
                                                     Rounding rounding = Rounding::kPerStage);
std::unique_ptr<StagedPolicy> make_interval_policy(const ProblemSpec& spec,
                                                   const PredictionInterval& interval,
                                                   RngStream rng,
                                                   Rounding rounding = Rounding::kPerStage);

/// Drives the policy for arrivals 1..tau_star.
ProbabilityAssignment run_policy(OnlinePolicy& policy, std::int64_t tau_star);

struct RiskLevel {
  ProblemSpec spec;
  std::optional<PredictionInterval> interval;  // interval-aware policy when set
};

/// Runs an independent policy per risk level; level k draws from
/// rng.derive(k), so each level matches a standalone run on that substream.
std::vector<ProbabilityAssignment> run_multi_level(const std::vector<RiskLevel>& levels,
                                                   const std::vector<std::int64_t>& taus,
                                                   const RngStream& rng);

}  // namespace ous
