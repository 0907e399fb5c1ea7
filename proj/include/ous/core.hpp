#pragma once

// Domain types and scoring for online uniform sampling: a budget b of
// expected interventions must be spread over an unknown number tau* of risk
// times, revealed one at a time, within a horizon of T decision times.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ous/rng.hpp"

namespace ous {

inline constexpr double kE = std::numbers::e;

struct ProblemSpec {
  std::int64_t horizon = 0;  // T, decision times per period
  double budget = 0.0;       // b, expected interventions per period
  // Penalty strength override. Unset means 1/tau* at evaluation time.
  std::optional<double> sigma;

  // Throws InvalidParameter unless b > 0, T >= 2, b < T and sigma > 0.
  void validate() const;
};

struct PredictionInterval {
  std::int64_t lower = 0;  // L
  std::int64_t upper = 0;  // U

  std::int64_t width() const noexcept { return upper - lower; }
  bool contains(std::int64_t tau) const noexcept { return lower <= tau && tau <= upper; }

  // Throws InvalidInput unless 0 <= L <= U <= horizon and U >= 1.
  void validate(std::int64_t horizon) const;
};

struct ProbabilityAssignment {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  bool non_increasing() const noexcept;
};

struct ObjectiveReport {
  double sum_probs = 0.0;
  double penalty = 0.0;
  double sol = 0.0;
  double opt = 0.0;
  double competitive_ratio = 0.0;
  // Penalty with sigma = 1/tau* regardless of any override.
  double entropy_change = 0.0;
  // Set when the sequence contains a zero probability; sol is -inf then.
  bool sentinel = false;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample stddev / sqrt(n)
  std::int64_t n_reps = 0;
};

/// Welford accumulator with an exact Chan merge.
///
/// Identical inputs give a variance of exactly zero, so deterministic
/// policies report stderr 0. Infinite samples are counted separately and
/// force the mean to the matching infinity.
class RunningStats {
 public:
  void add(double x) noexcept;
  void merge(const RunningStats& other) noexcept;

  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept;
  double variance() const noexcept;
  double stderr_of_mean() const noexcept;
  bool has_infinite() const noexcept { return neg_inf_ + pos_inf_ > 0; }
  MonteCarloEstimate estimate() const noexcept;

 private:
  std::int64_t n_ = 0;
  std::int64_t finite_ = 0;
  std::int64_t neg_inf_ = 0;
  std::int64_t pos_inf_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// alpha in [b, b*e] with density 1/alpha, drawn by inverse CDF.
double sample_alpha(double budget, RngStream& rng);

/// floor(x) with probability ceil(x) - x, otherwise ceil(x).
std::int64_t randomized_round(double x, RngStream& rng);

/// Streaming form of the objective. Feeding p_1..p_t and calling report(t)
/// scores the length-t prefix, which lets one policy run score every tau*
/// at once.
class ObjectiveAccumulator {
 public:
  void add(double p) noexcept;
  std::int64_t length() const noexcept { return length_; }
  ObjectiveReport report(const ProblemSpec& spec) const noexcept;
  ObjectiveReport report_without_penalty(const ProblemSpec& spec) const noexcept;

 private:
  std::int64_t length_ = 0;
  double sum_ = 0.0;
  double max_ = 0.0;
  double min_ = 0.0;
};

/// Sum of probabilities minus sigma * ln(max p / min p), with OPT = b.
///
/// Probabilities must lie in (0, 1]; anything else throws InvalidProbability.
/// p = 1 is admitted because the clairvoyant answer b/tau* reaches it when
/// tau* = b.
ObjectiveReport evaluate_objective(std::span<const double> probs, std::int64_t tau_star,
                                   const ProblemSpec& spec);
ObjectiveReport evaluate_objective(const ProbabilityAssignment& probs, std::int64_t tau_star,
                                   const ProblemSpec& spec);

/// Like evaluate_objective but a zero probability yields the sentinel report
/// (sol = -inf, penalty = +inf) instead of throwing.
ObjectiveReport evaluate_objective_or_sentinel(std::span<const double> probs,
                                               std::int64_t tau_star, const ProblemSpec& spec);

enum class HorizonRegime { kShort, kMedium, kLong };

/// kShort for x <= be, kMedium for be < x <= be^2, kLong beyond.
HorizonRegime classify_horizon(double x, double budget) noexcept;
std::string_view regime_label(HorizonRegime regime, char symbol);

/// Worst-case competitive ratio of the randomized policy for horizon T.
double theoretical_cr_rand(std::int64_t horizon, double budget);
/// Robustness ratio of the interval-aware policy for upper bound U.
double theoretical_cr_learn(std::int64_t upper, double budget);

}  // namespace ous
