#include "ous/core.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ous/error.hpp"

namespace ous {

void ProblemSpec::validate() const {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw InvalidParameter("budget must be positive, got " + std::to_string(budget));
  }
  if (horizon < 2) {
    throw InvalidParameter("horizon must be at least 2, got " + std::to_string(horizon));
  }
  if (!(budget < static_cast<double>(horizon))) {
    throw InvalidParameter("budget must be below the horizon");
  }
  if (sigma && !(*sigma > 0.0)) {
    throw InvalidParameter("sigma must be positive when set");
  }
}

void PredictionInterval::validate(std::int64_t horizon) const {
  if (lower < 0 || upper < 1 || lower > upper) {
    throw InvalidInput("prediction interval needs 0 <= L <= U and U >= 1, got [" +
                       std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
  if (upper > horizon) {
    throw InvalidInput("prediction interval upper bound " + std::to_string(upper) +
                       " exceeds horizon " + std::to_string(horizon));
  }
}

bool ProbabilityAssignment::non_increasing() const noexcept {
  return std::adjacent_find(probs.begin(), probs.end(),
                            [](double a, double b) { return b > a; }) == probs.end();
}

// --- RunningStats ----------------------------------------------------------

void RunningStats::add(double x) noexcept {
  ++n_;
  if (std::isinf(x)) {
    (x < 0 ? neg_inf_ : pos_inf_) += 1;
    return;
  }
  ++finite_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(finite_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) noexcept {
  if (other.n_ == 0) return;
  n_ += other.n_;
  neg_inf_ += other.neg_inf_;
  pos_inf_ += other.pos_inf_;
  if (other.finite_ == 0) return;
  if (finite_ == 0) {
    finite_ = other.finite_;
    mean_ = other.mean_;
    m2_ = other.m2_;
    return;
  }
  const auto na = static_cast<double>(finite_);
  const auto nb = static_cast<double>(other.finite_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * (nb / total);
  m2_ += other.m2_ + delta * delta * (na * nb / total);
  finite_ += other.finite_;
}

double RunningStats::mean() const noexcept {
  if (neg_inf_ > 0 && pos_inf_ > 0) return std::numeric_limits<double>::quiet_NaN();
  if (neg_inf_ > 0) return -std::numeric_limits<double>::infinity();
  if (pos_inf_ > 0) return std::numeric_limits<double>::infinity();
  if (finite_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return mean_;
}

double RunningStats::variance() const noexcept {
  if (has_infinite()) return std::numeric_limits<double>::quiet_NaN();
  if (finite_ < 2) return 0.0;
  return m2_ / static_cast<double>(finite_ - 1);
}

double RunningStats::stderr_of_mean() const noexcept {
  if (has_infinite()) return std::numeric_limits<double>::quiet_NaN();
  if (finite_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(finite_));
}

MonteCarloEstimate RunningStats::estimate() const noexcept {
  return {mean(), stderr_of_mean(), n_};
}

// --- randomness ------------------------------------------------------------

double sample_alpha(double budget, RngStream& rng) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw InvalidParameter("sample_alpha: budget must be positive");
  }
  // CDF on [b, be] is ln(alpha / b).
  return budget * std::exp(rng.uniform());
}

std::int64_t randomized_round(double x, RngStream& rng) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw InvalidParameter("randomized_round: input must be positive and finite");
  }
  const double lo = std::floor(x);
  const double frac = x - lo;
  const auto base = static_cast<std::int64_t>(lo);
  if (frac == 0.0) return base;
  return rng.uniform() < frac ? base + 1 : base;
}

// --- objective -------------------------------------------------------------

void ObjectiveAccumulator::add(double p) noexcept {
  if (length_ == 0) {
    max_ = min_ = p;
  } else {
    max_ = std::max(max_, p);
    min_ = std::min(min_, p);
  }
  sum_ += p;
  ++length_;
}

namespace {

ObjectiveReport sentinel_report(double sum, double budget) {
  ObjectiveReport r;
  r.sum_probs = sum;
  r.penalty = std::numeric_limits<double>::infinity();
  r.entropy_change = r.penalty;
  r.sol = -std::numeric_limits<double>::infinity();
  r.opt = budget;
  r.competitive_ratio = r.sol;
  r.sentinel = true;
  return r;
}

}  // namespace

ObjectiveReport ObjectiveAccumulator::report(const ProblemSpec& spec) const noexcept {
  if (min_ <= 0.0) return sentinel_report(sum_, spec.budget);
  const double tau = static_cast<double>(length_);
  // Equal max and min give log(1) == 0 exactly.
  const double spread = std::log(max_ / min_);
  ObjectiveReport r;
  r.sum_probs = sum_;
  r.entropy_change = spread / tau;
  r.penalty = spec.sigma ? *spec.sigma * spread : r.entropy_change;
  r.sol = r.sum_probs - r.penalty;
  r.opt = spec.budget;
  r.competitive_ratio = r.sol / r.opt;
  return r;
}

ObjectiveReport ObjectiveAccumulator::report_without_penalty(
    const ProblemSpec& spec) const noexcept {
  ObjectiveReport r = report(spec);
  r.sol = r.sum_probs;
  r.competitive_ratio = r.sol / spec.budget;
  return r;
}

namespace {

ObjectiveReport evaluate_impl(std::span<const double> probs, std::int64_t tau_star,
                              const ProblemSpec& spec, bool allow_zero) {
  if (tau_star < 1 || static_cast<std::size_t>(tau_star) != probs.size()) {
    throw InvalidInput("evaluate_objective: sequence length " + std::to_string(probs.size()) +
                       " does not match tau* = " + std::to_string(tau_star));
  }
  ObjectiveAccumulator acc;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const bool zero_ok = allow_zero && p == 0.0;
    if (!zero_ok && !(p > 0.0 && p <= 1.0)) {
      throw InvalidProbability("probability at index " + std::to_string(i + 1) + " is " +
                               std::to_string(p) + ", outside (0, 1]");
    }
    acc.add(p);
  }
  return acc.report(spec);
}

}  // namespace

ObjectiveReport evaluate_objective(std::span<const double> probs, std::int64_t tau_star,
                                   const ProblemSpec& spec) {
  return evaluate_impl(probs, tau_star, spec, false);
}

ObjectiveReport evaluate_objective(const ProbabilityAssignment& probs, std::int64_t tau_star,
                                   const ProblemSpec& spec) {
  return evaluate_impl(probs.probs, tau_star, spec, false);
}

ObjectiveReport evaluate_objective_or_sentinel(std::span<const double> probs,
                                               std::int64_t tau_star, const ProblemSpec& spec) {
  return evaluate_impl(probs, tau_star, spec, true);
}

// --- theory ----------------------------------------------------------------

HorizonRegime classify_horizon(double x, double budget) noexcept {
  if (x <= budget * kE) return HorizonRegime::kShort;
  if (x <= budget * kE * kE) return HorizonRegime::kMedium;
  return HorizonRegime::kLong;
}

std::string_view regime_label(HorizonRegime regime, char symbol) {
  switch (regime) {
    case HorizonRegime::kShort:
      return symbol == 'U' ? "U <= be" : "T <= be";
    case HorizonRegime::kMedium:
      return symbol == 'U' ? "be < U <= be^2" : "be < T <= be^2";
    case HorizonRegime::kLong:
      return symbol == 'U' ? "U > be^2" : "T > be^2";
  }
  return "";
}

double theoretical_cr_rand(std::int64_t horizon, double budget) {
  if (!(budget > 0.0) || !(budget < static_cast<double>(horizon))) {
    throw InvalidParameter("theoretical_cr_rand requires 0 < b < T");
  }
  switch (classify_horizon(static_cast<double>(horizon), budget)) {
    case HorizonRegime::kShort:
      return (std::log(kE - 1.0) + 1.0 / (kE - 1.0)) / kE;
    case HorizonRegime::kMedium:
      return 1.0 / kE;
    case HorizonRegime::kLong:
      return 1.0 / kE - 1.0 / (kE * kE);
  }
  return 0.0;
}

double theoretical_cr_learn(std::int64_t upper, double budget) {
  if (upper < 1 || !(budget > 0.0)) {
    throw InvalidParameter("theoretical_cr_learn requires U >= 1 and b > 0");
  }
  switch (classify_horizon(static_cast<double>(upper), budget)) {
    case HorizonRegime::kShort:
      return std::numbers::ln2 + (kE - 1.0) / kE * std::log((kE - 1.0) / kE);
    case HorizonRegime::kMedium:
      return 1.0 / kE;
    case HorizonRegime::kLong:
      return 2.0 - std::log(kE * kE - kE + 1.0);
  }
  return 0.0;
}

}  // namespace ous
