#pragma once

#include <cstdint>
#include <memory>

#include "ous/algorithms.hpp"
#include "ous/core.hpp"
#include "ous/rng.hpp"

namespace ous {

/// Emits the same rate at every arrival (b/T or b/U benchmarks).
class ConstantPolicy final : public OnlinePolicy {
 public:
  explicit ConstantPolicy(double rate);
  double next_probability(std::int64_t i) override;
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  std::int64_t next_index_ = 1;
};

std::unique_ptr<ConstantPolicy> constant_policy(double rate);

struct SeqRtsConfig {
  double min_probability = 1e-6;
  PredictionInterval interval;

  // min_probability in [0, 1) and below b/U.
  void validate(const ProblemSpec& spec) const;
};

/// Point-estimate heuristic: draws an estimate tau_hat uniformly from the
/// integers in [L, U] once per period, spends min(1, b/tau_hat) per arrival
/// until tau_hat arrivals have been served, then falls back to min_probability.
class SeqRtsPolicy final : public OnlinePolicy {
 public:
  SeqRtsPolicy(const ProblemSpec& spec, const SeqRtsConfig& cfg, RngStream rng);
  double next_probability(std::int64_t i) override;
  std::int64_t estimate() const noexcept { return tau_hat_; }

 private:
  double budget_;
  double floor_;
  std::int64_t tau_hat_;
  std::int64_t next_index_ = 1;
};

std::unique_ptr<SeqRtsPolicy> seqrts_policy(const ProblemSpec& spec, const SeqRtsConfig& cfg,
                                            RngStream rng);

}  // namespace ous
