#include "ous/algorithms.hpp"

#include <algorithm>
#include <string>

#include "ous/error.hpp"

namespace ous {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Sub1: return "Sub1";
    case Regime::Sub2: return "Sub2";
    case Regime::Sub3: return "Sub3";
    case Regime::Sub4: return "Sub4";
    case Regime::Sub5: return "Sub5";
    case Regime::Sub6: return "Sub6";
  }
  return "?";
}

Regime select_regime_rand(std::int64_t horizon, double budget) noexcept {
  switch (classify_horizon(static_cast<double>(horizon), budget)) {
    case HorizonRegime::kShort: return Regime::Sub1;
    case HorizonRegime::kMedium: return Regime::Sub2;
    case HorizonRegime::kLong: return Regime::Sub3;
  }
  return Regime::Sub3;
}

Regime select_regime_learn(const PredictionInterval& interval, double budget) noexcept {
  const auto width = static_cast<double>(interval.width());
  switch (classify_horizon(static_cast<double>(interval.upper), budget)) {
    case HorizonRegime::kShort:
      return Regime::Sub4;
    case HorizonRegime::kMedium:
      return width <= budget * (kE - 1.0) ? Regime::Sub4 : Regime::Sub2;
    case HorizonRegime::kLong:
      return width <= budget * (kE + 1.0) ? Regime::Sub5 : Regime::Sub6;
  }
  return Regime::Sub6;
}

namespace {

bool uses_offset(Regime regime) {
  return regime == Regime::Sub4 || regime == Regime::Sub5 || regime == Regime::Sub6;
}

std::int64_t draw_boundary(const PolicyState& s, RngStream& rng) {
  const std::int64_t offset = uses_offset(s.regime) ? s.interval->lower : 0;
  return randomized_round(s.tilde_tau, rng) + offset;
}

PolicyState make_state(const ProblemSpec& spec, Regime regime, double alpha,
                       std::optional<PredictionInterval> interval, RngStream& rng,
                       Rounding rounding) {
  if (!(alpha >= spec.budget) || !(alpha <= spec.budget * kE)) {
    throw InvalidParameter("alpha must lie in [b, be]");
  }
  PolicyState s;
  s.regime = regime;
  s.alpha = alpha;
  s.tilde_tau = alpha;
  s.stage_j = 1;
  s.budget = spec.budget;
  s.working_budget = spec.budget;
  s.horizon = spec.horizon;
  s.interval = interval;
  s.rounding = rounding;
  s.stage_boundary = draw_boundary(s, rng);
  return s;
}

void advance_stage(PolicyState& s) {
  switch (s.regime) {
    case Regime::Sub1:
    case Regime::Sub4:
    case Regime::Sub5:
      s.tilde_tau *= kE;
      break;
    case Regime::Sub2:
      ++s.stage_j;
      s.tilde_tau *= kE;
      break;
    case Regime::Sub3:
      ++s.stage_j;
      s.tilde_tau *= kE;
      if (s.stage_j >= 3) s.working_budget *= 1.0 - 1.0 / kE;
      break;
    case Regime::Sub6: {
      ++s.stage_j;
      const double lower = static_cast<double>(s.interval->lower);
      // The j = 2 update reads tilde_tau before it is scaled.
      if (s.stage_j == 2) {
        s.working_budget *= 1.0 - (s.tilde_tau + lower - s.budget) /
                                      (s.tilde_tau * (kE - 1.0) + lower);
      } else {
        s.working_budget *= 1.0 - 1.0 / kE;
      }
      s.tilde_tau *= kE;
      break;
    }
  }
}

double emit(const PolicyState& s) {
  const double b = s.budget;
  switch (s.regime) {
    case Regime::Sub1:
      return b / std::min(static_cast<double>(s.horizon), s.tilde_tau * (kE - 1.0));
    case Regime::Sub2:
      return s.stage_j >= 3 ? b / (s.tilde_tau * kE) : b / (s.tilde_tau * (kE - 1.0));
    case Regime::Sub3:
      return s.working_budget / (s.tilde_tau * kE);
    case Regime::Sub4:
      return b / std::min(static_cast<double>(s.interval->upper),
                          s.tilde_tau + static_cast<double>(s.interval->lower));
    case Regime::Sub5:
      return b / std::min(static_cast<double>(s.interval->upper),
                          s.tilde_tau * kE + static_cast<double>(s.interval->lower));
    case Regime::Sub6:
      if (s.stage_j == 1) {
        return s.working_budget /
               (s.tilde_tau * (kE - 1.0) + static_cast<double>(s.interval->lower));
      }
      return s.working_budget / (s.tilde_tau * kE);
  }
  return 0.0;
}

double step(PolicyState& s, std::int64_t i, RngStream& rng) {
  if (i != s.next_index) {
    throw ContractViolation("policy expected arrival " + std::to_string(s.next_index) +
                            ", got " + std::to_string(i));
  }
  if (s.rounding == Rounding::kPerArrival) s.stage_boundary = draw_boundary(s, rng);
  if (i > s.stage_boundary) {
    advance_stage(s);
    if (s.rounding == Rounding::kPerStage) s.stage_boundary = draw_boundary(s, rng);
  }
  ++s.next_index;
  return emit(s);
}

}  // namespace

PolicyState alg1_init_with_alpha(const ProblemSpec& spec, double alpha, RngStream& rng,
                                 Rounding rounding) {
  spec.validate();
  return make_state(spec, select_regime_rand(spec.horizon, spec.budget), alpha, std::nullopt,
                    rng, rounding);
}

PolicyState alg1_init(const ProblemSpec& spec, RngStream& rng, Rounding rounding) {
  spec.validate();
  const double alpha = sample_alpha(spec.budget, rng);
  return alg1_init_with_alpha(spec, alpha, rng, rounding);
}

double alg1_next(PolicyState& state, std::int64_t i, RngStream& rng) {
  if (state.regime != Regime::Sub1 && state.regime != Regime::Sub2 &&
      state.regime != Regime::Sub3) {
    throw ContractViolation("alg1_next called on an interval-aware state");
  }
  return step(state, i, rng);
}

PolicyState alg2_init_with_alpha(const ProblemSpec& spec, const PredictionInterval& interval,
                                 double alpha, RngStream& rng, Rounding rounding) {
  spec.validate();
  interval.validate(spec.horizon);
  return make_state(spec, select_regime_learn(interval, spec.budget), alpha, interval, rng,
                    rounding);
}

PolicyState alg2_init(const ProblemSpec& spec, const PredictionInterval& interval,
                      RngStream& rng, Rounding rounding) {
  spec.validate();
  interval.validate(spec.horizon);
  const double alpha = sample_alpha(spec.budget, rng);
  return alg2_init_with_alpha(spec, interval, alpha, rng, rounding);
}

double alg2_next(PolicyState& state, std::int64_t i, RngStream& rng) {
  if (!state.interval) {
    throw ContractViolation("alg2_next called on a state without an interval");
  }
  return step(state, i, rng);
}

double StagedPolicy::next_probability(std::int64_t i) { return step(state_, i, rng_); }

std::unique_ptr<StagedPolicy> make_randomized_policy(const ProblemSpec& spec, RngStream rng,
                                                     Rounding rounding) {
  PolicyState state = alg1_init(spec, rng, rounding);
  return std::make_unique<StagedPolicy>(state, rng);
}

std::unique_ptr<StagedPolicy> make_interval_policy(const ProblemSpec& spec,
                                                   const PredictionInterval& interval,
                                                   RngStream rng, Rounding rounding) {
  PolicyState state = alg2_init(spec, interval, rng, rounding);
  return std::make_unique<StagedPolicy>(state, rng);
}

ProbabilityAssignment run_policy(OnlinePolicy& policy, std::int64_t tau_star) {
  if (tau_star < 1) throw InvalidInput("run_policy: tau* must be at least 1");
  ProbabilityAssignment out;
  out.probs.reserve(static_cast<std::size_t>(tau_star));
  for (std::int64_t i = 1; i <= tau_star; ++i) out.probs.push_back(policy.next_probability(i));
  return out;
}

std::vector<ProbabilityAssignment> run_multi_level(const std::vector<RiskLevel>& levels,
                                                   const std::vector<std::int64_t>& taus,
                                                   const RngStream& rng) {
  if (levels.empty() || levels.size() != taus.size()) {
    throw InvalidInput("run_multi_level: need one tau* per risk level");
  }
  std::vector<ProbabilityAssignment> out;
  out.reserve(levels.size());
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const RiskLevel& level = levels[k];
    RngStream sub = rng.derive(k);
    std::unique_ptr<StagedPolicy> policy =
        level.interval ? make_interval_policy(level.spec, *level.interval, sub)
                       : make_randomized_policy(level.spec, sub);
    out.push_back(run_policy(*policy, taus[k]));
  }
  return out;
}

}  // namespace ous
