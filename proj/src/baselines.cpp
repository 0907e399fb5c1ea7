#include "ous/baselines.hpp"

#include <algorithm>

#include <cmath>
#include <string>

#include "ous/error.hpp"

namespace ous {

namespace {

void check_sequence(std::int64_t& next_index, std::int64_t i) {
  if (i != next_index) {
    throw ContractViolation("policy expected arrival " + std::to_string(next_index) +
                            ", got " + std::to_string(i));
  }
  ++next_index;
}

}  // namespace

ConstantPolicy::ConstantPolicy(double rate) : rate_(rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw InvalidParameter("constant rate must lie in (0, 1], got " + std::to_string(rate));
  }
}

double ConstantPolicy::next_probability(std::int64_t i) {
  check_sequence(next_index_, i);
  return rate_;
}

std::unique_ptr<ConstantPolicy> constant_policy(double rate) {
  return std::make_unique<ConstantPolicy>(rate);
}

void SeqRtsConfig::validate(const ProblemSpec& spec) const {
  interval.validate(spec.horizon);
  if (interval.lower < 1) throw InvalidInput("SeqRTS needs L >= 1");
  if (!(min_probability >= 0.0 && min_probability < 1.0)) {
    throw InvalidParameter("SeqRTS min_probability must lie in [0, 1)");
  }
  if (!(min_probability < spec.budget / static_cast<double>(interval.upper))) {
    throw InvalidParameter("SeqRTS min_probability must be below b/U");
  }
}

SeqRtsPolicy::SeqRtsPolicy(const ProblemSpec& spec, const SeqRtsConfig& cfg, RngStream rng)
    : budget_(spec.budget), floor_(cfg.min_probability) {
  cfg.validate(spec);
  const std::int64_t span = cfg.interval.width() + 1;
  auto offset = static_cast<std::int64_t>(std::floor(rng.uniform() * static_cast<double>(span)));
  if (offset >= span) offset = span - 1;
  tau_hat_ = cfg.interval.lower + offset;
}

double SeqRtsPolicy::next_probability(std::int64_t i) {
  check_sequence(next_index_, i);
  if (i > tau_hat_) return floor_;
  return std::min(1.0, budget_ / static_cast<double>(tau_hat_));
}

std::unique_ptr<SeqRtsPolicy> seqrts_policy(const ProblemSpec& spec, const SeqRtsConfig& cfg,
                                            RngStream rng) {
  return std::make_unique<SeqRtsPolicy>(spec, cfg, rng);
}

}  // namespace ous
