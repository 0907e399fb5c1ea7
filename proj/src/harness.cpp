#include "ous/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ous/baselines.hpp"
#include "ous/error.hpp"

namespace ous {

namespace {

constexpr std::int64_t kChunk = 256;
constexpr std::uint64_t kFixedTauTag = 0xF1BEDu << 20;
// All policies in a replication share one stream (common random numbers).
// The tag sits far above any tau* or width index.
constexpr std::uint64_t kPolicyTag = 0x5EED'0000'0000'0001ULL;
constexpr std::uint64_t kIntervalTag = 0;

struct PointStats {
  RunningStats cr;
  RunningStats sol;
  RunningStats budget;
  RunningStats penalty;
  bool sentinel = false;

  void add(const ObjectiveReport& r) {
    cr.add(r.competitive_ratio);
    sol.add(r.sol);
    budget.add(r.sum_probs);
    penalty.add(r.penalty);
    sentinel = sentinel || r.sentinel;
  }
  void merge(const PointStats& o) {
    cr.merge(o.cr);
    sol.merge(o.sol);
    budget.merge(o.budget);
    penalty.merge(o.penalty);
    sentinel = sentinel || o.sentinel;
  }
};

struct Point {
  std::int64_t tau = 0;
  std::optional<std::int64_t> width;
  bool valid = true;
};

// One policy's share of a scenario. Prefix lanes run the policy once per
// replication up to the largest tau* and score every prefix on the way.
struct Lane {
  PolicyId id = PolicyId::kAlg1;
  bool prefix = false;
  std::vector<Point> points;
};

RngStream scenario_stream(const ScenarioConfig& cfg, const RunOptions& opts) {
  return RngStream(cfg.master_seed).derive(opts.scenario_index);
}

double checked(double p, std::int64_t i) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidProbability("policy emitted " + format_number(p) + " at arrival " +
                             std::to_string(i));
  }
  return p;
}

ObjectiveReport score(const ObjectiveAccumulator& acc, const ProblemSpec& spec,
                      bool no_penalty) {
  return no_penalty ? acc.report_without_penalty(spec) : acc.report(spec);
}

bool interval_possible(std::int64_t tau, std::int64_t width, std::int64_t min_lower,
                       std::int64_t max_upper) {
  return std::max(min_lower, tau - width) <= std::min(tau, max_upper - width);
}

std::vector<SweepRow> run_lanes(const ScenarioConfig& cfg, const RunOptions& opts,
                                const std::vector<Lane>& lanes, bool no_penalty) {
  const RngStream base = scenario_stream(cfg, opts);
  const ProblemSpec& spec = cfg.spec;
  const std::int64_t n_chunks = (cfg.n_reps + kChunk - 1) / kChunk;

  using Partial = std::vector<std::vector<PointStats>>;
  Partial blank(lanes.size());
  for (std::size_t l = 0; l < lanes.size(); ++l) blank[l].resize(lanes[l].points.size());
  std::vector<Partial> partials(static_cast<std::size_t>(n_chunks), blank);

  parallel_chunks(cfg.n_reps, kChunk, opts.threads,
                  [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    Partial& part = partials[static_cast<std::size_t>(c)];
    for (std::int64_t r = begin; r < end; ++r) {
      const RngStream rep = base.derive(static_cast<std::uint64_t>(r));
      for (std::size_t l = 0; l < lanes.size(); ++l) {
        const Lane& lane = lanes[l];
        if (lane.prefix) {
          auto policy = build_policy(lane.id, spec, std::nullopt, cfg.seqrts_min_probability,
                                     rep.derive(kPolicyTag));
          ObjectiveAccumulator acc;
          std::size_t pt = 0;
          const std::int64_t last = lane.points.back().tau;
          for (std::int64_t i = 1; i <= last; ++i) {
            acc.add(checked(policy->next_probability(i), i));
            while (pt < lane.points.size() && lane.points[pt].tau == i) {
              part[l][pt].add(score(acc, spec, no_penalty));
              ++pt;
            }
          }
          continue;
        }
        for (std::size_t pt = 0; pt < lane.points.size(); ++pt) {
          const Point& point = lane.points[pt];
          if (!point.valid) continue;
          const RngStream ps = rep.derive(static_cast<std::uint64_t>(point.tau))
                                   .derive(static_cast<std::uint64_t>(point.width.value_or(-1)));
          std::optional<PredictionInterval> interval;
          if (point.width) {
            RngStream irng = ps.derive(kIntervalTag);
            interval = draw_interval(point.tau, *point.width, 1, spec.horizon, irng);
          }
          auto policy = build_policy(lane.id, spec, interval, cfg.seqrts_min_probability,
                                     rep.derive(kPolicyTag));
          ObjectiveAccumulator acc;
          for (std::int64_t i = 1; i <= point.tau; ++i) {
            acc.add(checked(policy->next_probability(i), i));
          }
          part[l][pt].add(score(acc, spec, no_penalty));
        }
      }
    }
  });

  for (std::size_t c = 1; c < partials.size(); ++c) {
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      for (std::size_t pt = 0; pt < lanes[l].points.size(); ++pt) {
        partials[0][l][pt].merge(partials[c][l][pt]);
      }
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRow> rows;
  for (std::size_t l = 0; l < lanes.size(); ++l) {
    for (std::size_t pt = 0; pt < lanes[l].points.size(); ++pt) {
      const Point& point = lanes[l].points[pt];
      SweepRow row;
      row.scenario_id = cfg.scenario_id;
      row.policy = std::string(to_string(lanes[l].id));
      row.horizon = spec.horizon;
      row.budget = spec.budget;
      row.tau_star = point.tau;
      row.width = point.width;
      if (!point.valid) {
        row.n_reps = 0;
        row.mean_cr = row.stderr_cr = row.mean_sol = row.mean_budget = row.mean_penalty = nan;
        row.sentinel = 2;
      } else {
        const PointStats& s = partials[0][l][pt];
        row.n_reps = s.cr.count();
        row.mean_cr = s.cr.mean();
        row.stderr_cr = s.cr.stderr_of_mean();
        row.mean_sol = s.sol.mean();
        row.mean_budget = s.budget.mean();
        row.mean_penalty = s.penalty.mean();
        row.sentinel = s.sentinel ? 1 : 0;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<Point> points_for(const std::vector<std::int64_t>& taus,
                              const std::optional<std::vector<std::int64_t>>& widths,
                              std::int64_t horizon) {
  std::vector<Point> points;
  for (std::int64_t tau : taus) {
    if (!widths) {
      points.push_back({tau, std::nullopt, true});
      continue;
    }
    for (std::int64_t w : *widths) {
      points.push_back({tau, w, interval_possible(tau, w, 1, horizon)});
    }
  }
  return points;
}

std::int64_t ceil_budget(double b) { return static_cast<std::int64_t>(std::ceil(b)); }

}  // namespace

// --- names -----------------------------------------------------------------

std::string_view to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::kTauSweep: return "tau_sweep";
    case Experiment::kWidthSweep: return "width_sweep";
    case Experiment::kBudgetAudit: return "budget_audit";
    case Experiment::kNoPenaltySweep: return "no_penalty_sweep";
  }
  return "?";
}

std::string_view to_string(PolicyId policy) {
  switch (policy) {
    case PolicyId::kAlg1: return "alg1";
    case PolicyId::kAlg2: return "alg2";
    case PolicyId::kConstHorizon: return "const_bT";
    case PolicyId::kConstUpper: return "const_bU";
    case PolicyId::kSeqRts: return "seqrts";
  }
  return "?";
}

std::optional<Experiment> parse_experiment(std::string_view text) {
  for (auto e : {Experiment::kTauSweep, Experiment::kWidthSweep, Experiment::kBudgetAudit,
                 Experiment::kNoPenaltySweep}) {
    if (text == to_string(e)) return e;
  }
  return std::nullopt;
}

std::optional<PolicyId> parse_policy_id(std::string_view text) {
  for (auto p : {PolicyId::kAlg1, PolicyId::kAlg2, PolicyId::kConstHorizon,
                 PolicyId::kConstUpper, PolicyId::kSeqRts}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

bool needs_interval(PolicyId policy) noexcept {
  return policy == PolicyId::kAlg2 || policy == PolicyId::kConstUpper ||
         policy == PolicyId::kSeqRts;
}

// --- config ----------------------------------------------------------------

void ScenarioConfig::validate() const {
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    throw InvalidInput(std::string("T/b/sigma: ") + e.what());
  }
  if (n_reps < 1) throw InvalidInput("n_reps: must be at least 1");
  if (policies.empty()) throw InvalidInput("policies: at least one policy is required");
  if (tau_rule.kind == TauRule::Kind::kFixed && !(tau_rule.fraction > 0.0)) {
    throw InvalidInput("tau_rule: fixed fraction must be positive");
  }
  if (!(seqrts_min_probability >= 0.0 && seqrts_min_probability < 1.0)) {
    throw InvalidInput("seqrts_min_probability: must lie in [0, 1)");
  }
  if (experiment == Experiment::kWidthSweep && (!widths || widths->empty())) {
    throw InvalidInput("widths: required for width_sweep");
  }
  if (experiment == Experiment::kTauSweep && widths) {
    throw InvalidInput("widths: only valid for width_sweep and audits");
  }
  if (widths) {
    for (std::int64_t w : *widths) {
      if (w < 0) throw InvalidInput("widths: entries must be non-negative");
    }
  }
  for (PolicyId p : policies) {
    if (needs_interval(p) && !widths) {
      throw InvalidInput("policies: " + std::string(to_string(p)) +
                         " needs prediction intervals, so widths must be given");
    }
  }
}

std::optional<PredictionInterval> draw_interval(std::int64_t tau, std::int64_t width,
                                                std::int64_t min_lower, std::int64_t max_upper,
                                                RngStream& rng) {
  const std::int64_t lo = std::max(min_lower, tau - width);
  const std::int64_t hi = std::min(tau, max_upper - width);
  if (width < 0 || lo > hi) return std::nullopt;
  const std::int64_t span = hi - lo + 1;
  auto offset = static_cast<std::int64_t>(std::floor(rng.uniform() * static_cast<double>(span)));
  offset = std::min(offset, span - 1);
  return PredictionInterval{lo + offset, lo + offset + width};
}

std::int64_t resolve_fixed_tau(const ScenarioConfig& cfg, const RunOptions& opts) {
  RngStream rng = scenario_stream(cfg, opts).derive(kFixedTauTag);
  const double target =
      cfg.tau_rule.fraction * (static_cast<double>(cfg.spec.horizon) + cfg.spec.budget);
  const std::int64_t tau = randomized_round(target, rng);
  if (tau < 1 || tau > cfg.spec.horizon) {
    throw InvalidInput("tau_rule: fixed fraction puts tau* = " + std::to_string(tau) +
                       " outside [1, T]");
  }
  return tau;
}

std::vector<std::int64_t> tau_grid(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (cfg.tau_rule.kind == TauRule::Kind::kFixed) return {resolve_fixed_tau(cfg, opts)};
  const bool audit = cfg.experiment == Experiment::kBudgetAudit ||
                     cfg.experiment == Experiment::kNoPenaltySweep;
  const std::int64_t last = audit ? cfg.spec.horizon : cfg.spec.horizon - 1;
  std::vector<std::int64_t> taus;
  for (std::int64_t t = std::max<std::int64_t>(1, ceil_budget(cfg.spec.budget)); t <= last; ++t) {
    taus.push_back(t);
  }
  return taus;
}

// --- policies --------------------------------------------------------------

std::unique_ptr<OnlinePolicy> build_policy(PolicyId id, const ProblemSpec& spec,
                                           const std::optional<PredictionInterval>& interval,
                                           double seqrts_min_probability, RngStream rng) {
  if (needs_interval(id) && !interval) {
    throw InvalidInput(std::string(to_string(id)) + " requires a prediction interval");
  }
  switch (id) {
    case PolicyId::kAlg1:
      return make_randomized_policy(spec, rng);
    case PolicyId::kAlg2:
      return make_interval_policy(spec, *interval, rng);
    case PolicyId::kConstHorizon:
      return constant_policy(spec.budget / static_cast<double>(spec.horizon));
    case PolicyId::kConstUpper:
      return constant_policy(spec.budget / static_cast<double>(interval->upper));
    case PolicyId::kSeqRts:
      return seqrts_policy(spec, SeqRtsConfig{seqrts_min_probability, *interval}, rng);
  }
  throw InvalidInput("unknown policy");
}

// --- experiments -----------------------------------------------------------

std::vector<SweepRow> run_tau_sweep(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (cfg.experiment != Experiment::kTauSweep) {
    throw InvalidInput("experiment: run_tau_sweep needs tau_sweep");
  }
  const std::vector<std::int64_t> taus = tau_grid(cfg, opts);
  if (taus.empty()) throw InvalidInput("T/b: tau* grid is empty");
  std::vector<Lane> lanes;
  for (PolicyId id : cfg.policies) lanes.push_back({id, true, points_for(taus, std::nullopt, 0)});
  return run_lanes(cfg, opts, lanes, false);
}

std::vector<SweepRow> run_width_sweep(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (cfg.experiment != Experiment::kWidthSweep) {
    throw InvalidInput("experiment: run_width_sweep needs width_sweep");
  }
  const std::vector<std::int64_t> taus = tau_grid(cfg, opts);
  std::vector<Lane> lanes;
  for (PolicyId id : cfg.policies) {
    lanes.push_back({id, false, points_for(taus, cfg.widths, cfg.spec.horizon)});
  }
  return run_lanes(cfg, opts, lanes, false);
}

std::vector<SweepRow> run_budget_audit(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (cfg.experiment != Experiment::kBudgetAudit &&
      cfg.experiment != Experiment::kNoPenaltySweep) {
    throw InvalidInput("experiment: run_budget_audit needs budget_audit or no_penalty_sweep");
  }
  const std::vector<std::int64_t> taus = tau_grid(cfg, opts);
  if (taus.empty()) throw InvalidInput("T/b: tau* grid is empty");
  std::vector<Lane> lanes;
  for (PolicyId id : cfg.policies) {
    if (needs_interval(id)) {
      lanes.push_back({id, false, points_for(taus, cfg.widths, cfg.spec.horizon)});
    } else {
      lanes.push_back({id, true, points_for(taus, std::nullopt, 0)});
    }
  }
  return run_lanes(cfg, opts, lanes, cfg.experiment == Experiment::kNoPenaltySweep);
}

std::vector<SweepRow> run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  switch (cfg.experiment) {
    case Experiment::kTauSweep: return run_tau_sweep(cfg, opts);
    case Experiment::kWidthSweep: return run_width_sweep(cfg, opts);
    case Experiment::kBudgetAudit:
    case Experiment::kNoPenaltySweep: return run_budget_audit(cfg, opts);
  }
  throw InvalidInput("experiment: unknown");
}

// --- CSV -------------------------------------------------------------------

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const SweepRow& r : rows) {
    out << r.scenario_id << ',' << r.policy << ',' << r.horizon << ','
        << format_number(r.budget) << ',';
    if (r.tau_star) out << *r.tau_star;
    out << ',';
    if (r.width) out << *r.width;
    out << ',' << r.n_reps << ',' << format_number(r.mean_cr) << ','
        << format_number(r.stderr_cr) << ',' << format_number(r.mean_sol) << ','
        << format_number(r.mean_budget) << ',' << format_number(r.mean_penalty) << ','
        << r.sentinel << '\n';
  }
}

void export_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  if (rows.empty()) throw InvalidInput("export_csv: no rows to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_csv(rows, out);
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

unsigned resolve_threads(unsigned requested) noexcept {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace ous
