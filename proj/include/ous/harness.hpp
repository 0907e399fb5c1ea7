#pragma once

// Monte Carlo experiment engine. Replication r of scenario s always draws
// from RngStream(master_seed).derive(s).derive(r), and every policy in that
// replication uses the same policy substream; per-replication work is
// grouped in fixed-size chunks whose partial statistics are merged in chunk
// order, so results are bit-identical for any thread count.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ous/algorithms.hpp"
#include "ous/core.hpp"
#include "ous/rng.hpp"

namespace ous {

enum class Experiment { kTauSweep, kWidthSweep, kBudgetAudit, kNoPenaltySweep };

enum class PolicyId {
  kAlg1,          // randomized, no interval
  kAlg2,          // interval-aware
  kConstHorizon,  // b/T
  kConstUpper,    // b/U
  kSeqRts,
};

std::string_view to_string(Experiment experiment);
std::string_view to_string(PolicyId policy);
std::optional<Experiment> parse_experiment(std::string_view text);
std::optional<PolicyId> parse_policy_id(std::string_view text);
bool needs_interval(PolicyId policy) noexcept;

struct TauRule {
  enum class Kind { kGrid, kFixed };
  Kind kind = Kind::kGrid;
  double fraction = 0.5;  // kFixed: tau* = Int[fraction * (T + b)]
};

struct ScenarioConfig {
  std::string scenario_id;
  ProblemSpec spec;
  Experiment experiment = Experiment::kTauSweep;
  std::vector<PolicyId> policies;
  TauRule tau_rule;
  std::optional<std::vector<std::int64_t>> widths;
  std::int64_t n_reps = 20000;
  std::uint64_t master_seed = 0;
  double seqrts_min_probability = 1e-6;

  // Throws InvalidInput naming the offending field.
  void validate() const;
};

struct RunOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  std::uint64_t scenario_index = 0;
};

struct SweepRow {
  std::string scenario_id;
  std::string policy;
  std::int64_t horizon = 0;
  double budget = 0.0;
  std::optional<std::int64_t> tau_star;
  std::optional<std::int64_t> width;
  std::int64_t n_reps = 0;
  double mean_cr = 0.0;
  double stderr_cr = 0.0;
  double mean_sol = 0.0;
  double mean_budget = 0.0;
  double mean_penalty = 0.0;
  // 0 normal, 1 some replication scored -inf, 2 point skipped (no valid interval).
  int sentinel = 0;
};

/// Uniformly placed interval of the given width that contains tau:
/// L uniform on [max(min_lower, tau - w), min(tau, max_upper - w)].
/// Empty when no such interval exists.
std::optional<PredictionInterval> draw_interval(std::int64_t tau, std::int64_t width,
                                                std::int64_t min_lower, std::int64_t max_upper,
                                                RngStream& rng);

/// tau* for a kFixed rule, resolved by randomized rounding on a stream that
/// depends only on the master seed and scenario index.
std::int64_t resolve_fixed_tau(const ScenarioConfig& cfg, const RunOptions& opts);

/// Grid of tau* values a scenario enumerates.
std::vector<std::int64_t> tau_grid(const ScenarioConfig& cfg, const RunOptions& opts);

std::vector<SweepRow> run_tau_sweep(const ScenarioConfig& cfg, const RunOptions& opts = {});
std::vector<SweepRow> run_width_sweep(const ScenarioConfig& cfg, const RunOptions& opts = {});
std::vector<SweepRow> run_budget_audit(const ScenarioConfig& cfg, const RunOptions& opts = {});
/// Dispatches on cfg.experiment.
std::vector<SweepRow> run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Builds the policy a harness row refers to. `interval` is required for
/// interval-aware policies.
std::unique_ptr<OnlinePolicy> build_policy(PolicyId id, const ProblemSpec& spec,
                                           const std::optional<PredictionInterval>& interval,
                                           double seqrts_min_probability, RngStream rng);

inline constexpr std::string_view kCsvHeader =
    "scenario_id,policy,T,b,tau_star,width,n_reps,mean_cr,stderr_cr,mean_sol,mean_budget,"
    "mean_penalty,sentinel";

/// Shortest round-trip decimal; infinities as "inf"/"-inf", NaN as "nan".
std::string format_number(double value);

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out);
/// Throws InvalidInput for an empty row set and IoError naming the path.
void export_csv(const std::vector<SweepRow>& rows, const std::string& path);

/// Runs `body(chunk, begin, end)` over [0, n) in fixed chunks of `chunk`
/// items on up to `threads` workers. Chunk boundaries do not depend on the
/// thread count.
template <class Body>
void parallel_chunks(std::int64_t n, std::int64_t chunk, unsigned threads, Body&& body);

unsigned resolve_threads(unsigned requested) noexcept;

}  // namespace ous

#include "ous/detail/parallel.hpp"
