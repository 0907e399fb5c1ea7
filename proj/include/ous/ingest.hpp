#pragma once

// HeartSteps-style ingestion: minute step counts become per-day risk and
// availability flags on a 5-minute grid from 09:00 to 21:00, and recorded
// user-days can be replayed through any policy.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ous/harness.hpp"
#include "ous/rng.hpp"

namespace ous {

inline constexpr int kDecisionTimesPerDay = 144;
inline constexpr int kFirstDecisionMinute = 9 * 60;
inline constexpr int kDecisionSpacing = 5;
inline constexpr int kRiskWindowMinutes = 40;
inline constexpr int kRiskStepThreshold = 150;
inline constexpr int kAvailabilityWindowMinutes = 60;

/// Minutes since 1970-01-01T00:00.
using MinuteStamp = std::int64_t;

struct StepLogRow {
  std::string user_id;
  MinuteStamp timestamp = 0;
  std::int64_t steps = 0;
  bool message_flag = false;
};

struct DecisionFlags {
  bool risk = false;       // R_t: fewer than 150 steps in the prior 40 minutes
  bool available = false;  // I_t: no message in the prior 60 minutes

  // 2*R + I, the 0-3 encoding used by the --flags dump.
  int code() const noexcept { return (risk ? 2 : 0) + (available ? 1 : 0); }
};

struct UserDay {
  std::string user_id;
  std::string date;  // YYYY-MM-DD
  std::array<DecisionFlags, kDecisionTimesPerDay> flags{};
  std::int64_t tau_star = 0;  // count of risk && available
};

/// Parses "YYYY-MM-DDTHH:MM" (a space separator and a trailing ":00" seconds
/// field are accepted). Throws InvalidInput otherwise.
MinuteStamp parse_timestamp(const std::string& text);
std::string format_timestamp(MinuteStamp stamp);
std::string format_date(std::int64_t day_number);

/// Windows are left-open: decision time t looks at minutes [t-40, t) and
/// [t-60, t). Missing minutes count as zero steps and no message. Output is
/// ordered by (user_id, date). Throws InvalidInput when a user's timestamps
/// are not strictly increasing or steps are negative.
std::vector<UserDay> extract_user_days(const std::vector<StepLogRow>& rows);

/// Reads `user_id,timestamp,steps,message_flag`. Errors carry the line number.
std::vector<StepLogRow> read_step_log(std::istream& in);
void write_step_log(const std::vector<StepLogRow>& rows, std::ostream& out);

/// `user_id,date,tau_star`, plus d000..d143 flag codes when `with_flags`.
void write_user_days(const std::vector<UserDay>& days, std::ostream& out, bool with_flags);
/// Reads the user-day CSV back. Flag columns are optional; without them only
/// tau_star is restored.
std::vector<UserDay> read_user_days(std::istream& in);

struct SyntheticLogOptions {
  // Chance that a decision-time minute carries a logged message.
  double message_rate = 0.0;
  std::string start_date = "2024-01-01";
};

/// Minute rows from 08:00 to 20:59 per user-day. Each day holds one
/// contiguous sedentary block of Binomial(144, f) decision times and is
/// active elsewhere, so without messages tau* equals the block length and
/// averages f * 144.
std::vector<StepLogRow> generate_synthetic_log(std::int64_t n_users, std::int64_t n_days,
                                               double sedentary_fraction, RngStream& rng,
                                               const SyntheticLogOptions& options = {});

struct ReplayConfig {
  double budget = 1.5;
  std::int64_t horizon = kDecisionTimesPerDay;
  std::vector<PolicyId> policies;
  std::vector<std::int64_t> widths;
  double seqrts_min_probability = 1e-6;
  std::int64_t interval_min = 2;
  std::int64_t interval_max = kDecisionTimesPerDay;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ReplayResult {
  std::vector<SweepRow> rows;       // one per (policy, width)
  std::int64_t skipped_empty = 0;   // days with tau* = 0
  std::int64_t skipped_small = 0;   // days with 0 < tau* <= b
};

/// Day d draws its interval from RngStream(seed).derive(d).derive(width) and
/// its policy randomness from a stream shared by all policies and widths.
/// The interval has the given width and is placed uniformly inside
/// [interval_min, interval_max] around the day's tau*; every policy sees the
/// same interval. Rows aggregate competitive ratio and entropy change over days.
ReplayResult replay(const std::vector<UserDay>& days, const ReplayConfig& cfg);

}  // namespace ous
