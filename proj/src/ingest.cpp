#include "ous/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include "ous/error.hpp"

namespace ous {

namespace {

constexpr std::uint64_t kReplayPolicyTag = 0x5EED'0000'0000'0001ULL;

constexpr int kMinutesPerDay = 24 * 60;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <class Int>
bool parse_int(std::string_view text, Int& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t day_number(std::string_view date) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-' ||
      !parse_int(date.substr(0, 4), y) || !parse_int(date.substr(5, 2), m) ||
      !parse_int(date.substr(8, 2), d)) {
    throw InvalidInput("malformed date \"" + std::string(date) + "\"");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw InvalidInput("invalid date \"" + std::string(date) + "\"");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

MinuteStamp parse_timestamp(const std::string& text) {
  std::string_view s = text;
  if (s.size() == 19 && s.substr(16) == ":00") s = s.substr(0, 16);
  if (s.size() != 16 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
    throw InvalidInput("malformed timestamp \"" + text + "\", expected YYYY-MM-DDTHH:MM");
  }
  int hh = 0;
  int mm = 0;
  if (!parse_int(s.substr(11, 2), hh) || !parse_int(s.substr(14, 2), mm) || hh < 0 ||
      hh > 23 || mm < 0 || mm > 59) {
    throw InvalidInput("malformed time of day in \"" + text + "\"");
  }
  return day_number(s.substr(0, 10)) * kMinutesPerDay + hh * 60 + mm;
}

std::string format_date(std::int64_t day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(MinuteStamp stamp) {
  const std::int64_t day = floor_div(stamp, kMinutesPerDay);
  const auto minute = static_cast<int>(stamp - day * kMinutesPerDay);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
  return format_date(day) + "T" + buf;
}

std::vector<UserDay> extract_user_days(const std::vector<StepLogRow>& rows) {
  // user -> day -> (minute -> steps, minute -> message)
  struct DayBuffer {
    std::array<std::int64_t, kMinutesPerDay> steps{};
    std::array<bool, kMinutesPerDay> message{};
  };
  std::map<std::string, std::map<std::int64_t, DayBuffer>> users;
  std::map<std::string, MinuteStamp> last_seen;

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const StepLogRow& row = rows[k];
    if (row.steps < 0) {
      throw InvalidInput("row " + std::to_string(k + 1) + ": negative step count");
    }
    auto [it, fresh] = last_seen.try_emplace(row.user_id, row.timestamp);
    if (!fresh) {
      if (row.timestamp <= it->second) {
        throw InvalidInput("row " + std::to_string(k + 1) + ": timestamps for user " +
                           row.user_id + " are not strictly increasing");
      }
      it->second = row.timestamp;
    }
    const std::int64_t day = floor_div(row.timestamp, kMinutesPerDay);
    const auto minute = static_cast<std::size_t>(row.timestamp - day * kMinutesPerDay);
    DayBuffer& buf = users[row.user_id][day];
    buf.steps[minute] += row.steps;
    buf.message[minute] = buf.message[minute] || row.message_flag;
  }

  std::vector<UserDay> out;
  for (const auto& [user, days] : users) {
    for (const auto& [day, buf] : days) {
      std::array<std::int64_t, kMinutesPerDay + 1> step_prefix{};
      std::array<int, kMinutesPerDay + 1> msg_prefix{};
      for (int m = 0; m < kMinutesPerDay; ++m) {
        step_prefix[m + 1] = step_prefix[m] + buf.steps[m];
        msg_prefix[m + 1] = msg_prefix[m] + (buf.message[m] ? 1 : 0);
      }
      UserDay ud;
      ud.user_id = user;
      ud.date = format_date(day);
      for (int k = 0; k < kDecisionTimesPerDay; ++k) {
        const int t = kFirstDecisionMinute + k * kDecisionSpacing;
        const std::int64_t recent = step_prefix[t] - step_prefix[t - kRiskWindowMinutes];
        const int messages = msg_prefix[t] - msg_prefix[t - kAvailabilityWindowMinutes];
        ud.flags[k] = {recent < kRiskStepThreshold, messages == 0};
        if (ud.flags[k].risk && ud.flags[k].available) ++ud.tau_star;
      }
      out.push_back(std::move(ud));
    }
  }
  return out;
}

// --- CSV I/O ---------------------------------------------------------------

std::vector<StepLogRow> read_step_log(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<StepLogRow> rows;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!header) {
      if (view != "user_id,timestamp,steps,message_flag") {
        throw InvalidInput(where + "expected header user_id,timestamp,steps,message_flag");
      }
      header = true;
      continue;
    }
    const auto fields = split(view, ',');
    if (fields.size() != 4) throw InvalidInput(where + "expected 4 fields");
    StepLogRow row;
    row.user_id = std::string(fields[0]);
    if (row.user_id.empty()) throw InvalidInput(where + "empty user_id");
    try {
      row.timestamp = parse_timestamp(std::string(fields[1]));
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + e.what());
    }
    if (!parse_int(fields[2], row.steps) || row.steps < 0) {
      throw InvalidInput(where + "steps must be a non-negative integer");
    }
    if (fields[3] == "1") {
      row.message_flag = true;
    } else if (fields[3] != "0") {
      throw InvalidInput(where + "message_flag must be 0 or 1");
    }
    rows.push_back(std::move(row));
  }
  if (!header) throw InvalidInput("step log is empty");
  return rows;
}

void write_step_log(const std::vector<StepLogRow>& rows, std::ostream& out) {
  out << "user_id,timestamp,steps,message_flag\n";
  for (const StepLogRow& r : rows) {
    out << r.user_id << ',' << format_timestamp(r.timestamp) << ',' << r.steps << ','
        << (r.message_flag ? 1 : 0) << '\n';
  }
}

void write_user_days(const std::vector<UserDay>& days, std::ostream& out, bool with_flags) {
  out << "user_id,date,tau_star";
  if (with_flags) {
    char buf[8];
    for (int k = 0; k < kDecisionTimesPerDay; ++k) {
      std::snprintf(buf, sizeof buf, ",d%03d", k);
      out << buf;
    }
  }
  out << '\n';
  for (const UserDay& d : days) {
    out << d.user_id << ',' << d.date << ',' << d.tau_star;
    if (with_flags) {
      for (const DecisionFlags& f : d.flags) out << ',' << f.code();
    }
    out << '\n';
  }
}

std::vector<UserDay> read_user_days(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<UserDay> days;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto fields = split(view, ',');
    if (columns == 0) {
      if (fields.size() < 3 || fields[0] != "user_id" || fields[1] != "date" ||
          fields[2] != "tau_star") {
        throw InvalidInput(where + "expected header user_id,date,tau_star");
      }
      if (fields.size() != 3 && fields.size() != 3 + kDecisionTimesPerDay) {
        throw InvalidInput(where + "flag dump must have exactly 144 columns");
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) throw InvalidInput(where + "wrong number of fields");
    UserDay d;
    d.user_id = std::string(fields[0]);
    d.date = std::string(fields[1]);
    if (!parse_int(fields[2], d.tau_star) || d.tau_star < 0 ||
        d.tau_star > kDecisionTimesPerDay) {
      throw InvalidInput(where + "tau_star must be an integer in [0, 144]");
    }
    if (columns > 3) {
      std::int64_t count = 0;
      for (int k = 0; k < kDecisionTimesPerDay; ++k) {
        int code = 0;
        if (!parse_int(fields[3 + k], code) || code < 0 || code > 3) {
          throw InvalidInput(where + "flag codes must be 0-3");
        }
        d.flags[k] = {(code & 2) != 0, (code & 1) != 0};
        if (code == 3) ++count;
      }
      if (count != d.tau_star) throw InvalidInput(where + "tau_star disagrees with flag codes");
    }
    days.push_back(std::move(d));
  }
  if (columns == 0) throw InvalidInput("user-day file is empty");
  return days;
}

// --- synthetic logs --------------------------------------------------------

std::vector<StepLogRow> generate_synthetic_log(std::int64_t n_users, std::int64_t n_days,
                                               double sedentary_fraction, RngStream& rng,
                                               const SyntheticLogOptions& options) {
  if (!(sedentary_fraction >= 0.0 && sedentary_fraction <= 1.0)) {
    throw InvalidParameter("sedentary_fraction must lie in [0, 1]");
  }
  if (n_users < 0 || n_days < 0) throw InvalidParameter("user and day counts must be >= 0");
  if (!(options.message_rate >= 0.0 && options.message_rate <= 1.0)) {
    throw InvalidParameter("message_rate must lie in [0, 1]");
  }
  constexpr int kFirstMinute = 8 * 60;
  constexpr int kEndMinute = 21 * 60;
  const std::int64_t first_day = day_number(options.start_date);

  std::vector<StepLogRow> rows;
  rows.reserve(static_cast<std::size_t>(n_users * n_days * (kEndMinute - kFirstMinute)));
  char id[32];
  for (std::int64_t u = 0; u < n_users; ++u) {
    std::snprintf(id, sizeof id, "u%03lld", static_cast<long long>(u + 1));
    for (std::int64_t d = 0; d < n_days; ++d) {
      RngStream day_rng = rng.derive(static_cast<std::uint64_t>(u)).derive(
          static_cast<std::uint64_t>(d));
      int sedentary = 0;
      for (int k = 0; k < kDecisionTimesPerDay; ++k) {
        if (day_rng.uniform() < sedentary_fraction) ++sedentary;
      }
      const int start = static_cast<int>(std::floor(
          day_rng.uniform() * static_cast<double>(kDecisionTimesPerDay - sedentary + 1)));

      std::array<std::int64_t, kMinutesPerDay> steps{};
      std::array<bool, kMinutesPerDay> message{};
      for (int m = kFirstMinute; m < kEndMinute; ++m) {
        steps[m] = static_cast<std::int64_t>(std::floor(day_rng.uniform() * 4.0));
      }
      for (int k = 0; k < kDecisionTimesPerDay; ++k) {
        const int t = kFirstDecisionMinute + k * kDecisionSpacing;
        // Bursts before the block sit at the start of their window and bursts
        // after it at the end, so neither leaks into a sedentary window.
        if (k < start) {
          steps[t - kRiskWindowMinutes] += kRiskStepThreshold;
        } else if (k >= start + sedentary) {
          steps[t - 1] += kRiskStepThreshold;
        }
        if (options.message_rate > 0.0 && day_rng.uniform() < options.message_rate) {
          message[t] = true;
        }
      }
      const std::int64_t base = (first_day + d) * kMinutesPerDay;
      for (int m = kFirstMinute; m < kEndMinute; ++m) {
        rows.push_back({id, base + m, steps[m], message[m]});
      }
    }
  }
  return rows;
}

// --- replay ----------------------------------------------------------------

ReplayResult replay(const std::vector<UserDay>& days, const ReplayConfig& cfg) {
  ProblemSpec spec{cfg.horizon, cfg.budget, std::nullopt};
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    throw InvalidInput(std::string("replay: ") + e.what());
  }
  if (cfg.policies.empty()) throw InvalidInput("replay: at least one policy is required");
  if (cfg.widths.empty()) throw InvalidInput("replay: at least one width is required");
  if (cfg.interval_min < 1 || cfg.interval_max > cfg.horizon ||
      cfg.interval_min > cfg.interval_max) {
    throw InvalidInput("replay: interval range must satisfy 1 <= min <= max <= T");
  }
  for (std::int64_t w : cfg.widths) {
    if (w < 0 || w > cfg.interval_max - cfg.interval_min) {
      throw InvalidInput("replay: width " + std::to_string(w) + " does not fit in [" +
                         std::to_string(cfg.interval_min) + ", " +
                         std::to_string(cfg.interval_max) + "]");
    }
  }

  ReplayResult result;
  std::vector<std::size_t> usable;
  for (std::size_t d = 0; d < days.size(); ++d) {
    const std::int64_t tau = days[d].tau_star;
    if (tau > cfg.horizon) {
      throw InvalidInput("replay: day " + days[d].user_id + " " + days[d].date +
                         " has tau* above T");
    }
    if (tau == 0) {
      ++result.skipped_empty;
    } else if (static_cast<double>(tau) <= cfg.budget) {
      ++result.skipped_small;
    } else {
      usable.push_back(d);
    }
  }

  constexpr std::int64_t kChunk = 64;
  const std::size_t n_policies = cfg.policies.size();
  const std::size_t n_widths = cfg.widths.size();
  const auto n_usable = static_cast<std::int64_t>(usable.size());
  const std::int64_t n_chunks = (n_usable + kChunk - 1) / kChunk;

  struct Cell {
    RunningStats cr, sol, budget, entropy;
    bool sentinel = false;
  };
  using Partial = std::vector<Cell>;  // [width][policy]
  std::vector<Partial> partials(static_cast<std::size_t>(n_chunks),
                                Partial(n_policies * n_widths));
  const RngStream root(cfg.seed);

  parallel_chunks(n_usable, kChunk, cfg.threads,
                  [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    Partial& part = partials[static_cast<std::size_t>(c)];
    for (std::int64_t k = begin; k < end; ++k) {
      const std::size_t d = usable[static_cast<std::size_t>(k)];
      const std::int64_t tau = days[d].tau_star;
      for (std::size_t wi = 0; wi < n_widths; ++wi) {
        const RngStream day = root.derive(d).derive(static_cast<std::uint64_t>(cfg.widths[wi]));
        RngStream irng = day.derive(0);
        const auto interval = draw_interval(tau, cfg.widths[wi],
                                            std::min(cfg.interval_min, tau), cfg.interval_max,
                                            irng);
        for (std::size_t pi = 0; pi < n_policies; ++pi) {
          const PolicyId id = cfg.policies[pi];
          auto policy = build_policy(id, spec, interval, cfg.seqrts_min_probability,
                                     root.derive(d).derive(kReplayPolicyTag));
          ObjectiveAccumulator acc;
          for (std::int64_t i = 1; i <= tau; ++i) {
            const double p = policy->next_probability(i);
            if (!(p >= 0.0 && p <= 1.0)) {
              throw InvalidProbability("replay: policy emitted an invalid probability");
            }
            acc.add(p);
          }
          const ObjectiveReport r = acc.report(spec);
          Cell& cell = part[wi * n_policies + pi];
          cell.cr.add(r.competitive_ratio);
          cell.sol.add(r.sol);
          cell.budget.add(r.sum_probs);
          cell.entropy.add(r.entropy_change);
          cell.sentinel = cell.sentinel || r.sentinel;
        }
      }
    }
  });

  Partial total(n_policies * n_widths);
  for (const Partial& part : partials) {
    for (std::size_t k = 0; k < total.size(); ++k) {
      total[k].cr.merge(part[k].cr);
      total[k].sol.merge(part[k].sol);
      total[k].budget.merge(part[k].budget);
      total[k].entropy.merge(part[k].entropy);
      total[k].sentinel = total[k].sentinel || part[k].sentinel;
    }
  }

  // Rows ordered by (policy, width), matching the sweep outputs.
  for (std::size_t pi = 0; pi < n_policies; ++pi) {
    for (std::size_t wi = 0; wi < n_widths; ++wi) {
      const Cell& cell = total[wi * n_policies + pi];
      SweepRow row;
      row.scenario_id = "replay";
      row.policy = std::string(to_string(cfg.policies[pi]));
      row.horizon = cfg.horizon;
      row.budget = cfg.budget;
      row.width = cfg.widths[wi];
      row.n_reps = cell.cr.count();
      row.mean_cr = cell.cr.mean();
      row.stderr_cr = cell.cr.stderr_of_mean();
      row.mean_sol = cell.sol.mean();
      row.mean_budget = cell.budget.mean();
      row.mean_penalty = cell.entropy.mean();
      row.sentinel = cell.sentinel ? 1 : 0;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace ous
