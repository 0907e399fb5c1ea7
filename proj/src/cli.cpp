#include "ous/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ous/config.hpp"
#include "ous/core.hpp"
#include "ous/error.hpp"
#include "ous/harness.hpp"
#include "ous/ingest.hpp"

namespace ous {

namespace {

std::string six_digits(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::uint64_t env_seed() {
  const char* v = std::getenv("OUS_SEED");
  if (v == nullptr || *v == '\0') return 0;
  try {
    std::size_t used = 0;
    const std::string s(v);
    const auto seed = std::stoull(s, &used, 0);
    if (used == s.size()) return seed;
  } catch (const std::exception&) {
  }
  throw InvalidInput(std::string("OUS_SEED: expected a non-negative integer, got \"") + v + "\"");
}

struct TheoryArgs {
  double b = 0.0;
  std::vector<std::int64_t> t_values;
  std::vector<std::int64_t> u_values;
  bool csv = false;
};

struct SweepArgs {
  std::string config;
  std::string out;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> n_reps;
  std::optional<std::int64_t> horizon;
  std::optional<double> budget;
  std::optional<double> sigma;
  std::optional<double> min_probability;
  std::optional<double> tau_fraction;
  std::optional<std::string> experiment;
  std::vector<std::string> policies;
  std::vector<std::int64_t> widths;
};

struct IngestArgs {
  std::string in;
  std::string out;
  bool flags = false;
};

struct ReplayArgs {
  std::string userdays;
  std::string out;
  std::vector<std::int64_t> widths;
  double b = 1.5;
  std::int64_t horizon = kDecisionTimesPerDay;
  std::vector<std::string> policies{"alg1", "alg2", "const_bU", "seqrts"};
  std::optional<std::uint64_t> seed;
  double min_probability = 1e-6;
  std::int64_t interval_min = 2;
  std::int64_t interval_max = kDecisionTimesPerDay;
  unsigned threads = 0;
};

struct SynthArgs {
  std::int64_t users = 37;
  std::int64_t days = 42;
  double sedentary = 0.5;
  double message_rate = 0.0;
  std::string start_date = "2024-01-01";
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_theory(const TheoryArgs& a, std::ostream& out) {
  if (!(a.b > 0.0)) throw InvalidInput("--b: must be positive");
  if (a.t_values.empty() && a.u_values.empty()) throw InvalidInput("theory: give --t and/or --u");
  if (a.csv) out << "symbol,value,b,regime,ratio\n";
  auto emit = [&](char symbol, std::int64_t v, double ratio) {
    const auto label = regime_label(classify_horizon(static_cast<double>(v), a.b), symbol);
    if (a.csv) {
      out << symbol << ',' << v << ',' << format_number(a.b) << ',' << label << ','
          << format_number(ratio) << '\n';
    } else {
      out << symbol << '=' << v << "  " << label << "  X(" << symbol << ")=" << six_digits(ratio)
          << '\n';
    }
  };
  for (auto t : a.t_values) emit('T', t, theoretical_cr_rand(t, a.b));
  for (auto u : a.u_values) emit('U', u, theoretical_cr_learn(u, a.b));
  return kExitOk;
}

void apply_overrides(ScenarioConfig& cfg, const SweepArgs& a) {
  if (a.seed) cfg.master_seed = *a.seed;
  if (a.n_reps) cfg.n_reps = *a.n_reps;
  if (a.horizon) cfg.spec.horizon = *a.horizon;
  if (a.budget) cfg.spec.budget = *a.budget;
  if (a.sigma) cfg.spec.sigma = *a.sigma;
  if (a.min_probability) cfg.seqrts_min_probability = *a.min_probability;
  if (a.tau_fraction) {
    cfg.tau_rule.kind = TauRule::Kind::kFixed;
    cfg.tau_rule.fraction = *a.tau_fraction;
  }
  if (a.experiment) {
    const auto e = parse_experiment(*a.experiment);
    if (!e) throw InvalidInput("--experiment: unknown value \"" + *a.experiment + "\"");
    cfg.experiment = *e;
  }
  if (!a.policies.empty()) {
    cfg.policies.clear();
    for (const auto& p : a.policies) {
      const auto id = parse_policy_id(p);
      if (!id) throw InvalidInput("--policies: unknown policy \"" + p + "\"");
      cfg.policies.push_back(*id);
    }
  }
  if (!a.widths.empty()) cfg.widths = a.widths;
  cfg.validate();
}

int cmd_sweep(const SweepArgs& a, bool audit, std::ostream& out, std::ostream& err) {
  const std::uint64_t default_seed = a.seed.value_or(env_seed());
  auto scenarios = load_scenarios(a.config, default_seed);
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    ScenarioConfig& cfg = scenarios[k];
    apply_overrides(cfg, a);
    const bool is_audit = cfg.experiment == Experiment::kBudgetAudit ||
                          cfg.experiment == Experiment::kNoPenaltySweep;
    if (is_audit != audit) {
      throw InvalidInput("experiment: \"" + std::string(to_string(cfg.experiment)) +
                         "\" belongs to the " + (audit ? "simulate" : "audit") + " subcommand");
    }
    RunOptions opts;
    opts.threads = a.threads;
    opts.scenario_index = k;
    auto part = run_scenario(cfg, opts);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  export_csv(rows, a.out);
  std::int64_t skipped = 0;
  for (const auto& r : rows) {
    if (r.sentinel == 2) {
      ++skipped;
      err << "warning: " << r.scenario_id << " " << r.policy << " width " << r.width.value_or(-1)
          << ": no interval of this width fits; row marked sentinel=2\n";
    }
  }
  out << "wrote " << rows.size() << " rows to " << a.out;
  if (skipped > 0) out << " (" << skipped << " skipped)";
  out << '\n';
  return kExitOk;
}

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  std::ifstream in(a.in);
  if (!in) throw IoError("cannot open " + a.in);
  const auto rows = read_step_log(in);
  const auto days = extract_user_days(rows);
  std::ofstream file(a.out);
  if (!file) throw IoError("cannot write " + a.out);
  write_user_days(days, file, a.flags);
  file.flush();
  if (!file) throw IoError("write failed for " + a.out);
  out << "wrote " << days.size() << " user-days to " << a.out << '\n';
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.users < 1 || a.days < 1) throw InvalidInput("synth: --users and --days must be >= 1");
  if (!(a.sedentary >= 0.0 && a.sedentary <= 1.0)) {
    throw InvalidInput("--sedentary: must lie in [0, 1]");
  }
  if (!(a.message_rate >= 0.0 && a.message_rate <= 1.0)) {
    throw InvalidInput("--message-rate: must lie in [0, 1]");
  }
  RngStream rng(a.seed.value_or(env_seed()));
  SyntheticLogOptions opts;
  opts.message_rate = a.message_rate;
  opts.start_date = a.start_date;
  const auto rows = generate_synthetic_log(a.users, a.days, a.sedentary, rng, opts);
  std::ofstream file(a.out);
  if (!file) throw IoError("cannot write " + a.out);
  write_step_log(rows, file);
  file.flush();
  if (!file) throw IoError("write failed for " + a.out);
  out << "wrote " << rows.size() << " minute rows to " << a.out << '\n';
  return kExitOk;
}

int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream in(a.userdays);
  if (!in) throw IoError("cannot open " + a.userdays);
  const auto days = read_user_days(in);
  ReplayConfig cfg;
  cfg.budget = a.b;
  cfg.horizon = a.horizon;
  cfg.widths = a.widths;
  cfg.seqrts_min_probability = a.min_probability;
  cfg.interval_min = a.interval_min;
  cfg.interval_max = a.interval_max;
  cfg.seed = a.seed.value_or(env_seed());
  cfg.threads = a.threads;
  for (const auto& p : a.policies) {
    const auto id = parse_policy_id(p);
    if (!id) throw InvalidInput("--policies: unknown policy \"" + p + "\"");
    cfg.policies.push_back(*id);
  }
  const auto result = replay(days, cfg);
  export_csv(result.rows, a.out);
  for (const auto& r : result.rows) {
    if (r.sentinel != 0) {
      err << "warning: " << r.policy << " width " << r.width.value_or(-1)
          << (r.sentinel == 1 ? ": some days scored -inf" : ": no usable days") << '\n';
    }
  }
  out << "wrote " << result.rows.size() << " rows to " << a.out << "; skipped "
      << result.skipped_empty << " days with tau*=0 and " << result.skipped_small
      << " days with tau* <= b\n";
  return kExitOk;
}

void add_seed(CLI::App* cmd, std::optional<std::uint64_t>& seed) {
  cmd->add_option("--seed", seed, "Master seed (default: $OUS_SEED or 0)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online uniform sampling: theory tables, simulations, audits, ingestion, replay",
               "ous"};
  app.require_subcommand(1, 1);

  TheoryArgs theory;
  auto* c_theory = app.add_subcommand("theory", "Print regimes and worst-case ratios");
  c_theory->add_option("--b", theory.b, "Budget b")->required();
  c_theory->add_option("--t", theory.t_values, "Horizons T (comma separated)")->delimiter(',');
  c_theory->add_option("--u", theory.u_values, "Interval upper bounds U (comma separated)")
      ->delimiter(',');
  c_theory->add_flag("--csv", theory.csv, "Machine-readable output");

  SweepArgs sim;
  SweepArgs aud;
  auto add_sweep = [](CLI::App* cmd, SweepArgs& a) {
    cmd->add_option("--config", a.config, "Scenario JSON")->required();
    cmd->add_option("--out", a.out, "Output CSV")->required();
    cmd->add_option("--threads", a.threads, "Worker threads (0: all cores)");
    cmd->add_option("--seed", a.seed, "Master seed (default: config, then $OUS_SEED, then 0)");
    cmd->add_option("--n-reps", a.n_reps, "Replications per point");
    cmd->add_option("--T", a.horizon, "Horizon T");
    cmd->add_option("--b", a.budget, "Budget b");
    cmd->add_option("--sigma", a.sigma, "Penalty strength (default 1/tau*)");
    cmd->add_option("--min-probability", a.min_probability, "SeqRTS floor probability");
    cmd->add_option("--tau-fraction", a.tau_fraction, "Fixed tau* = Int[f (T + b)]");
    cmd->add_option("--experiment", a.experiment, "Experiment kind");
    cmd->add_option("--policies", a.policies, "Policies (comma separated)")->delimiter(',');
    cmd->add_option("--widths", a.widths, "Interval widths (comma separated)")->delimiter(',');
  };
  auto* c_sim = app.add_subcommand("simulate", "Run tau_sweep or width_sweep scenarios");
  add_sweep(c_sim, sim);
  auto* c_aud = app.add_subcommand("audit", "Run budget_audit or no_penalty_sweep scenarios");
  add_sweep(c_aud, aud);

  IngestArgs ingest;
  auto* c_ing = app.add_subcommand("ingest", "Turn a minute step log into user-day tau*");
  c_ing->add_option("--in", ingest.in, "Step log CSV")->required();
  c_ing->add_option("--out", ingest.out, "User-day CSV")->required();
  c_ing->add_flag("--flags", ingest.flags, "Append the 144 per-decision-time flag codes");

  ReplayArgs rep;
  auto* c_rep = app.add_subcommand("replay", "Replay user-days through the policies");
  c_rep->add_option("--userdays", rep.userdays, "User-day CSV")->required();
  c_rep->add_option("--out", rep.out, "Output CSV")->required();
  c_rep->add_option("--width", rep.widths, "Interval widths (comma separated)")
      ->delimiter(',')
      ->required();
  c_rep->add_option("--b", rep.b, "Budget b")->capture_default_str();
  c_rep->add_option("--T", rep.horizon, "Decision times per day")->capture_default_str();
  c_rep->add_option("--policies", rep.policies, "Policies (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_seed(c_rep, rep.seed);
  c_rep->add_option("--min-probability", rep.min_probability, "SeqRTS floor probability")
      ->capture_default_str();
  c_rep->add_option("--interval-min", rep.interval_min, "Smallest admissible L")
      ->capture_default_str();
  c_rep->add_option("--interval-max", rep.interval_max, "Largest admissible U")
      ->capture_default_str();
  c_rep->add_option("--threads", rep.threads, "Worker threads (0: all cores)");

  SynthArgs synth;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic minute step log");
  c_syn->add_option("--users", synth.users, "Users")->capture_default_str();
  c_syn->add_option("--days", synth.days, "Days per user")->capture_default_str();
  c_syn->add_option("--sedentary", synth.sedentary, "Mean sedentary fraction f")
      ->capture_default_str();
  c_syn->add_option("--message-rate", synth.message_rate, "Per-decision-time message chance")
      ->capture_default_str();
  c_syn->add_option("--start-date", synth.start_date, "First date")->capture_default_str();
  add_seed(c_syn, synth.seed);
  c_syn->add_option("--out", synth.out, "Step log CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto used = app.get_subcommands();
    if (used.empty()) {
      out << app.help("", CLI::AppFormatMode::All);
    } else {
      out << used.front()->help();
    }
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (c_theory->parsed()) return cmd_theory(theory, out);
    if (c_sim->parsed()) return cmd_sweep(sim, false, out, err);
    if (c_aud->parsed()) return cmd_sweep(aud, true, out, err);
    if (c_ing->parsed()) return cmd_ingest(ingest, out);
    if (c_rep->parsed()) return cmd_replay(rep, out, err);
    if (c_syn->parsed()) return cmd_synth(synth, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace ous
