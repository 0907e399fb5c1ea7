#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "ous/cli.hpp"
#include "ous/harness.hpp"
#include "ous/ingest.hpp"

using namespace ous;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ous_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

// CSV column indices
constexpr int kTau = 4;
constexpr int kWidth = 5;
constexpr int kMeanCr = 7;
constexpr int kMeanBudget = 10;
constexpr int kMeanPenalty = 11;
constexpr int kSentinel = 12;

}  // namespace

TEST(CliTheory, RandomizedTable) {
  const auto r = run({"theory", "--b", "3", "--t", "8,22,100"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.41324"), std::string::npos);
  EXPECT_NE(r.out.find("0.367879"), std::string::npos);
  EXPECT_NE(r.out.find("0.232544"), std::string::npos);
}

TEST(CliTheory, LearningTable) {
  const auto r = run({"theory", "--b", "3", "--u", "8,22,100", "--csv"});
  EXPECT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "symbol,value,b,regime,ratio");
  std::vector<double> ratios;
  while (std::getline(in, line)) ratios.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  ASSERT_EQ(ratios.size(), 3u);
  EXPECT_NEAR(ratios[0], 0.4032091913370931, 1e-12);
  EXPECT_NEAR(ratios[1], 0.36787944117144233, 1e-12);
  EXPECT_NEAR(ratios[2], 0.264674335944481, 1e-12);
}

TEST(CliTheory, RegimeLabel) {
  const auto r = run({"theory", "--b", "3", "--t", "9"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("be < T <= be^2"), std::string::npos);
}

TEST(CliTheory, Errors) {
  EXPECT_EQ(run({"theory", "--t", "9"}).code, kExitConfigError);
  EXPECT_EQ(run({"theory", "--b", "3", "--t", "3"}).code, kExitConfigError);
  EXPECT_EQ(run({"theory", "--b", "3", "--t", "x"}).code, kExitConfigError);
  EXPECT_EQ(run({}).code, kExitConfigError);
  EXPECT_EQ(run({"bogus"}).code, kExitConfigError);
}

TEST(CliHelp, ListsEveryFlag) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--b", "--t", "--u", "--csv", "--config", "--out", "--threads", "--seed",
                           "--n-reps", "--userdays", "--width", "--policies", "--flags", "--in",
                           "--min-probability", "--sedentary"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  const auto sub = run({"replay", "--help"});
  EXPECT_EQ(sub.code, 0);
  EXPECT_NE(sub.out.find("--userdays"), std::string::npos);
}

TEST_F(CliTest, SimulateFigureOneGrid) {
  const auto cfg = write("fig1.json", R"({"T": 8, "b": 3, "experiment": "tau_sweep",
      "policies": ["alg1", "const_bT"], "n_reps": 2000, "master_seed": 1})");
  const auto out = dir_ / "fig1.csv";
  const auto r = run({"simulate", "--config", cfg.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 10 rows to " + out.string()), std::string::npos);
  const auto rows = read_rows(out);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[5][kTau], "3");
  EXPECT_EQ(rows[5][kMeanCr], "0.375");
  EXPECT_EQ(rows[9][kMeanCr], "0.875");
}

TEST_F(CliTest, SimulateIsDeterministic) {
  const auto cfg = write("fig2.json", R"({"T": 22, "b": 3, "experiment": "width_sweep",
      "policies": ["alg2", "const_bU", "seqrts"], "widths": [0, 1, 2, 5, 10, 19],
      "n_reps": 1500})");
  const auto a = dir_ / "a.csv";
  const auto b = dir_ / "b.csv";
  const auto c = dir_ / "c.csv";
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", a.string(), "--seed", "7",
                 "--threads", "1"}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", b.string(), "--seed", "7",
                 "--threads", "3"}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", c.string(), "--seed", "8"}).code,
            0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));
  const auto rows = read_rows(a);
  ASSERT_EQ(rows.size(), 18u);
  EXPECT_EQ(rows[0][kWidth], "0");
  EXPECT_EQ(rows[0][kMeanCr], "1");
}

TEST_F(CliTest, SeedFromEnvironment) {
  const auto cfg = write("s.json", R"({"T": 22, "b": 3, "experiment": "tau_sweep",
      "policies": ["alg1"], "n_reps": 500})");
  const auto a = dir_ / "a.csv";
  const auto b = dir_ / "b.csv";
  ::setenv("OUS_SEED", "12345", 1);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", a.string()}).code, 0);
  ::unsetenv("OUS_SEED");
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", b.string(), "--seed", "12345"})
                .code,
            0);
  EXPECT_EQ(slurp(a), slurp(b));
  ::setenv("OUS_SEED", "nope", 1);
  EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--out", a.string()}).code,
            kExitConfigError);
  ::unsetenv("OUS_SEED");
}

TEST_F(CliTest, FlagOverridesWin) {
  const auto cfg = write("o.json", R"({"T": 8, "b": 3, "experiment": "tau_sweep",
      "policies": ["alg1"], "n_reps": 500})");
  const auto out = dir_ / "o.csv";
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", out.string(), "--T", "22",
                 "--policies", "const_bT", "--n-reps", "3"}).code,
            0);
  const auto rows = read_rows(out);
  ASSERT_EQ(rows.size(), 19u);
  EXPECT_EQ(rows[0][1], "const_bT");
  EXPECT_EQ(rows[0][2], "22");
  EXPECT_EQ(rows[0][6], "3");
}

TEST_F(CliTest, ConfigErrors) {
  const auto bad = write("bad.json", R"({"T": 8, "b": 3, "experiment": "tau_sweep",
      "policies": ["alg9"]})");
  const auto r = run({"simulate", "--config", bad.string(), "--out", (dir_ / "x.csv").string()});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.err.find("policies"), std::string::npos);
  const auto missing =
      run({"simulate", "--config", (dir_ / "none.json").string(), "--out", "x.csv"});
  EXPECT_EQ(missing.code, kExitIoError);
  const auto audit = write("a.json", R"({"T": 8, "b": 3, "experiment": "budget_audit",
      "policies": ["alg1"]})");
  EXPECT_EQ(run({"simulate", "--config", audit.string(), "--out", "x.csv"}).code,
            kExitConfigError);
  const auto good = write("g.json", R"({"T": 8, "b": 3, "experiment": "tau_sweep",
      "policies": ["alg1"], "n_reps": 10})");
  EXPECT_EQ(run({"simulate", "--config", good.string(), "--out", "/nonexistent-dir/x.csv"}).code,
            kExitIoError);
  EXPECT_EQ(run({"simulate", "--config", good.string()}).code, kExitConfigError);
}

TEST_F(CliTest, SkippedWidthWarns) {
  const auto cfg = write("w.json", R"({"T": 8, "b": 3, "experiment": "width_sweep",
      "policies": ["alg2"], "widths": [0, 9], "n_reps": 10})");
  const auto r = run({"simulate", "--config", cfg.string(), "--out", (dir_ / "w.csv").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("sentinel=2"), std::string::npos);
  EXPECT_EQ(read_rows(dir_ / "w.csv")[1][kSentinel], "2");
}

TEST_F(CliTest, AuditExamples) {
  const auto cfg = write("audit.json", R"({"scenarios": [
      {"T": 22, "b": 3, "experiment": "budget_audit", "policies": ["alg1", "const_bT"],
       "n_reps": 20000, "master_seed": 3},
      {"T": 22, "b": 3, "experiment": "budget_audit", "policies": ["alg2"], "widths": [0],
       "n_reps": 100, "master_seed": 3}]})");
  const auto out = dir_ / "audit.csv";
  const auto r = run({"audit", "--config", cfg.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_rows(out);
  ASSERT_EQ(rows.size(), 60u);
  for (const auto& row : rows) {
    const double budget = std::stod(row[kMeanBudget]);
    const double tau = std::stod(row[kTau]);
    if (row[1] == "alg1") EXPECT_LE(budget, 3.15);
    if (row[1] == "const_bT") EXPECT_DOUBLE_EQ(budget, 3 * tau / 22);
    if (row[1] == "alg2") EXPECT_NEAR(budget, 3.0, 1e-12);
  }
  EXPECT_EQ(run({"audit", "--config", cfg.string(), "--out", out.string(), "--experiment",
                 "tau_sweep"}).code,
            kExitConfigError);
}

TEST_F(CliTest, IngestExamples) {
  std::vector<StepLogRow> rows;
  const MinuteStamp start = parse_timestamp("2024-01-01T08:00");
  for (int m = 0; m < 13 * 60; ++m) rows.push_back({"quiet", start + m, 0, false});
  for (int m = 0; m < 13 * 60; ++m) {
    rows.push_back({"walk", start + m, m == 65 ? 200 : 0, false});
  }
  for (int m = 0; m < 13 * 60; ++m) rows.push_back({"msg", start + m, 0, m == 120});
  std::ofstream log(dir_ / "log.csv");
  write_step_log(rows, log);
  log.close();

  const auto out = dir_ / "days.csv";
  const auto r = run({"ingest", "--in", (dir_ / "log.csv").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out),
            "user_id,date,tau_star\nmsg,2024-01-01,132\nquiet,2024-01-01,144\n"
            "walk,2024-01-01,136\n");
  ASSERT_EQ(run({"ingest", "--in", (dir_ / "log.csv").string(), "--out", out.string(),
                 "--flags"}).code,
            0);
  std::ifstream in(out);
  const auto days = read_user_days(in);
  ASSERT_EQ(days.size(), 3u);
  EXPECT_EQ(days[0].flags[12].code(), 3);  // 10:00
  EXPECT_EQ(days[0].flags[13].code(), 2);  // 10:05
}

TEST_F(CliTest, IngestMalformedRow) {
  const auto log = write("bad.csv",
                         "user_id,timestamp,steps,message_flag\n"
                         "u,2024-01-01T09:00,5,0\n"
                         "u,2024-01-01T09:01,5\n");
  const auto r = run({"ingest", "--in", log.string(), "--out", (dir_ / "o.csv").string()});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.err.find("line 3"), std::string::npos);
  EXPECT_EQ(run({"ingest", "--in", (dir_ / "none.csv").string(), "--out", "o.csv"}).code,
            kExitIoError);
}

TEST_F(CliTest, SynthIngestReplayPipeline) {
  const auto log = dir_ / "log.csv";
  const auto days = dir_ / "days.csv";
  const auto out = dir_ / "replay.csv";
  ASSERT_EQ(run({"synth", "--users", "4", "--days", "5", "--sedentary", "0.4", "--seed", "3",
                 "--out", log.string()}).code,
            0);
  ASSERT_EQ(run({"ingest", "--in", log.string(), "--out", days.string()}).code, 0);
  const auto r = run({"replay", "--userdays", days.string(), "--width", "0,30", "--seed", "5",
                      "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("skipped"), std::string::npos);
  const auto rows = read_rows(out);
  ASSERT_EQ(rows.size(), 8u);  // 4 default policies x 2 widths
  EXPECT_EQ(rows[0][0], "replay");
  EXPECT_EQ(rows[0][kTau], "");
  EXPECT_EQ(rows[2][1], "alg2");
  EXPECT_NEAR(std::stod(rows[2][kMeanCr]), 1.0, 1e-12);
  EXPECT_EQ(rows[4][1], "const_bU");
  EXPECT_EQ(std::stod(rows[4][kMeanPenalty]), 0.0);
  EXPECT_EQ(std::stod(rows[5][kMeanPenalty]), 0.0);

  const auto again = dir_ / "again.csv";
  ASSERT_EQ(run({"replay", "--userdays", days.string(), "--width", "0,30", "--seed", "5",
                 "--out", again.string(), "--threads", "2"}).code,
            0);
  EXPECT_EQ(slurp(out), slurp(again));
}

TEST_F(CliTest, ReplaySentinelFlagged) {
  const auto days = write("d.csv", "user_id,date,tau_star\na,2024-01-01,80\nb,2024-01-01,90\n"
                                   "c,2024-01-01,100\nd,2024-01-01,120\n");
  const auto out = dir_ / "r.csv";
  const auto r = run({"replay", "--userdays", days.string(), "--width", "60", "--policies",
                      "seqrts", "--min-probability", "0", "--seed", "1", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_rows(out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][kMeanCr], "-inf");
  EXPECT_EQ(rows[0][kSentinel], "1");
  EXPECT_NE(r.err.find("-inf"), std::string::npos);
}

TEST(CliBinary, ExitCodes) {
  const std::string cli = OUS_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("theory --b 3 --t 8"), 0);
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("simulate --config /nonexistent.json --out /tmp/x.csv"), 3);
  EXPECT_EQ(status("theory"), 2);
}
