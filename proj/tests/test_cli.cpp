// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "agentpanel/cli.hpp"
#include "agentpanel/session_store.hpp"
#include "test_support.hpp"

using namespace agentpanel;
using testing_support::read_file;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli_dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// One simulated store shared by the read-only tests.
const std::filesystem::path& shared_store() {
  static TempDir dir;
  static const auto path = [] {
    const auto p = dir / "sessions.jsonl";
    const auto r = run({"simulate", "--seed", "42", "--out", p.string(), "--second-run",
                        "--ablation"});
    if (r.code != kExitOk) throw std::runtime_error(r.err);
    return p;
  }();
  return path;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  r = run({"simulate", "--out", "x.jsonl", "--bogus"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(run({"simulate"}).code, kExitUsage);
  EXPECT_EQ(run({"analyze", "--store", "s.jsonl", "--out", "o", "--theta", "0.9"}).code,
            kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
}

TEST(Cli, MissingInputExitsOne) {
  TempDir dir;
  const auto r = run({"analyze", "--store", (dir / "absent.jsonl").string(), "--out",
                      (dir / "o").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("absent.jsonl"), std::string::npos) << r.err;
  EXPECT_EQ(run({"run", "--config", (dir / "none.json").string(), "--out",
                 (dir / "s.jsonl").string()})
                .code,
            kExitFailure);
}

TEST(Cli, SimulateIsByteReproducible) {
  TempDir dir;
  const auto a = dir / "a.jsonl";
  const auto b = dir / "b.jsonl";
  ASSERT_EQ(run({"simulate", "--seed", "9", "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(run({"simulate", "--seed", "9", "--out", b.string()}).code, kExitOk);
  const auto bytes = read_file(a);
  EXPECT_EQ(bytes, read_file(b));
  EXPECT_EQ(load_sessions(a).size(), 480u);
  ASSERT_EQ(run({"simulate", "--seed", "10", "--out", b.string()}).code, kExitOk);
  EXPECT_NE(bytes, read_file(b));
}

TEST(Cli, AnalyzeWritesArtifactsDeterministically) {
  TempDir dir;
  auto analyze = [&](const std::string& name) {
    const auto out = dir / name;
    const auto r = run({"analyze", "--store", shared_store().string(), "--out", out.string(),
                        "--seed", "3", "--bootstrap", "100"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("ICC"), std::string::npos);
    return out;
  };
  const auto a = analyze("a");
  const auto b = analyze("b");
  for (const auto* f : {"icc_curve.csv", "discovery_curve.csv", "threshold_sweep.csv",
                        "ablation.csv", "decomposition.json", "analysis.json"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
  EXPECT_FALSE(std::filesystem::exists(a / "summary.md"));
  EXPECT_EQ(read_file(a / "icc_curve.csv").substr(0, 9), "size,icc,");

  const auto manifest = nlohmann::json::parse(read_file(a / "manifest.json"));
  EXPECT_EQ(manifest["command"], "analyze");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["run_label"], "A");
  const auto decomposition = nlohmann::json::parse(read_file(a / "decomposition.json"));
  EXPECT_EQ(decomposition["seed"], 3);
}

TEST(Cli, ReportAddsSummaryAndTuring) {
  TempDir dir;
  const auto store = load_sessions(shared_store());
  std::string csv = "participant_id,task_id,domain,score,turns\n";
  const auto& cat = shipped_catalog();
  for (const auto& r : store) {
    if (r.run_label != "A") continue;
    csv += r.session_id + "," + r.task_id + "," +
           std::string(to_string(find_task(cat, r.task_id).domain)) + "," +
           nlohmann::json(r.final_score).dump() + "," + std::to_string(r.turns.size()) + "\n";
  }
  write_file(dir / "human.csv", csv);

  auto r = run({"turing", "--store", shared_store().string(), "--human",
                (dir / "human.csv").string(), "--out", (dir / "t").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("paired t(14) = 0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("p = 1"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "t" / "turing.csv"));

  r = run({"report", "--store", shared_store().string(), "--out", (dir / "rep").string(),
           "--bootstrap", "50", "--human", (dir / "human.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto md = read_file(dir / "rep" / "summary.md");
  EXPECT_NE(md.find("## Scoring reliability"), std::string::npos);
  EXPECT_NE(md.find("## Human vs agent"), std::string::npos);
  EXPECT_NE(md.find("## Stability"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "rep" / "turing.csv"));
}

TEST(Cli, DedupAndAblate) {
  TempDir dir;
  auto r = run({"dedup", "--store", shared_store().string(), "--thetas", "0.5,0.65,0.8", "--out",
                dir.path().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "threshold_sweep.csv"));
  EXPECT_EQ(run({"dedup", "--store", shared_store().string(), "--thetas", "0.9"}).code,
            kExitFailure);

  r = run({"ablate", "--store", shared_store().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("structured"), std::string::npos);
  const auto plain = dir / "plain.jsonl";
  ASSERT_EQ(run({"simulate", "--seed", "1", "--out", plain.string()}).code, kExitOk);
  EXPECT_EQ(run({"ablate", "--store", plain.string()}).code, kExitFailure);
}

TEST(Cli, ScriptedRunResumes) {
  TempDir dir;
  write_file(dir / "target.json", R"({"responses": {"saas-info-simple": ["Use the reset link."]}})");
  write_file(dir / "judge.json", R"({"steps": {"saas-info-simple": [
      {"message": "How do I reset?", "evaluation": "```diary\nq: 0.8\ngoal_met: true\n```"}]}})");
  write_file(dir / "config.json", R"({"backend": "scripted", "target_script": "target.json",
      "judge_script": "judge.json", "panel_sizes": [1, 2, 3], "run_label": "S"})");
  const auto store = dir / "s.jsonl";
  auto r = run({"run", "--config", (dir / "config.json").string(), "--out", store.string(),
                "--tasks", "saas-info-simple", "--workers", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto first = load_sessions(store);
  ASSERT_EQ(first.size(), 3u);
  for (const auto& s : first) EXPECT_DOUBLE_EQ(s.final_score, 0.8);

  r = run({"run", "--config", (dir / "config.json").string(), "--out", store.string(), "--tasks",
           "saas-info-simple"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("skipped 3"), std::string::npos) << r.out;
  EXPECT_EQ(load_sessions(store).size(), 3u);

  // A task without a script fails its sessions, which are not stored.
  r = run({"run", "--config", (dir / "config.json").string(), "--out", store.string(), "--tasks",
           "dev-info-simple", "--panel", "1"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_EQ(load_sessions(store).size(), 3u);
}
