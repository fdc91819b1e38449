// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "agentpanel/error.hpp"
#include "agentpanel/scaling_analysis.hpp"
#include "agentpanel/synthetic_lab.hpp"

using namespace agentpanel;

namespace {

const std::vector<SessionRecord>& experiment() {
  static const auto recs = [] {
    ExperimentOptions opt;
    opt.second_run = true;
    return run_synthetic_experiment({}, shipped_pool(), shipped_catalog(), 42, opt);
  }();
  return recs;
}

const SessionGrid& grid_a() {
  static const auto g = build_grid(experiment(), shipped_pool(), shipped_catalog(), "A");
  return g;
}

std::string validation_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ValidationError";
  return {};
}

std::vector<ScoreSample> human_like(double offset, const std::string& prefix) {
  // Five raters on each of four tasks with spread-out scores.
  std::vector<ScoreSample> out;
  const char* tasks[] = {"saas-info-simple", "dev-howto-medium", "ecom-decision-medium",
                         "edu-learning-complex"};
  int k = 0;
  for (const auto* t : tasks) {
    const auto& task = find_task(shipped_catalog(), t);
    for (int i = 0; i < 5; ++i, ++k) {
      const double base = 0.35 + 0.07 * i + 0.013 * (k % 3);
      out.push_back({prefix + std::to_string(k), t, task.domain, base + offset});
    }
  }
  return out;
}

}  // namespace

TEST(Sizes, CanonicalSizesClipToPool) {
  EXPECT_EQ(canonical_sizes(32), (std::vector<int>{1, 2, 3, 4, 5, 8, 12, 16, 24, 32}));
  EXPECT_EQ(canonical_sizes(10), (std::vector<int>{1, 2, 3, 4, 5, 8, 10}));
  EXPECT_EQ(canonical_sizes(1), (std::vector<int>{1}));
}

TEST(Grid, ArrangesByRank) {
  const auto& g = grid_a();
  ASSERT_EQ(g.tasks(), 15u);
  ASSERT_EQ(g.judges(), 32u);
  for (std::size_t t = 0; t < g.tasks(); ++t) {
    const auto ranking = rank_panel(shipped_pool(), find_task(shipped_catalog(), g.task_ids[t]));
    for (std::size_t r = 0; r < g.judges(); ++r) {
      const auto* rec = g.cell[t][r];
      ASSERT_EQ(rec->persona_id, ranking.entries[r].persona_id);
      EXPECT_EQ(rec->task_id, g.task_ids[t]);
      EXPECT_EQ(rec->run_label, "A");
      EXPECT_DOUBLE_EQ(g.by_rank(t, r), rec->final_score);
    }
  }
}

TEST(Grid, ReportsMissingAndFailedCells) {
  std::vector<SessionRecord> recs;
  for (const auto& r : experiment()) {
    if (r.run_label == "A") recs.push_back(r);
  }
  auto gap = recs;
  gap.erase(gap.begin() + 17);
  auto msg = validation_message([&] { build_grid(gap, shipped_pool(), shipped_catalog()); });
  EXPECT_NE(msg.find("missing"), std::string::npos) << msg;

  auto failed = recs;
  failed[3].failed = true;
  msg = validation_message([&] { build_grid(failed, shipped_pool(), shipped_catalog()); });
  EXPECT_NE(msg.find("failed"), std::string::npos) << msg;
  EXPECT_THROW(build_grid(recs, shipped_pool(), shipped_catalog(), "Z"), ValidationError);
}

TEST(IccCurve, ProjectionMatchesFullMatrixAtK) {
  const auto sizes = canonical_sizes(32);
  BootstrapOptions boot;
  boot.resamples = 200;
  boot.seed = 1;
  const auto report = icc_curve(grid_a(), sizes, boot);
  const auto& v = report.curve.values;
  ASSERT_EQ(v.size(), sizes.size());
  EXPECT_NEAR(v.back(), report.full.stat.value, 1e-12);
  const auto& c = report.full.components;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double n = sizes[i];
    EXPECT_NEAR(v[i], c.task / (c.task + (c.judge + c.residual) / n), 1e-12);
    if (i > 0) EXPECT_GE(v[i], v[i - 1]);
    EXPECT_LE(report.ci_low[i], v[i] + 1e-12);
    EXPECT_GE(report.ci_high[i], v[i] - 1e-12);
    EXPECT_NEAR(report.curve.saturation[i], v[i] / v.back(), 1e-12);
  }
  EXPECT_FALSE(report.nested_icc.front().has_value());
  ASSERT_TRUE(report.nested_icc.back().has_value());
  EXPECT_EQ(report.curve.fits.size(), 4u);
  for (std::size_t i = 1; i < report.curve.fits.size(); ++i) {
    EXPECT_LE(report.curve.fits[i - 1].aic, report.curve.fits[i].aic);
  }
}

TEST(Discovery, NestedPanelsAndBand) {
  HashedBagEmbedder embedder;
  const GridCorpus corpus(grid_a(), embedder);
  const auto sizes = canonical_sizes(32);
  const auto items1 = corpus.panel_items(1);
  const auto items2 = corpus.panel_items(2);
  EXPECT_TRUE(std::includes(items2.begin(), items2.end(), items1.begin(), items1.end()));
  EXPECT_EQ(corpus.panel_items(32).size(), corpus.corpus().items().size());
  std::size_t per_task = 0;
  for (std::size_t t = 0; t < corpus.tasks(); ++t) per_task += corpus.panel_items(4, t).size();
  EXPECT_EQ(per_task, corpus.panel_items(4).size());

  const auto band = default_sweep_thetas();
  const auto d = discovery_curve(corpus, sizes, kDefaultTheta, band);
  ASSERT_EQ(d.curve.values.size(), sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    EXPECT_LE(d.curve.values[i], static_cast<double>(d.raw_insights[i]));
    EXPECT_LE(d.band_low[i], d.curve.values[i]);
    EXPECT_GE(d.band_high[i], d.curve.values[i]);
    if (i > 0) EXPECT_GE(d.raw_insights[i], d.raw_insights[i - 1]);
  }
  ASSERT_EQ(d.curve.fits.size(), 1u);
  EXPECT_EQ(d.curve.fits[0].family, ModelFamily::Power);
  EXPECT_LE(d.exponent_low, d.curve.fits[0].b + 1e-12);
  EXPECT_GE(d.exponent_high, d.curve.fits[0].b - 1e-12);
}

TEST(Dissociation, RatiosAndGap) {
  ScalingCurve icc, disc;
  icc.sizes = disc.sizes = {1, 8, 32};
  icc.values = {0.5, 0.9, 1.0};
  disc.values = {10.0, 40.0, 100.0};
  const auto d = dissociation_report(icc, disc);
  EXPECT_NEAR(d.gap_at(8), 0.9 - 0.4, 1e-15);
  EXPECT_NEAR(d.gap_at(1), 0.5 - 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(d.gap_at(32), 0.0);
  EXPECT_THROW(d.gap_at(7), ValidationError);
  disc.sizes = {1, 8, 16};
  EXPECT_THROW(dissociation_report(icc, disc), ValidationError);
}

TEST(Stability, IdenticalAndIndependentRuns) {
  const auto sizes = canonical_sizes(32);
  const auto same = stability_analysis(grid_a(), grid_a(), sizes);
  EXPECT_DOUBLE_EQ(same.mean_r, 1.0);
  for (const double d : same.delta) EXPECT_DOUBLE_EQ(d, 0.0);

  const auto b = build_grid(experiment(), shipped_pool(), shipped_catalog(), "B");
  const auto s = stability_analysis(grid_a(), b, sizes);
  EXPECT_EQ(s.task_r.size(), 15u);
  EXPECT_LT(std::abs(s.mean_r), 0.2);
  EXPECT_LT(s.delta.back(), 0.05);
  EXPECT_GE(s.delta.front(), s.delta.back());
}

TEST(Expertise, LevelsAndDirection) {
  std::vector<SessionRecord> a;
  for (const auto& r : experiment()) {
    if (r.run_label == "A") a.push_back(r);
  }
  SyntheticBlindScorer scorer;
  std::vector<double> blind;
  for (const auto& r : a) blind.push_back(blind_rescore(r, scorer));
  HashedBagEmbedder embedder;
  const auto report = expertise_analysis(a, blind, shipped_pool(), shipped_catalog(), embedder);
  ASSERT_EQ(report.levels.size(), 3u);
  std::size_t total = 0;
  for (const auto& row : report.levels) total += row.sessions;
  EXPECT_EQ(total, a.size());
  ASSERT_TRUE(report.d_realtime.has_value());
  EXPECT_LT(report.d_realtime->value, 0.0);  // experts score lower in real time
  EXPECT_EQ(report.gaps.size(), 3u);
  const std::vector<double> short_blind(3, 0.5);
  EXPECT_THROW(expertise_analysis(a, short_blind, shipped_pool(), shipped_catalog(), embedder),
               ValidationError);
}

TEST(Ablation, HandRows) {
  std::vector<SessionRecord> recs;
  auto add = [&](Condition c, int persona, double score) {
    SessionRecord r;
    r.session_id = "x" + std::to_string(recs.size());
    r.run_label = "ablation";
    r.task_id = "saas-info-simple";
    r.persona_id = persona;
    r.condition = c;
    r.final_score = score;
    recs.push_back(r);
  };
  add(Condition::Structured, 1, 0.4);
  add(Condition::Structured, 2, 0.6);
  add(Condition::None, 1, 0.5);
  const auto report = ablation_analysis(recs, shipped_pool());
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].condition, Condition::Structured);
  EXPECT_DOUBLE_EQ(report.rows[0].mean_score, 0.5);
  EXPECT_NEAR(report.rows[0].score_sd, std::sqrt(0.02), 1e-15);
  EXPECT_EQ(report.rows[1].score_sd, 0.0);
  EXPECT_EQ(report.warnings.size(), 2u);

  recs[2].run_label = "ablation-r3";
  recs[1].run_label = "A";
  EXPECT_EQ(ablation_sessions(recs).size(), 2u);
}

TEST(HumanCsv, ParsesAndRejects) {
  const auto& cat = shipped_catalog();
  std::istringstream ok(
      "participant_id,task_id,domain,score,turns,expertise\n"
      "h1,saas-info-simple,SaaS/IT,0.7,3,0.5\n"
      "\n"
      "h2,dev-howto-medium,Developer,0.25,6,\n");
  const auto rows = load_human_csv(ok, cat);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].domain, Domain::SaasIt);
  EXPECT_EQ(*rows[0].expertise, 0.5);
  EXPECT_FALSE(rows[1].expertise.has_value());

  auto fails = [&](const std::string& body) {
    std::istringstream in("participant_id,task_id,domain,score,turns\n" + body);
    return load_human_csv(in, cat);
  };
  EXPECT_THROW(fails("h1,saas-info-simple,SaaS/IT,1.2,3\n"), RangeError);
  EXPECT_THROW(fails("h1,nope,SaaS/IT,0.5,3\n"), ValidationError);
  EXPECT_THROW(fails("h1,saas-info-simple,Developer,0.5,3\n"), ValidationError);
  EXPECT_THROW(fails("h1,saas-info-simple,SaaS/IT,0.5x,3\n"), ValidationError);
  EXPECT_THROW(fails("h1,saas-info-simple,SaaS/IT,0.5\n"), ValidationError);
  try {
    fails("h1,saas-info-simple,SaaS/IT,0.5,3\nh2,nope,SaaS/IT,0.5,3\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream no_score("participant_id,task_id,domain,turns\n");
  EXPECT_THROW(load_human_csv(no_score, cat), ValidationError);
  std::istringstream empty("");
  EXPECT_THROW(load_human_csv(empty, cat), ValidationError);
}

TEST(Turing, ClonedScoresAreIndistinguishable) {
  const auto humans = human_like(0.0, "p");
  const auto report = turing_analysis(humans, humans);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_DOUBLE_EQ(report.mean_hh, report.mean_ha);
  EXPECT_EQ(report.paired.value, 0.0);
  EXPECT_EQ(report.paired.p_value, 1.0);
  EXPECT_NEAR(report.cohen_d.value, 0.0, 1e-12);
}

TEST(Turing, ShiftedAgentsAreDetected) {
  const auto humans = human_like(0.0, "p");
  const auto agents = human_like(0.2, "a");
  const auto report = turing_analysis(humans, agents);
  EXPECT_GT(report.mean_ha, report.mean_hh);
  EXPECT_LT(report.paired.p_value, 0.01);
  EXPECT_LT(report.cohen_d.value, 0.0);
  for (const auto& row : report.rows) {
    ASSERT_TRUE(row.welch.has_value());
    EXPECT_NEAR(row.p_bonferroni, std::min(1.0, row.welch->p_value * 4.0), 1e-15);
  }
}

TEST(Turing, ExcludesThinTasks) {
  auto humans = human_like(0.0, "p");
  humans.push_back({"solo", "health-info-medium", Domain::Healthcare, 0.5});
  const auto report = turing_analysis(humans, human_like(0.1, "a"));
  EXPECT_EQ(report.excluded_tasks, (std::vector<std::string>{"health-info-medium"}));
  const std::vector<ScoreSample> one_task(humans.begin(), humans.begin() + 5);
  EXPECT_THROW(turing_analysis(one_task, one_task), ValidationError);
}

TEST(Personality, ReportsThreeHypotheses) {
  std::vector<SessionRecord> a;
  for (const auto& r : experiment()) {
    if (r.run_label == "A") a.push_back(r);
  }
  const auto report = personality_emotion_validation(a, shipped_pool());
  EXPECT_EQ(report.agents, 32u);
  ASSERT_EQ(report.rows.size(), 3u);
  for (const auto& row : report.rows) {
    EXPECT_GE(row.result.value, -1.0);
    EXPECT_LE(row.result.value, 1.0);
    EXPECT_EQ(row.confirmed, row.result.value > 0.0 && row.result.p_value < 0.05);
  }
  const std::vector<SessionRecord> two(a.begin(), a.begin() + 2);
  EXPECT_THROW(personality_emotion_validation(two, shipped_pool()), ValidationError);
}
