// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agentpanel/dedup_engine.hpp"
#include "agentpanel/persona_panel.hpp"
#include "agentpanel/session_runtime.hpp"
#include "agentpanel/stats_engine.hpp"

namespace agentpanel {

inline constexpr int kCanonicalSizes[] = {1, 2, 3, 4, 5, 8, 12, 16, 24, 32};

/// Canonical sizes not exceeding the pool, plus the pool size itself.
std::vector<int> canonical_sizes(std::size_t pool_size);

/// One run's complete task x judge grid.
struct SessionGrid {
  std::vector<std::string> task_ids;                   // catalog order
  std::vector<int> judge_ids;                          // pool order
  std::vector<std::vector<int>> ranking;               // per task: persona ids by fitness
  ScoreMatrix by_judge;                                // tasks x judges (pool order)
  ScoreMatrix by_rank;                                 // tasks x rank position
  std::vector<std::vector<const SessionRecord*>> cell;  // [task][rank position]

  std::size_t tasks() const { return task_ids.size(); }
  std::size_t judges() const { return judge_ids.size(); }
};

/// Selects the (run_label, condition) sessions and arranges them by task and
/// per-task panel rank. Throws ValidationError listing missing or failed
/// cells when the grid is incomplete. `records` must outlive the grid.
SessionGrid build_grid(std::span<const SessionRecord> records, std::span<const PersonaSpec> pool,
                       std::span<const TaskSpec> catalog, std::string_view run_label = "A",
                       Condition condition = Condition::Structured);

/// Per-size values with saturation ratios and fitted models.
struct ScalingCurve {
  std::string metric;
  std::vector<int> sizes;
  std::vector<double> values;
  std::vector<double> saturation;  // value / value at the largest size (0 when that is 0)
  std::vector<ModelFit> fits;
};

struct IccCurveReport {
  ScalingCurve curve;  // reliability of an N-judge panel mean
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::optional<double>> nested_icc;  // ICC(2,N) of the per-task top-N submatrix
  IccResult full;                                 // ICC(2,k) of the full matrix
};

/// Reliability curve. The value at N is sigma_tau / (sigma_tau + (sigma_pi +
/// sigma_eps) / N) from the full-matrix components, which equals the full
/// ICC(2,k) at N = k. CIs come from the same task bootstrap. All four model
/// families are fit and AIC-ranked.
IccCurveReport icc_curve(const SessionGrid& grid, std::span<const int> sizes,
                         const BootstrapOptions& bootstrap = {});

/// Insight corpus of every session in a grid with panel membership.
class GridCorpus {
 public:
  GridCorpus(const SessionGrid& grid, Embedder& embedder, bool include_strengths = false);

  const InsightCorpus& corpus() const { return *corpus_; }
  /// Items from sessions at rank positions < n, across all tasks or one.
  std::vector<std::size_t> panel_items(std::size_t n, std::optional<std::size_t> task = {}) const;
  std::size_t tasks() const { return first_item_.size(); }

 private:
  std::optional<InsightCorpus> corpus_;
  // [task][rank] -> [begin, end) item range
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> first_item_;
};

struct DiscoveryCurveReport {
  ScalingCurve curve;  // unique findings at theta, fits = {power law}
  double theta = kDefaultTheta;
  std::vector<std::size_t> raw_insights;
  std::vector<double> band_low;   // min unique count across the theta band
  std::vector<double> band_high;  // max unique count across the theta band
  double exponent_low = 0.0;
  double exponent_high = 0.0;
  std::vector<double> high_impact_share;
  std::vector<double> marginal_per_judge;  // new findings per added judge
  std::vector<SweepRow> band;
};

/// Unique findings for nested panels pooled across tasks (or one task).
DiscoveryCurveReport discovery_curve(const GridCorpus& corpus, std::span<const int> sizes,
                                     double theta = kDefaultTheta,
                                     std::span<const double> band_thetas = {},
                                     std::optional<std::size_t> task = {});

/// Threshold sweep over the grid's nested panels.
std::vector<SweepRow> grid_threshold_sweep(const GridCorpus& corpus, std::span<const int> sizes,
                                           std::span<const double> thetas);

struct DissociationReport {
  std::vector<int> sizes;
  std::vector<double> score_ratio;
  std::vector<double> discovery_ratio;
  std::vector<double> gap;  // score ratio - discovery ratio
  std::vector<double> severity_share;

  /// Gap at a given size; throws ValidationError when the size is absent.
  double gap_at(int size) const;
};

DissociationReport dissociation_report(const ScalingCurve& icc, const ScalingCurve& discovery,
                                       std::span<const double> severity_share = {});

struct ExpertiseRow {
  Expertise level = Expertise::Expert;
  std::size_t sessions = 0;
  double realtime_mean = 0.0;
  double posthoc_mean = 0.0;
  std::size_t distinct_findings = 0;    // deduplicated issue clusters touched
  std::size_t distinct_categories = 0;  // categories among those clusters
  double high_impact_share = 0.0;       // of those clusters
};

struct ComplexityGap {
  Complexity complexity = Complexity::Simple;
  double realtime_mean = 0.0;
  double posthoc_mean = 0.0;
  double gap = 0.0;  // post-hoc - real-time
};

struct ExpertiseReport {
  std::vector<ExpertiseRow> levels;
  std::optional<StatResult> d_realtime;  // expert - novice
  std::optional<StatResult> d_posthoc;
  std::optional<StatResult> omega_realtime;  // expertise as a 3-level factor
  std::optional<double> breadth_ratio;       // expert / novice distinct findings
  std::vector<ComplexityGap> gaps;
  std::vector<std::string> warnings;
};

/// `blind_scores[i]` is the post-hoc score of `sessions[i]`.
ExpertiseReport expertise_analysis(std::span<const SessionRecord> sessions,
                                   std::span<const double> blind_scores,
                                   std::span<const PersonaSpec> pool,
                                   std::span<const TaskSpec> catalog, Embedder& embedder,
                                   double theta = kDefaultTheta);

struct StabilityReport {
  std::vector<std::string> task_ids;
  std::vector<std::optional<double>> task_r;  // judge-score correlation between runs per task
  double mean_r = 0.0;
  std::vector<int> sizes;
  std::vector<double> delta;  // mean over tasks of |panel mean A - panel mean B|
  std::vector<std::string> warnings;
};

StabilityReport stability_analysis(const SessionGrid& a, const SessionGrid& b,
                                   std::span<const int> sizes);

struct AblationRow {
  Condition condition = Condition::Structured;
  std::size_t sessions = 0;
  double mean_score = 0.0;
  double score_sd = 0.0;
  double insights_per_session = 0.0;
  std::optional<StatResult> expertise_d;  // expert - novice, when both have 2+ sessions
};

struct AblationReport {
  std::vector<AblationRow> rows;  // condition order, missing conditions omitted
  std::vector<std::string> warnings;
};

AblationReport ablation_analysis(std::span<const SessionRecord> sessions,
                                 std::span<const PersonaSpec> pool);

/// Sessions of the ablation grid: run label "ablation" or "ablation-r<k>".
std::vector<SessionRecord> ablation_sessions(std::span<const SessionRecord> records);

struct HumanSessionRecord {
  std::string participant_id;
  std::string task_id;
  Domain domain = Domain::SaasIt;
  double score = 0.0;
  int turns = 0;
  std::optional<double> expertise;
};

/// Header: participant_id,task_id,domain,score,turns[,expertise]. Rows with
/// scores outside [0,1] or unknown task ids are rejected with a line number.
std::vector<HumanSessionRecord> load_human_csv(std::istream& in, std::span<const TaskSpec> catalog);
std::vector<HumanSessionRecord> load_human_csv_file(const std::filesystem::path& path,
                                                    std::span<const TaskSpec> catalog);

/// A scored session of either group.
struct ScoreSample {
  std::string id;
  std::string task_id;
  Domain domain = Domain::SaasIt;
  double score = 0.0;
};

std::vector<ScoreSample> to_samples(std::span<const HumanSessionRecord> humans);
std::vector<ScoreSample> to_samples(std::span<const SessionRecord> sessions,
                                    std::span<const TaskSpec> catalog);

struct TuringTaskRow {
  std::string task_id;
  Domain domain = Domain::SaasIt;
  std::size_t humans = 0;
  std::size_t agents = 0;
  double mean_hh = 0.0;  // mean |H-H| over distinct human pairs
  double mean_ha = 0.0;  // mean |H-A| over human x agent pairs
  std::optional<StatResult> welch;  // human - agent
  double p_bonferroni = 1.0;
};

struct TuringReport {
  std::vector<TuringTaskRow> rows;
  std::vector<std::string> excluded_tasks;  // fewer than 2 humans or no agents
  double mean_hh = 0.0;
  double mean_ha = 0.0;
  StatResult paired;  // over tasks, diff = |H-A| - |H-H|
  StatResult cohen_d;  // human - agent over all scores
  std::vector<std::pair<Domain, StatResult>> ks;
};

/// Pairs sharing an id (the same session seen from both sides) are skipped.
TuringReport turing_analysis(std::span<const ScoreSample> humans,
                             std::span<const ScoreSample> agents);

struct TraitCorrelation {
  std::string hypothesis;
  StatResult result;
  bool confirmed = false;  // positive and p < 0.05
};

struct PersonalityReport {
  std::size_t agents = 0;
  std::vector<TraitCorrelation> rows;
  std::optional<StatResult> frustration_goal;  // Spearman across sessions
  std::vector<std::string> warnings;
};

PersonalityReport personality_emotion_validation(std::span<const SessionRecord> sessions,
                                                 std::span<const PersonaSpec> pool);

}  // namespace agentpanel
