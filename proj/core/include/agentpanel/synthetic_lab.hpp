// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "agentpanel/persona_panel.hpp"
#include "agentpanel/rng.hpp"
#include "agentpanel/session_runtime.hpp"

namespace agentpanel {

/// Calibration knobs of the generative model. Index order of the arrays
/// follows the enums: Category, Severity, Complexity, Domain, Expertise.
struct SyntheticWorldConfig {
  int finding_count = 200;                 // F
  double zipf_exponent = 1.1;              // s
  double detection_scale = 0.5;            // c
  std::array<double, 5> category_weights = {0.2, 0.2, 0.2, 0.2, 0.2};
  double high_severity_probability = 0.53;  // remainder split evenly low/medium
  std::array<double, 3> severity_weights = {0.03, 0.06, 0.12};  // q penalty per finding
  std::array<double, 3> base_quality = {0.85, 0.80, 0.70};
  std::array<double, 5> domain_offsets = {0.04, -0.03, 0.0, 0.02, -0.05};
  double sigma_res = 0.09;    // per-session path effect (judge x task)
  double sigma_turn = 0.05;   // per-turn jitter
  double sigma_judge = 0.005;  // per-judge bias
  double affinity_spread = 0.0;  // sd of per-judge detection multiplier around 1
  std::array<double, 3> breadth = {1.0, 0.6, 0.35};
  double expert_penalty = 0.02;  // h
  double paraphrase_rate = 0.15;
  double remention_probability = 0.2;
  double strength_probability = 0.5;
  double strength_threshold = 0.8;
  double goal_threshold = 0.7;
  double min_turn_fraction = 0.4;  // planned turns uniform in [ceil(f cap), cap]
  double ablation_noise_scale = 1.8;
  double ablation_breadth = 0.6;  // breadth when persona gating is muted
  double head_fraction = 0.1;     // zone cutoffs as fractions of F
  double torso_fraction = 0.4;

  /// Throws RangeError naming the offending field.
  void validate() const;
};

enum class FindingZone { Head, Torso, Tail };
std::string_view to_string(FindingZone z);

struct SyntheticFinding {
  int rank = 1;             // 1-based, most common first
  double weight = 1.0;      // rank^(-s)
  double popularity = 0.0;  // weight / sum of weights
  Category category = Category::Functionality;
  Severity severity = Severity::Low;
  std::string text;  // canonical phrasing
};

struct SyntheticWorld {
  SyntheticWorldConfig config;
  std::uint64_t seed = 0;
  std::vector<SyntheticFinding> findings;
  std::map<std::string, double> task_quality;  // base + domain offset per task id
  std::map<int, double> judge_bias;
  std::map<int, double> judge_affinity;

  FindingZone zone_of(int rank) const;
};

/// Deterministic in (config, seed, pool, catalog).
SyntheticWorld gen_world(const SyntheticWorldConfig& config, std::uint64_t seed,
                         std::span<const PersonaSpec> pool = shipped_pool(),
                         std::span<const TaskSpec> catalog = shipped_catalog());

/// Detection probability of a finding for a judge of the given breadth.
double detection_probability(const SyntheticWorld& world, int rank, double breadth);

/// Canonical text with filler words inserted at the configured rate.
std::string paraphrase(const std::string& text, double rate, Rng& rng);

/// Judge that follows a pre-drawn plan: planned turn count, detected
/// findings with their turns, a session path effect.
class SyntheticJudge final : public JudgeBackend {
 public:
  SyntheticJudge(const SyntheticWorld& world, const PersonaSpec& persona, const TaskSpec& task,
                 Condition condition, std::uint64_t seed);

  std::string compose_message(const JudgeContext& context) override;
  JudgeEvaluation evaluate(const JudgeContext& context, std::string_view response) override;
  std::string id() const override { return "synthetic-judge"; }

  int planned_turns() const { return planned_turns_; }
  /// Ranks of detected findings, ascending.
  std::vector<int> detected() const;

 private:
  const SyntheticWorld& world_;
  const TaskSpec& task_;
  Rng rng_;
  int planned_turns_ = 1;
  double base_ = 0.0;  // task quality + bias + path - expert penalty
  double jitter_sd_ = 0.0;
  std::map<int, std::vector<int>> by_turn_;  // turn -> detected ranks
  std::vector<int> mentioned_;
  double q_sum_ = 0.0;
};

/// Echo-style target; its text does not influence synthetic scores.
class SyntheticTarget final : public TargetClient {
 public:
  std::string respond(const TargetRequest& request) override;
  std::string id() const override { return "synthetic-target"; }
};

/// Holistic transcript scorer: starts near the ceiling and deducts for turns
/// where the user reports an unresolved problem and for conversation length.
class SyntheticBlindScorer final : public TranscriptScorer {
 public:
  double score(std::span<const ConversationTurn> transcript) override;
};

/// Marker phrase the synthetic judge uses to report an unresolved problem.
inline constexpr std::string_view kUnresolvedMarker = "did not resolve it";

SessionRecord synth_session(const SyntheticWorld& world, const PersonaSpec& persona,
                            const TaskSpec& task, Condition condition, std::uint64_t seed,
                            const std::string& run_label = "A");

/// Per-session seed from the root seed and the session key.
std::uint64_t session_seed(std::uint64_t root, std::string_view run_label,
                           std::string_view task_id, int persona_id, Condition condition);

struct ExperimentOptions {
  std::string run_label = "A";
  bool second_run = false;  // adds run "B" over the same grid
  std::string second_label = "B";
  bool ablation = false;    // adds the four-condition grid
  std::vector<std::string> ablation_tasks = {"saas-info-simple", "saas-troubleshoot-medium",
                                             "saas-decision-complex"};
  std::size_t ablation_panel = 8;
};

/// Full persona x task grid under the structured condition, optionally a
/// second run and the ablation grid. Records come out grid-ordered (run,
/// task, persona) and are byte-identical for identical inputs.
///
/// Ablation: per task the top-N panel under structured, simple and none,
/// plus the top-1 persona repeated N times (run labels "<label>-r1"...)
/// under the repeated condition. Non-structured conditions widen the noise;
/// simple and none also mute persona gating.
std::vector<SessionRecord> run_synthetic_experiment(const SyntheticWorldConfig& config,
                                                    std::span<const PersonaSpec> pool,
                                                    std::span<const TaskSpec> catalog,
                                                    std::uint64_t seed,
                                                    const ExperimentOptions& options = {});

}  // namespace agentpanel
