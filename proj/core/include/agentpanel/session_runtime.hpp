// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agentpanel/emotion_engine.hpp"
#include "agentpanel/persona_panel.hpp"

namespace agentpanel {

enum class Category { Functionality, Accuracy, Helpfulness, Clarity, Safety };
enum class Severity { Low, Medium, High };
enum class Polarity { Issue, Strength };
enum class Condition { Structured, Simple, None, Repeated };
enum class Termination { MaxTurns, PatienceExhausted, GoalMet };

inline constexpr Category kAllCategories[] = {Category::Functionality, Category::Accuracy,
                                              Category::Helpfulness, Category::Clarity,
                                              Category::Safety};
inline constexpr Condition kAllConditions[] = {Condition::Structured, Condition::Simple,
                                               Condition::None, Condition::Repeated};

std::string_view to_string(Category c);
std::string_view to_string(Severity s);
std::string_view to_string(Polarity p);
std::string_view to_string(Condition c);
std::string_view to_string(Termination t);
Category parse_category(std::string_view name);
Severity parse_severity(std::string_view name);
Polarity parse_polarity(std::string_view name);
Condition parse_condition(std::string_view name);
Termination parse_termination(std::string_view name);

struct Insight {
  std::string text;
  Category category = Category::Functionality;
  Severity severity = Severity::Low;
  Polarity polarity = Polarity::Issue;

  friend bool operator==(const Insight&, const Insight&) = default;
};

struct ConversationTurn {
  int index = 0;  // 1-based
  std::string judge_message;
  std::string target_response;

  friend bool operator==(const ConversationTurn&, const ConversationTurn&) = default;
};

/// Private per-turn evaluation; never shown to the target.
struct DiaryEntry {
  int turn = 0;
  double q = 0.0;
  std::string rationale;
  std::vector<Insight> insights;
  EmotionalState emotion;  // state after this turn's update
};

struct SessionRecord {
  std::string session_id;
  std::string task_id;
  int persona_id = 0;
  std::string run_label = "A";
  Condition condition = Condition::Structured;
  std::vector<ConversationTurn> turns;
  std::vector<DiaryEntry> diary;
  EmotionTrajectory trajectory;
  double final_score = 0.0;
  bool goal_achieved = false;
  Termination termination = Termination::MaxTurns;
  std::uint64_t seed = 0;
  std::string judge_backend;
  std::string target_backend;
  bool failed = false;
  std::string failure_reason;
};

/// Run label of the four-condition ablation grid; repeated-persona sessions
/// use "<label>-r1", "<label>-r2", ...
inline constexpr std::string_view kAblationLabel = "ablation";

/// Canonical session id: "<run>/<task>/p<persona>/<condition>".
std::string make_session_id(std::string_view run_label, std::string_view task_id,
                            int persona_id, Condition condition);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// What a target sees: the visible conversation and nothing else.
struct TargetRequest {
  std::string task_id;
  int turn = 0;
  std::vector<ChatMessage> history;  // ends with the judge's latest message
};

class TargetClient {
 public:
  virtual ~TargetClient() = default;
  virtual std::string respond(const TargetRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Everything the judge remembers about the session so far.
struct SessionMemory {
  std::vector<ConversationTurn> turns;
  std::vector<DiaryEntry> diary;
  EmotionTrajectory trajectory;
};

struct JudgeContext {
  const PersonaSpec& persona;
  const TaskSpec& task;
  Condition condition;
  const SessionMemory& memory;
  const EmotionalState& state;
  int turn;              // turn being played, 1-based
  std::string document;  // compose_judge_context output
};

/// The evaluator half of a turn.
struct JudgeEvaluation {
  double q = 0.0;
  std::string rationale;
  std::vector<Insight> insights;
  bool goal_met = false;
};

/// Dual-role judge: converses with the target, then evaluates its reply.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string compose_message(const JudgeContext& context) = 0;
  virtual JudgeEvaluation evaluate(const JudgeContext& context,
                                   std::string_view target_response) = 0;
  virtual std::string id() const = 0;
};

/// Holistic scorer that only ever receives the transcript.
class TranscriptScorer {
 public:
  virtual ~TranscriptScorer() = default;
  virtual double score(std::span<const ConversationTurn> transcript) = 0;
};

struct SessionConfig {
  Condition condition = Condition::Structured;
  std::string run_label = "A";
  double patience_floor = 0.1;
  int max_retries = 2;  // transport retries per backend call
  EmotionParams emotion;
};

/// Renders the judge-side context. Deterministic in its inputs.
///   structured / repeated: full persona, Big Five, emotional state, diary narrative
///   simple: one-line persona
///   none: no persona material at all
std::string compose_judge_context(const PersonaSpec& persona, const TaskSpec& task,
                                  const SessionMemory& memory, const EmotionalState& state,
                                  Condition condition);

/// Parses the fenced ```diary block of a judge evaluation reply.
///
///   ```diary
///   q: 0.4
///   rationale: ignores the 403 status code
///   goal_met: false
///   insight: accuracy | high | issue | ignores user-provided technical details
///   ```
///
/// Throws ParseError on missing block or q, RangeError on q outside [0,1].
JudgeEvaluation parse_diary(std::string_view raw);

/// Renders an evaluation in the block format accepted by parse_diary.
std::string format_diary(const JudgeEvaluation& evaluation);

/// Mean per-turn q; throws ValidationError on an empty diary.
double session_score(const SessionRecord& record);

/// Holistic score from the transcript alone; no persona data reaches the scorer.
double blind_rescore(const SessionRecord& record, TranscriptScorer& scorer);

/// Runs one dual-role session. Never throws for backend failures: the
/// returned record carries failed = true with the turns completed so far.
SessionRecord run_session(const PersonaSpec& persona, const TaskSpec& task, TargetClient& target,
                          JudgeBackend& judge, const SessionConfig& config, std::uint64_t seed);

/// Deterministic canned responses keyed by (task id, turn).
class ScriptedTarget final : public TargetClient {
 public:
  ScriptedTarget() = default;
  explicit ScriptedTarget(std::map<std::string, std::vector<std::string>> script,
                          std::string fallback = "I'm not sure I can help with that.");

  /// {"responses": {"<task id>": ["turn 1 reply", ...]}, "fallback": "..."}
  static ScriptedTarget from_json(std::string_view json_text);

  std::string respond(const TargetRequest& request) override;
  std::string id() const override { return "scripted-target"; }

 private:
  std::map<std::string, std::vector<std::string>> script_;
  std::string fallback_ = "I'm not sure I can help with that.";
};

/// Replays recorded judge turns: per task, a list of {message, evaluation}
/// where evaluation is raw text containing a diary block.
class ScriptedJudge final : public JudgeBackend {
 public:
  struct Step {
    std::string message;
    std::string evaluation;
  };

  explicit ScriptedJudge(std::map<std::string, std::vector<Step>> steps);
  static ScriptedJudge from_json(std::string_view json_text);

  std::string compose_message(const JudgeContext& context) override;
  JudgeEvaluation evaluate(const JudgeContext& context, std::string_view response) override;
  std::string id() const override { return "scripted-judge"; }

 private:
  const Step& step_for(const JudgeContext& context) const;
  std::map<std::string, std::vector<Step>> steps_;
};

}  // namespace agentpanel
