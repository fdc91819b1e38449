// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/session_runtime.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "agentpanel/error.hpp"

namespace agentpanel {
namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<Category, 5> kCategoryNames{{
    {Category::Functionality, "functionality"},
    {Category::Accuracy, "accuracy"},
    {Category::Helpfulness, "helpfulness"},
    {Category::Clarity, "clarity"},
    {Category::Safety, "safety"},
}};
constexpr NameTable<Severity, 3> kSeverityNames{{
    {Severity::Low, "low"}, {Severity::Medium, "medium"}, {Severity::High, "high"}}};
constexpr NameTable<Polarity, 2> kPolarityNames{{
    {Polarity::Issue, "issue"}, {Polarity::Strength, "strength"}}};
constexpr NameTable<Condition, 4> kConditionNames{{
    {Condition::Structured, "structured"},
    {Condition::Simple, "simple"},
    {Condition::None, "none"},
    {Condition::Repeated, "repeated"},
}};
constexpr NameTable<Termination, 3> kTerminationNames{{
    {Termination::MaxTurns, "max_turns"},
    {Termination::PatienceExhausted, "patience_exhausted"},
    {Termination::GoalMet, "goal_met"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view name, std::string_view what) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double parse_number(std::string_view text, std::string_view field) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("diary field '" + std::string(field) + "' is not a number: '" +
                     std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

Insight parse_insight(std::string_view value) {
  // category | severity | polarity | text (text may itself contain '|').
  auto parts = split(value, '|');
  if (parts.size() < 4) {
    throw ParseError("insight needs 'category | severity | polarity | text': '" +
                     std::string(trim(value)) + "'");
  }
  Insight insight;
  try {
    insight.category = parse_category(lower(trim(parts[0])));
    insight.severity = parse_severity(lower(trim(parts[1])));
    insight.polarity = parse_polarity(lower(trim(parts[2])));
  } catch (const ValidationError& e) {
    throw ParseError(std::string("insight rejected: ") + e.what());
  }
  const auto text_start = parts[3].data() - value.data();
  insight.text = std::string(trim(value.substr(static_cast<std::size_t>(text_start))));
  if (insight.text.empty()) throw ParseError("insight text is empty");
  return insight;
}

std::vector<ChatMessage> visible_history(const std::vector<ConversationTurn>& turns,
                                         const std::string& pending_message) {
  std::vector<ChatMessage> history;
  history.reserve(turns.size() * 2 + 1);
  for (const auto& t : turns) {
    history.push_back({"user", t.judge_message});
    history.push_back({"assistant", t.target_response});
  }
  history.push_back({"user", pending_message});
  return history;
}

template <typename Fn>
auto with_retries(int max_retries, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError&) {
      if (attempt >= max_retries) throw;
    }
  }
}

}  // namespace

std::string_view to_string(Category c) { return name_of(kCategoryNames, c); }
std::string_view to_string(Severity s) { return name_of(kSeverityNames, s); }
std::string_view to_string(Polarity p) { return name_of(kPolarityNames, p); }
std::string_view to_string(Condition c) { return name_of(kConditionNames, c); }
std::string_view to_string(Termination t) { return name_of(kTerminationNames, t); }
Category parse_category(std::string_view n) { return parse_name(kCategoryNames, n, "category"); }
Severity parse_severity(std::string_view n) { return parse_name(kSeverityNames, n, "severity"); }
Polarity parse_polarity(std::string_view n) { return parse_name(kPolarityNames, n, "polarity"); }
Condition parse_condition(std::string_view n) {
  return parse_name(kConditionNames, n, "condition");
}
Termination parse_termination(std::string_view n) {
  return parse_name(kTerminationNames, n, "termination");
}

std::string make_session_id(std::string_view run_label, std::string_view task_id, int persona_id,
                            Condition condition) {
  std::string id;
  id.append(run_label).append("/").append(task_id);
  id.append("/p").append(std::to_string(persona_id)).append("/");
  id.append(to_string(condition));
  return id;
}

std::string compose_judge_context(const PersonaSpec& persona, const TaskSpec& task,
                                  const SessionMemory& memory, const EmotionalState& state,
                                  Condition condition) {
  std::ostringstream out;
  switch (condition) {
    case Condition::Structured:
    case Condition::Repeated: {
      const auto& p = persona.profile;
      out << "# Persona\n";
      out << "You are " << persona.background << " (" << to_string(persona.expertise)
          << " user, region " << to_string(persona.region) << ").\n";
      out << "Big Five: openness " << fixed(p.openness) << ", conscientiousness "
          << fixed(p.conscientiousness) << ", extraversion " << fixed(p.extraversion)
          << ", agreeableness " << fixed(p.agreeableness) << ", neuroticism "
          << fixed(p.neuroticism) << ".\n";
      out << "Stay in character: your expertise and temperament shape what you ask, what you "
             "tolerate, and how strictly you judge.\n\n";
      out << "# Emotional state\n";
      out << "trust " << fixed(state.trust) << ", frustration " << fixed(state.frustration)
          << ", engagement " << fixed(state.engagement) << ", patience "
          << fixed(state.patience) << ", fatigue " << fixed(state.fatigue) << "\n\n";
      break;
    }
    case Condition::Simple:
      out << "# Persona\nYou are " << persona.background << ".\n\n";
      break;
    case Condition::None:
      break;
  }

  out << "# Task\n" << task.goal << "\n";
  out << "Complexity " << to_string(task.complexity) << ", at most " << task.max_turns
      << " turns.\n\n";

  if (!memory.turns.empty()) {
    out << "# Conversation so far\n";
    for (const auto& t : memory.turns) {
      out << "[" << t.index << "] you: " << t.judge_message << "\n";
      out << "[" << t.index << "] assistant: " << t.target_response << "\n";
    }
    out << "\n";
  }

  if ((condition == Condition::Structured || condition == Condition::Repeated) &&
      !memory.diary.empty()) {
    out << "# Your diary\n";
    for (const auto& d : memory.diary) {
      out << "Turn " << d.turn << " (score " << fixed(d.q) << "): " << d.rationale;
      if (!d.insights.empty()) {
        out << " [";
        for (std::size_t i = 0; i < d.insights.size(); ++i) {
          if (i) out << "; ";
          out << to_string(d.insights[i].category) << "/" << to_string(d.insights[i].severity)
              << ": " << d.insights[i].text;
        }
        out << "]";
      }
      out << "\n";
    }
    out << "\n";
  }

  out << "# Protocol\n"
         "Write your next message to the assistant. After its reply, record a private diary "
         "block:\n```diary\nq: <0..1>\nrationale: <why>\ngoal_met: <true|false>\n"
         "insight: <functionality|accuracy|helpfulness|clarity|safety> | <low|medium|high> | "
         "<issue|strength> | <observation>\n```\n";
  return out.str();
}

JudgeEvaluation parse_diary(std::string_view raw) {
  if (trim(raw).empty()) throw ParseError("empty judge output");
  const auto open = raw.find("```diary");
  if (open == std::string_view::npos) throw ParseError("no ```diary block in judge output");
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) throw ParseError("unterminated diary block");
  ++body_start;
  const auto close = raw.find("```", body_start);
  if (close == std::string_view::npos) throw ParseError("unterminated diary block");
  const std::string_view body = raw.substr(body_start, close - body_start);

  JudgeEvaluation out;
  bool have_q = false;
  for (std::string_view line : split(body, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("diary line without 'key: value': '" + std::string(line) + "'");
    }
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string_view value = trim(line.substr(colon + 1));
    if (key == "q" || key == "score") {
      out.q = parse_number(value, "q");
      if (!(out.q >= 0.0 && out.q <= 1.0)) {
        throw RangeError("diary q " + std::string(value) + " outside [0,1]");
      }
      have_q = true;
    } else if (key == "rationale") {
      out.rationale = std::string(value);
    } else if (key == "goal_met") {
      const std::string v = lower(value);
      if (v != "true" && v != "false") throw ParseError("goal_met must be true or false");
      out.goal_met = v == "true";
    } else if (key == "insight") {
      out.insights.push_back(parse_insight(value));
    } else {
      throw ParseError("unknown diary key '" + key + "'");
    }
  }
  if (!have_q) throw ParseError("diary block is missing q");
  return out;
}

std::string format_diary(const JudgeEvaluation& e) {
  std::ostringstream out;
  out << "```diary\n";
  out << "q: " << fixed(e.q, 4) << "\n";
  out << "rationale: " << e.rationale << "\n";
  out << "goal_met: " << (e.goal_met ? "true" : "false") << "\n";
  for (const auto& i : e.insights) {
    out << "insight: " << to_string(i.category) << " | " << to_string(i.severity) << " | "
        << to_string(i.polarity) << " | " << i.text << "\n";
  }
  out << "```\n";
  return out.str();
}

double session_score(const SessionRecord& record) {
  if (record.diary.empty()) throw ValidationError("session has no diary entries");
  double sum = 0.0;
  for (const auto& d : record.diary) sum += d.q;
  return sum / static_cast<double>(record.diary.size());
}

double blind_rescore(const SessionRecord& record, TranscriptScorer& scorer) {
  if (record.turns.empty()) throw ValidationError("cannot rescore an empty transcript");
  const double s = scorer.score(record.turns);
  if (!(s >= 0.0 && s <= 1.0)) throw RangeError("blind score outside [0,1]");
  return s;
}

SessionRecord run_session(const PersonaSpec& persona, const TaskSpec& task, TargetClient& target,
                          JudgeBackend& judge, const SessionConfig& config, std::uint64_t seed) {
  SessionRecord record;
  record.session_id = make_session_id(config.run_label, task.id, persona.id, config.condition);
  record.task_id = task.id;
  record.persona_id = persona.id;
  record.run_label = config.run_label;
  record.condition = config.condition;
  record.seed = seed;
  record.judge_backend = judge.id();
  record.target_backend = target.id();

  SessionMemory memory;
  memory.trajectory.initial = init_state(persona.profile);
  EmotionalState state = memory.trajectory.initial;
  double q_sum = 0.0;

  auto finish = [&](Termination reason) {
    record.termination = reason;
    record.turns = memory.turns;
    record.diary = memory.diary;
    record.trajectory = memory.trajectory;
    record.final_score = memory.diary.empty() ? 0.0 : session_score(record);
    return record;
  };

  for (int turn = 1; turn <= task.max_turns; ++turn) {
    JudgeContext ctx{persona, task, config.condition, memory, state, turn,
                     compose_judge_context(persona, task, memory, state, config.condition)};
    std::string message;
    std::string response;
    JudgeEvaluation evaluation;
    try {
      message = with_retries(config.max_retries, [&] { return judge.compose_message(ctx); });
      if (trim(message).empty()) throw BackendError("judge produced an empty message");
      TargetRequest request{task.id, turn, visible_history(memory.turns, message)};
      response = with_retries(config.max_retries, [&] { return target.respond(request); });
      if (trim(response).empty()) throw BackendError("target produced an empty response");
      try {
        evaluation =
            with_retries(config.max_retries, [&] { return judge.evaluate(ctx, response); });
      } catch (const ParseError&) {
        evaluation =
            with_retries(config.max_retries, [&] { return judge.evaluate(ctx, response); });
      } catch (const RangeError&) {
        evaluation =
            with_retries(config.max_retries, [&] { return judge.evaluate(ctx, response); });
      }
      if (!(evaluation.q >= 0.0 && evaluation.q <= 1.0)) {
        throw RangeError("judge q outside [0,1]");
      }
    } catch (const Error& e) {
      record.failed = true;
      record.failure_reason = "turn " + std::to_string(turn) + ": " + e.what();
      return finish(Termination::MaxTurns);
    }

    const double q_prev_mean = memory.diary.empty()
                                   ? evaluation.q
                                   : q_sum / static_cast<double>(memory.diary.size());
    state = update_state(state, persona.profile, evaluation.q, q_prev_mean, config.emotion);
    q_sum += evaluation.q;

    memory.turns.push_back({turn, std::move(message), std::move(response)});
    memory.diary.push_back(
        {turn, evaluation.q, std::move(evaluation.rationale), std::move(evaluation.insights), state});
    memory.trajectory.turns.push_back(state);

    if (evaluation.goal_met) {
      record.goal_achieved = true;
      return finish(Termination::GoalMet);
    }
    if (state.patience < config.patience_floor) return finish(Termination::PatienceExhausted);
  }
  return finish(Termination::MaxTurns);
}

ScriptedTarget::ScriptedTarget(std::map<std::string, std::vector<std::string>> script,
                               std::string fallback)
    : script_(std::move(script)), fallback_(std::move(fallback)) {}

ScriptedTarget ScriptedTarget::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("target script is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("responses") || !doc["responses"].is_object()) {
    throw ValidationError("target script needs a 'responses' object");
  }
  std::map<std::string, std::vector<std::string>> script;
  for (const auto& [task, replies] : doc["responses"].items()) {
    script[task] = replies.get<std::vector<std::string>>();
  }
  return ScriptedTarget(std::move(script),
                        doc.value("fallback", std::string("I'm not sure I can help with that.")));
}

std::string ScriptedTarget::respond(const TargetRequest& request) {
  const auto it = script_.find(request.task_id);
  if (it == script_.end() || it->second.empty()) return fallback_;
  const auto& replies = it->second;
  const auto idx = static_cast<std::size_t>(std::max(1, request.turn) - 1);
  return idx < replies.size() ? replies[idx] : replies.back();
}

ScriptedJudge::ScriptedJudge(std::map<std::string, std::vector<Step>> steps)
    : steps_(std::move(steps)) {}

ScriptedJudge ScriptedJudge::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("judge script is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("steps") || !doc["steps"].is_object()) {
    throw ValidationError("judge script needs a 'steps' object");
  }
  std::map<std::string, std::vector<Step>> steps;
  for (const auto& [task, list] : doc["steps"].items()) {
    for (const auto& s : list) {
      steps[task].push_back(
          {s.at("message").get<std::string>(), s.at("evaluation").get<std::string>()});
    }
  }
  return ScriptedJudge(std::move(steps));
}

const ScriptedJudge::Step& ScriptedJudge::step_for(const JudgeContext& context) const {
  const auto it = steps_.find(context.task.id);
  if (it == steps_.end() || it->second.empty()) {
    throw BackendError("no scripted judge steps for task " + context.task.id);
  }
  const auto idx = static_cast<std::size_t>(context.turn - 1);
  return idx < it->second.size() ? it->second[idx] : it->second.back();
}

std::string ScriptedJudge::compose_message(const JudgeContext& context) {
  return step_for(context).message;
}

JudgeEvaluation ScriptedJudge::evaluate(const JudgeContext& context, std::string_view) {
  return parse_diary(step_for(context).evaluation);
}

}  // namespace agentpanel
