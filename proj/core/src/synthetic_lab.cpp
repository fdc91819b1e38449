// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/synthetic_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "agentpanel/error.hpp"

namespace agentpanel {
namespace {

// Vocabulary for canonical finding texts.
constexpr std::string_view kVocabulary[] = {
    "account", "action", "address", "alert", "answer", "api", "archive", "assistant",
    "attachment", "audit", "backup", "badge", "balance", "banner", "basket", "batch",
    "billing", "block", "bookmark", "branch", "browser", "budget", "buffer", "button",
    "cache", "calendar", "camera", "campaign", "card", "cart", "catalog", "certificate",
    "channel", "chart", "checkout", "citation", "claim", "client", "clinic", "cluster",
    "code", "column", "command", "comment", "compiler", "config", "console", "contact",
    "container", "contract", "cookie", "coupon", "course", "credential", "currency", "cursor",
    "dashboard", "database", "dataset", "deadline", "debugger", "default", "delivery", "dependency",
    "deploy", "diagnosis", "dialog", "digest", "directory", "discount", "disk", "dosage",
    "download", "draft", "driver", "duplicate", "editor", "email", "encoding", "endpoint",
    "enrollment", "entry", "error", "estimate", "event", "exam", "export", "extension",
    "feature", "feed", "field", "file", "filter", "firewall", "folder", "font",
    "footer", "form", "format", "framework", "function", "gateway", "grade", "graph",
    "guide", "handler", "header", "heap", "history", "homework", "hook", "host",
    "icon", "image", "import", "inbox", "index", "insurance", "integration", "interval",
    "inventory", "invoice", "issue", "item", "job", "kernel", "key", "label",
    "language", "latency", "layout", "lecture", "ledger", "lesson", "library", "license",
    "limit", "link", "list", "locale", "lock", "log", "login", "loop",
    "manual", "map", "margin", "medication", "memory", "menu", "merge", "message",
    "method", "metric", "migration", "mobile", "module", "monitor", "network", "node",
    "notice", "notification", "object", "offer", "order", "package", "page", "panel",
    "parameter", "parser", "password", "patch", "patient", "payload", "payment", "permission",
    "pipeline", "plan", "plugin", "pointer", "policy", "port", "portal", "prescription",
    "preview", "price", "printer", "privacy", "process", "profile", "project", "prompt",
    "protocol", "proxy", "query", "queue", "quiz", "quota", "rating", "receipt",
    "record", "redirect", "refund", "region", "registry", "release", "reminder", "render",
    "replica", "report", "repository", "request", "resource", "response", "return", "review",
    "role", "route", "rubric", "runtime", "sandbox", "schedule", "schema", "scope",
    "screen", "script", "search", "section", "secret", "segment", "server", "service",
    "session", "setting", "shipment", "shortcut", "signal", "signup", "sitemap", "size",
    "snapshot", "socket", "source", "spreadsheet", "stack", "status", "storage", "stream",
    "student", "subscription", "summary", "supplier", "symptom", "syntax", "table", "tag",
    "template", "tenant", "terminal", "test", "thread", "ticket", "timeline", "timeout",
    "timezone", "token", "toolbar", "topic", "tracking", "transaction", "transcript", "trigger",
    "tutorial", "upload", "user", "validation", "variable", "vendor", "version", "video",
    "view", "voucher", "warehouse", "warning", "webhook", "widget", "window", "workflow",
    "workspace", "zone", "allergy", "appointment", "benchmark", "bracket", "callback", "capacity",
    "caption", "cohort", "compliance", "coverage", "cron", "deductible", "diff", "domain",
    "escalation", "fixture", "glossary", "handoff", "invariant", "journal", "keyword", "lint",
};

constexpr std::string_view kFillers[] = {"really", "quite",    "somewhat", "basically",
                                         "honestly", "again", "also",     "still"};

constexpr std::size_t kWordsPerFinding = 7;

void require_unit(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << "synthetic config: " << field << " = " << v << " outside [0,1]";
    throw RangeError(msg.str());
  }
}

void require_non_negative(double v, const char* field) {
  if (!(v >= 0.0)) {
    std::ostringstream msg;
    msg << "synthetic config: " << field << " = " << v << " must be >= 0";
    throw RangeError(msg.str());
  }
}

template <std::size_t N>
std::size_t weighted_pick(const std::array<double, N>& weights, double u) {
  double total = 0.0;
  for (const double w : weights) total += w;
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += weights[i] / total;
    if (u < acc) return i;
  }
  return N - 1;
}

bool gating_on(Condition c) { return c == Condition::Structured || c == Condition::Repeated; }

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace

void SyntheticWorldConfig::validate() const {
  if (finding_count < 1) throw RangeError("synthetic config: finding_count must be >= 1");
  require_non_negative(zipf_exponent, "zipf_exponent");
  require_non_negative(detection_scale, "detection_scale");
  double cat_total = 0.0;
  for (const double w : category_weights) {
    require_non_negative(w, "category_weights");
    cat_total += w;
  }
  if (cat_total <= 0.0) throw RangeError("synthetic config: category_weights sum to zero");
  require_unit(high_severity_probability, "high_severity_probability");
  for (const double w : severity_weights) require_unit(w, "severity_weights");
  for (const double q : base_quality) require_unit(q, "base_quality");
  for (const double o : domain_offsets) {
    if (!(std::abs(o) <= 1.0)) throw RangeError("synthetic config: domain_offsets outside [-1,1]");
  }
  require_non_negative(sigma_res, "sigma_res");
  require_non_negative(sigma_turn, "sigma_turn");
  require_non_negative(sigma_judge, "sigma_judge");
  require_non_negative(affinity_spread, "affinity_spread");
  for (const double b : breadth) require_non_negative(b, "breadth");
  require_unit(expert_penalty, "expert_penalty");
  require_unit(paraphrase_rate, "paraphrase_rate");
  require_unit(remention_probability, "remention_probability");
  require_unit(strength_probability, "strength_probability");
  require_unit(strength_threshold, "strength_threshold");
  require_unit(goal_threshold, "goal_threshold");
  require_unit(min_turn_fraction, "min_turn_fraction");
  require_non_negative(ablation_noise_scale, "ablation_noise_scale");
  require_non_negative(ablation_breadth, "ablation_breadth");
  require_unit(head_fraction, "head_fraction");
  require_unit(torso_fraction, "torso_fraction");
  if (head_fraction + torso_fraction > 1.0) {
    throw RangeError("synthetic config: head_fraction + torso_fraction exceeds 1");
  }
}

std::string_view to_string(FindingZone z) {
  switch (z) {
    case FindingZone::Head: return "head";
    case FindingZone::Torso: return "torso";
    case FindingZone::Tail: return "tail";
  }
  return "tail";
}

FindingZone SyntheticWorld::zone_of(int rank) const {
  const double f = static_cast<double>(config.finding_count);
  if (rank <= static_cast<int>(std::ceil(config.head_fraction * f))) return FindingZone::Head;
  if (rank <= static_cast<int>(std::ceil((config.head_fraction + config.torso_fraction) * f))) {
    return FindingZone::Torso;
  }
  return FindingZone::Tail;
}

SyntheticWorld gen_world(const SyntheticWorldConfig& config, std::uint64_t seed,
                         std::span<const PersonaSpec> pool, std::span<const TaskSpec> catalog) {
  config.validate();
  SyntheticWorld world;
  world.config = config;
  world.seed = seed;

  Rng rng(mix_seed(seed, hash_string("findings")));
  constexpr std::size_t vocab = std::size(kVocabulary);
  double total = 0.0;
  for (int i = 1; i <= config.finding_count; ++i) {
    SyntheticFinding f;
    f.rank = i;
    f.weight = std::pow(static_cast<double>(i), -config.zipf_exponent);
    total += f.weight;
    f.category = kAllCategories[weighted_pick(config.category_weights, rng.uniform())];
    if (rng.bernoulli(config.high_severity_probability)) {
      f.severity = Severity::High;
    } else {
      f.severity = rng.bernoulli(0.5) ? Severity::Medium : Severity::Low;
    }
    std::ostringstream text;
    text << to_string(f.category);
    std::vector<std::size_t> picked;
    Rng words(mix_seed(seed, hash_string("text") + static_cast<std::uint64_t>(i)));
    while (picked.size() < kWordsPerFinding) {
      const auto w = static_cast<std::size_t>(words.index(vocab));
      if (std::find(picked.begin(), picked.end(), w) != picked.end()) continue;
      picked.push_back(w);
      text << ' ' << kVocabulary[w];
    }
    f.text = text.str();
    world.findings.push_back(std::move(f));
  }
  for (auto& f : world.findings) f.popularity = f.weight / total;

  for (const auto& t : catalog) {
    world.task_quality[t.id] = std::clamp(
        config.base_quality[static_cast<std::size_t>(t.complexity)] +
            config.domain_offsets[static_cast<std::size_t>(t.domain)],
        0.0, 1.0);
  }
  for (const auto& p : pool) {
    Rng judge(mix_seed(seed, hash_string("judge") + static_cast<std::uint64_t>(p.id)));
    world.judge_bias[p.id] = judge.normal(0.0, config.sigma_judge);
    world.judge_affinity[p.id] = std::max(0.0, judge.normal(1.0, config.affinity_spread));
  }
  return world;
}

double detection_probability(const SyntheticWorld& world, int rank, double breadth) {
  if (rank < 1 || rank > static_cast<int>(world.findings.size())) {
    throw RangeError("finding rank " + std::to_string(rank) + " out of range");
  }
  return std::min(1.0, world.config.detection_scale *
                           world.findings[static_cast<std::size_t>(rank - 1)].weight * breadth);
}

std::string paraphrase(const std::string& text, double rate, Rng& rng) {
  std::string out;
  for (const auto& w : split_words(text)) {
    if (!out.empty()) out += ' ';
    out += w;
    if (rng.bernoulli(rate)) {
      out += ' ';
      out += kFillers[rng.index(std::size(kFillers))];
    }
  }
  return out;
}

SyntheticJudge::SyntheticJudge(const SyntheticWorld& world, const PersonaSpec& persona,
                               const TaskSpec& task, Condition condition, std::uint64_t seed)
    : world_(world), task_(task), rng_(seed) {
  const auto& cfg = world.config;
  const bool gated = gating_on(condition);
  const double noise = condition == Condition::Structured ? 1.0 : cfg.ablation_noise_scale;

  const int cap = task.max_turns;
  const int low = std::clamp(static_cast<int>(std::ceil(cfg.min_turn_fraction * cap)), 1, cap);
  planned_turns_ = rng_.uniform_int(low, cap);
  const double path = rng_.normal(0.0, cfg.sigma_res * noise);
  jitter_sd_ = cfg.sigma_turn * noise;

  const auto bias_it = world.judge_bias.find(persona.id);
  const double bias = bias_it == world.judge_bias.end() ? 0.0 : bias_it->second;
  const auto aff_it = world.judge_affinity.find(persona.id);
  const double affinity = aff_it == world.judge_affinity.end() ? 1.0 : aff_it->second;
  const auto tq = world.task_quality.find(task.id);
  if (tq == world.task_quality.end()) {
    throw ValidationError("synthetic world has no quality for task '" + task.id + "'");
  }

  const bool expert = gated && persona.expertise == Expertise::Expert;
  base_ = tq->second + bias + path - (expert ? cfg.expert_penalty : 0.0);

  const double breadth =
      (gated ? cfg.breadth[static_cast<std::size_t>(persona.expertise)] : cfg.ablation_breadth) *
      affinity;
  // Every finding consumes two draws so the stream does not depend on outcomes.
  for (const auto& f : world.findings) {
    const double u = rng_.uniform();
    const int turn = rng_.uniform_int(1, planned_turns_);
    if (u < detection_probability(world, f.rank, breadth)) by_turn_[turn].push_back(f.rank);
  }
}

std::vector<int> SyntheticJudge::detected() const {
  std::vector<int> out;
  for (const auto& [turn, ranks] : by_turn_) out.insert(out.end(), ranks.begin(), ranks.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string SyntheticJudge::compose_message(const JudgeContext& context) {
  if (context.turn == 1) return "Hi, I need help with this: " + task_.goal;
  const auto prev = by_turn_.find(context.turn - 1);
  if (prev != by_turn_.end() && !prev->second.empty()) {
    return "That " + std::string(kUnresolvedMarker) + ". Can you look at it again? (turn " +
           std::to_string(context.turn) + ")";
  }
  return "Thanks. What should I do next? (turn " + std::to_string(context.turn) + ")";
}

JudgeEvaluation SyntheticJudge::evaluate(const JudgeContext& context, std::string_view) {
  const auto& cfg = world_.config;
  const int t = context.turn;
  JudgeEvaluation ev;

  double penalty = 0.0;
  const auto here = by_turn_.find(t);
  if (here != by_turn_.end()) {
    for (const int rank : here->second) {
      const auto& f = world_.findings[static_cast<std::size_t>(rank - 1)];
      penalty += cfg.severity_weights[static_cast<std::size_t>(f.severity)];
    }
  }
  const double jitter = rng_.normal(0.0, jitter_sd_);
  ev.q = std::clamp(base_ - penalty + jitter, 0.0, 1.0);

  if (here != by_turn_.end()) {
    for (const int rank : here->second) {
      const auto& f = world_.findings[static_cast<std::size_t>(rank - 1)];
      ev.insights.push_back(
          {paraphrase(f.text, cfg.paraphrase_rate, rng_), f.category, f.severity, Polarity::Issue});
    }
  }
  if (!mentioned_.empty() && rng_.bernoulli(cfg.remention_probability)) {
    const int rank = mentioned_[rng_.index(mentioned_.size())];
    const auto& f = world_.findings[static_cast<std::size_t>(rank - 1)];
    ev.insights.push_back(
        {paraphrase(f.text, cfg.paraphrase_rate, rng_), f.category, f.severity, Polarity::Issue});
  }
  if (here != by_turn_.end()) {
    mentioned_.insert(mentioned_.end(), here->second.begin(), here->second.end());
  }
  if (ev.q >= cfg.strength_threshold && rng_.bernoulli(cfg.strength_probability)) {
    ev.insights.push_back({"helpfulness the reply moved " + task_.id + " forward clearly",
                           Category::Helpfulness, Severity::Low, Polarity::Strength});
  }

  q_sum_ += ev.q;
  const double running = q_sum_ / static_cast<double>(t);
  ev.goal_met = t >= planned_turns_ && running >= cfg.goal_threshold;

  std::ostringstream why;
  if (here != by_turn_.end() && !here->second.empty()) {
    why << here->second.size() << " new problem(s) noticed";
  } else {
    why << "no new problems";
  }
  why << "; running mean " << std::round(running * 1000.0) / 1000.0;
  ev.rationale = why.str();
  return ev;
}

std::string SyntheticTarget::respond(const TargetRequest& request) {
  std::ostringstream out;
  out << "Here is my answer for turn " << request.turn << " of " << request.task_id << ".";
  return out.str();
}

double SyntheticBlindScorer::score(std::span<const ConversationTurn> transcript) {
  std::size_t flagged = 0;
  for (const auto& t : transcript) {
    if (t.judge_message.find(kUnresolvedMarker) != std::string::npos) ++flagged;
  }
  const double s = 0.96 - 0.03 * static_cast<double>(flagged) -
                   0.002 * static_cast<double>(transcript.size());
  return std::clamp(s, 0.0, 1.0);
}

SessionRecord synth_session(const SyntheticWorld& world, const PersonaSpec& persona,
                            const TaskSpec& task, Condition condition, std::uint64_t seed,
                            const std::string& run_label) {
  SyntheticJudge judge(world, persona, task, condition, seed);
  SyntheticTarget target;
  SessionConfig cfg;
  cfg.condition = condition;
  cfg.run_label = run_label;
  return run_session(persona, task, target, judge, cfg, seed);
}

std::uint64_t session_seed(std::uint64_t root, std::string_view run_label,
                           std::string_view task_id, int persona_id, Condition condition) {
  std::uint64_t s = mix_seed(root, hash_string(run_label));
  s = mix_seed(s, hash_string(task_id));
  s = mix_seed(s, static_cast<std::uint64_t>(persona_id));
  return mix_seed(s, static_cast<std::uint64_t>(condition));
}

std::vector<SessionRecord> run_synthetic_experiment(const SyntheticWorldConfig& config,
                                                    std::span<const PersonaSpec> pool,
                                                    std::span<const TaskSpec> catalog,
                                                    std::uint64_t seed,
                                                    const ExperimentOptions& options) {
  if (pool.empty()) throw ValidationError("synthetic experiment needs a persona pool");
  if (catalog.empty()) throw ValidationError("synthetic experiment needs a task catalog");
  const auto world = gen_world(config, seed, pool, catalog);
  std::vector<SessionRecord> records;

  auto grid = [&](const std::string& label) {
    for (const auto& task : catalog) {
      for (const auto& persona : pool) {
        records.push_back(synth_session(
            world, persona, task, Condition::Structured,
            session_seed(seed, label, task.id, persona.id, Condition::Structured), label));
      }
    }
  };
  grid(options.run_label);
  if (options.second_run) grid(options.second_label);

  if (options.ablation) {
    const std::string label(kAblationLabel);
    for (const auto& task_id : options.ablation_tasks) {
      const auto& task = find_task(catalog, task_id);
      const auto ranking = rank_panel(pool, task);
      const auto panel = select_panel(ranking, std::min(options.ablation_panel, pool.size()));
      for (const Condition c : {Condition::Structured, Condition::Simple, Condition::None}) {
        for (const int id : panel) {
          const auto& persona = find_persona(pool, id);
          records.push_back(synth_session(world, persona, task, c,
                                          session_seed(seed, label, task.id, id, c), label));
        }
      }
      const auto& top = find_persona(pool, panel.front());
      for (std::size_t r = 1; r <= options.ablation_panel; ++r) {
        const std::string rep_label = label + "-r" + std::to_string(r);
        records.push_back(synth_session(
            world, top, task, Condition::Repeated,
            session_seed(seed, rep_label, task.id, top.id, Condition::Repeated), rep_label));
      }
    }
  }
  return records;
}

}  // namespace agentpanel
