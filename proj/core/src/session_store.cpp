// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/session_store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "agentpanel/error.hpp"
#include "agentpanel/persona_panel.hpp"

namespace agentpanel {
namespace {

using nlohmann::json;

const json& field(const json& doc, const char* name, const std::string& where) {
  if (!doc.is_object()) throw ValidationError(where + ": expected an object");
  const auto it = doc.find(name);
  if (it == doc.end()) throw ValidationError(where + "." + name + ": missing");
  return *it;
}

template <typename T>
T get(const json& doc, const char* name, const std::string& where) {
  const auto& v = field(doc, name, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + name + ": wrong type");
  }
}

void require_unit(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << what << ": " << v << " outside [0,1]";
    throw ValidationError(msg.str());
  }
}

void validate_state(const EmotionalState& s, const std::string& where) {
  require_unit(s.trust, where + ".trust");
  require_unit(s.frustration, where + ".frustration");
  require_unit(s.engagement, where + ".engagement");
  require_unit(s.patience, where + ".patience");
  require_unit(s.fatigue, where + ".fatigue");
}

json state_to_json(const EmotionalState& s) {
  return {{"trust", s.trust},
          {"frustration", s.frustration},
          {"engagement", s.engagement},
          {"patience", s.patience},
          {"fatigue", s.fatigue}};
}

EmotionalState state_from_json(const json& doc, const std::string& where) {
  EmotionalState s;
  s.trust = get<double>(doc, "trust", where);
  s.frustration = get<double>(doc, "frustration", where);
  s.engagement = get<double>(doc, "engagement", where);
  s.patience = get<double>(doc, "patience", where);
  s.fatigue = get<double>(doc, "fatigue", where);
  return s;
}

template <typename Fn>
auto parse_enum(const json& doc, const char* name, const std::string& where, Fn&& parse) {
  const auto text = get<std::string>(doc, name, where);
  try {
    return parse(text);
  } catch (const Error& e) {
    throw ValidationError(where + "." + name + ": " + e.what());
  }
}

void durable_append(const std::filesystem::path& path, const std::string& line) {
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw Error("cannot open session store " + path.string() + " for append");
  const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
                  std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
  std::fclose(f);
  if (!ok) throw Error("failed to write session store " + path.string());
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open session store " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Parses complete lines; returns the offset just past the last newline.
std::vector<SessionRecord> parse_store(const std::string& bytes, const std::filesystem::path& path,
                                       LoadReport& report, std::size_t& complete_end) {
  std::vector<SessionRecord> out;
  const auto last_newline = bytes.rfind('\n');
  complete_end = last_newline == std::string::npos ? 0 : last_newline + 1;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < complete_end) {
    const auto nl = bytes.find('\n', pos);
    const std::string_view line(bytes.data() + pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(parse_session_line(line));
    } catch (const Error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  report.records = out.size();
  if (complete_end < bytes.size()) {
    report.truncated_tail = true;
    report.tail = bytes.substr(complete_end);
  }
  return out;
}

}  // namespace

void validate_session(const SessionRecord& r) {
  if (r.session_id.empty()) throw ValidationError("session_id: empty");
  if (r.task_id.empty()) throw ValidationError("task_id: empty");
  if (r.run_label.empty()) throw ValidationError("run_label: empty");
  if (r.persona_id <= 0) throw ValidationError("persona_id: must be positive");
  require_unit(r.final_score, "final_score");
  if (r.turns.size() != r.diary.size()) {
    throw ValidationError("diary: " + std::to_string(r.diary.size()) + " entries for " +
                          std::to_string(r.turns.size()) + " turns");
  }
  for (std::size_t i = 0; i < r.turns.size(); ++i) {
    const std::string where = "turns[" + std::to_string(i) + "]";
    if (r.turns[i].index != static_cast<int>(i + 1)) {
      throw ValidationError(where + ".index: expected " + std::to_string(i + 1));
    }
  }
  for (std::size_t i = 0; i < r.diary.size(); ++i) {
    const std::string where = "diary[" + std::to_string(i) + "]";
    const auto& d = r.diary[i];
    if (d.turn != static_cast<int>(i + 1)) {
      throw ValidationError(where + ".turn: expected " + std::to_string(i + 1));
    }
    require_unit(d.q, where + ".q");
    validate_state(d.emotion, where + ".emotion");
    for (std::size_t j = 0; j < d.insights.size(); ++j) {
      if (d.insights[j].text.empty()) {
        throw ValidationError(where + ".insights[" + std::to_string(j) + "].text: empty");
      }
    }
  }
  validate_state(r.trajectory.initial, "initial_emotion");
  if (r.trajectory.turns.size() != r.diary.size()) {
    throw ValidationError("trajectory: length differs from diary");
  }
  for (std::size_t i = 0; i < r.diary.size(); ++i) {
    if (!(r.trajectory.turns[i] == r.diary[i].emotion)) {
      throw ValidationError("trajectory[" + std::to_string(i) + "]: differs from diary emotion");
    }
  }
}

json session_to_json(const SessionRecord& r) {
  json turns = json::array();
  for (const auto& t : r.turns) {
    turns.push_back({{"index", t.index}, {"judge", t.judge_message}, {"target", t.target_response}});
  }
  json diary = json::array();
  for (const auto& d : r.diary) {
    json insights = json::array();
    for (const auto& i : d.insights) {
      insights.push_back({{"text", i.text},
                          {"category", to_string(i.category)},
                          {"severity", to_string(i.severity)},
                          {"polarity", to_string(i.polarity)}});
    }
    diary.push_back({{"turn", d.turn},
                     {"q", d.q},
                     {"rationale", d.rationale},
                     {"insights", std::move(insights)},
                     {"emotion", state_to_json(d.emotion)}});
  }
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["session_id"] = r.session_id;
  doc["run_label"] = r.run_label;
  doc["task_id"] = r.task_id;
  doc["persona_id"] = r.persona_id;
  doc["condition"] = to_string(r.condition);
  doc["seed"] = r.seed;
  doc["judge_backend"] = r.judge_backend;
  doc["target_backend"] = r.target_backend;
  doc["final_score"] = r.final_score;
  doc["goal_achieved"] = r.goal_achieved;
  doc["termination"] = to_string(r.termination);
  doc["failed"] = r.failed;
  doc["failure_reason"] = r.failure_reason;
  doc["initial_emotion"] = state_to_json(r.trajectory.initial);
  doc["turns"] = std::move(turns);
  doc["diary"] = std::move(diary);
  return doc;
}

SessionRecord session_from_json(const json& doc) {
  const std::string top = "record";
  const auto version = get<int>(doc, "schema_version", top);
  if (version != kSchemaVersion) {
    throw ValidationError("schema_version: " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
  }
  SessionRecord r;
  r.session_id = get<std::string>(doc, "session_id", top);
  r.run_label = get<std::string>(doc, "run_label", top);
  r.task_id = get<std::string>(doc, "task_id", top);
  r.persona_id = get<int>(doc, "persona_id", top);
  r.condition = parse_enum(doc, "condition", top, [](const std::string& s) { return parse_condition(s); });
  r.seed = get<std::uint64_t>(doc, "seed", top);
  r.judge_backend = get<std::string>(doc, "judge_backend", top);
  r.target_backend = get<std::string>(doc, "target_backend", top);
  r.final_score = get<double>(doc, "final_score", top);
  r.goal_achieved = get<bool>(doc, "goal_achieved", top);
  r.termination =
      parse_enum(doc, "termination", top, [](const std::string& s) { return parse_termination(s); });
  r.failed = get<bool>(doc, "failed", top);
  r.failure_reason = get<std::string>(doc, "failure_reason", top);
  r.trajectory.initial = state_from_json(field(doc, "initial_emotion", top), "initial_emotion");

  const auto& turns = field(doc, "turns", top);
  if (!turns.is_array()) throw ValidationError("turns: expected an array");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const std::string where = "turns[" + std::to_string(i) + "]";
    r.turns.push_back({get<int>(turns[i], "index", where), get<std::string>(turns[i], "judge", where),
                       get<std::string>(turns[i], "target", where)});
  }
  const auto& diary = field(doc, "diary", top);
  if (!diary.is_array()) throw ValidationError("diary: expected an array");
  for (std::size_t i = 0; i < diary.size(); ++i) {
    const std::string where = "diary[" + std::to_string(i) + "]";
    DiaryEntry d;
    d.turn = get<int>(diary[i], "turn", where);
    d.q = get<double>(diary[i], "q", where);
    d.rationale = get<std::string>(diary[i], "rationale", where);
    const auto& insights = field(diary[i], "insights", where);
    if (!insights.is_array()) throw ValidationError(where + ".insights: expected an array");
    for (std::size_t j = 0; j < insights.size(); ++j) {
      const std::string iw = where + ".insights[" + std::to_string(j) + "]";
      Insight ins;
      ins.text = get<std::string>(insights[j], "text", iw);
      ins.category = parse_enum(insights[j], "category", iw,
                                [](const std::string& s) { return parse_category(s); });
      ins.severity = parse_enum(insights[j], "severity", iw,
                                [](const std::string& s) { return parse_severity(s); });
      ins.polarity = parse_enum(insights[j], "polarity", iw,
                                [](const std::string& s) { return parse_polarity(s); });
      d.insights.push_back(std::move(ins));
    }
    d.emotion = state_from_json(field(diary[i], "emotion", where), where + ".emotion");
    r.trajectory.turns.push_back(d.emotion);
    r.diary.push_back(std::move(d));
  }
  validate_session(r);
  return r;
}

std::string serialize_session(const SessionRecord& record) {
  validate_session(record);
  return session_to_json(record).dump();
}

SessionRecord parse_session_line(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed session line: ") + e.what());
  }
  return session_from_json(doc);
}

SessionKey key_of(const SessionRecord& r) {
  return {r.run_label, r.task_id, r.persona_id, r.condition};
}

std::vector<SessionRecord> load_sessions(const std::filesystem::path& path, LoadReport* report) {
  LoadReport local;
  std::size_t complete_end = 0;
  auto out = parse_store(read_all(path), path, report ? *report : local, complete_end);
  return out;
}

SessionStore::SessionStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream create(path_, std::ios::binary);
    if (!create) throw Error("cannot create session store " + path_.string());
    return;
  }
  const auto bytes = read_all(path_);
  std::size_t complete_end = 0;
  records_ = parse_store(bytes, path_, report_, complete_end);
  for (const auto& r : records_) {
    if (!keys_.insert(key_of(r)).second) {
      throw ValidationError(path_.string() + ": duplicate session " + r.session_id);
    }
  }
  if (report_.truncated_tail) {
    auto quarantine = path_;
    quarantine += ".quarantine";
    durable_append(quarantine, report_.tail + "\n");
    std::filesystem::resize_file(path_, complete_end);
  }
}

void SessionStore::append(const SessionRecord& record) {
  const auto line = serialize_session(record) + "\n";
  std::lock_guard lock(mutex_);
  const auto key = key_of(record);
  if (keys_.count(key)) {
    throw ValidationError("duplicate session " + record.session_id + " already in " +
                          path_.string());
  }
  durable_append(path_, line);
  keys_.insert(key);
  records_.push_back(record);
}

bool SessionStore::contains(const SessionKey& key) const {
  std::lock_guard lock(mutex_);
  return keys_.count(key) > 0;
}

std::vector<SessionRecord> SessionStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

void write_sessions(const std::filesystem::path& path, std::span<const SessionRecord> records) {
  std::set<SessionKey> keys;
  std::string bytes;
  for (const auto& r : records) {
    if (!keys.insert(key_of(r)).second) {
      throw ValidationError("duplicate session " + r.session_id);
    }
    bytes += serialize_session(r);
    bytes += '\n';
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write session store " + path.string());
  out << bytes;
  if (!out.flush()) throw Error("failed to write session store " + path.string());
}

std::string_view to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Live: return "live";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Synthetic: return "synthetic";
  }
  return "synthetic";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "live") return BackendKind::Live;
  if (name == "scripted") return BackendKind::Scripted;
  if (name == "synthetic") return BackendKind::Synthetic;
  throw ValidationError("unknown backend '" + std::string(name) + "'");
}

namespace {

EndpointConfig endpoint_from_json(const json& doc, EndpointConfig defaults) {
  if (doc.contains("base_url")) defaults.base_url = doc.at("base_url").get<std::string>();
  if (doc.contains("model")) defaults.model = doc.at("model").get<std::string>();
  if (doc.contains("temperature")) defaults.temperature = doc.at("temperature").get<double>();
  if (doc.contains("api_key_env")) defaults.api_key_env = doc.at("api_key_env").get<std::string>();
  if (doc.contains("timeout_seconds")) {
    defaults.timeout = std::chrono::seconds(doc.at("timeout_seconds").get<int>());
  }
  return defaults;
}

json endpoint_to_json(const EndpointConfig& e) {
  return {{"base_url", e.base_url},
          {"model", e.model},
          {"temperature", e.temperature},
          {"api_key_env", e.api_key_env},
          {"timeout_seconds", e.timeout.count()}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void RunConfig::validate(std::size_t pool_size) const {
  auto must_exist = [](const std::optional<std::filesystem::path>& p, const char* what) {
    if (p && !std::filesystem::exists(*p)) {
      throw ValidationError(std::string(what) + ": file not found: " + p->string());
    }
  };
  must_exist(pool_path, "pool");
  must_exist(catalog_path, "catalog");
  must_exist(target_script, "target_script");
  must_exist(judge_script, "judge_script");
  if (backend == BackendKind::Scripted && (!target_script || !judge_script)) {
    throw ValidationError("scripted backend needs target_script and judge_script");
  }
  if (panel_sizes.empty()) throw ValidationError("panel_sizes: empty");
  for (const int n : panel_sizes) {
    if (n < 1 || static_cast<std::size_t>(n) > pool_size) {
      throw ValidationError("panel_sizes: " + std::to_string(n) + " outside [1, " +
                            std::to_string(pool_size) + "]");
    }
  }
  if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("theta: outside (0,1)");
  if (workers < 1) throw ValidationError("workers: must be >= 1");
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    if (doc.contains("backend")) c.backend = parse_backend(doc.at("backend").get<std::string>());
    if (doc.contains("target")) c.target = endpoint_from_json(doc.at("target"), c.target);
    EndpointConfig judge_defaults;
    judge_defaults.temperature = 1.0;
    c.judge = doc.contains("judge") ? endpoint_from_json(doc.at("judge"), judge_defaults)
                                    : judge_defaults;
    if (doc.contains("embedding")) c.embedding = endpoint_from_json(doc.at("embedding"), c.embedding);
    if (doc.contains("embedding_dimension")) {
      c.embedding_dimension = doc.at("embedding_dimension").get<std::size_t>();
    }
    auto path_opt = [&](const char* key, std::optional<std::filesystem::path>& out) {
      if (doc.contains(key)) out = resolve(base_dir, doc.at(key).get<std::string>());
    };
    path_opt("embedding_cache", c.embedding_cache);
    path_opt("pool", c.pool_path);
    path_opt("catalog", c.catalog_path);
    path_opt("target_script", c.target_script);
    path_opt("judge_script", c.judge_script);
    if (doc.contains("panel_sizes")) c.panel_sizes = doc.at("panel_sizes").get<std::vector<int>>();
    if (doc.contains("theta")) c.theta = doc.at("theta").get<double>();
    if (doc.contains("sweep")) c.sweep = doc.at("sweep").get<std::vector<double>>();
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("workers")) c.workers = doc.at("workers").get<int>();
    if (doc.contains("condition")) {
      c.condition = parse_condition(doc.at("condition").get<std::string>());
    }
    if (doc.contains("run_label")) c.run_label = doc.at("run_label").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open run config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("run config " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  json doc;
  doc["backend"] = to_string(c.backend);
  doc["target"] = endpoint_to_json(c.target);
  doc["judge"] = endpoint_to_json(c.judge);
  doc["embedding"] = endpoint_to_json(c.embedding);
  doc["embedding_dimension"] = c.embedding_dimension;
  auto put = [&](const char* key, const std::optional<std::filesystem::path>& p) {
    if (p) doc[key] = p->string();
  };
  put("embedding_cache", c.embedding_cache);
  put("pool", c.pool_path);
  put("catalog", c.catalog_path);
  put("target_script", c.target_script);
  put("judge_script", c.judge_script);
  doc["panel_sizes"] = c.panel_sizes;
  doc["theta"] = c.theta;
  doc["sweep"] = c.sweep;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  doc["condition"] = to_string(c.condition);
  doc["run_label"] = c.run_label;
  return doc;
}

}  // namespace agentpanel
