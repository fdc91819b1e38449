// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentpanel/live_backends.hpp"
#include "agentpanel/session_runtime.hpp"

namespace agentpanel {

inline constexpr int kSchemaVersion = 1;

/// Throws ValidationError naming the first offending field, e.g.
/// "diary[2].q: 1.2 outside [0,1]".
void validate_session(const SessionRecord& record);

nlohmann::json session_to_json(const SessionRecord& record);
/// Strict inverse of session_to_json; also validates.
SessionRecord session_from_json(const nlohmann::json& doc);

/// One JSONL line without the trailing newline.
std::string serialize_session(const SessionRecord& record);
SessionRecord parse_session_line(std::string_view line);

struct SessionKey {
  std::string run_label;
  std::string task_id;
  int persona_id = 0;
  Condition condition = Condition::Structured;

  friend auto operator<=>(const SessionKey&, const SessionKey&) = default;
};
SessionKey key_of(const SessionRecord& record);

struct LoadReport {
  std::size_t records = 0;
  bool truncated_tail = false;  // final line was incomplete or unparsable
  std::string tail;             // the dropped bytes
};

/// Reads every complete record. An incomplete final line is skipped and
/// reported; a corrupt line anywhere else throws ValidationError with its
/// line number. The file is not modified.
std::vector<SessionRecord> load_sessions(const std::filesystem::path& path,
                                         LoadReport* report = nullptr);

/// Append-only JSONL store with a unique (run, task, persona, condition) key.
///
/// Opening a store whose final line is incomplete moves that line to
/// "<path>.quarantine" and truncates the file back to the last newline.
/// append() is serialized by a mutex and flushed to disk before returning.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path path);

  void append(const SessionRecord& record);
  bool contains(const SessionKey& key) const;
  std::vector<SessionRecord> records() const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }
  const LoadReport& load_report() const { return report_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<SessionRecord> records_;
  std::set<SessionKey> keys_;
  LoadReport report_;
};

/// Writes records to a fresh file (replacing any existing one).
void write_sessions(const std::filesystem::path& path, std::span<const SessionRecord> records);

enum class BackendKind { Live, Scripted, Synthetic };
std::string_view to_string(BackendKind b);
BackendKind parse_backend(std::string_view name);

/// Experiment configuration, usually read from a JSON file.
struct RunConfig {
  BackendKind backend = BackendKind::Synthetic;
  EndpointConfig target;
  EndpointConfig judge;
  EndpointConfig embedding;
  std::size_t embedding_dimension = 1536;
  std::optional<std::filesystem::path> embedding_cache;
  std::optional<std::filesystem::path> pool_path;     // default: shipped pool
  std::optional<std::filesystem::path> catalog_path;  // default: shipped catalog
  std::optional<std::filesystem::path> target_script;
  std::optional<std::filesystem::path> judge_script;
  std::vector<int> panel_sizes = {1, 2, 3, 4, 5, 8, 12, 16, 24, 32};
  double theta = 0.65;
  std::vector<double> sweep = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};
  std::uint64_t seed = 0;
  int workers = 1;
  Condition condition = Condition::Structured;
  std::string run_label = "A";

  /// Checks referenced files exist and panel sizes lie in [1, pool_size].
  void validate(std::size_t pool_size) const;
};

/// Relative paths in the document resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace agentpanel
