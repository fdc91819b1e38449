// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentpanel/dedup_engine.hpp"
#include "agentpanel/session_runtime.hpp"

namespace agentpanel {

/// OpenAI-compatible endpoint settings. The key is read from `api_key_env`
/// at request time; an unset variable sends no Authorization header.
struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model;
  double temperature = 0.7;
  std::string api_key_env = "AGENTPANEL_API_KEY";
  std::chrono::seconds timeout{60};
};

/// Minimal client for POST /v1/chat/completions and /v1/embeddings.
/// Transport failures and non-2xx statuses raise BackendError; malformed
/// bodies raise ParseError.
class ChatCompletionClient {
 public:
  explicit ChatCompletionClient(EndpointConfig config);
  ~ChatCompletionClient();
  ChatCompletionClient(const ChatCompletionClient&) = delete;
  ChatCompletionClient& operator=(const ChatCompletionClient&) = delete;

  std::string complete(const std::vector<ChatMessage>& messages);
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs);

  const EndpointConfig& config() const { return config_; }

 private:
  std::string post(const std::string& path, const std::string& body);

  EndpointConfig config_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class LiveTarget final : public TargetClient {
 public:
  /// `system_prompt` is prepended to every request when non-empty.
  explicit LiveTarget(EndpointConfig config, std::string system_prompt = {});
  std::string respond(const TargetRequest& request) override;
  std::string id() const override;

 private:
  ChatCompletionClient client_;
  std::string system_prompt_;
};

/// Chat-model judge. The composed context document is the system prompt; the
/// evaluation reply must contain a diary block.
class LiveJudge final : public JudgeBackend {
 public:
  explicit LiveJudge(EndpointConfig config);
  std::string compose_message(const JudgeContext& context) override;
  JudgeEvaluation evaluate(const JudgeContext& context, std::string_view response) override;
  std::string id() const override;

 private:
  ChatCompletionClient client_;
};

/// Holistic transcript scorer; the prompt carries the transcript only.
class LiveBlindScorer final : public TranscriptScorer {
 public:
  explicit LiveBlindScorer(EndpointConfig config);
  double score(std::span<const ConversationTurn> transcript) override;

 private:
  ChatCompletionClient client_;
};

/// Embedding client with an optional on-disk cache keyed by content hash.
/// Returned vectors are L2-normalized.
class LiveEmbedder final : public Embedder {
 public:
  LiveEmbedder(EndpointConfig config, std::size_t dimension,
               std::optional<std::filesystem::path> cache_dir = std::nullopt,
               std::size_t batch_size = 64);
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  ChatCompletionClient client_;
  std::size_t dimension_;
  std::optional<std::filesystem::path> cache_dir_;
  std::size_t batch_size_;
};

/// Renders a transcript as plain "User:/Assistant:" text.
std::string render_transcript(std::span<const ConversationTurn> transcript);

/// Reads the first number in [0,1] following "score:" (case-insensitive).
double parse_blind_score(std::string_view reply);

}  // namespace agentpanel
