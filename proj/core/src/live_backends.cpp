// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/live_backends.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "agentpanel/error.hpp"

namespace agentpanel {
namespace {

using nlohmann::json;

// Splits "scheme://host[:port][/prefix]" into the httplib origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

EmbeddingVector normalized(EmbeddingVector v) {
  double norm = 0.0;
  for (const double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return v;
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

struct ChatCompletionClient::Impl {
  explicit Impl(const std::string& origin) : http(origin) {}
  httplib::Client http;
  std::string prefix;
};

ChatCompletionClient::ChatCompletionClient(EndpointConfig config) : config_(std::move(config)) {
  auto [origin, prefix] = split_base_url(config_.base_url);
  impl_ = std::make_unique<Impl>(origin);
  impl_->prefix = prefix;
  impl_->http.set_connection_timeout(config_.timeout);
  impl_->http.set_read_timeout(config_.timeout);
  impl_->http.set_write_timeout(config_.timeout);
}

ChatCompletionClient::~ChatCompletionClient() = default;

std::string ChatCompletionClient::post(const std::string& path, const std::string& body) {
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const auto res = impl_->http.Post(impl_->prefix + path, headers, body, "application/json");
  if (!res) {
    throw BackendError("request to " + config_.base_url + path + " failed: " +
                       httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("endpoint " + path + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::string ChatCompletionClient::complete(const std::vector<ChatMessage>& messages) {
  json req;
  req["model"] = config_.model;
  req["temperature"] = config_.temperature;
  req["messages"] = json::array();
  for (const auto& m : messages) req["messages"].push_back({{"role", m.role}, {"content", m.content}});
  const auto body = post("/v1/chat/completions", req.dump());
  try {
    const auto doc = json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ParseError("chat completion content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed chat completion response: ") + e.what());
  }
}

std::vector<EmbeddingVector> ChatCompletionClient::embed(const std::vector<std::string>& inputs) {
  json req;
  req["model"] = config_.model;
  req["input"] = inputs;
  const auto body = post("/v1/embeddings", req.dump());
  try {
    const auto doc = json::parse(body);
    const auto& data = doc.at("data");
    std::vector<EmbeddingVector> out(inputs.size());
    std::vector<bool> seen(inputs.size(), false);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data.at(i);
      const std::size_t index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (index >= inputs.size()) throw ParseError("embedding index out of range");
      out[index] = item.at("embedding").get<EmbeddingVector>();
      seen[index] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) throw ParseError("embedding response is missing input " + std::to_string(i));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed embedding response: ") + e.what());
  }
}

LiveTarget::LiveTarget(EndpointConfig config, std::string system_prompt)
    : client_(std::move(config)), system_prompt_(std::move(system_prompt)) {}

std::string LiveTarget::respond(const TargetRequest& request) {
  std::vector<ChatMessage> messages;
  if (!system_prompt_.empty()) messages.push_back({"system", system_prompt_});
  messages.insert(messages.end(), request.history.begin(), request.history.end());
  return client_.complete(messages);
}

std::string LiveTarget::id() const { return "live:" + client_.config().model; }

LiveJudge::LiveJudge(EndpointConfig config) : client_(std::move(config)) {}

std::string LiveJudge::compose_message(const JudgeContext& context) {
  return client_.complete(
      {{"system", context.document},
       {"user", "Write only your next message to the assistant for turn " +
                    std::to_string(context.turn) + ". No diary yet."}});
}

JudgeEvaluation LiveJudge::evaluate(const JudgeContext& context, std::string_view response) {
  const auto reply = client_.complete(
      {{"system", context.document},
       {"user", "The assistant replied:\n" + std::string(response) +
                    "\n\nNow write your private diary block for this turn."}});
  return parse_diary(reply);
}

std::string LiveJudge::id() const { return "live:" + client_.config().model; }

std::string render_transcript(std::span<const ConversationTurn> transcript) {
  std::ostringstream out;
  for (const auto& t : transcript) {
    out << "User: " << t.judge_message << "\n";
    out << "Assistant: " << t.target_response << "\n";
  }
  return out.str();
}

double parse_blind_score(std::string_view reply) {
  std::string lowered(reply);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto at = lowered.find("score:");
  if (at == std::string::npos) throw ParseError("blind score reply has no 'score:' field");
  const std::string rest = lowered.substr(at + 6);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(rest, &used);
  } catch (const std::exception&) {
    throw ParseError("blind score is not a number");
  }
  if (!(value >= 0.0 && value <= 1.0)) throw RangeError("blind score outside [0,1]");
  return value;
}

LiveBlindScorer::LiveBlindScorer(EndpointConfig config) : client_(std::move(config)) {}

double LiveBlindScorer::score(std::span<const ConversationTurn> transcript) {
  const auto reply = client_.complete(
      {{"system",
        "Rate the assistant's overall helpfulness in this conversation on a 0 to 1 scale. "
        "Answer with a single line 'score: <value>'."},
       {"user", render_transcript(transcript)}});
  return parse_blind_score(reply);
}

LiveEmbedder::LiveEmbedder(EndpointConfig config, std::size_t dimension,
                           std::optional<std::filesystem::path> cache_dir, std::size_t batch_size)
    : client_(std::move(config)),
      dimension_(dimension),
      cache_dir_(std::move(cache_dir)),
      batch_size_(batch_size == 0 ? 1 : batch_size) {
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

std::vector<EmbeddingVector> LiveEmbedder::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> keys(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (cache_dir_) {
      keys[i] = sha256_hex(client_.config().model + '\n' + texts[i]);
      std::ifstream in(*cache_dir_ / (keys[i] + ".json"));
      if (in) {
        try {
          out[i] = json::parse(in).get<EmbeddingVector>();
          if (out[i].size() == dimension_) continue;
        } catch (const json::exception&) {
          // Corrupt cache entry: fetch again.
        }
      }
    }
    missing.push_back(i);
  }

  std::vector<std::size_t> failed;
  for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
    const std::size_t end = std::min(missing.size(), start + batch_size_);
    std::vector<std::string> batch;
    for (std::size_t j = start; j < end; ++j) batch.push_back(texts[missing[j]]);
    std::vector<EmbeddingVector> got;
    try {
      got = client_.embed(batch);
    } catch (const Error& e) {
      std::vector<std::size_t> idx(missing.begin() + static_cast<std::ptrdiff_t>(start),
                                   missing.begin() + static_cast<std::ptrdiff_t>(end));
      throw EmbeddingError(std::string("embedding request failed: ") + e.what(), idx);
    }
    for (std::size_t j = start; j < end; ++j) {
      const std::size_t i = missing[j];
      auto v = normalized(std::move(got[j - start]));
      double norm = 0.0;
      for (const double x : v) norm += x * x;
      if (v.size() != dimension_ || norm == 0.0) {
        failed.push_back(i);
        continue;
      }
      if (cache_dir_) {
        std::ofstream(*cache_dir_ / (keys[i] + ".json")) << json(v).dump();
      }
      out[i] = std::move(v);
    }
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << "embedding endpoint returned unusable vectors at indices";
    for (const auto i : failed) msg << ' ' << i;
    throw EmbeddingError(msg.str(), failed);
  }
  return out;
}

}  // namespace agentpanel
