// SPDX-License-Identifier: Apache-2.0
// Live clients against an in-process OpenAI-compatible mock.
#include <gtest/gtest.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agentpanel/error.hpp"
#include "agentpanel/live_backends.hpp"
#include "agentpanel/session_runtime.hpp"
#include "test_support.hpp"

using namespace agentpanel;
using nlohmann::json;

namespace {

class MockServer {
 public:
  MockServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        auth_ = req.get_header_value("Authorization");
        last_chat_ = body;
        ++chat_calls_;
      }
      const auto& messages = body.at("messages");
      const auto system = messages.front().at("content").get<std::string>();
      const auto last = messages.back().at("content").get<std::string>();
      std::string content = "Sure, here is how to do that.";
      if (system.rfind("Rate", 0) == 0) {
        content = "Score: 0.73";
      } else if (last.find("diary block") != std::string::npos) {
        content = "```diary\nq: 0.55\ngoal_met: true\ninsight: clarity | low | issue | too long\n```";
      } else if (last.find("next message") != std::string::npos) {
        content = "How do I reset my password?";
      }
      res.set_content(json{{"choices", {{{"message", {{"content", content}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json data = json::array();
      const auto inputs = body.at("input").get<std::vector<std::string>>();
      {
        std::lock_guard lock(mutex_);
        ++embed_calls_;
        embedded_ += inputs.size();
      }
      // Reverse order with explicit indices to exercise index handling.
      for (std::size_t i = inputs.size(); i-- > 0;) {
        const double len = static_cast<double>(inputs[i].size());
        const json vec = inputs[i] == "zero" ? json{0.0, 0.0, 0.0} : json{len, 1.0, 2.0};
        data.push_back({{"index", i}, {"embedding", vec}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    server_.Post("/down/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
    });
    server_.Post("/garbled/v1/chat/completions",
                 [](const httplib::Request&, httplib::Response& res) {
                   res.set_content("{\"choices\": []}", "application/json");
                 });
    server_.Post("/garbled/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"data\": [{\"index\": 7, \"embedding\": [1]}]}", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint(const std::string& prefix = "") const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + prefix;
    c.model = "mock-model";
    c.api_key_env = "AGENTPANEL_TEST_KEY";
    c.timeout = std::chrono::seconds(5);
    return c;
  }

  std::string auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }
  json last_chat() {
    std::lock_guard lock(mutex_);
    return last_chat_;
  }
  int chat_calls() {
    std::lock_guard lock(mutex_);
    return chat_calls_;
  }
  int embed_calls() {
    std::lock_guard lock(mutex_);
    return embed_calls_;
  }
  std::size_t embedded() {
    std::lock_guard lock(mutex_);
    return embedded_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  std::string auth_;
  json last_chat_;
  int chat_calls_ = 0;
  int embed_calls_ = 0;
  std::size_t embedded_ = 0;
};

MockServer& mock() {
  static MockServer server;
  return server;
}

}  // namespace

TEST(Client, SendsModelMessagesAndBearerToken) {
  ::setenv("AGENTPANEL_TEST_KEY", "sk-test-123", 1);
  auto cfg = mock().endpoint();
  cfg.temperature = 0.3;
  ChatCompletionClient client(cfg);
  EXPECT_EQ(client.complete({{"user", "hello"}}), "Sure, here is how to do that.");
  EXPECT_EQ(mock().auth(), "Bearer sk-test-123");
  const auto body = mock().last_chat();
  EXPECT_EQ(body["model"], "mock-model");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.3);
  EXPECT_EQ(body["messages"][0]["role"], "user");

  ::unsetenv("AGENTPANEL_TEST_KEY");
  client.complete({{"user", "again"}});
  EXPECT_EQ(mock().auth(), "");
}

TEST(Client, ErrorsMapToExceptions) {
  ChatCompletionClient down(mock().endpoint("/down"));
  EXPECT_THROW(down.complete({{"user", "x"}}), BackendError);
  ChatCompletionClient garbled(mock().endpoint("/garbled"));
  EXPECT_THROW(garbled.complete({{"user", "x"}}), ParseError);
  EXPECT_THROW(garbled.embed({"a"}), ParseError);

  auto closed = mock().endpoint();
  closed.base_url = "http://127.0.0.1:1";
  closed.timeout = std::chrono::seconds(1);
  ChatCompletionClient refused(closed);
  EXPECT_THROW(refused.complete({{"user", "x"}}), BackendError);
}

TEST(Backends, TargetJudgeAndBlindScorer) {
  LiveTarget target(mock().endpoint(), "You are a support bot.");
  TargetRequest req;
  req.turn = 1;
  req.history = {{"user", "hi"}};
  EXPECT_EQ(target.respond(req), "Sure, here is how to do that.");
  const auto body = mock().last_chat();
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(target.id(), "live:mock-model");

  LiveJudge judge(mock().endpoint());
  const PersonaSpec persona;
  const TaskSpec task;
  const SessionMemory memory;
  const EmotionalState state;
  const JudgeContext ctx{persona, task, Condition::Structured, memory, state, 2, "Persona: test"};
  EXPECT_EQ(judge.compose_message(ctx), "How do I reset my password?");
  const auto ev = judge.evaluate(ctx, "Try the reset link.");
  EXPECT_DOUBLE_EQ(ev.q, 0.55);
  EXPECT_TRUE(ev.goal_met);
  ASSERT_EQ(ev.insights.size(), 1u);
  EXPECT_EQ(mock().last_chat()["messages"][0]["content"], "Persona: test");

  LiveBlindScorer scorer(mock().endpoint());
  const std::vector<ConversationTurn> turns = {{1, "hi", "hello"}};
  EXPECT_DOUBLE_EQ(scorer.score(turns), 0.73);
  const auto user = mock().last_chat()["messages"][1]["content"].get<std::string>();
  EXPECT_EQ(user, "User: hi\nAssistant: hello\n");
}

TEST(Backends, BlindScoreParsing) {
  EXPECT_DOUBLE_EQ(parse_blind_score("SCORE: 0.4 because"), 0.4);
  EXPECT_THROW(parse_blind_score("no number"), ParseError);
  EXPECT_THROW(parse_blind_score("score: high"), ParseError);
  EXPECT_THROW(parse_blind_score("score: 3"), RangeError);
}

TEST(Embedder, NormalizesBatchesAndCaches) {
  testing_support::TempDir dir;
  const std::vector<std::string> texts = {"a", "bbb", "cc", "a"};
  const int calls_before = mock().embed_calls();
  const auto sent_before = mock().embedded();
  {
    LiveEmbedder e(mock().endpoint(), 3, dir / "cache", 2);
    const auto v = e.embed(texts);
    ASSERT_EQ(v.size(), 4u);
    for (const auto& x : v) EXPECT_NEAR(x[0] * x[0] + x[1] * x[1] + x[2] * x[2], 1.0, 1e-12);
    EXPECT_NEAR(v[1][0], 3.0 / std::sqrt(14.0), 1e-12);
    EXPECT_EQ(v[0], v[3]);
    EXPECT_EQ(mock().embed_calls() - calls_before, 2);
  }
  LiveEmbedder again(mock().endpoint(), 3, dir / "cache", 2);
  const auto v = again.embed(texts);
  EXPECT_EQ(mock().embed_calls() - calls_before, 2);  // all served from cache
  EXPECT_EQ(mock().embedded() - sent_before, 4u);
  EXPECT_NEAR(v[2][0], 2.0 / std::sqrt(9.0), 1e-12);
}

TEST(Embedder, UnusableVectorsAreReported) {
  LiveEmbedder e(mock().endpoint(), 3);
  const std::vector<std::string> texts = {"ok", "zero", "fine"};
  try {
    e.embed(texts);
    FAIL();
  } catch (const EmbeddingError& err) {
    EXPECT_EQ(err.failed_indices, (std::vector<std::size_t>{1}));
  }
  LiveEmbedder wrong_dim(mock().endpoint(), 4);
  EXPECT_THROW(wrong_dim.embed(texts), EmbeddingError);
  LiveEmbedder garbled(mock().endpoint("/garbled"), 1);
  EXPECT_THROW(garbled.embed(texts), EmbeddingError);
}
