#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace figa {

// What a prompt is for. In-process only: stubs and logs look at it, the wire never sees it.
enum class PromptKind { Rollout, ReasonAnalysis, Revision, WordAnnotation, Other };

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  nlohmann::json extra = nlohmann::json::object();  // passed through verbatim into the body

  PromptKind kind = PromptKind::Other;
  // The prompt's inputs, kept alongside the rendered text (query, response 1, response 2).
  std::string query;
  std::string first;
  std::string second;
};

/// Body of the chat-completions POST.
nlohmann::json to_wire(const ChatRequest& request);
/// Extracts choices[0].message.content; throws ServiceError carrying the raw payload.
std::string parse_completion_response(const std::string& payload);

class CompletionService {
 public:
  virtual ~CompletionService() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string identity() const = 0;
};

struct ScoreRequest {
  std::string query;
  std::string response;
  // Only the bundled stub reads this; deployment scorers never receive it.
  std::string reference;
};

class RewardService {
 public:
  virtual ~RewardService() = default;
  virtual double score(const ScoreRequest& request) = 0;
  virtual std::string identity() const = 0;
};

/// Body {"query", "response"} of the reward POST.
nlohmann::json to_wire(const ScoreRequest& request);
/// Extracts the numeric "score" field; throws ServiceError on anything else.
double parse_score_response(const std::string& payload);

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds budget{60'000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

/// Runs `call` until it stops throwing TransportError, doubling the backoff between attempts.
/// Gives up with ServiceError after `attempts` tries or once the budget is spent.
std::string with_retry(const RetryPolicy& policy, const std::string& what,
                       const std::function<std::string()>& call);

struct HttpEndpoint {
  std::string url;  // scheme://host[:port]/path
  std::string bearer_token;
};

class HttpCompletionService final : public CompletionService {
 public:
  HttpCompletionService(HttpEndpoint endpoint, RetryPolicy policy = {});
  std::string complete(const ChatRequest& request) override;
  std::string identity() const override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy policy_;
};

class HttpRewardService final : public RewardService {
 public:
  HttpRewardService(HttpEndpoint endpoint, RetryPolicy policy = {});
  double score(const ScoreRequest& request) override;
  std::string identity() const override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy policy_;
};

/// Scores 5·J − 1, J = Jaccard similarity of the response's and reference's token sets.
class JaccardStubReward final : public RewardService {
 public:
  double score(const ScoreRequest& request) override;
  std::string identity() const override { return "stub-jaccard"; }
};

/// Deterministic offline completion service.
///   rollout        -> "STUB:" + query
///   reason         -> one of A-D, chosen by hashing (seed, response 1)
///   revision       -> response 1 moved toward response 2: each edit of the minimal script
///                     is applied with probability 3/4, chosen by hashing (seed, edit)
///   annotation     -> tuples scoring (5) every better-response word absent from the original
class StubCompletion final : public CompletionService {
 public:
  explicit StubCompletion(std::uint64_t seed = 0) : seed_(seed) {}
  std::string complete(const ChatRequest& request) override;
  std::string identity() const override;

 private:
  std::uint64_t seed_;
};

/// Wraps a callable; handy for scripted responses in tests.
class FunctionCompletion final : public CompletionService {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionCompletion(Fn fn, std::string name = "function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string complete(const ChatRequest& request) override { return fn_(request); }
  std::string identity() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

/// 64-bit FNV-1a; stable across platforms, used for seeded stub choices and config hashes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace figa
