#include "figa/services.hpp"

#include <set>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "figa/error.hpp"
#include "figa/token_align.hpp"

namespace figa {
namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string post_json(const HttpEndpoint& endpoint, const nlohmann::json& body,
                      milliseconds timeout) {
  const ParsedUrl url = split_url(endpoint.url);
  httplib::Client client(url.origin);
  const auto secs = std::max<long long>(1, timeout.count() / 1000);
  client.set_connection_timeout(std::min<long long>(secs, 10), 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);

  httplib::Headers headers;
  if (!endpoint.bearer_token.empty())
    headers.emplace("Authorization", "Bearer " + endpoint.bearer_token);

  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("POST " + endpoint.url + ": " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransportError("POST " + endpoint.url + ": HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw ServiceError("POST " + endpoint.url + ": HTTP " + std::to_string(res->status), res->body);
  return res->body;
}

std::string strip_scheme_secret(const std::string& url) {
  // Identity strings land in metadata; drop any query string that might carry a key.
  return url.substr(0, url.find('?'));
}

// Quoted word for the stub annotator's tuple list.
std::string quote(const std::string& word) {
  std::string out = "\"";
  for (char c : word) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json to_wire(const ChatRequest& request) {
  nlohmann::json body = request.extra.is_object() ? request.extra : nlohmann::json::object();
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  auto& messages = body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return body;
}

std::string parse_completion_response(const std::string& payload) {
  try {
    const auto doc = nlohmann::json::parse(payload);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("malformed completion response: ") + e.what(), payload);
  }
}

nlohmann::json to_wire(const ScoreRequest& request) {
  return {{"query", request.query}, {"response", request.response}};
}

double parse_score_response(const std::string& payload) {
  try {
    const auto doc = nlohmann::json::parse(payload);
    const auto& score = doc.at("score");
    if (!score.is_number()) throw ServiceError("reward score is not a number", payload);
    const double value = score.get<double>();
    if (!std::isfinite(value)) throw ServiceError("reward score is not finite", payload);
    return value;
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("malformed reward response: ") + e.what(), payload);
  }
}

std::string with_retry(const RetryPolicy& policy, const std::string& what,
                       const std::function<std::string()>& call) {
  const auto start = Clock::now();
  milliseconds backoff = policy.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      return call();
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    if (attempt == policy.attempts) break;
    const auto elapsed = std::chrono::duration_cast<milliseconds>(Clock::now() - start);
    if (elapsed + backoff >= policy.budget) break;
    if (policy.sleep)
      policy.sleep(backoff);
    else
      std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
  throw ServiceError(what + " failed after retries: " + last_error);
}

HttpCompletionService::HttpCompletionService(HttpEndpoint endpoint, RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)) {}

std::string HttpCompletionService::complete(const ChatRequest& request) {
  const auto body = to_wire(request);
  const std::string payload = with_retry(policy_, "completion", [&] {
    return post_json(endpoint_, body, policy_.budget);
  });
  return parse_completion_response(payload);
}

std::string HttpCompletionService::identity() const {
  return "http:" + strip_scheme_secret(endpoint_.url);
}

HttpRewardService::HttpRewardService(HttpEndpoint endpoint, RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)) {}

double HttpRewardService::score(const ScoreRequest& request) {
  const auto body = to_wire(request);
  const std::string payload = with_retry(policy_, "reward scoring", [&] {
    return post_json(endpoint_, body, policy_.budget);
  });
  return parse_score_response(payload);
}

std::string HttpRewardService::identity() const {
  return "http:" + strip_scheme_secret(endpoint_.url);
}

double JaccardStubReward::score(const ScoreRequest& request) {
  const TokenSeq a = tokenize(request.response);
  const TokenSeq b = tokenize(request.reference);
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const std::size_t all = sa.size() + sb.size() - common;
  const double jaccard = all == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(all);
  return 5.0 * jaccard - 1.0;
}

std::string StubCompletion::identity() const { return "stub-completion:seed=" + std::to_string(seed_); }

std::string StubCompletion::complete(const ChatRequest& request) {
  switch (request.kind) {
    case PromptKind::Rollout:
      return "STUB:" + request.query;
    case PromptKind::ReasonAnalysis: {
      static constexpr char letters[] = {'A', 'B', 'C', 'D'};
      return std::string(1, letters[fnv1a(request.first, seed_) % 4]);
    }
    case PromptKind::Revision: {
      const TokenSeq a = tokenize(request.first);
      const TokenSeq b = tokenize(request.second);
      const EditScript script = edit_script(a, b);
      const std::uint64_t base = fnv1a(request.first, seed_ ^ 0x9e3779b97f4a7c15ULL);
      std::size_t op = 0;
      const auto apply = [&] { return (fnv1a(std::to_string(op++), base) & 3) != 0; };

      TokenSeq out;
      std::size_t i = 0;
      std::size_t j = 0;
      while (i < a.size() || j < b.size()) {
        if (i < a.size() && script.initial_tags[i] == TokenTag::Deleted) {
          if (!apply()) out.push_back(a[i]);
          ++i;
        } else if (j < b.size() && script.revised_tags[j] == TokenTag::Added) {
          if (apply()) out.push_back(b[j]);
          ++j;
        } else {
          const bool sub = script.initial_tags[i] == TokenTag::Substituted;
          out.push_back(sub && apply() ? b[j] : a[i]);
          ++i;
          ++j;
        }
      }
      return out.empty() ? request.second : detokenize(out);
    }
    case PromptKind::WordAnnotation: {
      const TokenSeq original = tokenize(request.first);
      const std::set<std::string> seen(original.begin(), original.end());
      std::string out = "[";
      for (const Token& w : tokenize(request.second)) {
        if (seen.contains(w)) continue;
        if (out.size() > 1) out += ", ";
        out += "(" + quote(w) + ", 5)";
      }
      return out + "]";
    }
    case PromptKind::Other:
      break;
  }
  return "STUB";
}

}  // namespace figa
