#include "figa/annotator.hpp"

#include <cctype>

#include "figa/error.hpp"

namespace figa {
namespace {

bool valid_score(long long s) { return s >= 0 && s <= 5; }

std::optional<WordScores> from_json(const std::string& reply) {
  const auto doc = nlohmann::json::parse(reply, nullptr, /*allow_exceptions=*/false);
  if (!doc.is_array()) return std::nullopt;
  WordScores out;
  for (const auto& item : doc) {
    if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_number_integer()) {
      out.emplace_back(item[0].get<std::string>(), item[1].get<int>());
    } else if (item.is_object() && item.contains("word") && item.contains("score") &&
               item["word"].is_string() && item["score"].is_number_integer()) {
      out.emplace_back(item["word"].get<std::string>(), item["score"].get<int>());
    } else {
      return std::nullopt;
    }
    if (!valid_score(out.back().second)) return std::nullopt;
  }
  return out;
}

// Scans for ('word', 3) / ("word", 3) tuples anywhere in free text.
std::optional<WordScores> from_tuples(const std::string& s) {
  WordScores out;
  std::size_t i = 0;
  const auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  while ((i = s.find('(', i)) != std::string::npos) {
    ++i;
    skip_ws();
    if (i >= s.size() || (s[i] != '"' && s[i] != '\'')) continue;
    const char q = s[i++];
    std::string word;
    bool closed = false;
    while (i < s.size()) {
      const char c = s[i++];
      if (c == '\\' && i < s.size()) {
        word += s[i++];
      } else if (c == q) {
        closed = true;
        break;
      } else {
        word += c;
      }
    }
    if (!closed) return std::nullopt;
    skip_ws();
    if (i >= s.size() || s[i] != ',') return std::nullopt;
    ++i;
    skip_ws();
    std::size_t digits = i;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    if (digits == i || digits - i > 3) return std::nullopt;
    const long long score = std::stoll(s.substr(i, digits - i));
    i = digits;
    skip_ws();
    if (i >= s.size() || s[i] != ')') return std::nullopt;
    if (!valid_score(score)) return std::nullopt;
    out.emplace_back(std::move(word), static_cast<int>(score));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace

std::optional<WordScores> parse_word_scores(const std::string& reply) {
  if (auto j = from_json(reply)) return j;
  return from_tuples(reply);
}

TokenWeights weights_from_word_scores(const WordScores& scores, const TokenSeq& revised,
                                      std::size_t initial_size, AnnotatorMode mode) {
  constexpr double kUnaddressed = 0.3;
  constexpr double kLow = 0.7;
  constexpr double kHigh = 1.3;

  TokenWeights w;
  w.initial_weights.assign(initial_size, 0.0);
  w.revised_weights.assign(revised.size(), mode == AnnotatorMode::Weighted ? kUnaddressed : 0.0);
  std::vector<bool> claimed(revised.size(), false);

  for (const auto& [word, score] : scores) {
    for (const Token& piece : tokenize(word)) {
      for (std::size_t t = 0; t < revised.size(); ++t) {
        if (claimed[t] || revised[t] != piece) continue;
        claimed[t] = true;
        w.revised_weights[t] = mode == AnnotatorMode::Weighted
                                   ? kLow + (kHigh - kLow) * static_cast<double>(score) / 5.0
                                   : (score != 0 ? 1.0 : 0.0);
        break;
      }
    }
  }
  return w;
}

TokenWeights external_annotator_weights(const SpaRecord& record, CompletionService& annotator,
                                        AnnotatorMode mode, const PromptSettings& settings) {
  const ChatRequest req = annotation_prompt(record.instance.query, record.initial_response,
                                            record.revised_response, settings);
  constexpr int kAttempts = 3;
  std::string reply;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    reply = annotator.complete(req);
    if (const auto scores = parse_word_scores(reply)) {
      return weights_from_word_scores(*scores, tokenize(record.revised_response),
                                      tokenize(record.initial_response).size(), mode);
    }
  }
  throw ServiceError("annotator reply is not a list of (word, score) tuples", reply);
}

}  // namespace figa
