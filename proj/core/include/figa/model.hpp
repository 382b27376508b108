#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "figa/token_align.hpp"
#include "figa/weighting.hpp"

namespace figa {

/// Token <-> id map. Ids 0 and 1 are reserved for the BOS padding and the query/response
/// separator; content tokens follow in the order they were added.
class Vocabulary {
 public:
  static constexpr int kBos = 0;
  static constexpr int kSep = 1;
  static constexpr const char* kBosToken = "<bos>";
  static constexpr const char* kSepToken = "<sep>";

  Vocabulary();
  /// Reserved tokens plus the sorted, deduplicated union of `tokens`.
  static Vocabulary from_tokens(std::span<const Token> tokens);

  int add(const Token& token);
  int id(const Token& token) const;  // throws VocabularyError
  bool contains(const Token& token) const { return index_.contains(token); }
  const Token& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<Token>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const Token> tokens) const;

 private:
  std::vector<Token> tokens_;
  std::unordered_map<Token, int> index_;
};

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embed = 16;
  std::size_t hidden = 32;
  std::size_t context = 2;  // fixed window; the model only supports 2

  std::size_t param_count() const;
  bool operator==(const ModelDims&) const = default;
};

/// Fixed-window MLP language model:
///   logits = W2 · tanh(W1 · [E(prev1); E(prev2)] + b1) + b2
/// All parameters live in one flat buffer (E, W1, b1, W2, b2, row-major), which is also the
/// layout used for gradients.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelDims dims);  // zero-initialised

  /// Uniform(-scale, scale) from a 64-bit Mersenne Twister seeded with `seed`.
  static ModelParams random(ModelDims dims, std::uint64_t seed, double scale = 0.1);

  const ModelDims& dims() const { return dims_; }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  std::span<double> embedding() { return block(0, dims_.vocab * dims_.embed); }
  std::span<double> w1() { return block(off_w1(), dims_.hidden * input_width()); }
  std::span<double> b1() { return block(off_b1(), dims_.hidden); }
  std::span<double> w2() { return block(off_w2(), dims_.vocab * dims_.hidden); }
  std::span<double> b2() { return block(off_b2(), dims_.vocab); }
  std::span<const double> embedding() const { return cblock(0, dims_.vocab * dims_.embed); }
  std::span<const double> w1() const { return cblock(off_w1(), dims_.hidden * input_width()); }
  std::span<const double> b1() const { return cblock(off_b1(), dims_.hidden); }
  std::span<const double> w2() const { return cblock(off_w2(), dims_.vocab * dims_.hidden); }
  std::span<const double> b2() const { return cblock(off_b2(), dims_.vocab); }

  std::size_t input_width() const { return dims_.context * dims_.embed; }
  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;

 private:
  std::size_t off_w1() const { return dims_.vocab * dims_.embed; }
  std::size_t off_b1() const { return off_w1() + dims_.hidden * input_width(); }
  std::size_t off_w2() const { return off_b1() + dims_.hidden; }
  std::size_t off_b2() const { return off_w2() + dims_.vocab * dims_.hidden; }
  std::span<double> block(std::size_t off, std::size_t n) { return {data_.data() + off, n}; }
  std::span<const double> cblock(std::size_t off, std::size_t n) const {
    return {data_.data() + off, n};
  }

  ModelDims dims_;
  std::vector<double> data_;
};

using Gradient = ModelParams;

/// A weighted training example in token form.
struct WeightedRecord {
  std::string id;
  TokenSeq query_tokens;    // X
  TokenSeq revised_tokens;  // Ỹ
  TokenSeq initial_tokens;  // Ŷ
  TokenWeights weights;
};

/// A WeightedRecord mapped through a vocabulary: each response is laid out as
/// [query..., SEP, response...] and scored from `response_start` on.
struct EncodedRecord {
  std::string id;
  std::vector<int> revised;
  std::vector<int> initial;
  std::size_t response_start = 0;
  std::vector<double> revised_weights;
  std::vector<double> initial_weights;
};

EncodedRecord encode(const WeightedRecord& record, const Vocabulary& vocab);
std::vector<int> conditioned_sequence(std::span<const Token> query, std::span<const Token> response,
                                      const Vocabulary& vocab);

/// Log-distributions for positions [first, last) of `sequence`. Position p conditions on
/// sequence[p-1] and sequence[p-2], BOS-padded before the start; p may equal sequence.size().
std::vector<std::vector<double>> log_probs(const ModelParams& params, std::span<const int> sequence,
                                           std::size_t first, std::size_t last);

struct LossReport {
  double encourage_term = 0.0;  // -Σ r̃ log π(ỹ_t | ·)
  double penalty_term = 0.0;    // +Σ r̂ log π(ŷ_t | ·)
  double total = 0.0;           // encourage_term + penalty_term
  std::size_t encouraged_tokens = 0;  // revised tokens with weight > 0
  std::size_t penalized_tokens = 0;   // initial tokens with weight > 0
  std::size_t ignored_tokens = 0;     // zero-weight tokens on either side

  LossReport& operator+=(const LossReport& other);
};

LossReport figa_loss(const ModelParams& params, const EncodedRecord& record);
LossReport figa_loss(const ModelParams& params, const WeightedRecord& record,
                     const Vocabulary& vocab);

/// Teacher-forced −Σ log π over `target`, conditioned on `query`.
double sft_loss(const ModelParams& params, std::span<const int> query, std::span<const int> target);
double sft_loss(const ModelParams& params, std::span<const Token> query,
                std::span<const Token> target, const Vocabulary& vocab);

/// Analytic gradient of figa_loss(...).total. When `report` is non-null it receives the loss.
Gradient grad(const ModelParams& params, const EncodedRecord& record, LossReport* report = nullptr);

}  // namespace figa
