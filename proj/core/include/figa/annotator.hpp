#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "figa/prompts.hpp"
#include "figa/spa.hpp"
#include "figa/weighting.hpp"

namespace figa {

using WordScores = std::vector<std::pair<std::string, int>>;

/// Reads a list of (word, score) tuples, Python-tuple or JSON style. Scores must be
/// integers in [0, 5]. Returns nullopt when the reply is not such a list.
std::optional<WordScores> parse_word_scores(const std::string& reply);

/// Weights from word scores. Weighted: matched words get 0.7 + 0.6·score/5, the rest 0.3.
/// Binary: 1 for words with a nonzero score, else 0. Each word claims the first revised
/// token equal to it (case-sensitive) that no earlier word claimed. Initial side is all 0.
TokenWeights weights_from_word_scores(const WordScores& scores, const TokenSeq& revised,
                                      std::size_t initial_size, AnnotatorMode mode);

/// Asks the annotator to score the revision's words; three attempts before giving up with a
/// ServiceError carrying the last raw reply.
TokenWeights external_annotator_weights(const SpaRecord& record, CompletionService& annotator,
                                        AnnotatorMode mode, const PromptSettings& settings = {});

}  // namespace figa
