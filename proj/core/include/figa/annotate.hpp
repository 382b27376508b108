#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "figa/model.hpp"
#include "figa/spa.hpp"
#include "figa/weighting.hpp"

namespace figa {

/// Per-token NLLs (nats) of the initial response under a frozen model.
using NllSource = std::function<std::vector<double>(const TokenSeq& query, const TokenSeq& initial)>;

/// Teacher-forced −log π(ŷ_t | ŷ_<t, X) under `params`.
std::vector<double> token_nlls(const ModelParams& params, const Vocabulary& vocab,
                               const TokenSeq& query, const TokenSeq& initial);

struct AnnotateOptions {
  WeightConfig weight;
  // Used when a record carries no initial_nlls and the NLL mode is not None.
  std::optional<NllSource> nll_source;
  CompletionService* annotator = nullptr;  // required for the external-annotator strategy
  PromptSettings annotator_settings;
};

/// Tokenizes each record and attaches token weights under the configured strategy, then
/// applies the NLL filter to the initial side. Throws ConfigError when NLLs or an annotator
/// are needed but unavailable.
std::vector<WeightedRecord> annotate(const std::vector<SpaRecord>& records,
                                     const AnnotateOptions& options);

}  // namespace figa
