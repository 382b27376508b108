#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "figa/token_align.hpp"

namespace figa {

// How penalized initial-side tokens are further selected by the rollout model's NLL.
enum class NllMode { Below, Inverted, None };

enum class WeightStrategy { Levenshtein, BagOfWords, ExternalAnnotator, RewardScaled };

// Only meaningful for WeightStrategy::ExternalAnnotator.
enum class AnnotatorMode { Weighted, Binary };

struct WeightConfig {
  double alpha = 1.0;  // added / substituted revised tokens
  double beta = 0.5;   // deleted / substituted initial tokens
  double gamma = 0.0;  // every other revised token
  double nll_threshold = 0.6;  // nats
  NllMode nll_mode = NllMode::Below;
  WeightStrategy strategy = WeightStrategy::Levenshtein;
  AnnotatorMode annotator_mode = AnnotatorMode::Weighted;

  /// Throws ConfigError when a coefficient is out of range.
  void validate() const;
  bool operator==(const WeightConfig&) const = default;
};

struct TokenWeights {
  std::vector<double> revised_weights;  // one per revised token
  std::vector<double> initial_weights;  // one per initial token
};

/// Reward-model scores for one instance. r_revised is unset until the revision is scored.
struct RewardTriple {
  double r_initial = 0.0;
  double r_reference = 0.0;
  std::optional<double> r_revised;
};

struct ScoreRange {
  double min = 0.0;
  double max = 0.0;
};

TokenWeights assign_weights(const EditScript& script, const WeightConfig& config);

/// Zeroes positive initial-side weights by NLL: Below keeps NLL < threshold,
/// Inverted keeps NLL >= threshold, None keeps everything. Revised weights pass through.
TokenWeights apply_nll_filter(TokenWeights weights, std::span<const double> initial_nlls,
                              const WeightConfig& config);

/// Revised token gets 1 iff its string never occurs in `initial`; initial side is all 0.
TokenWeights bag_of_words_weights(std::span<const Token> initial, std::span<const Token> revised);

/// alpha <- min-max(r_revised), beta <- min-max(r_initial), gamma <- 0, both clamped to [0, 1].
/// The returned config keeps `base`'s NLL settings and uses the RewardScaled strategy.
WeightConfig reward_scaled_config(const RewardTriple& rewards, ScoreRange revised_range,
                                  ScoreRange initial_range, const WeightConfig& base = {});

std::string_view to_string(NllMode mode);
std::string_view to_string(WeightStrategy strategy);
std::string_view to_string(AnnotatorMode mode);
NllMode parse_nll_mode(std::string_view text);
WeightStrategy parse_strategy(std::string_view text);
AnnotatorMode parse_annotator_mode(std::string_view text);

}  // namespace figa
