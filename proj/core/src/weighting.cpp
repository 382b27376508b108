#include "figa/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "figa/error.hpp"

namespace figa {
namespace {

bool tag_based(WeightStrategy s) {
  return s == WeightStrategy::Levenshtein || s == WeightStrategy::RewardScaled;
}

double min_max(double value, ScoreRange range) {
  return std::clamp((value - range.min) / (range.max - range.min), 0.0, 1.0);
}

}  // namespace

void WeightConfig::validate() const {
  const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(alpha) || !finite_nonneg(beta) || !finite_nonneg(gamma))
    throw ConfigError("weight coefficients must be finite and non-negative");
  // Reward-scaled coefficients legitimately hit 0 at the bottom of the score range.
  if ((strategy == WeightStrategy::Levenshtein || strategy == WeightStrategy::BagOfWords) &&
      !(alpha > 0.0))
    throw ConfigError("alpha must be positive for the " + std::string(to_string(strategy)) +
                      " strategy");
  if (!(nll_threshold > 0.0) || !std::isfinite(nll_threshold))
    throw ConfigError("nll_threshold must be positive");
}

TokenWeights assign_weights(const EditScript& script, const WeightConfig& config) {
  if (!tag_based(config.strategy))
    throw ConfigError("assign_weights needs a tag-based strategy, got " +
                      std::string(to_string(config.strategy)));
  config.validate();

  TokenWeights w;
  w.revised_weights.reserve(script.revised_tags.size());
  for (const TokenTag tag : script.revised_tags) {
    const bool encouraged = tag == TokenTag::Added || tag == TokenTag::Substituted;
    w.revised_weights.push_back(encouraged ? config.alpha : config.gamma);
  }
  w.initial_weights.reserve(script.initial_tags.size());
  for (const TokenTag tag : script.initial_tags) {
    const bool penalized = tag == TokenTag::Deleted || tag == TokenTag::Substituted;
    w.initial_weights.push_back(penalized ? config.beta : 0.0);
  }
  return w;
}

TokenWeights apply_nll_filter(TokenWeights weights, std::span<const double> initial_nlls,
                              const WeightConfig& config) {
  if (initial_nlls.size() != weights.initial_weights.size())
    throw StructuralError("NLL count " + std::to_string(initial_nlls.size()) +
                          " != initial token count " +
                          std::to_string(weights.initial_weights.size()));
  if (config.nll_mode == NllMode::None) return weights;

  for (std::size_t t = 0; t < initial_nlls.size(); ++t) {
    double& w = weights.initial_weights[t];
    if (!(w > 0.0)) continue;
    const bool below = initial_nlls[t] < config.nll_threshold;
    const bool keep = config.nll_mode == NllMode::Below ? below : !below;
    if (!keep) w = 0.0;
  }
  return weights;
}

TokenWeights bag_of_words_weights(std::span<const Token> initial, std::span<const Token> revised) {
  const std::unordered_set<std::string_view> seen(initial.begin(), initial.end());
  TokenWeights w;
  w.initial_weights.assign(initial.size(), 0.0);
  w.revised_weights.reserve(revised.size());
  for (const Token& tok : revised) w.revised_weights.push_back(seen.contains(tok) ? 0.0 : 1.0);
  return w;
}

WeightConfig reward_scaled_config(const RewardTriple& rewards, ScoreRange revised_range,
                                  ScoreRange initial_range, const WeightConfig& base) {
  if (!(revised_range.min < revised_range.max) || !(initial_range.min < initial_range.max))
    throw ConfigError("reward-scaled weighting needs a non-degenerate score range");
  if (!rewards.r_revised) throw ConfigError("reward-scaled weighting needs r_revised");

  WeightConfig cfg = base;
  cfg.strategy = WeightStrategy::RewardScaled;
  cfg.alpha = min_max(*rewards.r_revised, revised_range);
  cfg.beta = min_max(rewards.r_initial, initial_range);
  cfg.gamma = 0.0;
  return cfg;
}

std::string_view to_string(NllMode mode) {
  switch (mode) {
    case NllMode::Below: return "below";
    case NllMode::Inverted: return "inverted";
    case NllMode::None: return "none";
  }
  return "?";
}

std::string_view to_string(WeightStrategy strategy) {
  switch (strategy) {
    case WeightStrategy::Levenshtein: return "levenshtein";
    case WeightStrategy::BagOfWords: return "bag-of-words";
    case WeightStrategy::ExternalAnnotator: return "external-annotator";
    case WeightStrategy::RewardScaled: return "reward-scaled";
  }
  return "?";
}

std::string_view to_string(AnnotatorMode mode) {
  return mode == AnnotatorMode::Weighted ? "weighted" : "binary";
}

NllMode parse_nll_mode(std::string_view text) {
  if (text == "below") return NllMode::Below;
  if (text == "inverted") return NllMode::Inverted;
  if (text == "none") return NllMode::None;
  throw ConfigError("unknown nll mode '" + std::string(text) + "' (below, inverted, none)");
}

WeightStrategy parse_strategy(std::string_view text) {
  for (auto s : {WeightStrategy::Levenshtein, WeightStrategy::BagOfWords,
                 WeightStrategy::ExternalAnnotator, WeightStrategy::RewardScaled})
    if (text == to_string(s)) return s;
  throw ConfigError("unknown strategy '" + std::string(text) +
                    "' (levenshtein, bag-of-words, external-annotator, reward-scaled)");
}

AnnotatorMode parse_annotator_mode(std::string_view text) {
  if (text == "weighted") return AnnotatorMode::Weighted;
  if (text == "binary") return AnnotatorMode::Binary;
  throw ConfigError("unknown annotator mode '" + std::string(text) + "' (weighted, binary)");
}

}  // namespace figa
