#include "figa/annotate.hpp"

#include <algorithm>
#include <cmath>

#include "figa/annotator.hpp"
#include "figa/error.hpp"

namespace figa {

std::vector<double> token_nlls(const ModelParams& params, const Vocabulary& vocab,
                               const TokenSeq& query, const TokenSeq& initial) {
  const auto seq = conditioned_sequence(query, initial, vocab);
  const std::size_t start = query.size() + 1;
  const auto lp = log_probs(params, seq, start, seq.size());
  std::vector<double> out;
  out.reserve(initial.size());
  for (std::size_t t = 0; t < initial.size(); ++t)
    out.push_back(-lp[t][static_cast<std::size_t>(seq[start + t])]);
  return out;
}

std::vector<WeightedRecord> annotate(const std::vector<SpaRecord>& records,
                                     const AnnotateOptions& options) {
  const WeightConfig& base = options.weight;
  base.validate();
  if (base.strategy == WeightStrategy::ExternalAnnotator && !options.annotator)
    throw ConfigError("the external-annotator strategy needs an annotation service");

  ScoreRange revised_range{}, initial_range{};
  if (base.strategy == WeightStrategy::RewardScaled) {
    if (records.empty()) throw ConfigError("reward-scaled weighting needs records");
    revised_range = {INFINITY, -INFINITY};
    initial_range = {INFINITY, -INFINITY};
    for (const auto& r : records) {
      if (!r.rewards.r_revised)
        throw ConfigError("record " + r.instance.id + " has no r_revised for reward scaling");
      revised_range.min = std::min(revised_range.min, *r.rewards.r_revised);
      revised_range.max = std::max(revised_range.max, *r.rewards.r_revised);
      initial_range.min = std::min(initial_range.min, r.rewards.r_initial);
      initial_range.max = std::max(initial_range.max, r.rewards.r_initial);
    }
  }

  std::vector<WeightedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    WeightedRecord w;
    w.id = r.instance.id;
    w.query_tokens = tokenize(r.instance.query);
    w.initial_tokens = tokenize(r.initial_response);
    w.revised_tokens = tokenize(r.revised_response);

    switch (base.strategy) {
      case WeightStrategy::Levenshtein:
        w.weights = assign_weights(edit_script(w.initial_tokens, w.revised_tokens), base);
        break;
      case WeightStrategy::RewardScaled:
        w.weights = assign_weights(edit_script(w.initial_tokens, w.revised_tokens),
                                   reward_scaled_config(r.rewards, revised_range, initial_range, base));
        break;
      case WeightStrategy::BagOfWords:
        w.weights = bag_of_words_weights(w.initial_tokens, w.revised_tokens);
        break;
      case WeightStrategy::ExternalAnnotator:
        w.weights = external_annotator_weights(r, *options.annotator, base.annotator_mode,
                                               options.annotator_settings);
        break;
    }

    const bool any_penalty = std::any_of(w.weights.initial_weights.begin(),
                                         w.weights.initial_weights.end(),
                                         [](double x) { return x > 0.0; });
    if (base.nll_mode != NllMode::None && any_penalty) {
      std::vector<double> nlls;
      if (r.initial_nlls)
        nlls = *r.initial_nlls;
      else if (options.nll_source)
        nlls = (*options.nll_source)(w.query_tokens, w.initial_tokens);
      else
        throw ConfigError("NLL mode '" + std::string(to_string(base.nll_mode)) +
                          "' needs initial-token NLLs: pass an NLL model or use nll_mode none");
      w.weights = apply_nll_filter(std::move(w.weights), nlls, base);
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace figa
