#include "figa/synth.hpp"

#include <random>

#include "figa/error.hpp"

namespace figa {
namespace {

// Uniform double in [0, 1) from the top 53 bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

Token symbol(std::size_t k) { return "s" + std::to_string(k); }

}  // namespace

SynthCorpus synth_corpus(const SynthSpec& spec, const WeightConfig& config) {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(spec.p_sub) || !prob(spec.p_del) || !prob(spec.p_ins) ||
      spec.p_sub + spec.p_del + spec.p_ins > 1.0 + 1e-12)
    throw ConfigError("corruption probabilities must lie in [0, 1] and sum to at most 1");
  if (spec.vocab_size < 2) throw ConfigError("synthetic vocabulary needs at least 2 symbols");
  if (spec.min_len > spec.max_len) throw ConfigError("min_len exceeds max_len");
  if (!prob(spec.truth_determinism)) throw ConfigError("truth_determinism must lie in [0, 1]");
  if (config.nll_mode != NllMode::None)
    throw ConfigError("synthetic corpora carry no rollout model; use nll_mode none");
  config.validate();

  SynthCorpus corpus;
  for (std::size_t k = 0; k < spec.vocab_size; ++k) corpus.vocab.add(symbol(k));

  std::mt19937_64 rng(spec.seed);
  // Hidden order-2 rule: preferred next symbol for each (prev2, prev1); index V marks the start.
  const std::size_t states = spec.vocab_size + 1;
  std::vector<std::size_t> rule(states * states);
  for (auto& r : rule) r = below(rng, spec.vocab_size);

  corpus.records.reserve(spec.n_instances);
  corpus.truth.reserve(spec.n_instances);
  for (std::size_t n = 0; n < spec.n_instances; ++n) {
    WeightedRecord rec;
    rec.id = "synth-" + std::to_string(n);
    for (std::size_t q = 0; q < spec.query_len; ++q)
      rec.query_tokens.push_back(symbol(below(rng, spec.vocab_size)));

    SynthTruth truth;
    const std::size_t len = spec.min_len + below(rng, spec.max_len - spec.min_len + 1);
    std::size_t prev2 = spec.vocab_size, prev1 = spec.vocab_size;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t next = unit(rng) < spec.truth_determinism ? rule[prev2 * states + prev1]
                                                                  : below(rng, spec.vocab_size);
      truth.truth.push_back(symbol(next));
      prev2 = prev1;
      prev1 = next;
    }

    for (const Token& tok : truth.truth) {
      const double u = unit(rng);
      if (u < spec.p_sub) {
        // A different symbol: shift by 1..V-1.
        const std::size_t cur = std::stoul(tok.substr(1));
        const std::size_t shift = 1 + below(rng, spec.vocab_size - 1);
        rec.initial_tokens.push_back(symbol((cur + shift) % spec.vocab_size));
        truth.ops.push_back(Corruption::Substitute);
        ++truth.substituted;
      } else if (u < spec.p_sub + spec.p_del) {
        truth.ops.push_back(Corruption::Delete);
      } else if (u < spec.p_sub + spec.p_del + spec.p_ins) {
        rec.initial_tokens.push_back(tok);
        rec.initial_tokens.push_back(symbol(below(rng, spec.vocab_size)));
        truth.ops.push_back(Corruption::InsertAfter);
      } else {
        rec.initial_tokens.push_back(tok);
        truth.ops.push_back(Corruption::Keep);
      }
    }
    rec.revised_tokens = truth.truth;

    if (config.strategy == WeightStrategy::BagOfWords)
      rec.weights = bag_of_words_weights(rec.initial_tokens, rec.revised_tokens);
    else
      rec.weights = assign_weights(edit_script(rec.initial_tokens, rec.revised_tokens), config);

    corpus.records.push_back(std::move(rec));
    corpus.truth.push_back(std::move(truth));
  }
  return corpus;
}

double edited_position_logprob(const ModelParams& params, const SynthCorpus& corpus) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : corpus.records) {
    const EditScript script = edit_script(rec.initial_tokens, rec.revised_tokens);
    const auto seq = conditioned_sequence(rec.query_tokens, rec.revised_tokens, corpus.vocab);
    const std::size_t start = rec.query_tokens.size() + 1;
    const auto lp = log_probs(params, seq, start, seq.size());
    for (std::size_t t = 0; t < rec.revised_tokens.size(); ++t) {
      const TokenTag tag = script.revised_tags[t];
      if (tag != TokenTag::Added && tag != TokenTag::Substituted) continue;
      sum += lp[t][static_cast<std::size_t>(seq[start + t])];
      ++count;
    }
  }
  if (count == 0) throw StatsError("corpus has no edited positions");
  return sum / static_cast<double>(count);
}

}  // namespace figa
