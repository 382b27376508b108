#pragma once

#include <cstdint>
#include <vector>

#include "figa/model.hpp"
#include "figa/weighting.hpp"

namespace figa {

struct SynthSpec {
  std::size_t vocab_size = 20;
  std::size_t n_instances = 500;
  std::size_t min_len = 8;
  std::size_t max_len = 12;
  std::size_t query_len = 2;
  double p_sub = 0.3;
  double p_del = 0.05;
  double p_ins = 0.05;
  // Chance that a truth symbol follows the corpus's hidden order-2 rule instead of being uniform.
  double truth_determinism = 0.8;
  std::uint64_t seed = 0;
};

// What happened to one truth position when the initial response was drawn.
enum class Corruption : unsigned char { Keep, Substitute, Delete, InsertAfter };

struct SynthTruth {
  TokenSeq truth;
  std::vector<Corruption> ops;  // one per truth position
  std::size_t substituted = 0;
};

struct SynthCorpus {
  std::vector<WeightedRecord> records;  // Ŷ = corrupted truth, Ỹ = truth
  std::vector<SynthTruth> truth;
  Vocabulary vocab;                     // reserved tokens + every symbol
};

/// Symbol k is spelled "s<k>". Truth sequences come from a hidden order-2 rule drawn from the
/// seed, followed with probability truth_determinism and otherwise uniform, so a K=2 model can
/// learn them. Each truth position then draws one corruption outcome:
/// substitute (p_sub), delete (p_del), keep and insert a random symbol after it (p_ins),
/// or keep. Weights come from edit_script + assign_weights (or bag-of-words) under `config`;
/// the NLL filter is not applied, so `config.nll_mode` must be None.
SynthCorpus synth_corpus(const SynthSpec& spec, const WeightConfig& config);

/// Mean teacher-forced log π(ỹ_t) over revised positions tagged Added or Substituted.
double edited_position_logprob(const ModelParams& params, const SynthCorpus& corpus);

}  // namespace figa
