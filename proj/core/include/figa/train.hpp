#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "figa/model.hpp"

namespace figa {

struct TrainOptions {
  double lr = 0.1;
  std::size_t epochs = 30;
  double clip = 5.0;  // global gradient norm; <= 0 disables clipping
  std::uint64_t seed = 0;
  std::size_t batch_size = 1;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  LossReport loss;        // summed over the dataset after the epoch's updates
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochReport> trace;
};

/// Plain SGD. Records are visited in a seed-determined order each epoch; a batch's gradient is
/// the mean of its records' gradients, clipped to `clip` in global L2 norm. Throws
/// DivergenceError naming the epoch and record when a loss or parameter turns non-finite.
TrainResult train(ModelParams params, const std::vector<EncodedRecord>& dataset,
                  const TrainOptions& options);

/// In-place Fisher-Yates driven by mt19937_64; identical on every platform.
void seeded_shuffle(std::vector<std::size_t>& order, std::uint64_t seed);

/// Binary layout: four little-endian u64 (V, d, h, K) followed by E, W1, b1, W2, b2 as
/// row-major little-endian IEEE-754 doubles.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

struct CheckpointManifest {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string baseline;
  std::vector<Token> vocabulary;  // index == token id
};

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);
void save_manifest(const std::filesystem::path& path, const CheckpointManifest& manifest);
CheckpointManifest load_manifest(const std::filesystem::path& path);

/// One JSON object per line: id, query_tokens, revised_tokens, initial_tokens,
/// revised_weights, initial_weights.
void write_weighted_records(const std::filesystem::path& path,
                            const std::vector<WeightedRecord>& records);
std::vector<WeightedRecord> read_weighted_records(const std::filesystem::path& path);

/// Reserved tokens plus every token of every record, sorted.
Vocabulary vocabulary_for(const std::vector<WeightedRecord>& records);

}  // namespace figa
