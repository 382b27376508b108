#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "figa/model.hpp"
#include "figa/spa.hpp"

namespace figa {

struct DatasetStats {
  std::size_t n_records = 0;
  double mean_r_initial = 0.0;
  double mean_r_reference = 0.0;
  double mean_r_revised = 0.0;      // over records that carry r_revised
  double mean_ops_reference = 0.0;  // Ŷ -> Y, recomputed
  double mean_ops_revised = 0.0;    // Ŷ -> Ỹ, recomputed
  std::array<std::size_t, 4> reason_histogram{};
};

/// Throws StatsError on an empty dataset.
DatasetStats dataset_stats(const std::vector<SpaRecord>& records);
nlohmann::ordered_json to_json(const DatasetStats& stats);

struct Histogram {
  std::vector<double> bin_edges;  // ascending, size = counts.size() + 1
  std::vector<std::size_t> counts;
};

/// Uniform bins over [min, max] of the scores, or over `range` when given (scores outside are
/// dropped). Bins are [lo, hi) except the last, which is closed. A zero-width span is widened
/// by 0.5 on each side.
Histogram reward_histogram(const std::vector<double>& scores, std::size_t n_bins,
                           std::optional<std::pair<double, double>> range = std::nullopt);
/// "bin_start\tbin_end\tcount" rows with a header line.
std::string to_tsv(const Histogram& histogram);

/// Pulls one numeric field (r_initial, r_reference, r_revised, edit_ops) from every record.
std::vector<double> spa_field(const std::vector<SpaRecord>& records, const std::string& field);

struct DecodeOptions {
  std::size_t max_tokens = 64;
};

/// Greedy argmax continuation of `query` until the separator or `max_tokens`.
TokenSeq greedy_decode(const ModelParams& params, const Vocabulary& vocab, const TokenSeq& query,
                       const DecodeOptions& options = {});

struct EvalResult {
  double mean_score = 0.0;
  std::vector<std::optional<double>> scores;  // per pool instance, in pool order
  std::vector<std::string> responses;
  std::vector<std::string> errors;            // empty string when the instance scored
  std::size_t excluded = 0;
};

/// Decodes and scores every instance. Failed instances are recorded and left out of the mean.
EvalResult eval_reward(const ModelParams& params, const Vocabulary& vocab,
                       const std::vector<Instance>& pool, RewardService& scorer,
                       const DecodeOptions& options = {}, std::size_t workers = 1);

}  // namespace figa
