#include "figa/stats.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "figa/error.hpp"

namespace figa {

DatasetStats dataset_stats(const std::vector<SpaRecord>& records) {
  if (records.empty()) throw StatsError("dataset has no records");
  DatasetStats s;
  s.n_records = records.size();
  double r_init = 0.0, r_ref = 0.0, r_rev = 0.0, ops_ref = 0.0, ops_rev = 0.0;
  std::size_t n_rev = 0;
  for (const auto& r : records) {
    r_init += r.rewards.r_initial;
    r_ref += r.rewards.r_reference;
    if (r.rewards.r_revised) {
      r_rev += *r.rewards.r_revised;
      ++n_rev;
    }
    const TokenSeq initial = tokenize(r.initial_response);
    ops_ref += static_cast<double>(edit_distance(initial, tokenize(r.instance.reference)));
    ops_rev += static_cast<double>(edit_distance(initial, tokenize(r.revised_response)));
    ++s.reason_histogram[static_cast<std::size_t>(r.reason)];
  }
  const auto n = static_cast<double>(records.size());
  s.mean_r_initial = r_init / n;
  s.mean_r_reference = r_ref / n;
  s.mean_r_revised = n_rev ? r_rev / static_cast<double>(n_rev) : 0.0;
  s.mean_ops_reference = ops_ref / n;
  s.mean_ops_revised = ops_rev / n;
  return s;
}

nlohmann::ordered_json to_json(const DatasetStats& s) {
  nlohmann::ordered_json j;
  j["n_records"] = s.n_records;
  j["mean_r_initial"] = s.mean_r_initial;
  j["mean_r_reference"] = s.mean_r_reference;
  j["mean_r_revised"] = s.mean_r_revised;
  j["mean_ops_reference"] = s.mean_ops_reference;
  j["mean_ops_revised"] = s.mean_ops_revised;
  j["reasons"] = {{"A", s.reason_histogram[0]},
                  {"B", s.reason_histogram[1]},
                  {"C", s.reason_histogram[2]},
                  {"D", s.reason_histogram[3]}};
  return j;
}

Histogram reward_histogram(const std::vector<double>& scores, std::size_t n_bins,
                           std::optional<std::pair<double, double>> range) {
  if (n_bins == 0) throw StatsError("histogram needs at least one bin");
  if (scores.empty()) throw StatsError("no scores to bin");
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(lo <= hi)) throw StatsError("histogram range is inverted");
  } else {
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    lo = *mn;
    hi = *mx;
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }

  Histogram h;
  h.counts.assign(n_bins, 0);
  h.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) h.bin_edges[k] = lo + width * static_cast<double>(k);
  h.bin_edges[n_bins] = hi;

  for (double s : scores) {
    if (!(s >= lo && s <= hi)) continue;
    // Bin by edge comparison so a score sitting on an edge always opens the upper bin.
    auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), s);
    auto bin = static_cast<std::size_t>(std::distance(h.bin_edges.begin(), it)) - 1;
    ++h.counts[std::min(bin, n_bins - 1)];
  }
  return h;
}

std::string to_tsv(const Histogram& h) {
  std::ostringstream out;
  out.precision(17);
  out << "bin_start\tbin_end\tcount\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    out << h.bin_edges[k] << '\t' << h.bin_edges[k + 1] << '\t' << h.counts[k] << '\n';
  return out.str();
}

std::vector<double> spa_field(const std::vector<SpaRecord>& records, const std::string& field) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (field == "r_initial") out.push_back(r.rewards.r_initial);
    else if (field == "r_reference") out.push_back(r.rewards.r_reference);
    else if (field == "r_revised") {
      if (r.rewards.r_revised) out.push_back(*r.rewards.r_revised);
    } else if (field == "edit_ops") out.push_back(static_cast<double>(r.edit_ops));
    else throw ConfigError("unknown field '" + field +
                           "' (r_initial, r_reference, r_revised, edit_ops)");
  }
  return out;
}

TokenSeq greedy_decode(const ModelParams& params, const Vocabulary& vocab, const TokenSeq& query,
                       const DecodeOptions& options) {
  std::vector<int> seq = vocab.encode(query);
  seq.push_back(Vocabulary::kSep);
  TokenSeq out;
  for (std::size_t step = 0; step < options.max_tokens; ++step) {
    const auto lp = log_probs(params, seq, seq.size(), seq.size() + 1).front();
    // BOS is padding only; ties go to the lowest id.
    int best = Vocabulary::kSep;
    for (std::size_t v = 1; v < lp.size(); ++v)
      if (lp[v] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(v);
    if (best == Vocabulary::kSep) break;
    seq.push_back(best);
    out.push_back(vocab.token(best));
  }
  return out;
}

EvalResult eval_reward(const ModelParams& params, const Vocabulary& vocab,
                       const std::vector<Instance>& pool, RewardService& scorer,
                       const DecodeOptions& options, std::size_t workers) {
  if (pool.empty()) throw StatsError("evaluation pool is empty");
  if (vocab.size() != params.dims().vocab)
    throw StructuralError("vocabulary size does not match the checkpoint");

  EvalResult result;
  const std::size_t n = pool.size();
  result.scores.resize(n);
  result.responses.resize(n);
  result.errors.resize(n);

  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool_threads;
    const std::size_t width = std::clamp<std::size_t>(workers, 1, n);
    for (std::size_t w = 0; w < width; ++w) {
      pool_threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            const TokenSeq response = greedy_decode(params, vocab, tokenize(pool[i].query), options);
            result.responses[i] = detokenize(response);
            result.scores[i] =
                scorer.score(ScoreRequest{pool[i].query, result.responses[i], pool[i].reference});
          } catch (const std::exception& e) {
            result.errors[i] = e.what();
          }
        }
      });
    }
  }

  double sum = 0.0;
  std::size_t scored = 0;
  for (const auto& s : result.scores) {
    if (!s) continue;
    sum += *s;
    ++scored;
  }
  result.excluded = n - scored;
  if (scored == 0) throw StatsError("no instance could be scored");
  result.mean_score = sum / static_cast<double>(scored);
  return result;
}

}  // namespace figa
