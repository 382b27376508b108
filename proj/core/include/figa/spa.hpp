#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figa/prompts.hpp"
#include "figa/services.hpp"
#include "figa/weighting.hpp"

namespace figa {

struct Instance {
  std::string id;
  std::string query;      // X
  std::string reference;  // Y
  std::string source;
  std::optional<std::string> rollout;  // pre-generated initial response, if the pool carries one
};

struct FilterThresholds {
  double eta1 = 1.0;  // initial response must score below
  double eta2 = 3.0;  // reference must score above
  double eta3 = 3.5;  // reference - initial must exceed
};

struct RolloutRecord {
  Instance instance;
  std::string initial_response;  // Ŷ
  RewardTriple rewards;          // filled by score(); r_revised stays unset
};

struct FilterDecision {
  bool keep = true;
  int failed_predicate = 0;  // 1, 2 or 3 when discarded; 0 when kept
};

struct SpaRecord {
  Instance instance;
  std::string initial_response;  // Ŷ
  std::string revised_response;  // Ỹ
  RewardTriple rewards;
  RevisionReason reason = RevisionReason::LackOfDetail;
  std::size_t edit_ops = 0;  // edit_distance(tokenize(Ŷ), tokenize(Ỹ))
  std::vector<std::string> flags;
  std::optional<std::vector<double>> initial_nlls;  // optional per-token NLLs of Ŷ under the rollout model
};

enum class PoolFormat { JsonLines, Tsv };

/// Reads an instance pool, dropping later rows whose query repeats an earlier one.
/// Throws IngestionError naming the 1-based line of the first malformed row.
std::vector<Instance> ingest_pool(const std::filesystem::path& path,
                                  PoolFormat format = PoolFormat::JsonLines);

RolloutRecord rollout(const Instance& instance, CompletionService& completion,
                      const PromptSettings& settings = {});

double score(const std::string& query, const std::string& response, const std::string& reference,
             RewardService& scorer);

FilterDecision filter_instance(const RewardTriple& rewards, const FilterThresholds& thresholds);

struct ReasonResult {
  RevisionReason reason = RevisionReason::LackOfDetail;
  bool defaulted = false;
};

/// Parses a single A-D letter, tolerating case, whitespace and punctuation around it.
std::optional<RevisionReason> parse_reason_reply(const std::string& reply);

/// Up to three attempts (two retries); falls back to LackOfDetail with `defaulted` set.
ReasonResult classify_reason(const RolloutRecord& record, CompletionService& completion,
                             const PromptSettings& settings = {});

/// Produces Ỹ (reason D copies the reference), scores it and counts edit ops.
SpaRecord revise(const RolloutRecord& record, RevisionReason reason, CompletionService& completion,
                 RewardService& scorer, const PromptSettings& settings = {});

struct BuildFlags {
  bool skip_filter = false;
  bool skip_revision = false;
};

struct BuildOptions {
  BuildFlags flags;
  FilterThresholds thresholds;
  std::size_t workers = 8;
  std::uint64_t seed = 0;
  std::string config_hash;
  PromptSettings rollout_settings;
  PromptSettings revision_settings;
};

struct BuildSummary {
  std::size_t ingested = 0;
  std::array<std::size_t, 3> filtered_out{};  // per failing predicate
  std::size_t errors = 0;
  std::size_t revised = 0;  // records whose Ỹ came from a revision prompt
  std::size_t emitted = 0;
  std::array<std::size_t, 4> reason_histogram{};
};

/// Streams SpaRecords to `out` in pool order and writes `<out>.meta`. Per-record failures
/// are logged and skipped; throws ServiceError when more than half of the records fail.
BuildSummary build_spa(const std::vector<Instance>& pool, CompletionService& completion,
                       RewardService& scorer, const BuildOptions& options,
                       const std::filesystem::path& out);

nlohmann::ordered_json to_json(const SpaRecord& record);
SpaRecord spa_record_from_json(const nlohmann::json& j);
std::vector<SpaRecord> read_spa_file(const std::filesystem::path& path);

std::filesystem::path meta_path(const std::filesystem::path& dataset);

}  // namespace figa
