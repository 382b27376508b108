#include "figa/spa.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>
#include <variant>

#include <spdlog/spdlog.h>

#include "figa/error.hpp"
#include "figa/token_align.hpp"

namespace figa {
namespace {

std::string require_string(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw IngestionError(std::string("missing string field '") + key + "'", line);
  return it->get<std::string>();
}

Instance parse_jsonl_instance(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError(std::string("not a JSON object: ") + e.what(), line);
  }
  if (!j.is_object()) throw IngestionError("not a JSON object", line);
  Instance inst;
  inst.id = require_string(j, "id", line);
  inst.query = require_string(j, "query", line);
  inst.reference = require_string(j, "reference", line);
  if (const auto it = j.find("source"); it != j.end()) {
    if (!it->is_string()) throw IngestionError("field 'source' must be a string", line);
    inst.source = it->get<std::string>();
  }
  if (const auto it = j.find("initial_response"); it != j.end()) {
    if (!it->is_string()) throw IngestionError("field 'initial_response' must be a string", line);
    inst.rollout = it->get<std::string>();
  }
  return inst;
}

Instance parse_tsv_instance(const std::string& text, std::size_t line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = text.find('\t', start);
    fields.push_back(text.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (fields.size() < 3 || fields.size() > 4)
    throw IngestionError("expected 3 or 4 tab-separated fields, got " +
                             std::to_string(fields.size()),
                         line);
  Instance inst{fields[0], fields[1], fields[2], fields.size() == 4 ? fields[3] : "", {}};
  return inst;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

using Outcome = std::variant<SpaRecord, FilterDecision, std::string>;  // record / filtered / error

Outcome process_instance(const Instance& inst, CompletionService& completion,
                         RewardService& scorer, const BuildOptions& opt) {
  try {
    RolloutRecord rec = rollout(inst, completion, opt.rollout_settings);
    rec.rewards.r_initial = score(inst.query, rec.initial_response, inst.reference, scorer);
    rec.rewards.r_reference = score(inst.query, inst.reference, inst.reference, scorer);

    if (!opt.flags.skip_filter) {
      const FilterDecision d = filter_instance(rec.rewards, opt.thresholds);
      if (!d.keep) return d;
    }

    const ReasonResult reason = classify_reason(rec, completion, opt.revision_settings);
    SpaRecord out;
    if (opt.flags.skip_revision) {
      out.instance = rec.instance;
      out.initial_response = rec.initial_response;
      out.revised_response = inst.reference;
      out.rewards = rec.rewards;
      out.rewards.r_revised = rec.rewards.r_reference;
      out.reason = reason.reason;
      out.edit_ops = edit_distance(tokenize(out.initial_response), tokenize(out.revised_response));
      out.flags.push_back("revision_skipped");
    } else {
      out = revise(rec, reason.reason, completion, scorer, opt.revision_settings);
    }
    if (reason.defaulted) out.flags.insert(out.flags.begin(), "reason_defaulted");
    if (opt.flags.skip_filter) out.flags.push_back("filter_skipped");
    return out;
  } catch (const std::exception& e) {
    return std::string(e.what());
  }
}

nlohmann::ordered_json build_meta(const BuildOptions& opt, const BuildSummary& s,
                                  CompletionService& completion, RewardService& scorer,
                                  bool failed) {
  nlohmann::ordered_json meta;
  meta["config_hash"] = opt.config_hash;
  meta["seed"] = opt.seed;
  meta["thresholds"] = {{"eta1", opt.thresholds.eta1},
                        {"eta2", opt.thresholds.eta2},
                        {"eta3", opt.thresholds.eta3}};
  meta["flags"] = {{"skip_filter", opt.flags.skip_filter},
                   {"skip_revision", opt.flags.skip_revision}};
  meta["services"] = {{"completion", completion.identity()}, {"reward", scorer.identity()}};
  nlohmann::ordered_json counts;
  counts["ingested"] = s.ingested;
  counts["filtered_out"] = {{"predicate_1", s.filtered_out[0]},
                            {"predicate_2", s.filtered_out[1]},
                            {"predicate_3", s.filtered_out[2]}};
  counts["errors"] = s.errors;
  counts["revised"] = s.revised;
  counts["emitted"] = s.emitted;
  counts["reasons"] = {{"A", s.reason_histogram[0]},
                       {"B", s.reason_histogram[1]},
                       {"C", s.reason_histogram[2]},
                       {"D", s.reason_histogram[3]}};
  meta["counts"] = counts;
  meta["status"] = failed ? "failed" : "ok";
  return meta;
}

}  // namespace

std::vector<Instance> ingest_pool(const std::filesystem::path& path, PoolFormat format) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open pool file " + path.string(), 0);

  std::vector<Instance> pool;
  std::unordered_set<std::string> queries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    Instance inst = format == PoolFormat::JsonLines ? parse_jsonl_instance(line, lineno)
                                                    : parse_tsv_instance(line, lineno);
    if (inst.query.empty()) throw IngestionError("empty query", lineno);
    if (inst.reference.empty()) throw IngestionError("empty reference", lineno);
    if (!queries.insert(inst.query).second) continue;
    pool.push_back(std::move(inst));
  }
  return pool;
}

RolloutRecord rollout(const Instance& instance, CompletionService& completion,
                      const PromptSettings& settings) {
  RolloutRecord rec;
  rec.instance = instance;
  rec.initial_response =
      instance.rollout ? *instance.rollout
                       : completion.complete(rollout_prompt(instance.query, settings));
  return rec;
}

double score(const std::string& query, const std::string& response, const std::string& reference,
             RewardService& scorer) {
  return scorer.score(ScoreRequest{query, response, reference});
}

FilterDecision filter_instance(const RewardTriple& rewards, const FilterThresholds& t) {
  if (!(rewards.r_initial < t.eta1)) return {false, 1};
  if (!(rewards.r_reference > t.eta2)) return {false, 2};
  if (!(rewards.r_reference - rewards.r_initial > t.eta3)) return {false, 3};
  return {true, 0};
}

std::optional<RevisionReason> parse_reason_reply(const std::string& reply) {
  const auto noise = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
  std::size_t b = 0;
  std::size_t e = reply.size();
  while (b < e && noise(static_cast<unsigned char>(reply[b]))) ++b;
  while (e > b && noise(static_cast<unsigned char>(reply[e - 1]))) --e;
  if (e - b != 1) return std::nullopt;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(reply[b])));
  if (c < 'A' || c > 'D') return std::nullopt;
  return reason_from_letter(c);
}

ReasonResult classify_reason(const RolloutRecord& record, CompletionService& completion,
                             const PromptSettings& settings) {
  const ChatRequest req = reason_prompt(record.instance.query, record.initial_response,
                                        record.instance.reference, settings);
  constexpr int kAttempts = 3;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    if (const auto reason = parse_reason_reply(completion.complete(req))) return {*reason, false};
  }
  return {RevisionReason::LackOfDetail, true};
}

SpaRecord revise(const RolloutRecord& record, RevisionReason reason, CompletionService& completion,
                 RewardService& scorer, const PromptSettings& settings) {
  SpaRecord out;
  out.instance = record.instance;
  out.initial_response = record.initial_response;
  out.rewards = record.rewards;
  out.reason = reason;

  if (reason == RevisionReason::Other) {
    out.revised_response = record.instance.reference;
    out.flags.push_back("reference_as_revision");
  } else {
    const ChatRequest req = revision_prompt(reason, record.instance.query, record.initial_response,
                                            record.instance.reference, settings);
    std::string revised;
    try {
      revised = completion.complete(req);
    } catch (const ServiceError&) {
      throw;
    } catch (const std::exception& e) {
      throw ServiceError(std::string("revision failed: ") + e.what());
    }
    if (is_blank(revised)) throw ServiceError("revision service returned an empty completion");
    out.revised_response = std::move(revised);
  }
  out.rewards.r_revised =
      score(record.instance.query, out.revised_response, record.instance.reference, scorer);
  out.edit_ops = edit_distance(tokenize(out.initial_response), tokenize(out.revised_response));
  return out;
}

std::filesystem::path meta_path(const std::filesystem::path& dataset) {
  return dataset.string() + ".meta";
}

BuildSummary build_spa(const std::vector<Instance>& pool, CompletionService& completion,
                       RewardService& scorer, const BuildOptions& options,
                       const std::filesystem::path& out) {
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw IngestionError("cannot open output " + out.string(), 0);

  const std::size_t n = pool.size();
  std::vector<std::optional<Outcome>> slots(n);
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  const std::size_t width = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(n, 1));
  std::vector<std::jthread> workers;
  workers.reserve(width);
  for (std::size_t w = 0; w < width; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        Outcome result = process_instance(pool[i], completion, scorer, options);
        {
          std::lock_guard lock(mu);
          slots[i] = std::move(result);
        }
        ready.notify_all();
      }
    });
  }

  BuildSummary summary;
  summary.ingested = n;
  for (std::size_t i = 0; i < n; ++i) {
    Outcome outcome;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[i].has_value(); });
      outcome = std::move(*slots[i]);
      slots[i].reset();
    }
    if (auto* rec = std::get_if<SpaRecord>(&outcome)) {
      file << to_json(*rec).dump() << '\n';
      ++summary.emitted;
      ++summary.reason_histogram[static_cast<std::size_t>(rec->reason)];
      const bool from_prompt = !options.flags.skip_revision && rec->reason != RevisionReason::Other;
      if (from_prompt) ++summary.revised;
    } else if (auto* d = std::get_if<FilterDecision>(&outcome)) {
      ++summary.filtered_out[static_cast<std::size_t>(d->failed_predicate - 1)];
    } else {
      ++summary.errors;
      spdlog::warn("instance {} skipped: {}", pool[i].id, std::get<std::string>(outcome));
    }
  }
  workers.clear();
  file.close();

  const bool failed = summary.errors * 2 > summary.ingested;
  std::ofstream meta(meta_path(out), std::ios::binary | std::ios::trunc);
  meta << build_meta(options, summary, completion, scorer, failed).dump(2) << '\n';
  if (failed)
    throw ServiceError(std::to_string(summary.errors) + " of " + std::to_string(summary.ingested) +
                       " records failed");
  return summary;
}

nlohmann::ordered_json to_json(const SpaRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.instance.id;
  j["query"] = r.instance.query;
  j["reference"] = r.instance.reference;
  j["source"] = r.instance.source;
  j["initial_response"] = r.initial_response;
  j["revised_response"] = r.revised_response;
  j["r_initial"] = r.rewards.r_initial;
  j["r_reference"] = r.rewards.r_reference;
  j["r_revised"] = r.rewards.r_revised ? nlohmann::ordered_json(*r.rewards.r_revised)
                                       : nlohmann::ordered_json(nullptr);
  j["reason"] = std::string(1, reason_letter(r.reason));
  j["edit_ops"] = r.edit_ops;
  j["flags"] = r.flags;
  if (r.initial_nlls) j["initial_nlls"] = *r.initial_nlls;
  return j;
}

SpaRecord spa_record_from_json(const nlohmann::json& j) {
  SpaRecord r;
  r.instance.id = j.at("id").get<std::string>();
  r.instance.query = j.at("query").get<std::string>();
  r.instance.reference = j.value("reference", std::string{});
  r.instance.source = j.value("source", std::string{});
  r.initial_response = j.at("initial_response").get<std::string>();
  r.revised_response = j.at("revised_response").get<std::string>();
  r.rewards.r_initial = j.at("r_initial").get<double>();
  r.rewards.r_reference = j.at("r_reference").get<double>();
  if (const auto& rv = j.at("r_revised"); !rv.is_null()) r.rewards.r_revised = rv.get<double>();
  const auto letter = j.at("reason").get<std::string>();
  if (letter.size() != 1) throw ConfigError("reason must be a single letter");
  r.reason = reason_from_letter(letter[0]);
  r.edit_ops = j.at("edit_ops").get<std::size_t>();
  r.flags = j.value("flags", std::vector<std::string>{});
  if (const auto it = j.find("initial_nlls"); it != j.end())
    r.initial_nlls = it->get<std::vector<double>>();
  return r;
}

std::vector<SpaRecord> read_spa_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open SPA dataset " + path.string(), 0);
  std::vector<SpaRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    try {
      out.push_back(spa_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(e.what(), lineno);
    } catch (const ConfigError& e) {
      throw IngestionError(e.what(), lineno);
    }
  }
  return out;
}

}  // namespace figa
