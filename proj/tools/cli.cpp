#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <memory>
#include <ostream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "figa/annotate.hpp"
#include "figa/config.hpp"
#include "figa/error.hpp"
#include "figa/spa.hpp"
#include "figa/stats.hpp"
#include "figa/train.hpp"

namespace figa::cli {
namespace {

using nlohmann::json;

// Collects config-backed flags that were actually given on the command line.
class FlagLayer {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    collect_.push_back([opt, value, key](json& j) {
      if (opt->count()) j[key] = *value;
    });
  }

  void add_switch(CLI::App* app, const std::string& flag, const std::string& key,
                  const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(flag, *value, help);
    collect_.push_back([opt, value, key](json& j) {
      if (opt->count()) j[key] = *value;
    });
  }

  ConfigLayer layer(const std::string& preset_name) const {
    ConfigLayer l{"command-line flags", json::object()};
    if (!preset_name.empty()) l.values["preset"] = preset_name;
    for (const auto& c : collect_) c(l.values);
    return l;
  }

 private:
  std::vector<std::function<void(json&)>> collect_;
};

std::unique_ptr<CompletionService> make_completion(const RunConfig& cfg) {
  if (cfg.services.stub) return std::make_unique<StubCompletion>(cfg.train.seed);
  if (cfg.services.completion_endpoint.empty())
    throw ConfigError("no completion endpoint: set completion_endpoint, FIGA_COMPLETION_ENDPOINT "
                      "or use --stub-services");
  return std::make_unique<HttpCompletionService>(
      HttpEndpoint{cfg.services.completion_endpoint, cfg.services.completion_token});
}

std::unique_ptr<RewardService> make_reward(const RunConfig& cfg) {
  if (cfg.services.stub) return std::make_unique<JaccardStubReward>();
  if (cfg.services.reward_endpoint.empty())
    throw ConfigError("no reward endpoint: set reward_endpoint, FIGA_REWARD_ENDPOINT or use a stub");
  return std::make_unique<HttpRewardService>(HttpEndpoint{cfg.services.reward_endpoint, {}});
}

void add_weight_flags(CLI::App* cmd, FlagLayer& flags) {
  flags.add<double>(cmd, "--alpha", "alpha", "Weight of added/substituted revised tokens");
  flags.add<double>(cmd, "--beta", "beta", "Weight of deleted/substituted initial tokens");
  flags.add<double>(cmd, "--gamma", "gamma", "Weight of unchanged revised tokens");
  flags.add<double>(cmd, "--nll-threshold", "nll_threshold", "NLL threshold in nats");
  flags.add<std::string>(cmd, "--nll-mode", "nll_mode", "below | inverted | none");
  flags.add<std::string>(cmd, "--strategy", "strategy",
                         "levenshtein | bag-of-words | external-annotator | reward-scaled");
  flags.add<std::string>(cmd, "--annotator-mode", "annotator_mode", "weighted | binary");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const Getenv& getenv) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("figa", sink);
  logger->set_pattern("figa: %l: %v");
  // The sink points at the caller's stream, so hand the previous logger back on every exit path.
  struct RestoreLogger {
    std::shared_ptr<spdlog::logger> previous = spdlog::default_logger();
    ~RestoreLogger() { spdlog::set_default_logger(previous); }
  } restore;
  spdlog::set_default_logger(logger);

  CLI::App app{"Fine-grained quality-aware alignment: dataset construction, weighting, training"};
  app.require_subcommand(1);
  std::string config_file;
  std::string preset_name;
  app.add_option("--config", config_file, "Flat JSON key/value config file");
  app.add_option("--preset", preset_name, "Named coefficient bundle (see `figa presets`)");

  FlagLayer flags;

  // build-spa
  auto* build = app.add_subcommand("build-spa", "Rollout, reward filtering and revision");
  std::string pool_path, spa_out, pool_format = "jsonl";
  BuildFlags build_flags;
  build->add_option("--pool", pool_path, "Instance pool (one JSON object per line)")->required();
  build->add_option("--out", spa_out, "SPA dataset output")->required();
  build->add_option("--pool-format", pool_format, "jsonl | tsv");
  build->add_flag("--skip-filter", build_flags.skip_filter, "Keep every rollout");
  build->add_flag("--skip-revision", build_flags.skip_revision, "Use the reference as revision");
  flags.add<double>(build, "--eta1", "eta1", "Initial score must be below");
  flags.add<double>(build, "--eta2", "eta2", "Reference score must be above");
  flags.add<double>(build, "--eta3", "eta3", "Score gap must exceed");
  flags.add_switch(build, "--stub-services", "stub_services", "Use the bundled offline services");
  flags.add<std::size_t>(build, "--seed", "seed", "Seed for stub services");
  flags.add<std::size_t>(build, "--workers", "workers", "Worker pool width");

  // annotate
  auto* annotate_cmd = app.add_subcommand("annotate", "Attach token weights to an SPA dataset");
  std::string annotate_in, annotate_out, nll_model;
  annotate_cmd->add_option("--spa", annotate_in, "SPA dataset")->required();
  annotate_cmd->add_option("--out", annotate_out, "Weighted-record output")->required();
  annotate_cmd->add_option("--nll-model", nll_model, "Checkpoint supplying initial-token NLLs");
  add_weight_flags(annotate_cmd, flags);
  flags.add_switch(annotate_cmd, "--stub-services", "stub_services", "Use the offline annotator");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the reference model");
  std::string train_data, ckpt_out, baseline = "figa";
  train_cmd->add_option("--data", train_data, "Weighted-record file")->required();
  train_cmd->add_option("--out", ckpt_out, "Checkpoint output")->required();
  train_cmd->add_option("--baseline", baseline, "figa | sft")
      ->check(CLI::IsMember({"figa", "sft"}));
  flags.add<double>(train_cmd, "--lr", "lr", "SGD learning rate");
  flags.add<std::size_t>(train_cmd, "--epochs", "epochs", "Passes over the data");
  flags.add<std::size_t>(train_cmd, "--seed", "seed", "Initialisation and shuffling seed");
  flags.add<double>(train_cmd, "--clip", "clip", "Global gradient-norm clip (<= 0 disables)");
  flags.add<std::size_t>(train_cmd, "--batch-size", "batch_size", "Records per update");
  flags.add<std::size_t>(train_cmd, "--embed-dim", "embed_dim", "Embedding width");
  flags.add<std::size_t>(train_cmd, "--hidden-dim", "hidden_dim", "Hidden width");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Greedy-decode a pool and score it");
  std::string eval_ckpt, eval_pool;
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--pool", eval_pool, "Instance pool")->required();
  flags.add_switch(eval_cmd, "--stub-scorer", "stub_services", "Use the offline reward stub");
  flags.add<std::size_t>(eval_cmd, "--max-tokens", "max_decode_tokens", "Decode length cap");
  flags.add<std::size_t>(eval_cmd, "--workers", "workers", "Concurrent scoring width");

  // stats / hist
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  std::string stats_in;
  stats_cmd->add_option("--spa", stats_in, "SPA dataset")->required();

  auto* hist_cmd = app.add_subcommand("hist", "Histogram of one numeric field");
  std::string hist_in, hist_field = "r_initial";
  std::size_t bins = 20;
  std::optional<double> hist_min, hist_max;
  hist_cmd->add_option("--spa", hist_in, "SPA dataset")->required();
  hist_cmd->add_option("--field", hist_field, "r_initial | r_reference | r_revised | edit_ops");
  hist_cmd->add_option("--bins", bins, "Number of bins");
  hist_cmd->add_option("--min", hist_min, "Range start");
  hist_cmd->add_option("--max", hist_max, "Range end");

  auto* presets_cmd = app.add_subcommand("presets", "List named presets");
  auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::Configuration);
  }

  try {
    std::vector<ConfigLayer> layers;
    if (!config_file.empty()) layers.push_back(config_file_layer(config_file));
    layers.push_back(environment_layer(getenv));
    layers.push_back(flags.layer(preset_name));
    const RunConfig cfg = resolve_config(layers);
    const std::string hash = cfg.hash();

    if (*presets_cmd) {
      for (const auto& name : preset_names()) out << name << '\t' << preset(name).dump() << '\n';
      return 0;
    }
    if (*config_cmd) {
      json j = cfg.canonical();
      j["config_hash"] = hash;
      out << j.dump(2) << '\n';
      return 0;
    }

    if (*build) {
      if (pool_format != "jsonl" && pool_format != "tsv")
        throw ConfigError("--pool-format must be jsonl or tsv");
      const auto pool =
          ingest_pool(pool_path, pool_format == "tsv" ? PoolFormat::Tsv : PoolFormat::JsonLines);
      auto completion = make_completion(cfg);
      auto reward = make_reward(cfg);
      BuildOptions opt;
      opt.flags = build_flags;
      opt.thresholds = cfg.thresholds;
      opt.workers = cfg.workers;
      opt.seed = cfg.train.seed;
      opt.config_hash = hash;
      opt.rollout_settings = {cfg.services.rollout_model, cfg.services.rollout_temperature, {}};
      opt.revision_settings = {cfg.services.completion_model, cfg.services.revision_temperature, {}};
      const BuildSummary s = build_spa(pool, *completion, *reward, opt, spa_out);
      spdlog::info("ingested {}, emitted {}, filtered {}/{}/{}, errors {}", s.ingested, s.emitted,
                   s.filtered_out[0], s.filtered_out[1], s.filtered_out[2], s.errors);
      return 0;
    }

    if (*annotate_cmd) {
      const auto records = read_spa_file(annotate_in);
      AnnotateOptions opt;
      opt.weight = cfg.weight;
      std::unique_ptr<CompletionService> annotator;
      if (cfg.weight.strategy == WeightStrategy::ExternalAnnotator) {
        annotator = make_completion(cfg);
        opt.annotator = annotator.get();
        opt.annotator_settings = {cfg.services.completion_model, 0.0, {}};
      }
      if (!nll_model.empty()) {
        auto params = std::make_shared<ModelParams>(load_checkpoint(nll_model));
        const auto manifest = load_manifest(manifest_path(nll_model));
        auto vocab = std::make_shared<Vocabulary>();
        for (const auto& t : manifest.vocabulary) vocab->add(t);
        opt.nll_source = [params, vocab](const TokenSeq& q, const TokenSeq& initial) {
          return token_nlls(*params, *vocab, q, initial);
        };
      }
      write_weighted_records(annotate_out, annotate(records, opt));
      return 0;
    }

    if (*train_cmd) {
      auto records = read_weighted_records(train_data);
      if (baseline == "sft") {
        for (auto& r : records) {
          std::fill(r.weights.revised_weights.begin(), r.weights.revised_weights.end(), 1.0);
          std::fill(r.weights.initial_weights.begin(), r.weights.initial_weights.end(), 0.0);
        }
      }
      const Vocabulary vocab = vocabulary_for(records);
      std::vector<EncodedRecord> encoded;
      encoded.reserve(records.size());
      for (const auto& r : records) encoded.push_back(encode(r, vocab));

      const ModelDims dims{vocab.size(), cfg.embed_dim, cfg.hidden_dim, 2};
      const TrainResult result =
          train(ModelParams::random(dims, cfg.train.seed), encoded, cfg.train);
      save_checkpoint(ckpt_out, result.params);
      save_manifest(manifest_path(ckpt_out),
                    {cfg.train.seed, hash, baseline, vocab.tokens()});
      out << "epoch\tencourage\tpenalty\ttotal\n";
      for (const auto& e : result.trace)
        out << e.epoch << '\t' << e.loss.encourage_term << '\t' << e.loss.penalty_term << '\t'
            << e.loss.total << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const ModelParams params = load_checkpoint(eval_ckpt);
      const auto manifest = load_manifest(manifest_path(eval_ckpt));
      Vocabulary vocab;
      for (const auto& t : manifest.vocabulary) vocab.add(t);
      const auto pool = ingest_pool(eval_pool);
      auto reward = make_reward(cfg);
      const EvalResult r = eval_reward(params, vocab, pool, *reward,
                                       DecodeOptions{cfg.max_decode_tokens}, cfg.workers);
      nlohmann::ordered_json report;
      report["config_hash"] = hash;
      report["checkpoint_config_hash"] = manifest.config_hash;
      report["mean_score"] = r.mean_score;
      report["n_instances"] = pool.size();
      report["excluded"] = r.excluded;
      auto& rows = report["instances"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        nlohmann::ordered_json row;
        row["id"] = pool[i].id;
        row["score"] = r.scores[i] ? nlohmann::ordered_json(*r.scores[i]) : nlohmann::ordered_json(nullptr);
        row["response"] = r.responses[i];
        if (!r.errors[i].empty()) row["error"] = r.errors[i];
        rows.push_back(std::move(row));
      }
      out << report.dump(2) << '\n';
      return 0;
    }

    if (*stats_cmd) {
      auto report = to_json(dataset_stats(read_spa_file(stats_in)));
      report["config_hash"] = hash;
      out << report.dump(2) << '\n';
      return 0;
    }

    if (*hist_cmd) {
      std::optional<std::pair<double, double>> range;
      if (hist_min || hist_max) {
        if (!hist_min || !hist_max) throw ConfigError("--min and --max go together");
        range = std::make_pair(*hist_min, *hist_max);
      }
      const auto values = spa_field(read_spa_file(hist_in), hist_field);
      out << to_tsv(reward_histogram(values, bins, range));
      return 0;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

}  // namespace figa::cli
