#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figa/spa.hpp"
#include "figa/train.hpp"
#include "figa/weighting.hpp"

namespace figa {

struct ServiceConfig {
  std::string completion_endpoint;
  std::string completion_model = "gpt-3.5-turbo";
  std::string completion_token;  // secret; never part of the canonical form
  std::string rollout_model = "alpaca-7b";
  std::string reward_endpoint;
  double rollout_temperature = 0.0;
  double revision_temperature = 0.0;
  bool stub = false;
};

struct RunConfig {
  FilterThresholds thresholds;
  WeightConfig weight;
  TrainOptions train;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t max_decode_tokens = 64;
  ServiceConfig services;
  std::size_t workers = 8;

  /// Sorted flat key/value object of every setting except secrets.
  nlohmann::json canonical() const;
  /// 16 hex digits of FNV-1a over canonical().dump().
  std::string hash() const;
};

/// One override source: a flat object of key -> value, named for error messages.
/// A "preset" key expands into that preset's settings before the layer's other keys apply.
struct ConfigLayer {
  std::string source;
  nlohmann::json values = nlohmann::json::object();
};

/// Applies layers in order over the built-in defaults; later layers win, so pass
/// file, environment, flags. Unknown keys and type mismatches throw ConfigError naming
/// the key and its source.
RunConfig resolve_config(const std::vector<ConfigLayer>& layers);

/// Reads a flat JSON object from disk.
ConfigLayer config_file_layer(const std::filesystem::path& path);

/// FIGA_COMPLETION_TOKEN, FIGA_COMPLETION_ENDPOINT and FIGA_REWARD_ENDPOINT.
ConfigLayer environment_layer(const std::function<const char*(const char*)>& getenv);

/// Partial settings for a named preset; throws ConfigError listing the known names.
nlohmann::json preset(const std::string& name);
std::vector<std::string> preset_names();

/// Every recognised key, for documentation and `figa config --keys`.
std::vector<std::string> config_keys();

}  // namespace figa
