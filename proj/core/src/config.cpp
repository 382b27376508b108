#include "figa/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "figa/error.hpp"

namespace figa {
namespace {

using nlohmann::json;

enum class Kind { Real, Count, Text, Flag };

struct Key {
  const char* name;
  Kind kind;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;  // null for secrets
};

template <typename Fn>
auto text_setter(Fn parse) {
  return [parse](const json& v) { return parse(v.get<std::string>()); };
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"eta1", Kind::Real, [](RunConfig& c, const json& v) { c.thresholds.eta1 = v; },
       [](const RunConfig& c) { return json(c.thresholds.eta1); }},
      {"eta2", Kind::Real, [](RunConfig& c, const json& v) { c.thresholds.eta2 = v; },
       [](const RunConfig& c) { return json(c.thresholds.eta2); }},
      {"eta3", Kind::Real, [](RunConfig& c, const json& v) { c.thresholds.eta3 = v; },
       [](const RunConfig& c) { return json(c.thresholds.eta3); }},
      {"alpha", Kind::Real, [](RunConfig& c, const json& v) { c.weight.alpha = v; },
       [](const RunConfig& c) { return json(c.weight.alpha); }},
      {"beta", Kind::Real, [](RunConfig& c, const json& v) { c.weight.beta = v; },
       [](const RunConfig& c) { return json(c.weight.beta); }},
      {"gamma", Kind::Real, [](RunConfig& c, const json& v) { c.weight.gamma = v; },
       [](const RunConfig& c) { return json(c.weight.gamma); }},
      {"nll_threshold", Kind::Real, [](RunConfig& c, const json& v) { c.weight.nll_threshold = v; },
       [](const RunConfig& c) { return json(c.weight.nll_threshold); }},
      {"nll_mode", Kind::Text,
       [](RunConfig& c, const json& v) { c.weight.nll_mode = parse_nll_mode(v.get<std::string>()); },
       [](const RunConfig& c) { return json(to_string(c.weight.nll_mode)); }},
      {"strategy", Kind::Text,
       [](RunConfig& c, const json& v) { c.weight.strategy = parse_strategy(v.get<std::string>()); },
       [](const RunConfig& c) { return json(to_string(c.weight.strategy)); }},
      {"annotator_mode", Kind::Text,
       [](RunConfig& c, const json& v) {
         c.weight.annotator_mode = parse_annotator_mode(v.get<std::string>());
       },
       [](const RunConfig& c) { return json(to_string(c.weight.annotator_mode)); }},
      {"lr", Kind::Real, [](RunConfig& c, const json& v) { c.train.lr = v; },
       [](const RunConfig& c) { return json(c.train.lr); }},
      {"epochs", Kind::Count, [](RunConfig& c, const json& v) { c.train.epochs = v; },
       [](const RunConfig& c) { return json(c.train.epochs); }},
      {"clip", Kind::Real, [](RunConfig& c, const json& v) { c.train.clip = v; },
       [](const RunConfig& c) { return json(c.train.clip); }},
      {"seed", Kind::Count, [](RunConfig& c, const json& v) { c.train.seed = v; },
       [](const RunConfig& c) { return json(c.train.seed); }},
      {"batch_size", Kind::Count, [](RunConfig& c, const json& v) { c.train.batch_size = v; },
       [](const RunConfig& c) { return json(c.train.batch_size); }},
      {"embed_dim", Kind::Count, [](RunConfig& c, const json& v) { c.embed_dim = v; },
       [](const RunConfig& c) { return json(c.embed_dim); }},
      {"hidden_dim", Kind::Count, [](RunConfig& c, const json& v) { c.hidden_dim = v; },
       [](const RunConfig& c) { return json(c.hidden_dim); }},
      {"max_decode_tokens", Kind::Count,
       [](RunConfig& c, const json& v) { c.max_decode_tokens = v; },
       [](const RunConfig& c) { return json(c.max_decode_tokens); }},
      {"workers", Kind::Count, [](RunConfig& c, const json& v) { c.workers = v; },
       [](const RunConfig& c) { return json(c.workers); }},
      {"completion_endpoint", Kind::Text,
       [](RunConfig& c, const json& v) { c.services.completion_endpoint = v; },
       [](const RunConfig& c) { return json(c.services.completion_endpoint); }},
      {"completion_model", Kind::Text,
       [](RunConfig& c, const json& v) { c.services.completion_model = v; },
       [](const RunConfig& c) { return json(c.services.completion_model); }},
      {"completion_token", Kind::Text,
       [](RunConfig& c, const json& v) { c.services.completion_token = v; }, nullptr},
      {"rollout_model", Kind::Text,
       [](RunConfig& c, const json& v) { c.services.rollout_model = v; },
       [](const RunConfig& c) { return json(c.services.rollout_model); }},
      {"reward_endpoint", Kind::Text,
       [](RunConfig& c, const json& v) { c.services.reward_endpoint = v; },
       [](const RunConfig& c) { return json(c.services.reward_endpoint); }},
      {"rollout_temperature", Kind::Real,
       [](RunConfig& c, const json& v) { c.services.rollout_temperature = v; },
       [](const RunConfig& c) { return json(c.services.rollout_temperature); }},
      {"revision_temperature", Kind::Real,
       [](RunConfig& c, const json& v) { c.services.revision_temperature = v; },
       [](const RunConfig& c) { return json(c.services.revision_temperature); }},
      {"stub_services", Kind::Flag, [](RunConfig& c, const json& v) { c.services.stub = v; },
       [](const RunConfig& c) { return json(c.services.stub); }},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (name == k.name) return &k;
  return nullptr;
}

bool kind_matches(Kind kind, const json& v) {
  switch (kind) {
    case Kind::Real: return v.is_number();
    case Kind::Count: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case Kind::Text: return v.is_string();
    case Kind::Flag: return v.is_boolean();
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::Real: return "a number";
    case Kind::Count: return "a non-negative integer";
    case Kind::Text: return "a string";
    case Kind::Flag: return "a boolean";
  }
  return "?";
}

void apply(RunConfig& cfg, const std::string& name, const json& value, const std::string& source) {
  const Key* key = find_key(name);
  if (!key) throw ConfigError("unknown config key '" + name + "' in " + source);
  if (!kind_matches(key->kind, value))
    throw ConfigError("config key '" + name + "' in " + source + " must be " +
                      kind_name(key->kind));
  try {
    key->set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + name + "' in " + source + ": " + e.what());
  }
}

const std::map<std::string, json>& presets() {
  static const std::map<std::string, json> table = {
      {"figa-default",
       {{"alpha", 1.0}, {"beta", 0.5}, {"gamma", 0.0}, {"nll_mode", "below"},
        {"strategy", "levenshtein"}}},
      {"beta-zero", {{"alpha", 1.0}, {"beta", 0.0}, {"gamma", 0.0}}},
      {"beta-0.25", {{"alpha", 1.0}, {"beta", 0.25}, {"gamma", 0.0}}},
      {"beta-0.2", {{"alpha", 1.0}, {"beta", 0.2}, {"gamma", 0.0}}},
      {"gamma-0.3", {{"alpha", 1.0}, {"beta", 0.5}, {"gamma", 0.3}}},
      {"beta-zero-gamma-0.3", {{"alpha", 1.0}, {"beta", 0.0}, {"gamma", 0.3}}},
      {"reward-scaled", {{"strategy", "reward-scaled"}, {"gamma", 0.0}}},
      {"bag-of-words", {{"strategy", "bag-of-words"}, {"alpha", 1.0}, {"beta", 0.0}}},
      {"inverted-threshold", {{"nll_mode", "inverted"}}},
      {"no-nll-filter", {{"nll_mode", "none"}}},
  };
  return table;
}

}  // namespace

json RunConfig::canonical() const {
  json out = json::object();
  for (const auto& k : keys())
    if (k.get) out[k.name] = k.get(*this);
  return out;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical().dump())));
  return buf;
}

json preset(const std::string& name) {
  const auto& table = presets();
  if (const auto it = table.find(name); it != table.end()) return it->second;
  std::string known;
  for (const auto& [k, _] : table) known += (known.empty() ? "" : ", ") + k;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, _] : presets()) out.push_back(k);
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.emplace_back(k.name);
  return out;
}

RunConfig resolve_config(const std::vector<ConfigLayer>& layers) {
  RunConfig cfg;
  for (const auto& layer : layers) {
    if (!layer.values.is_object())
      throw ConfigError("config source " + layer.source + " is not a key/value object");
    if (const auto it = layer.values.find("preset"); it != layer.values.end()) {
      if (!it->is_string()) throw ConfigError("config key 'preset' in " + layer.source + " must be a string");
      const std::string name = it->get<std::string>();
      const json bundle = preset(name);
      for (const auto& [k, v] : bundle.items())
        apply(cfg, k, v, layer.source + " (preset " + name + ")");
    }
    for (const auto& [k, v] : layer.values.items()) {
      if (k == "preset") continue;
      apply(cfg, k, v, layer.source);
    }
  }
  cfg.weight.validate();
  if (cfg.train.batch_size == 0) throw ConfigError("config key 'batch_size' must be positive");
  if (cfg.workers == 0) throw ConfigError("config key 'workers' must be positive");
  return cfg;
}

ConfigLayer config_file_layer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  ConfigLayer layer{"file " + path.string(), {}};
  try {
    layer.values = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  if (!layer.values.is_object())
    throw ConfigError("config file " + path.string() + " must hold a flat key/value object");
  for (const auto& [k, v] : layer.values.items())
    if (v.is_structured())
      throw ConfigError("config key '" + k + "' in " + layer.source + " must be a scalar");
  return layer;
}

ConfigLayer environment_layer(const std::function<const char*(const char*)>& getenv) {
  ConfigLayer layer{"environment", json::object()};
  const std::pair<const char*, const char*> vars[] = {
      {"FIGA_COMPLETION_TOKEN", "completion_token"},
      {"FIGA_COMPLETION_ENDPOINT", "completion_endpoint"},
      {"FIGA_REWARD_ENDPOINT", "reward_endpoint"},
  };
  for (const auto& [var, key] : vars)
    if (const char* v = getenv(var); v && *v) layer.values[key] = v;
  return layer;
}

}  // namespace figa
