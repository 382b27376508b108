#pragma once

#include <string>

#include "figa/services.hpp"

namespace figa {

enum class RevisionReason { Inaccuracy, LackOfDetail, Structure, Other };

char reason_letter(RevisionReason reason);
RevisionReason reason_from_letter(char letter);  // throws ConfigError outside A-D

struct PromptSettings {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  nlohmann::json extra = nlohmann::json::object();
};

ChatRequest rollout_prompt(const std::string& query, const PromptSettings& settings);
ChatRequest reason_prompt(const std::string& query, const std::string& initial,
                          const std::string& reference, const PromptSettings& settings);
/// Revision prompts exist for A, B and C only; throws ConfigError for Other.
ChatRequest revision_prompt(RevisionReason reason, const std::string& query,
                            const std::string& initial, const std::string& reference,
                            const PromptSettings& settings);
ChatRequest annotation_prompt(const std::string& query, const std::string& original,
                              const std::string& better, const PromptSettings& settings);

}  // namespace figa
