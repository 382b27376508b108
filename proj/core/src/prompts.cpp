#include "figa/prompts.hpp"

#include "figa/error.hpp"

namespace figa {
namespace {

constexpr const char* kRolloutHeader =
    "Below is an instruction that describes a task. "
    "Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n";

constexpr const char* kReasonInstruction =
    "Among them, the quality of Response 1 is inferior to that of Response 2. Please compare "
    "them and choose one of the following four possible reasons for the area where Response 1 "
    "performed the worst:\n"
    "A. Needs more accurate content,\n"
    "B. Needs more comprehensive content or more details,\n"
    "C. Requires adjustments in structure,\n"
    "D. Other reasons (such as containing harmful information or going off-topic).\n"
    "Do not include analysis, but just return the choice.";

constexpr const char* kReviseA =
    "Please replace the content corresponding to Response 1 with the accurate and high-quality "
    "essence from Response 2, and remain the original structure of Response 1.\n"
    "Ensure that the edit distance between the optimized Response 1 and the Response 1 is as "
    "low as possible.";

constexpr const char* kReviseB =
    "Please incorporate the comprehensive topic or the details from Response 2 into Response 1, "
    "or if necessary, replace any synonymous content from Response 1 with that from Response 2.\n"
    "You must remain the original structure of Response 1, ensure the edit distance between the "
    "optimized Response 1 with the Response 1 is as low as possible, and not add new contents "
    "other than those contained in Response 1 and Response 2.";

constexpr const char* kReviseC =
    "The structure of Response 2 is well-organized, featuring elements including but not "
    "limited to:\n"
    "1. point-by-point addressing,\n"
    "2. providing an overview of the question before answering.\n"
    "Use the structure of Response 2 to rephrase Response 1.\n"
    "Ensure that the optimized Response 1 should maintain a relatively low edit distance from "
    "the original Response 1.";

constexpr const char* kAnnotateHeader =
    "Below is an instruction that describes a task, followed by an original response and a "
    "better response in terms of how well it aligns with human preferences, being helpful, "
    "harmless, and honest.\n"
    "Your task is to return a list containing tuples with words and corresponding scores, which "
    "are meant to measure the extent to which the words improve the quality of the original "
    "answer to the better answer.\n"
    "The scores are all integers, with 0 being the lowest score and 5 being the highest score.\n";

ChatRequest make(PromptKind kind, std::string content, const PromptSettings& settings) {
  ChatRequest req;
  req.kind = kind;
  req.model = settings.model;
  req.temperature = settings.temperature;
  req.extra = settings.extra;
  req.messages.push_back({"user", std::move(content)});
  return req;
}

std::string comparison(const std::string& query, const std::string& r1, const std::string& r2) {
  return "Question: " + query + "\nResponse 1: " + r1 + "\nResponse 2: " + r2 + "\n";
}

}  // namespace

char reason_letter(RevisionReason reason) {
  return static_cast<char>('A' + static_cast<int>(reason));
}

RevisionReason reason_from_letter(char letter) {
  if (letter < 'A' || letter > 'D')
    throw ConfigError(std::string("revision reason must be A-D, got '") + letter + "'");
  return static_cast<RevisionReason>(letter - 'A');
}

ChatRequest rollout_prompt(const std::string& query, const PromptSettings& settings) {
  auto req = make(PromptKind::Rollout, kRolloutHeader + query + "\n\n### Response:", settings);
  req.query = query;
  return req;
}

ChatRequest reason_prompt(const std::string& query, const std::string& initial,
                          const std::string& reference, const PromptSettings& settings) {
  auto req = make(PromptKind::ReasonAnalysis,
                  comparison(query, initial, reference) + kReasonInstruction, settings);
  req.query = query;
  req.first = initial;
  req.second = reference;
  return req;
}

ChatRequest revision_prompt(RevisionReason reason, const std::string& query,
                            const std::string& initial, const std::string& reference,
                            const PromptSettings& settings) {
  const char* instruction = nullptr;
  switch (reason) {
    case RevisionReason::Inaccuracy: instruction = kReviseA; break;
    case RevisionReason::LackOfDetail: instruction = kReviseB; break;
    case RevisionReason::Structure: instruction = kReviseC; break;
    case RevisionReason::Other:
      throw ConfigError("no revision prompt for reason D");
  }
  auto req = make(PromptKind::Revision, comparison(query, initial, reference) + instruction,
                  settings);
  req.query = query;
  req.first = initial;
  req.second = reference;
  return req;
}

ChatRequest annotation_prompt(const std::string& query, const std::string& original,
                              const std::string& better, const PromptSettings& settings) {
  auto req = make(PromptKind::WordAnnotation,
                  std::string(kAnnotateHeader) + "Instruction: " + query +
                      "\nOriginal Response: " + original + "\nBetter Response: " + better,
                  settings);
  req.query = query;
  req.first = original;
  req.second = better;
  return req;
}

}  // namespace figa
