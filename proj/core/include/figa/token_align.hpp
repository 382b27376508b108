#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace figa {

using Token = std::string;
using TokenSeq = std::vector<Token>;

/// Splits on Unicode whitespace, then peels the marks . , ! ? ; : " ' ( ) off the
/// front and back of every chunk as one-character tokens.
TokenSeq tokenize(std::string_view text);

/// Joins tokens with single spaces; tokenize(detokenize(tokenize(x))) == tokenize(x).
std::string detokenize(std::span<const Token> tokens);

enum class TokenTag : unsigned char { Unchanged, Added, Deleted, Substituted };

const char* to_string(TokenTag tag);

struct EditScript {
  std::size_t distance = 0;
  std::vector<TokenTag> initial_tags;  // one per token of the initial sequence
  std::vector<TokenTag> revised_tags;  // one per token of the revised sequence

  std::size_t count_initial(TokenTag tag) const;
  std::size_t count_revised(TokenTag tag) const;
};

/// Unit-cost Levenshtein distance over tokens. O(|a|·|b|) time, O(min(|a|,|b|)) space.
std::size_t edit_distance(std::span<const Token> a, std::span<const Token> b);

/// Backtraces one minimal script. Ties resolve Match > Substitute > Delete > Insert,
/// walking from the end of both sequences, so the result is deterministic.
EditScript edit_script(std::span<const Token> initial, std::span<const Token> revised);

/// Applies a script to `initial`: Deleted tokens are dropped, Substituted tokens are
/// replaced in order by the revised side's Substituted tokens, Added tokens are inserted.
/// Needs `revised` to supply the substituted/added token strings.
TokenSeq replay(const EditScript& script, std::span<const Token> initial,
                std::span<const Token> revised);

}  // namespace figa
