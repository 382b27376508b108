#include "figa/token_align.hpp"

#include <algorithm>
#include <numeric>

#include "figa/error.hpp"

namespace figa {
namespace {

// Byte length of the whitespace code point starting at s[i], or 0.
std::size_t whitespace_len(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  const unsigned char c = b(0);
  if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
  if (c == 0xC2 && (b(1) == 0x85 || b(1) == 0xA0)) return 2;
  if (c == 0xE1 && b(1) == 0x9A && b(2) == 0x80) return 3;  // U+1680
  if (c == 0xE2 && b(1) == 0x80 && ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 ||
                                    b(2) == 0xA9 || b(2) == 0xAF))
    return 3;                                                // U+2000..200A, 2028, 2029, 202F
  if (c == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool is_split_mark(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

void split_chunk(std::string_view chunk, TokenSeq& out) {
  std::size_t first = 0;
  std::size_t last = chunk.size();
  while (first < last && is_split_mark(chunk[first])) {
    out.emplace_back(1, chunk[first]);
    ++first;
  }
  std::size_t tail = last;
  while (tail > first && is_split_mark(chunk[tail - 1])) --tail;
  if (tail > first) out.emplace_back(chunk.substr(first, tail - first));
  for (std::size_t k = tail; k < last; ++k) out.emplace_back(1, chunk[k]);
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  std::size_t start = 0;
  while (i < text.size()) {
    if (const std::size_t ws = whitespace_len(text, i); ws > 0) {
      if (i > start) split_chunk(text.substr(start, i - start), out);
      i += ws;
      start = i;
    } else {
      ++i;
    }
  }
  if (i > start) split_chunk(text.substr(start, i - start), out);
  return out;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k) out += ' ';
    out += tokens[k];
  }
  return out;
}

const char* to_string(TokenTag tag) {
  switch (tag) {
    case TokenTag::Unchanged: return "unchanged";
    case TokenTag::Added: return "added";
    case TokenTag::Deleted: return "deleted";
    case TokenTag::Substituted: return "substituted";
  }
  return "?";
}

std::size_t EditScript::count_initial(TokenTag tag) const {
  return static_cast<std::size_t>(std::count(initial_tags.begin(), initial_tags.end(), tag));
}

std::size_t EditScript::count_revised(TokenTag tag) const {
  return static_cast<std::size_t>(std::count(revised_tags.begin(), revised_tags.end(), tag));
}

std::size_t edit_distance(std::span<const Token> a, std::span<const Token> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Rolling row over the shorter sequence.
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

EditScript edit_script(std::span<const Token> initial, std::span<const Token> revised) {
  const std::size_t n = initial.size();
  const std::size_t m = revised.size();
  const std::size_t stride = m + 1;
  std::vector<std::size_t> dp((n + 1) * stride);
  const auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dp[i * stride + j]; };

  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    at(i, 0) = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (initial[i - 1] == revised[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditScript script;
  script.distance = at(n, m);
  script.initial_tags.assign(n, TokenTag::Unchanged);
  script.revised_tags.assign(m, TokenTag::Unchanged);

  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = at(i, j);
    if (i > 0 && j > 0) {
      const bool same = initial[i - 1] == revised[j - 1];
      if (same && here == at(i - 1, j - 1)) {
        --i;
        --j;
        continue;
      }
      if (!same && here == at(i - 1, j - 1) + 1) {
        script.initial_tags[--i] = TokenTag::Substituted;
        script.revised_tags[--j] = TokenTag::Substituted;
        continue;
      }
    }
    if (i > 0 && here == at(i - 1, j) + 1) {
      script.initial_tags[--i] = TokenTag::Deleted;
      continue;
    }
    script.revised_tags[--j] = TokenTag::Added;
  }
  return script;
}

TokenSeq replay(const EditScript& script, std::span<const Token> initial,
                std::span<const Token> revised) {
  if (script.initial_tags.size() != initial.size() || script.revised_tags.size() != revised.size())
    throw StructuralError("edit script does not match sequence lengths");

  TokenSeq out;
  out.reserve(revised.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < initial.size() || j < revised.size()) {
    if (i < initial.size() && script.initial_tags[i] == TokenTag::Deleted) {
      ++i;
      continue;
    }
    if (j < revised.size() && script.revised_tags[j] == TokenTag::Added) {
      out.push_back(revised[j++]);
      continue;
    }
    if (i >= initial.size() || j >= revised.size())
      throw StructuralError("edit script has unpaired tokens");
    const TokenTag a = script.initial_tags[i];
    const TokenTag b = script.revised_tags[j];
    if (a != b) throw StructuralError("edit script pairs mismatched tags");
    if (a == TokenTag::Unchanged) {
      if (initial[i] != revised[j]) throw StructuralError("unchanged pair differs: " + initial[i]);
      out.push_back(initial[i]);
    } else {
      out.push_back(revised[j]);
    }
    ++i;
    ++j;
  }
  return out;
}

}  // namespace figa
