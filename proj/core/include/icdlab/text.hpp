#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace icdlab {

// Stamped into every corpus, catalog and extractor model; spans are only
// comparable between artifacts that share it.
inline constexpr std::string_view kTokenizerVersion = "icdlab-tok/1";

inline constexpr std::string_view kPiiPlaceholder = "⟨PII⟩";

enum class TokenKind { word, number, punct };

// A token of a note. Offsets are UTF-8 byte offsets into the source text,
// half-open, so text.substr(char_start, char_end - char_start) == text.
struct Token {
  size_t index = 0;
  std::string text;
  size_t char_start = 0;
  size_t char_end = 0;
  TokenKind kind = TokenKind::word;

  bool operator==(const Token&) const = default;
};

// Splits on whitespace, emits each punctuation code point as its own token and
// keeps digit runs (with at most one internal '.' or ',' between digits) whole.
std::vector<Token> tokenize(std::string_view text);

bool is_numeric_token(std::string_view token);

// Parses a numeric token; ',' is accepted as the decimal separator.
std::optional<double> parse_numeric(std::string_view token);

std::string to_lower_ascii(std::string_view s);

class NameLexicon {
 public:
  NameLexicon() = default;
  explicit NameLexicon(std::vector<std::string> names);

  // One name per line, UTF-8. Blank lines are skipped.
  static NameLexicon load(const std::filesystem::path& path);
  static const NameLexicon& builtin();

  bool contains(std::string_view token) const;
  size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return ordered_; }

 private:
  std::unordered_set<std::string> names_;
  std::vector<std::string> ordered_;
};

// Replaces runs of >= 7 ASCII digits and lexicon names (exact, case-sensitive
// token match) with kPiiPlaceholder. Idempotent.
std::string scrub_pii(std::string_view text, const NameLexicon& names);
std::string scrub_pii(std::string_view text);

}  // namespace icdlab
