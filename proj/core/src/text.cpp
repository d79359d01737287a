#include "icdlab/text.hpp"

#include <charconv>
#include <fstream>

#include "icdlab/errors.hpp"

namespace icdlab {
namespace {

struct CodePoint {
  char32_t value;
  size_t length;
};

// Lenient UTF-8 decode: a malformed lead byte becomes U+FFFD of length 1.
CodePoint decode(std::string_view s, size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
  }
  return {0xFFFD, 1};
}

bool is_space(char32_t c) {
  switch (c) {
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  if (c >= 0xA1 && c <= 0xBF) {
    // Latin-1 punctuation and symbols, minus ordinal indicators, superscripts,
    // micro sign and vulgar fractions.
    switch (c) {
      case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA:
      case 0xBC: case 0xBD: case 0xBE:
        return false;
      default:
        return true;
    }
  }
  return c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E) || (c >= 0x2190 && c <= 0x23FF) ||
         (c >= 0x2500 && c <= 0x27FF) || (c >= 0x3001 && c <= 0x3003) ||
         (c >= 0x3008 && c <= 0x3011);
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_ascii_digit(c)) return false;
  }
  return true;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  size_t pos = 0;
  while (pos < text.size()) {
    const CodePoint cp = decode(text, pos);
    if (is_space(cp.value)) {
      pos += cp.length;
      continue;
    }
    Token tok;
    tok.index = tokens.size();
    tok.char_start = pos;
    if (is_punct(cp.value)) {
      pos += cp.length;
      tok.kind = TokenKind::punct;
    } else {
      while (pos < text.size()) {
        const CodePoint next = decode(text, pos);
        if (is_space(next.value) || is_punct(next.value)) break;
        pos += next.length;
      }
      const std::string_view run = text.substr(tok.char_start, pos - tok.char_start);
      if (all_digits(run)) {
        tok.kind = TokenKind::number;
        if (pos + 1 < text.size() && (text[pos] == '.' || text[pos] == ',') &&
            is_ascii_digit(text[pos + 1])) {
          pos += 1;
          while (pos < text.size() && is_ascii_digit(text[pos])) ++pos;
        }
      }
    }
    tok.char_end = pos;
    tok.text = std::string(text.substr(tok.char_start, pos - tok.char_start));
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

bool is_numeric_token(std::string_view token) {
  size_t sep = std::string_view::npos;
  for (size_t i = 0; i < token.size(); ++i) {
    if (is_ascii_digit(token[i])) continue;
    if ((token[i] == '.' || token[i] == ',') && sep == std::string_view::npos &&
        i > 0 && i + 1 < token.size()) {
      sep = i;
      continue;
    }
    return false;
  }
  return !token.empty();
}

std::optional<double> parse_numeric(std::string_view token) {
  if (!is_numeric_token(token)) return std::nullopt;
  std::string normalized(token);
  for (char& c : normalized) {
    if (c == ',') c = '.';
  }
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(normalized.data(), normalized.data() + normalized.size(), value);
  if (ec != std::errc() || ptr != normalized.data() + normalized.size()) return std::nullopt;
  return value;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

NameLexicon::NameLexicon(std::vector<std::string> names) {
  for (auto& n : names) {
    // The placeholder's inner word must never be scrubbed again.
    if (n.empty() || n == "PII") continue;
    if (names_.insert(n).second) ordered_.push_back(std::move(n));
  }
}

NameLexicon NameLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open name lexicon: " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(first, last - first + 1));
  }
  return NameLexicon(std::move(names));
}

const NameLexicon& NameLexicon::builtin() {
  static const NameLexicon lexicon({
      "Anna", "Arna", "Bjarki", "Bjorn", "Einar", "Elin", "Gudrun", "Gunnar",
      "Helga", "Hildur", "Jon", "Katrin", "Kristin", "Magnus", "Maria",
      "Olafur", "Ragnar", "Sara", "Sigrun", "Sigurdur", "Stefan", "Thora",
  });
  return lexicon;
}

bool NameLexicon::contains(std::string_view token) const {
  return names_.contains(std::string(token));
}

std::string scrub_pii(std::string_view text, const NameLexicon& names) {
  std::string out;
  out.reserve(text.size());
  size_t cursor = 0;
  for (const Token& tok : tokenize(text)) {
    out.append(text.substr(cursor, tok.char_start - cursor));
    cursor = tok.char_end;
    if (tok.kind == TokenKind::word && names.contains(tok.text)) {
      out.append(kPiiPlaceholder);
      continue;
    }
    // Digit runs may sit inside number tokens ("1234567.5") or words.
    const std::string& t = tok.text;
    size_t i = 0;
    while (i < t.size()) {
      if (!is_ascii_digit(t[i])) {
        out.push_back(t[i++]);
        continue;
      }
      size_t j = i;
      while (j < t.size() && is_ascii_digit(t[j])) ++j;
      if (j - i >= 7) {
        out.append(kPiiPlaceholder);
      } else {
        out.append(t, i, j - i);
      }
      i = j;
    }
  }
  out.append(text.substr(cursor));
  return out;
}

std::string scrub_pii(std::string_view text) { return scrub_pii(text, NameLexicon::builtin()); }

}  // namespace icdlab
