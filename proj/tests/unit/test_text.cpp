#include <gtest/gtest.h>

#include "icdlab/errors.hpp"
#include "icdlab/text.hpp"
#include "fixtures.hpp"

using namespace icdlab;

TEST(Tokenize, OffsetsSliceBackToText) {
  const std::string text = "Temperature 38,5. Denies   cough; HR 120!";
  const auto toks = tokenize(text);
  ASSERT_FALSE(toks.empty());
  for (size_t i = 0; i < toks.size(); ++i) {
    EXPECT_EQ(toks[i].index, i);
    EXPECT_EQ(text.substr(toks[i].char_start, toks[i].char_end - toks[i].char_start), toks[i].text);
  }
}

TEST(Tokenize, PunctuationAndNumbers) {
  const auto toks = tokenize("Temp 38.5, pulse 120. Ok");
  std::vector<std::string> texts;
  for (const auto& t : toks) texts.push_back(t.text);
  EXPECT_EQ(texts, (std::vector<std::string>{"Temp", "38.5", ",", "pulse", "120", ".", "Ok"}));
  EXPECT_EQ(toks[1].kind, TokenKind::number);
  EXPECT_EQ(toks[2].kind, TokenKind::punct);
  EXPECT_EQ(toks[4].kind, TokenKind::number);
  EXPECT_EQ(toks[5].kind, TokenKind::punct);
  EXPECT_EQ(toks[0].kind, TokenKind::word);
}

TEST(Tokenize, DecimalCommaStaysInNumber) {
  const auto toks = tokenize("hiti 38,5 stig");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].text, "38,5");
  EXPECT_DOUBLE_EQ(parse_numeric(toks[1].text).value(), 38.5);
}

TEST(Tokenize, MultibyteOffsetsAreBytes) {
  const std::string text = "Jón hefur hósta.";
  const auto toks = tokenize(text);
  ASSERT_EQ(toks.size(), 4u);
  EXPECT_EQ(toks[0].text, "Jón");
  EXPECT_EQ(toks[0].char_end, 4u);  // 'ó' is two bytes
  EXPECT_EQ(toks[3].text, ".");
}

TEST(Tokenize, EmptyAndWhitespace) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" \t\n ").empty());
}

TEST(Numeric, Parse) {
  EXPECT_TRUE(is_numeric_token("120"));
  EXPECT_TRUE(is_numeric_token("1.5"));
  EXPECT_FALSE(is_numeric_token("1.5.2"));
  EXPECT_FALSE(is_numeric_token(".5"));
  EXPECT_FALSE(is_numeric_token("5."));
  EXPECT_FALSE(is_numeric_token("abc"));
  EXPECT_FALSE(parse_numeric("x1").has_value());
  EXPECT_DOUBLE_EQ(parse_numeric("98").value(), 98.0);
}

TEST(Pii, ScrubsLongDigitRunsAndNames) {
  const NameLexicon names({"Anna", "Jon"});
  const std::string out = scrub_pii("Anna called from 5551234 about Jon, not 555123.", names);
  EXPECT_EQ(out, "⟨PII⟩ called from ⟨PII⟩ about ⟨PII⟩, not 555123.");
}

TEST(Pii, CaseSensitiveExactMatch) {
  const NameLexicon names({"Anna"});
  EXPECT_EQ(scrub_pii("anna Annabel", names), "anna Annabel");
}

TEST(Pii, Idempotent) {
  const std::string once = scrub_pii("Gudrun phoned 8881234 yesterday; Jon too.");
  EXPECT_EQ(scrub_pii(once), once);
}

TEST(Pii, LexiconIgnoresPlaceholderWord) {
  const NameLexicon names({"PII", "", "Anna"});
  EXPECT_EQ(names.size(), 1u);
}

TEST(Pii, LoadMissingFileIsIoError) {
  EXPECT_THROW(NameLexicon::load("/nonexistent/names.txt"), IoError);
}

TEST(Pii, GeneratedNotesAreAlreadyScrubbed) {
  for (const auto& n : icdlab::testing::gold303().notes) ASSERT_EQ(scrub_pii(n.text), n.text);
}
