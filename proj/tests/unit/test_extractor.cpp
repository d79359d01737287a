#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "icdlab/errors.hpp"
#include "icdlab/extractor.hpp"
#include "icdlab/metrics.hpp"
#include "fixtures.hpp"

using namespace icdlab;
using icdlab::testing::catalog;
using icdlab::testing::gold303;

namespace {

const CorpusSplit& split() {
  static const CorpusSplit s = stratified_split(gold303(), {}, 21);
  return s;
}

const LexiconTrainingResult& lexicon() {
  static const LexiconTrainingResult r = train_lexicon_extractor(split().train, catalog());
  return r;
}

LabeledCorpus small(size_t n) {
  LabeledCorpus c;
  c.notes.assign(gold303().notes.begin(), gold303().notes.begin() + static_cast<long>(n));
  return c;
}

// Checks the result contract for one note.
void expect_contract(const Extractor& ex, const LabeledNote& note, const std::vector<ExtractionResult>& rs) {
  const auto& cat = catalog();
  ASSERT_EQ(rs.size(), cat.size());
  const size_t n_tokens = tokenize(note.text).size();
  for (size_t q = 0; q < cat.size(); ++q) {
    const auto& r = rs[q];
    EXPECT_EQ(r.question_id, cat[q].id);
    EXPECT_GE(r.answerable_prob, 0.0);
    EXPECT_LE(r.answerable_prob, 1.0);
    EXPECT_EQ(r.answered(), r.answerable_prob >= ex.threshold()) << cat[q].id;
    if (r.answered()) {
      EXPECT_GE(r.span.start, 1u);
      EXPECT_LT(r.span.start, r.span.end);
      EXPECT_LE(r.span.end, n_tokens + 1);
    }
    const bool binary = cat[q].answer_kind == AnswerKind::binary;
    EXPECT_EQ(r.binary_prob.has_value(), r.answered() && binary);
    EXPECT_EQ(r.numeric_value.has_value(), r.answered() && !binary);
    if (r.binary_prob) {
      EXPECT_GE(*r.binary_prob, 0.0);
      EXPECT_LE(*r.binary_prob, 1.0);
    }
  }
}

// Reports every question as not answered.
class SilentExtractor : public Extractor {
 public:
  std::string_view kind() const override { return "silent"; }

 protected:
  std::vector<ExtractionResult> do_extract(const LabeledNote&, const QuestionCatalog& catalog) const override {
    std::vector<ExtractionResult> out;
    for (const auto& q : catalog.questions()) out.push_back(ExtractionResult{q.id});
    return out;
  }
};

}  // namespace

TEST(Spans, SentinelShift) {
  EXPECT_EQ(to_model_span({0, 2}), (TokenSpan{1, 3}));
  EXPECT_EQ(to_note_span({1, 3}), (TokenSpan{0, 2}));
  EXPECT_FALSE(to_note_span(kSentinelSpan).has_value());
  EXPECT_THROW(to_note_span({0, 3}), ValidationError);
  EXPECT_THROW(to_note_span({2, 2}), ValidationError);
}

TEST(Oracle, ReproducesGold) {
  const auto c = small(30);
  const auto oracle = make_oracle(c, catalog());
  for (const auto& note : c.notes) {
    const auto rs = oracle->extract(hide_annotations(note), catalog());
    expect_contract(*oracle, note, rs);
    for (size_t q = 0; q < rs.size(); ++q) {
      const auto& a = note.annotations[q];
      EXPECT_EQ(rs[q].answered(), a.answered);
      EXPECT_EQ(to_note_span(rs[q].span), a.span);
      if (a.binary_answer) EXPECT_EQ(*rs[q].binary_prob, *a.binary_answer == 1 ? 1.0 : 0.0);
      if (a.numeric_value) EXPECT_EQ(*rs[q].numeric_value, *a.numeric_value);
    }
  }
}

TEST(Oracle, UnknownNoteAndTokenizerMismatch) {
  const auto c = small(5);
  const auto oracle = make_oracle(c, catalog());
  auto stranger = gold303().notes[100];
  EXPECT_THROW(oracle->extract(stranger, catalog()), ValidationError);
  auto old = c.notes[0];
  old.tokenizer_version = "other-tok/0";
  EXPECT_THROW(oracle->extract(old, catalog()), ValidationError);
}

TEST(Oracle, ReportIsPerfect) {
  const auto c = small(40);
  const auto r = evaluate_extractor(*make_oracle(c, catalog()), c, catalog());
  EXPECT_DOUBLE_EQ(r.span_f1, 1.0);
  EXPECT_DOUBLE_EQ(r.binary_mcc, 1.0);
  EXPECT_DOUBLE_EQ(r.impossible_mcc, 1.0);
  EXPECT_EQ(r.pairs, 40 * catalog().size());
}

TEST(Evaluate, SilentExtractorClosedForm) {
  const auto c = small(40);
  size_t unanswered = 0, total = 0;
  for (const auto& n : c.notes)
    for (const auto& a : n.annotations) {
      ++total;
      unanswered += !a.answered;
    }
  const auto r = evaluate_extractor(SilentExtractor{}, c, catalog());
  EXPECT_NEAR(r.span_f1, static_cast<double>(unanswered) / total, 1e-12);
  EXPECT_DOUBLE_EQ(r.impossible_mcc, 0.0);
  EXPECT_DOUBLE_EQ(r.binary_mcc, 0.0);
}

TEST(Evaluate, EmptyTestRejected) {
  EXPECT_THROW(evaluate_extractor(SilentExtractor{}, LabeledCorpus{}, catalog()), ValidationError);
}

TEST(Noisy, ZeroNoiseIsOracle) {
  const auto c = small(30);
  const auto oracle = make_oracle(c, catalog());
  const auto noisy = make_noisy(c, catalog(), NoiseConfig{}, 3);
  EXPECT_EQ(extract_all(*oracle, c, catalog()), extract_all(*noisy, c, catalog()));
}

TEST(Noisy, FullMissDropsEverything) {
  const auto c = small(20);
  NoiseConfig n;
  n.eps_miss = 1.0;
  const auto noisy = make_noisy(c, catalog(), n, 3);
  for (const auto& rs : extract_all(*noisy, c, catalog()))
    for (const auto& r : rs) EXPECT_FALSE(r.answered());
}

TEST(Noisy, FullFlipInvertsBinaries) {
  const auto c = small(30);
  NoiseConfig n;
  n.eps_flip = 1.0;
  const auto noisy = make_noisy(c, catalog(), n, 3);
  const auto rs = extract_all(*noisy, c, catalog());
  for (size_t i = 0; i < c.size(); ++i) {
    for (size_t q = 0; q < catalog().size(); ++q) {
      const auto& a = c.notes[i].annotations[q];
      const auto& r = rs[i][q];
      EXPECT_EQ(r.answered(), a.answered);
      if (a.binary_answer) EXPECT_EQ(*r.binary_prob, *a.binary_answer == 1 ? 0.0 : 1.0);
      if (a.numeric_value) EXPECT_EQ(*r.numeric_value, *a.numeric_value);
    }
  }
}

TEST(Noisy, TierMultipliersGateNoise) {
  const auto c = small(30);
  NoiseConfig n;
  n.eps_miss = 1.0;
  n.tier_multipliers = {0.0, 0.0, 1.0};
  const auto noisy = make_noisy(c, catalog(), n, 3);
  const auto rs = extract_all(*noisy, c, catalog());
  for (size_t i = 0; i < c.size(); ++i) {
    for (size_t q = 0; q < catalog().size(); ++q) {
      const bool gold = c.notes[i].annotations[q].answered;
      if (catalog()[q].tier == 3) {
        EXPECT_FALSE(rs[i][q].answered());
      } else {
        EXPECT_EQ(rs[i][q].answered(), gold);
      }
    }
  }
}

TEST(Noisy, FlipFrequencyMatchesRate) {
  const auto& c = gold303();
  NoiseConfig n;
  n.eps_flip = 0.3;
  const auto rs = extract_all(*make_noisy(c, catalog(), n, 11), c, catalog());
  size_t flipped = 0, total = 0;
  for (size_t i = 0; i < c.size(); ++i) {
    for (size_t q = 0; q < catalog().size(); ++q) {
      const auto& a = c.notes[i].annotations[q];
      if (!a.binary_answer) continue;
      ++total;
      flipped += (*rs[i][q].binary_prob == 1.0) != (*a.binary_answer == 1);
    }
  }
  ASSERT_GT(total, 3000u);
  EXPECT_NEAR(static_cast<double>(flipped) / total, 0.3, 0.03);
}

TEST(Noisy, HallucinationsRespectContract) {
  const auto c = small(30);
  NoiseConfig n;
  n.eps_hallucinate = 1.0;
  n.numeric_jitter_std = 2.0;
  const auto noisy = make_noisy(c, catalog(), n, 5);
  for (const auto& note : c.notes) {
    const auto rs = noisy->extract(note, catalog());
    expect_contract(*noisy, note, rs);
    for (const auto& r : rs) EXPECT_TRUE(r.answered());
  }
}

TEST(Noisy, OrderIndependent) {
  const auto c = small(30);
  NoiseConfig n;
  n.eps_miss = 0.3;
  n.eps_hallucinate = 0.2;
  n.eps_flip = 0.2;
  n.numeric_jitter_std = 1.0;
  const auto noisy = make_noisy(c, catalog(), n, 5);
  const auto forward = extract_all(*noisy, c, catalog());
  for (size_t i = c.size(); i-- > 0;) EXPECT_EQ(noisy->extract(c.notes[i], catalog()), forward[i]);
}

TEST(Noisy, RejectsRatesAboveOne) {
  const auto c = small(5);
  NoiseConfig n;
  n.eps_miss = 0.4;
  n.tier_multipliers = {1.0, 3.0, 1.0};
  EXPECT_THROW(make_noisy(c, catalog(), n, 1), ValidationError);
  n.tier_multipliers = {1.0, -1.0, 1.0};
  n.eps_miss = 0.1;
  EXPECT_THROW(make_noisy(c, catalog(), n, 1), ValidationError);
}

TEST(Noisy, ImpossibleMccDegradesWithMissRate) {
  const auto& c = gold303();
  double prev = 2.0;
  for (double eps : {0.0, 0.2, 0.5, 0.8}) {
    NoiseConfig n;
    n.eps_miss = eps;
    const double m = evaluate_extractor(*make_noisy(c, catalog(), n, 13), c, catalog()).impossible_mcc;
    EXPECT_LE(m, prev) << eps;
    prev = m;
  }
}

TEST(Noisy, ConfigJsonRoundTrip) {
  NoiseConfig n;
  n.eps_miss = 0.1;
  n.eps_hallucinate = 0.12;
  n.numeric_jitter_std = 0.5;
  n.tier_multipliers = {1.0, 5.0, 5.0};
  EXPECT_EQ(nlohmann::json(n).get<NoiseConfig>(), n);
}

TEST(Lexicon, ContractOnHeldOutNotes) {
  const LexiconExtractor ex(lexicon().model);
  for (const auto& note : split().test.notes) expect_contract(ex, note, ex.extract(hide_annotations(note), catalog()));
}

TEST(Lexicon, AccurateOnHeldOutNotes) {
  const LexiconExtractor ex(lexicon().model);
  const auto r = evaluate_extractor(ex, split().test, catalog());
  EXPECT_GT(r.span_f1, 0.95);
  EXPECT_GT(r.binary_mcc, 0.9);
  EXPECT_GT(r.impossible_mcc, 0.9);
}

TEST(Lexicon, RecoversUniqueTrainingSpans) {
  const LexiconExtractor ex(lexicon().model);
  const auto& train = split().train;
  std::vector<std::string> lowered;
  for (const auto& n : train.notes) lowered.push_back(to_lower_ascii(n.text));
  size_t checked = 0;
  for (const auto& note : train.notes) {
    const auto toks = tokenize(note.text);
    std::vector<ExtractionResult> rs;
    for (size_t q = 0; q < catalog().size(); ++q) {
      const auto& a = note.annotations[q];
      if (!a.answered) continue;
      const size_t from = toks[a.span->start].char_start, to = toks[a.span->end - 1].char_end;
      const auto text = to_lower_ascii(note.text.substr(from, to - from));
      size_t holders = 0;
      for (const auto& t : lowered) holders += t.find(text) != std::string::npos;
      if (holders != 1) continue;
      if (rs.empty()) rs = ex.extract(note, catalog());
      EXPECT_GE(token_span_f1(to_note_span(rs[q].span), a.span), 0.5) << note.id << " " << a.question_id;
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(Lexicon, DeterministicDigest) {
  const auto again = train_lexicon_extractor(split().train, catalog());
  EXPECT_EQ(again.model.digest(), lexicon().model.digest());
  EXPECT_EQ(again.model, lexicon().model);
}

TEST(Lexicon, JsonRoundTrip) {
  const nlohmann::json j = lexicon().model;
  const auto back = j.get<LexiconExtractorModel>();
  EXPECT_EQ(back.digest(), lexicon().model.digest());
  const LexiconExtractor a(lexicon().model), b(back);
  const auto& note = split().test.notes[0];
  EXPECT_EQ(a.extract(note, catalog()), b.extract(note, catalog()));
}

TEST(Lexicon, NeverAnsweredQuestionIsDegenerate) {
  LabeledCorpus train = split().train;
  const std::string qid = catalog()[0].id;
  for (auto& note : train.notes) {
    for (auto& a : note.annotations) {
      if (a.question_id != qid) continue;
      a = Annotation{qid};
    }
  }
  const auto r = train_lexicon_extractor(train, catalog());
  EXPECT_EQ(r.report.degenerate_questions, std::vector<std::string>{qid});
  EXPECT_TRUE(r.model.questions[0].degenerate);
  const LexiconExtractor ex(r.model);
  for (const auto& note : split().test.notes) EXPECT_FALSE(ex.extract(note, catalog())[0].answered());
}

TEST(Lexicon, PatternBanksNonEmptyAndFinite) {
  for (const auto& q : lexicon().model.questions) {
    EXPECT_FALSE(q.degenerate) << q.question_id;
    EXPECT_FALSE(q.patterns.empty()) << q.question_id;
    EXPECT_TRUE(std::isfinite(q.answer_slope) && std::isfinite(q.answer_intercept));
    for (double p : q.polarity) EXPECT_TRUE(std::isfinite(p));
  }
  EXPECT_GE(lexicon().model.threshold, 0.05);
  EXPECT_LE(lexicon().model.threshold, 0.95);
}

TEST(Lexicon, RejectsEmptyTraining) {
  EXPECT_THROW(train_lexicon_extractor(LabeledCorpus{}, catalog()), ValidationError);
}
