#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "icdlab/corpus.hpp"

namespace icdlab {

// Extractor spans index a token sequence prefixed with a start token, so
// note token i is position i + 1 and the span {0, 1} means "not answered".
inline constexpr TokenSpan kSentinelSpan{0, 1};

TokenSpan to_model_span(const TokenSpan& note_span);
std::optional<TokenSpan> to_note_span(const TokenSpan& model_span);

struct ExtractionResult {
  std::string question_id;
  double answerable_prob = 0.0;
  TokenSpan span = kSentinelSpan;
  std::optional<double> binary_prob;    // binary questions, iff answered
  std::optional<double> numeric_value;  // numeric questions, iff answered

  bool answered() const { return span != kSentinelSpan; }
  bool operator==(const ExtractionResult&) const = default;
};

// Clinical feature extraction contract: one result per catalog question, in
// catalog order, as a pure function of the note.
class Extractor {
 public:
  virtual ~Extractor() = default;

  std::vector<ExtractionResult> extract(const LabeledNote& note, const QuestionCatalog& catalog) const;

  virtual double threshold() const { return 0.5; }
  virtual std::string_view kind() const = 0;

 protected:
  virtual std::vector<ExtractionResult> do_extract(const LabeledNote& note,
                                                   const QuestionCatalog& catalog) const = 0;
};

std::vector<std::vector<ExtractionResult>> extract_all(const Extractor& extractor, const LabeledCorpus& corpus,
                                                       const QuestionCatalog& catalog);

// Reproduces gold annotations, looked up by note id.
class OracleExtractor : public Extractor {
 public:
  OracleExtractor(const LabeledCorpus& corpus, const QuestionCatalog& catalog);
  std::string_view kind() const override { return "oracle"; }

 protected:
  std::vector<ExtractionResult> do_extract(const LabeledNote& note, const QuestionCatalog& catalog) const override;
  const LabeledNote& gold_for(const LabeledNote& note) const;

  std::unordered_map<std::string, LabeledNote> gold_;
};

struct NoiseConfig {
  double eps_miss = 0.0;         // answered -> unanswered
  double eps_hallucinate = 0.0;  // unanswered -> answered with a random span
  double eps_flip = 0.0;         // binary answer inverted
  double numeric_jitter_std = 0.0;
  std::array<double, 3> tier_multipliers{1.0, 1.0, 1.0};

  bool operator==(const NoiseConfig&) const = default;
};

void to_json(nlohmann::json& j, const NoiseConfig& c);
void from_json(const nlohmann::json& j, NoiseConfig& c);

// Gold annotations corrupted independently per (note, question), seeded by
// (seed, note id, question id) so results do not depend on call order.
class NoisyExtractor : public OracleExtractor {
 public:
  NoisyExtractor(const LabeledCorpus& corpus, const QuestionCatalog& catalog, NoiseConfig noise, uint64_t seed);
  std::string_view kind() const override { return "noisy"; }
  const NoiseConfig& noise() const { return noise_; }

 protected:
  std::vector<ExtractionResult> do_extract(const LabeledNote& note, const QuestionCatalog& catalog) const override;

 private:
  NoiseConfig noise_;
  uint64_t seed_;
  std::vector<double> numeric_means_;  // per catalog question, for hallucinated numerics
};

std::unique_ptr<Extractor> make_oracle(const LabeledCorpus& corpus, const QuestionCatalog& catalog);
std::unique_ptr<Extractor> make_noisy(const LabeledCorpus& corpus, const QuestionCatalog& catalog,
                                      const NoiseConfig& noise, uint64_t seed);

struct LexiconConfig {
  int max_ngram = 5;
  double min_precision = 0.5;  // n-grams matching elsewhere more often are dropped
  double ridge = 1e-2;
  int left_window = 3;   // tokens scanned for negation cues before a span
  int numeric_reach = 3; // tokens scanned for a value after a numeric span
  std::vector<std::string> negation_cues{"no", "not", "denies", "without", "absent", "negative", "never"};
  uint64_t seed = 0;

  bool operator==(const LexiconConfig&) const = default;
};

void to_json(nlohmann::json& j, const LexiconConfig& c);
void from_json(const nlohmann::json& j, LexiconConfig& c);

struct LexiconQuestionModel {
  std::string question_id;
  AnswerKind answer_kind = AnswerKind::binary;
  std::map<std::string, double> patterns;  // space-joined lowercase n-gram -> weight
  double answer_slope = 0.0;
  double answer_intercept = 0.0;
  std::array<double, 3> polarity{0.0, 0.0, 0.0};  // intercept, cue count, match score
  double numeric_fallback = 0.0;
  bool degenerate = false;

  bool operator==(const LexiconQuestionModel&) const = default;
};

struct LexiconExtractorModel {
  std::string tokenizer_version;
  int max_ngram = 5;
  int left_window = 3;
  int numeric_reach = 3;
  double threshold = 0.5;
  std::vector<std::string> negation_cues;
  std::vector<LexiconQuestionModel> questions;

  std::string digest() const;
  bool operator==(const LexiconExtractorModel&) const = default;
};

void to_json(nlohmann::json& j, const LexiconExtractorModel& m);
void from_json(const nlohmann::json& j, LexiconExtractorModel& m);

struct LexiconTrainingReport {
  size_t notes = 0;
  size_t patterns = 0;
  double threshold = 0.5;
  double training_impossible_mcc = 0.0;
  std::vector<std::string> degenerate_questions;
};

nlohmann::json to_json(const LexiconTrainingReport& r);

// Scores candidate spans with IDF-weighted n-gram patterns learned from gold
// spans, then calibrates answerability and polarity with small logistic fits.
class LexiconExtractor : public Extractor {
 public:
  explicit LexiconExtractor(LexiconExtractorModel model);
  const LexiconExtractorModel& model() const { return model_; }
  double threshold() const override { return model_.threshold; }
  std::string_view kind() const override { return "lexicon"; }

  struct Candidate {
    TokenSpan span;  // note-token coordinates
    double score = 0.0;
  };
  struct NoteScan {
    std::vector<Token> tokens;
    std::vector<std::string> lower;
    std::vector<size_t> sentence;
    std::vector<std::optional<Candidate>> best;  // per model question
  };
  NoteScan scan(const std::string& text) const;
  int cue_count(const NoteScan& scan, const TokenSpan& span) const;

 protected:
  std::vector<ExtractionResult> do_extract(const LabeledNote& note, const QuestionCatalog& catalog) const override;

 private:
  LexiconExtractorModel model_;
  std::unordered_map<std::string, std::vector<std::pair<size_t, double>>> index_;
  std::unordered_map<std::string, bool> cues_;
};

struct LexiconTrainingResult {
  LexiconExtractorModel model;
  LexiconTrainingReport report;
};

LexiconTrainingResult train_lexicon_extractor(const LabeledCorpus& train, const QuestionCatalog& catalog,
                                              const LexiconConfig& config = {});

struct ExtractorReport {
  double span_f1 = 0.0;
  double binary_mcc = 0.0;
  double impossible_mcc = 0.0;
  size_t pairs = 0;
};

nlohmann::json to_json(const ExtractorReport& r);

ExtractorReport evaluate_extractor(const Extractor& extractor, const LabeledCorpus& test,
                                   const QuestionCatalog& catalog);

}  // namespace icdlab
