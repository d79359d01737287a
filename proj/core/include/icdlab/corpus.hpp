#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icdlab/text.hpp"

namespace icdlab {

enum class AnswerKind { binary, numeric };
enum class Sex { female, male };

std::string_view to_string(AnswerKind kind);
std::string_view to_string(Sex sex);
AnswerKind parse_answer_kind(std::string_view s);
Sex parse_sex(std::string_view s);

struct ClinicalQuestion {
  std::string id;
  std::string text;
  int tier = 1;  // 1 history/vitals, 2 examination, 3 diagnostics
  AnswerKind answer_kind = AnswerKind::binary;

  bool operator==(const ClinicalQuestion&) const = default;
};

// Ordered question list. The order defines feature-column order downstream.
class QuestionCatalog {
 public:
  QuestionCatalog() = default;
  explicit QuestionCatalog(std::vector<ClinicalQuestion> questions,
                           std::string tokenizer_version = std::string(kTokenizerVersion));

  const std::vector<ClinicalQuestion>& questions() const { return questions_; }
  size_t size() const { return questions_.size(); }
  const ClinicalQuestion& operator[](size_t i) const { return questions_[i]; }
  std::optional<size_t> index_of(std::string_view id) const;

  // Number of questions visible at `tier` (tiers are cumulative).
  size_t count_visible(int tier) const;

  const std::string& tokenizer_version() const { return tokenizer_version_; }
  std::string digest() const;

  bool operator==(const QuestionCatalog& o) const {
    return questions_ == o.questions_ && tokenizer_version_ == o.tokenizer_version_;
  }

 private:
  std::vector<ClinicalQuestion> questions_;
  std::string tokenizer_version_;
  std::unordered_map<std::string, size_t> index_;
};

// A sentence frame with one "{}" hole that receives the answer slot. The slot
// may contain "{p}" (the question's phrase) and, for numeric questions,
// "{v}" (the rendered value). The rendered slot is the gold span.
struct SentenceTemplate {
  std::string frame;
  std::string slot;

  bool operator==(const SentenceTemplate&) const = default;
};

struct QuestionTemplates {
  std::vector<std::string> phrases;
  std::vector<SentenceTemplate> affirmative;
  std::vector<SentenceTemplate> negated;
  std::vector<SentenceTemplate> numeric;
  int decimals = 0;

  bool operator==(const QuestionTemplates&) const = default;
};

struct QuestionProfile {
  double p_mention = 0.0;
  double p_affirm = 0.0;      // binary only
  double numeric_mean = 0.0;  // numeric only
  double numeric_std = 1.0;   // numeric only

  bool operator==(const QuestionProfile&) const = default;
};

// Per-disease generative parameters, one entry per catalog question in order.
struct DiseaseProfile {
  std::string icd_code;
  std::string description;
  std::vector<QuestionProfile> questions;
  std::vector<QuestionTemplates> templates;

  bool operator==(const DiseaseProfile&) const = default;
};

struct DiseaseSpec {
  std::string icd_code;
  std::string description;
  std::string domain;  // headache | ear | respiratory

  bool operator==(const DiseaseSpec&) const = default;
};

std::vector<DiseaseSpec> default_diseases();

struct CatalogConfig {
  // counts[tier - 1] = {binary, numeric}
  std::array<std::array<int, 2>, 3> counts{{{40, 4}, {15, 2}, {2, 1}}};
  std::vector<DiseaseSpec> diseases = default_diseases();
  double target_positive_ratio = 0.75;
  double positive_ratio_sd = 0.2;
  // Per tier: positive rate of a question for the disease it signals, and the
  // range for rival diseases. Examination and test findings are sharper.
  std::array<double, 3> signature_affirm{0.85, 0.95, 0.95};
  std::array<std::array<double, 2>, 3> rival_affirm{{{0.2, 0.55}, {0.03, 0.15}, {0.03, 0.15}}};
  uint64_t seed = 20221;

  bool operator==(const CatalogConfig&) const = default;
};

struct CatalogBundle {
  QuestionCatalog catalog;
  std::vector<DiseaseProfile> profiles;

  const DiseaseProfile& profile(std::string_view icd) const;
  std::vector<std::string> disease_codes() const;
  bool operator==(const CatalogBundle&) const = default;
};

CatalogBundle default_catalog(const CatalogConfig& config = {});

// Expected positive-answer ratio over binary annotations under `prior`
// (uniform when empty).
double expected_positive_ratio(const CatalogBundle& bundle, const std::vector<double>& prior = {});

struct TokenSpan {
  size_t start = 0;
  size_t end = 0;  // exclusive

  size_t length() const { return end - start; }
  bool operator==(const TokenSpan&) const = default;
};

struct Annotation {
  std::string question_id;
  bool answered = false;
  std::optional<TokenSpan> span;  // note-token coordinates
  std::optional<int> binary_answer;
  std::optional<double> numeric_value;

  bool operator==(const Annotation&) const = default;
};

struct LabeledNote {
  std::string id;
  double age = 0.0;
  Sex sex = Sex::female;
  std::string text;
  std::string icd_code;
  std::vector<Annotation> annotations;
  std::string tokenizer_version = std::string(kTokenizerVersion);

  const Annotation* find_annotation(std::string_view question_id) const;
  bool operator==(const LabeledNote&) const = default;
};

struct CorpusProvenance {
  uint64_t seed = 0;
  std::string config_digest;
  std::string catalog_digest;
  std::string tokenizer_version = std::string(kTokenizerVersion);

  bool operator==(const CorpusProvenance&) const = default;
};

struct LabeledCorpus {
  std::vector<LabeledNote> notes;
  CorpusProvenance provenance;

  size_t size() const { return notes.size(); }
  bool empty() const { return notes.empty(); }
  LabeledCorpus subset(const std::vector<size_t>& indices) const;
  bool operator==(const LabeledCorpus&) const = default;
};

// Checks every LabeledNote invariant against the catalog.
void validate_corpus(const LabeledCorpus& corpus, const QuestionCatalog& catalog);

// Same notes with annotations removed: what an extractor may see of a note
// that was never hand-annotated.
LabeledNote hide_annotations(const LabeledNote& note);

struct DemographicsConfig {
  double min_age = 0.17;
  double max_age = 17.99;
  double female_fraction = 0.64;
  std::vector<double> disease_prior;  // uniform when empty
  int max_filler_sentences = 2;
  double pii_sentence_rate = 0.3;

  bool operator==(const DemographicsConfig&) const = default;
};

LabeledCorpus generate_corpus(const CatalogBundle& bundle, size_t n_notes,
                              const DemographicsConfig& demographics, uint64_t seed,
                              std::string_view id_prefix = "n");

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  LabeledCorpus train;
  LabeledCorpus validation;
  LabeledCorpus test;
};

CorpusSplit stratified_split(const LabeledCorpus& corpus, const SplitRatios& ratios, uint64_t seed);

// Fold index in [0, k) per note, stratified by ICD code and balanced by sex.
std::vector<size_t> stratified_folds(const LabeledCorpus& corpus, size_t k, uint64_t seed);

}  // namespace icdlab
