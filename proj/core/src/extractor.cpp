#include "icdlab/extractor.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/metrics.hpp"
#include "icdlab/random.hpp"

namespace icdlab {

TokenSpan to_model_span(const TokenSpan& note_span) { return {note_span.start + 1, note_span.end + 1}; }

std::optional<TokenSpan> to_note_span(const TokenSpan& model_span) {
  if (model_span == kSentinelSpan) return std::nullopt;
  if (model_span.start == 0 || model_span.start >= model_span.end) {
    throw ValidationError("malformed extractor span");
  }
  return TokenSpan{model_span.start - 1, model_span.end - 1};
}

std::vector<ExtractionResult> Extractor::extract(const LabeledNote& note, const QuestionCatalog& catalog) const {
  if (note.tokenizer_version != catalog.tokenizer_version()) {
    throw ValidationError("note " + note.id + " was tokenized with '" + note.tokenizer_version +
                          "' but the catalog expects '" + catalog.tokenizer_version() + "'");
  }
  auto results = do_extract(note, catalog);
  if (results.size() != catalog.size()) {
    throw ValidationError(std::string(kind()) + " extractor returned the wrong number of results");
  }
  return results;
}

std::vector<std::vector<ExtractionResult>> extract_all(const Extractor& extractor, const LabeledCorpus& corpus,
                                                       const QuestionCatalog& catalog) {
  std::vector<std::vector<ExtractionResult>> out;
  out.reserve(corpus.size());
  for (const auto& note : corpus.notes) out.push_back(extractor.extract(note, catalog));
  return out;
}

OracleExtractor::OracleExtractor(const LabeledCorpus& corpus, const QuestionCatalog& catalog) {
  for (const auto& note : corpus.notes) {
    if (note.annotations.size() != catalog.size()) {
      throw ValidationError("oracle needs fully annotated notes; " + note.id + " is not");
    }
    gold_.emplace(note.id, note);
  }
}

const LabeledNote& OracleExtractor::gold_for(const LabeledNote& note) const {
  const auto it = gold_.find(note.id);
  if (it == gold_.end()) throw ValidationError("no gold annotations for note " + note.id);
  return it->second;
}

std::vector<ExtractionResult> OracleExtractor::do_extract(const LabeledNote& note,
                                                          const QuestionCatalog& catalog) const {
  const LabeledNote& gold = gold_for(note);
  std::vector<ExtractionResult> out;
  out.reserve(catalog.size());
  for (const auto& q : catalog.questions()) {
    const Annotation* a = gold.find_annotation(q.id);
    if (a == nullptr) throw ValidationError("note " + note.id + " has no annotation for " + q.id);
    ExtractionResult r;
    r.question_id = q.id;
    if (a->answered) {
      r.answerable_prob = 1.0;
      r.span = to_model_span(a->span.value());
      if (q.answer_kind == AnswerKind::binary) {
        r.binary_prob = a->binary_answer.value() == 1 ? 1.0 : 0.0;
      } else {
        r.numeric_value = a->numeric_value.value();
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void to_json(nlohmann::json& j, const NoiseConfig& c) {
  j = nlohmann::json{{"eps_miss", c.eps_miss},
                     {"eps_hallucinate", c.eps_hallucinate},
                     {"eps_flip", c.eps_flip},
                     {"numeric_jitter_std", c.numeric_jitter_std},
                     {"tier_multipliers", c.tier_multipliers}};
}

void from_json(const nlohmann::json& j, NoiseConfig& c) {
  c = NoiseConfig{};
  c.eps_miss = j.value("eps_miss", c.eps_miss);
  c.eps_hallucinate = j.value("eps_hallucinate", c.eps_hallucinate);
  c.eps_flip = j.value("eps_flip", c.eps_flip);
  c.numeric_jitter_std = j.value("numeric_jitter_std", c.numeric_jitter_std);
  c.tier_multipliers = j.value("tier_multipliers", c.tier_multipliers);
}

NoisyExtractor::NoisyExtractor(const LabeledCorpus& corpus, const QuestionCatalog& catalog, NoiseConfig noise,
                               uint64_t seed)
    : OracleExtractor(corpus, catalog), noise_(noise), seed_(seed) {
  for (size_t t = 0; t < 3; ++t) {
    const double m = noise_.tier_multipliers[t];
    if (!(m >= 0.0)) throw ValidationError("noise tier multipliers must be non-negative");
    for (double eps : {noise_.eps_miss, noise_.eps_hallucinate, noise_.eps_flip}) {
      const double rate = eps * m;
      if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ValidationError("noise rate " + std::to_string(rate) + " for tier " + std::to_string(t + 1) +
                              " is outside [0, 1]");
      }
    }
  }
  if (!(noise_.numeric_jitter_std >= 0.0)) throw ValidationError("numeric jitter must be non-negative");

  numeric_means_.assign(catalog.size(), 0.0);
  std::vector<size_t> counts(catalog.size(), 0);
  for (const auto& note : corpus.notes) {
    for (const auto& a : note.annotations) {
      if (!a.numeric_value) continue;
      const size_t q = catalog.index_of(a.question_id).value();
      numeric_means_[q] += *a.numeric_value;
      ++counts[q];
    }
  }
  for (size_t q = 0; q < catalog.size(); ++q) {
    if (counts[q] > 0) numeric_means_[q] /= static_cast<double>(counts[q]);
  }
}

std::vector<ExtractionResult> NoisyExtractor::do_extract(const LabeledNote& note,
                                                         const QuestionCatalog& catalog) const {
  auto results = OracleExtractor::do_extract(note, catalog);
  const LabeledNote& gold = gold_for(note);
  const size_t n_tokens = tokenize(gold.text).size();
  const uint64_t note_key = fnv1a64(note.id);
  for (size_t qi = 0; qi < catalog.size(); ++qi) {
    const ClinicalQuestion& q = catalog[qi];
    ExtractionResult& r = results[qi];
    const double mult = noise_.tier_multipliers[static_cast<size_t>(q.tier - 1)];
    Rng rng(derive_seed(seed_, {note_key, fnv1a64(q.id)}));
    const double u_miss = rng.uniform();
    const double u_hallucinate = rng.uniform();
    const double u_flip = rng.uniform();
    const double u_start = rng.uniform();
    const double u_len = rng.uniform();
    const double u_value = rng.uniform();
    const double z = rng.normal();
    const double jitter = noise_.numeric_jitter_std * mult * z;

    if (r.answered()) {
      if (u_miss < noise_.eps_miss * mult) {
        r = ExtractionResult{q.id, 0.0, kSentinelSpan, std::nullopt, std::nullopt};
        continue;
      }
      if (r.binary_prob && u_flip < noise_.eps_flip * mult) r.binary_prob = 1.0 - *r.binary_prob;
      if (r.numeric_value) *r.numeric_value += jitter;
    } else if (n_tokens > 0 && u_hallucinate < noise_.eps_hallucinate * mult) {
      const auto start = std::min(n_tokens - 1, static_cast<size_t>(u_start * static_cast<double>(n_tokens)));
      const auto len = 1 + std::min<size_t>(2, static_cast<size_t>(u_len * 3.0));
      r.answerable_prob = 1.0;
      r.span = to_model_span({start, std::min(n_tokens, start + len)});
      if (q.answer_kind == AnswerKind::binary) {
        r.binary_prob = u_value < 0.5 ? 1.0 : 0.0;
      } else {
        r.numeric_value = numeric_means_[qi] + jitter;
      }
    }
  }
  return results;
}

std::unique_ptr<Extractor> make_oracle(const LabeledCorpus& corpus, const QuestionCatalog& catalog) {
  return std::make_unique<OracleExtractor>(corpus, catalog);
}

std::unique_ptr<Extractor> make_noisy(const LabeledCorpus& corpus, const QuestionCatalog& catalog,
                                      const NoiseConfig& noise, uint64_t seed) {
  return std::make_unique<NoisyExtractor>(corpus, catalog, noise, seed);
}

nlohmann::json to_json(const ExtractorReport& r) {
  return {{"span_f1", r.span_f1}, {"binary_mcc", r.binary_mcc}, {"impossible_mcc", r.impossible_mcc},
          {"pairs", r.pairs}};
}

ExtractorReport evaluate_extractor(const Extractor& extractor, const LabeledCorpus& test,
                                   const QuestionCatalog& catalog) {
  if (test.empty()) throw ValidationError("evaluate_extractor: empty test corpus");
  BinaryCounts answerability;
  BinaryCounts polarity;
  double f1_sum = 0.0;
  size_t pairs = 0;
  for (const auto& note : test.notes) {
    const auto results = extractor.extract(note, catalog);
    for (size_t qi = 0; qi < catalog.size(); ++qi) {
      const ClinicalQuestion& q = catalog[qi];
      const Annotation* gold = note.find_annotation(q.id);
      if (gold == nullptr) throw ValidationError("test note " + note.id + " lacks annotation for " + q.id);
      const ExtractionResult& r = results[qi];
      f1_sum += token_span_f1(to_note_span(r.span), gold->span);
      ++pairs;
      answerability.add(r.answered(), gold->answered);
      if (q.answer_kind == AnswerKind::binary && r.answered() && gold->answered) {
        polarity.add(r.binary_prob.value() >= 0.5, gold->binary_answer.value() == 1);
      }
    }
  }
  ExtractorReport report;
  report.pairs = pairs;
  report.span_f1 = f1_sum / static_cast<double>(pairs);
  report.impossible_mcc = binary_mcc(answerability);
  report.binary_mcc = polarity.total() == 0 ? 0.0 : binary_mcc(polarity);
  return report;
}

}  // namespace icdlab
