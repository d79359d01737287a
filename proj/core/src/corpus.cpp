#include "icdlab/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/random.hpp"

namespace icdlab {

std::string_view to_string(AnswerKind kind) {
  return kind == AnswerKind::binary ? "binary" : "numeric";
}

std::string_view to_string(Sex sex) { return sex == Sex::female ? "female" : "male"; }

AnswerKind parse_answer_kind(std::string_view s) {
  if (s == "binary") return AnswerKind::binary;
  if (s == "numeric") return AnswerKind::numeric;
  throw ValidationError("unknown answer kind: " + std::string(s));
}

Sex parse_sex(std::string_view s) {
  if (s == "female") return Sex::female;
  if (s == "male") return Sex::male;
  throw ValidationError("unknown sex: " + std::string(s));
}

QuestionCatalog::QuestionCatalog(std::vector<ClinicalQuestion> questions,
                                 std::string tokenizer_version)
    : questions_(std::move(questions)), tokenizer_version_(std::move(tokenizer_version)) {
  for (size_t i = 0; i < questions_.size(); ++i) {
    const auto& q = questions_[i];
    if (q.id.empty()) throw ValidationError("question id must not be empty");
    if (q.tier < 1 || q.tier > 3) {
      throw ValidationError("question " + q.id + " has tier outside 1..3");
    }
    if (!index_.emplace(q.id, i).second) {
      throw ValidationError("duplicate question id: " + q.id);
    }
  }
}

std::optional<size_t> QuestionCatalog::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t QuestionCatalog::count_visible(int tier) const {
  return static_cast<size_t>(std::count_if(questions_.begin(), questions_.end(),
                                           [&](const ClinicalQuestion& q) { return q.tier <= tier; }));
}

std::string QuestionCatalog::digest() const {
  std::string canon = tokenizer_version_;
  for (const auto& q : questions_) {
    canon += '\n';
    canon += q.id + '\t' + q.text + '\t' + std::to_string(q.tier) + '\t' +
             std::string(to_string(q.answer_kind));
  }
  return hex_digest(canon);
}

const Annotation* LabeledNote::find_annotation(std::string_view question_id) const {
  for (const auto& a : annotations) {
    if (a.question_id == question_id) return &a;
  }
  return nullptr;
}

LabeledCorpus LabeledCorpus::subset(const std::vector<size_t>& indices) const {
  LabeledCorpus out;
  out.provenance = provenance;
  out.notes.reserve(indices.size());
  for (size_t i : indices) out.notes.push_back(notes.at(i));
  return out;
}

LabeledNote hide_annotations(const LabeledNote& note) {
  LabeledNote out = note;
  out.annotations.clear();
  return out;
}

void validate_corpus(const LabeledCorpus& corpus, const QuestionCatalog& catalog) {
  std::map<std::string, int> seen_ids;
  for (const auto& note : corpus.notes) {
    if (++seen_ids[note.id] > 1) throw ValidationError("duplicate note id: " + note.id);
    if (note.tokenizer_version != catalog.tokenizer_version()) {
      throw ValidationError("note " + note.id + " was tokenized with " + note.tokenizer_version +
                            ", catalog expects " + catalog.tokenizer_version());
    }
    if (note.annotations.size() != catalog.size()) {
      throw ValidationError("note " + note.id + " must carry exactly one annotation per question");
    }
    const size_t n_tokens = tokenize(note.text).size();
    std::vector<bool> covered(catalog.size(), false);
    for (const auto& a : note.annotations) {
      const auto q = catalog.index_of(a.question_id);
      if (!q) throw ValidationError("note " + note.id + " references unknown question " + a.question_id);
      if (covered[*q]) throw ValidationError("note " + note.id + " annotates " + a.question_id + " twice");
      covered[*q] = true;
      const bool binary = catalog[*q].answer_kind == AnswerKind::binary;
      const std::string where = "note " + note.id + ", question " + a.question_id;
      if (a.answered != a.span.has_value()) throw ValidationError(where + ": answered flag disagrees with span");
      if (a.span && (a.span->start >= a.span->end || a.span->end > n_tokens)) {
        throw ValidationError(where + ": span outside the note");
      }
      if (a.binary_answer.has_value() != (a.answered && binary)) {
        throw ValidationError(where + ": binary answer presence mismatch");
      }
      if (a.binary_answer && *a.binary_answer != 0 && *a.binary_answer != 1) {
        throw ValidationError(where + ": binary answer must be 0 or 1");
      }
      if (a.numeric_value.has_value() != (a.answered && !binary)) {
        throw ValidationError(where + ": numeric value presence mismatch");
      }
    }
  }
}

namespace {

const std::vector<std::string>& filler_sentences() {
  static const std::vector<std::string> kFillers = {
      "Symptoms began a few days ago.", "Parent is worried.", "Vaccinations are up to date.",
      "Attends primary school.", "Drinking fluids well.", "Previously healthy.",
      "Follow up as needed.", "No known allergies.", "Sibling was recently unwell.",
      "Advice given to the family.",
  };
  return kFillers;
}

std::vector<size_t> largest_remainder(size_t n, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<size_t> counts(weights.size());
  std::vector<std::pair<double, size_t>> rema;
  size_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<size_t>(std::floor(exact));
    assigned += counts[i];
    rema.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t r = 0; assigned < n; ++r, ++assigned) ++counts[rema[r % rema.size()].second];
  return counts;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

struct SlotRange {
  size_t annotation;
  size_t begin;
  size_t end;
};

class NoteWriter {
 public:
  void sentence(const std::string& s) {
    if (!text_.empty()) text_ += ' ';
    text_ += s;
  }

  void slotted(const SentenceTemplate& tpl, const std::string& slot, size_t annotation) {
    const auto hole = tpl.frame.find("{}");
    if (hole == std::string::npos) throw ValidationError("sentence frame without {} hole: " + tpl.frame);
    std::string prefix = tpl.frame.substr(0, hole);
    std::string rendered_slot = slot;
    if (prefix.empty()) {
      rendered_slot = capitalize(rendered_slot);
    }
    if (!text_.empty()) text_ += ' ';
    text_ += prefix;
    const size_t begin = text_.size();
    text_ += rendered_slot;
    slots_.push_back({annotation, begin, text_.size()});
    text_ += tpl.frame.substr(hole + 2);
  }

  const std::string& text() const { return text_; }
  const std::vector<SlotRange>& slots() const { return slots_; }

 private:
  std::string text_;
  std::vector<SlotRange> slots_;
};

struct PendingSentence {
  const SentenceTemplate* tpl = nullptr;  // null for fillers
  std::string slot;
  size_t annotation = 0;
};

}  // namespace

LabeledCorpus generate_corpus(const CatalogBundle& bundle, size_t n_notes,
                              const DemographicsConfig& demographics, uint64_t seed,
                              std::string_view id_prefix) {
  const QuestionCatalog& catalog = bundle.catalog;
  if (n_notes == 0) throw ValidationError("generate_corpus: n_notes must be >= 1");
  if (bundle.profiles.empty()) throw ValidationError("generate_corpus: no disease profiles");
  for (const auto& p : bundle.profiles) {
    if (p.questions.size() != catalog.size() || p.templates.size() != catalog.size()) {
      throw ValidationError("profile " + p.icd_code + " does not match the catalog");
    }
    for (size_t q = 0; q < catalog.size(); ++q) {
      const auto& qp = p.questions[q];
      if (qp.p_mention < 0.0 || qp.p_mention > 1.0 || qp.p_affirm < 0.0 || qp.p_affirm > 1.0) {
        throw ValidationError("profile " + p.icd_code + " has a probability outside [0,1]");
      }
      if (catalog[q].answer_kind == AnswerKind::numeric && !(qp.numeric_std > 0.0)) {
        throw ValidationError("profile " + p.icd_code + " has non-positive numeric std");
      }
    }
  }
  if (demographics.min_age < 0.0 || demographics.max_age < demographics.min_age) {
    throw ValidationError("invalid age range");
  }
  std::vector<double> prior = demographics.disease_prior;
  if (prior.empty()) prior.assign(bundle.profiles.size(), 1.0);
  if (prior.size() != bundle.profiles.size() ||
      std::any_of(prior.begin(), prior.end(), [](double w) { return !(w >= 0.0); }) ||
      std::accumulate(prior.begin(), prior.end(), 0.0) <= 0.0) {
    throw ValidationError("disease prior must have one non-negative weight per disease");
  }

  Rng rng(derive_seed(seed, "corpus"));

  // Quota assignment keeps class and sex proportions exact up to rounding.
  const auto class_counts = largest_remainder(n_notes, prior);
  std::vector<std::pair<size_t, Sex>> cohort;
  for (size_t d = 0; d < class_counts.size(); ++d) {
    const auto n_female = static_cast<size_t>(
        std::llround(static_cast<double>(class_counts[d]) * demographics.female_fraction));
    for (size_t i = 0; i < class_counts[d]; ++i) {
      cohort.emplace_back(d, i < n_female ? Sex::female : Sex::male);
    }
  }
  rng.shuffle(cohort);

  const auto& names = NameLexicon::builtin().names();
  const auto& fillers = filler_sentences();
  const size_t width = std::max<size_t>(6, std::to_string(n_notes).size());

  LabeledCorpus corpus;
  corpus.provenance.seed = seed;
  corpus.provenance.catalog_digest = catalog.digest();
  corpus.provenance.tokenizer_version = catalog.tokenizer_version();
  corpus.notes.reserve(n_notes);

  for (size_t i = 0; i < n_notes; ++i) {
    const auto [disease, sex] = cohort[i];
    const DiseaseProfile& profile = bundle.profiles[disease];
    LabeledNote note;
    const std::string number = std::to_string(i + 1);
    note.id = std::string(id_prefix) + std::string(width - number.size(), '0') + number;
    note.sex = sex;
    note.icd_code = profile.icd_code;
    note.tokenizer_version = catalog.tokenizer_version();
    note.age = std::round(rng.uniform(demographics.min_age, demographics.max_age) * 100.0) / 100.0;

    std::array<std::vector<PendingSentence>, 3> sections;
    note.annotations.resize(catalog.size());
    for (size_t q = 0; q < catalog.size(); ++q) {
      const ClinicalQuestion& question = catalog[q];
      const QuestionProfile& qp = profile.questions[q];
      const QuestionTemplates& tpl = profile.templates[q];
      Annotation& ann = note.annotations[q];
      ann.question_id = question.id;
      // Fixed draw count per question keeps streams aligned across profiles.
      const bool mentioned = rng.bernoulli(qp.p_mention);
      const double u_answer = rng.uniform();
      const double z = rng.normal();
      const size_t pick_template = rng.below(1 << 20);
      const size_t pick_phrase = rng.below(1 << 20);
      if (!mentioned) continue;
      if (tpl.phrases.empty()) throw ValidationError("question " + question.id + " has no phrases");
      const std::string& phrase = tpl.phrases[pick_phrase % tpl.phrases.size()];
      ann.answered = true;
      PendingSentence s;
      s.annotation = q;
      if (question.answer_kind == AnswerKind::binary) {
        const int answer = u_answer < qp.p_affirm ? 1 : 0;
        ann.binary_answer = answer;
        const auto& variants = answer == 1 ? tpl.affirmative : tpl.negated;
        if (variants.empty()) throw ValidationError("question " + question.id + " lacks templates");
        s.tpl = &variants[pick_template % variants.size()];
        s.slot = replace_all(s.tpl->slot, "{p}", phrase);
      } else {
        const double raw = std::max(0.0, qp.numeric_mean + qp.numeric_std * z);
        const std::string rendered = format_fixed(raw, tpl.decimals);
        ann.numeric_value = parse_numeric(rendered).value();
        if (tpl.numeric.empty()) throw ValidationError("question " + question.id + " lacks templates");
        s.tpl = &tpl.numeric[pick_template % tpl.numeric.size()];
        s.slot = replace_all(replace_all(s.tpl->slot, "{p}", phrase), "{v}", rendered);
      }
      sections[static_cast<size_t>(question.tier - 1)].push_back(std::move(s));
    }

    NoteWriter writer;
    writer.sentence("History:");
    const int years = static_cast<int>(note.age);
    writer.sentence(std::to_string(years) + " year old " + (sex == Sex::female ? "girl." : "boy."));
    if (rng.bernoulli(demographics.pii_sentence_rate)) {
      writer.sentence(scrub_pii("Seen with " + std::string(rng.bernoulli(0.5) ? "mother " : "father ") +
                                rng.pick(names) + "."));
    }
    if (rng.bernoulli(demographics.pii_sentence_rate * 0.5)) {
      std::string phone = "5";
      for (int d = 0; d < 9; ++d) phone += static_cast<char>('0' + rng.below(10));
      writer.sentence(scrub_pii("Callback number " + phone + "."));
    }
    static constexpr const char* kHeaders[] = {nullptr, "Examination:", "Diagnostics:"};
    for (size_t t = 0; t < 3; ++t) {
      auto& pending = sections[t];
      const int n_fill = static_cast<int>(rng.below(static_cast<size_t>(demographics.max_filler_sentences) + 1));
      for (int f = 0; f < n_fill && t == 0; ++f) pending.push_back({nullptr, rng.pick(fillers), 0});
      rng.shuffle(pending);
      if (kHeaders[t] != nullptr) {
        if (pending.empty() && t == 2) continue;
        writer.sentence(kHeaders[t]);
        if (pending.empty()) writer.sentence("Unremarkable.");
      }
      for (const auto& s : pending) {
        if (s.tpl == nullptr) {
          writer.sentence(s.slot);
        } else {
          writer.slotted(*s.tpl, s.slot, s.annotation);
        }
      }
    }
    note.text = writer.text();
    if (scrub_pii(note.text) != note.text) {
      throw ValidationError("generated note " + note.id + " still contains identifying text");
    }

    const auto tokens = tokenize(note.text);
    std::map<size_t, size_t> by_start, by_end;
    for (const auto& tok : tokens) {
      by_start.emplace(tok.char_start, tok.index);
      by_end.emplace(tok.char_end, tok.index);
    }
    for (const auto& slot : writer.slots()) {
      const auto s = by_start.find(slot.begin);
      const auto e = by_end.find(slot.end);
      if (s == by_start.end() || e == by_end.end() || s->second > e->second) {
        throw ValidationError("answer slot for " + catalog[slot.annotation].id + " in note " + note.id +
                              " cannot be located after tokenization");
      }
      note.annotations[slot.annotation].span = TokenSpan{s->second, e->second + 1};
    }
    corpus.notes.push_back(std::move(note));
  }
  return corpus;
}

namespace {

// Notes of one ICD stratum, shuffled, then interleaved by sex so that every
// prefix keeps the stratum's sex ratio.
std::vector<size_t> interleaved_stratum(const LabeledCorpus& corpus, std::vector<size_t> members, Rng& rng) {
  rng.shuffle(members);
  std::vector<size_t> female, male;
  for (size_t i : members) (corpus.notes[i].sex == Sex::female ? female : male).push_back(i);
  std::vector<size_t> out;
  size_t fi = 0, mi = 0;
  const double nf = static_cast<double>(female.size()), nm = static_cast<double>(male.size());
  while (fi < female.size() || mi < male.size()) {
    const double rf = fi < female.size() ? (static_cast<double>(fi) + 0.5) / nf : 2.0;
    const double rm = mi < male.size() ? (static_cast<double>(mi) + 0.5) / nm : 2.0;
    if (rf <= rm) {
      out.push_back(female[fi++]);
    } else {
      out.push_back(male[mi++]);
    }
  }
  return out;
}

std::map<std::string, std::vector<size_t>> strata_by_icd(const LabeledCorpus& corpus) {
  std::map<std::string, std::vector<size_t>> strata;
  for (size_t i = 0; i < corpus.notes.size(); ++i) strata[corpus.notes[i].icd_code].push_back(i);
  return strata;
}

}  // namespace

CorpusSplit stratified_split(const LabeledCorpus& corpus, const SplitRatios& ratios, uint64_t seed) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (ratios.train < 0.0 || ratios.validation < 0.0 || ratios.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split ratios must be non-negative and sum to 1");
  }
  if (corpus.empty()) throw ValidationError("cannot split an empty corpus");

  const auto strata = strata_by_icd(corpus);
  const std::array<double, 3> ratio{ratios.validation, ratios.test, ratios.train};

  // Held-out sets take the ceiling of their share in every stratum, so small
  // classes still reach validation and test. When that starves a stratum's
  // training share by more than one note, one held-out slot is traded with a
  // stratum that has room, which keeps the set totals unchanged.
  struct Quota {
    std::array<double, 3> share{};  // validation, test, train
    std::array<size_t, 3> count{};
    double dev(size_t s) const { return static_cast<double>(count[s]) - share[s]; }
  };
  std::vector<Quota> quotas;
  for (const auto& [icd, members] : strata) {
    const size_t n = members.size();
    Quota q;
    for (size_t s = 0; s < 3; ++s) q.share[s] = ratio[s] * static_cast<double>(n);
    q.count[0] = static_cast<size_t>(std::ceil(q.share[0] - 1e-9));
    q.count[1] = static_cast<size_t>(std::ceil(q.share[1] - 1e-9));
    if (q.count[0] + q.count[1] > n || (ratios.train > 0.0 && q.count[0] + q.count[1] == n)) {
      throw ValidationError("stratum icd=" + icd + " with " + std::to_string(n) +
                            " notes is too small for the requested split ratios");
    }
    q.count[2] = n - q.count[0] - q.count[1];
    quotas.push_back(q);
  }
  constexpr double kSlack = 1.0 + 1e-9;
  for (auto& q : quotas) {
    while (q.dev(2) < -kSlack) {
      bool moved = false;
      for (size_t s : {size_t{1}, size_t{0}}) {
        if (q.count[s] == 0 || q.dev(s) - 1.0 < -kSlack) continue;
        for (auto& other : quotas) {
          if (&other == &q || other.count[2] == 0) continue;
          if (other.dev(2) - 1.0 < -kSlack || other.dev(s) + 1.0 > kSlack) continue;
          --q.count[s];
          ++q.count[2];
          ++other.count[s];
          --other.count[2];
          moved = true;
          break;
        }
        if (moved) break;
      }
      if (!moved) break;
    }
  }

  std::vector<size_t> train, validation, test;
  size_t qi = 0;
  for (const auto& [icd, members] : strata) {
    const auto& q = quotas[qi++];
    Rng rng(derive_seed(seed, {fnv1a64(icd)}));
    const auto order = interleaved_stratum(corpus, members, rng);
    for (size_t p = 0; p < order.size(); ++p) {
      if (p < q.count[0]) {
        validation.push_back(order[p]);
      } else if (p < q.count[0] + q.count[1]) {
        test.push_back(order[p]);
      } else {
        train.push_back(order[p]);
      }
    }
  }
  for (auto* v : {&train, &validation, &test}) std::sort(v->begin(), v->end());
  return {corpus.subset(train), corpus.subset(validation), corpus.subset(test)};
}

std::vector<size_t> stratified_folds(const LabeledCorpus& corpus, size_t k, uint64_t seed) {
  if (k < 2) throw ValidationError("need at least two folds");
  std::vector<size_t> fold(corpus.size(), 0);
  size_t offset = 0;
  for (auto& [icd, members] : strata_by_icd(corpus)) {
    if (members.size() < k) {
      throw ValidationError("stratum icd=" + icd + " has " + std::to_string(members.size()) +
                            " notes, fewer than the " + std::to_string(k) + " folds");
    }
    Rng rng(derive_seed(seed, {fnv1a64(icd)}));
    const auto order = interleaved_stratum(corpus, members, rng);
    for (size_t p = 0; p < order.size(); ++p) fold[order[p]] = (offset + p) % k;
    offset += order.size();
  }
  return fold;
}

}  // namespace icdlab
