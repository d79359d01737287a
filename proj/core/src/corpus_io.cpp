#include "icdlab/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include "icdlab/errors.hpp"

namespace icdlab {

using nlohmann::json;

namespace {
constexpr std::string_view kCorpusFormat = "icdlab-corpus";
constexpr int kCorpusFormatVersion = 1;

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}
}  // namespace

void to_json(json& j, const ClinicalQuestion& q) {
  j = json{{"id", q.id}, {"text", q.text}, {"tier", q.tier}, {"answer_kind", to_string(q.answer_kind)}};
}

void from_json(const json& j, ClinicalQuestion& q) {
  q.id = field<std::string>(j, "id");
  q.text = field<std::string>(j, "text");
  q.tier = field<int>(j, "tier");
  q.answer_kind = parse_answer_kind(field<std::string>(j, "answer_kind"));
}

void to_json(json& j, const LabeledNote& note) {
  json anns = json::array();
  for (const auto& a : note.annotations) {
    json ja{{"question_id", a.question_id}, {"answered", a.answered}};
    if (a.span) ja["span"] = {a.span->start, a.span->end};
    if (a.binary_answer) ja["binary_answer"] = *a.binary_answer;
    if (a.numeric_value) ja["numeric_value"] = *a.numeric_value;
    anns.push_back(std::move(ja));
  }
  j = json{{"id", note.id},
           {"age", note.age},
           {"sex", to_string(note.sex)},
           {"icd_code", note.icd_code},
           {"text", note.text},
           {"annotations", std::move(anns)}};
}

void from_json(const json& j, LabeledNote& note) {
  note.id = field<std::string>(j, "id");
  note.age = field<double>(j, "age");
  note.sex = parse_sex(field<std::string>(j, "sex"));
  note.icd_code = field<std::string>(j, "icd_code");
  note.text = field<std::string>(j, "text");
  note.annotations.clear();
  for (const auto& ja : j.value("annotations", json::array())) {
    Annotation a;
    a.question_id = field<std::string>(ja, "question_id");
    a.answered = field<bool>(ja, "answered");
    if (ja.contains("span")) {
      const auto& s = ja.at("span");
      a.span = TokenSpan{s.at(0).get<size_t>(), s.at(1).get<size_t>()};
    }
    if (ja.contains("binary_answer")) a.binary_answer = ja.at("binary_answer").get<int>();
    if (ja.contains("numeric_value")) a.numeric_value = ja.at("numeric_value").get<double>();
    note.annotations.push_back(std::move(a));
  }
}

void to_json(json& j, const SentenceTemplate& t) { j = json{t.frame, t.slot}; }
void from_json(const json& j, SentenceTemplate& t) {
  t.frame = j.at(0).get<std::string>();
  t.slot = j.at(1).get<std::string>();
}

void to_json(json& j, const CatalogBundle& bundle) {
  json profiles = json::array();
  for (const auto& p : bundle.profiles) {
    json qs = json::array();
    for (size_t q = 0; q < p.questions.size(); ++q) {
      const auto& qp = p.questions[q];
      const auto& tpl = p.templates[q];
      json affirmative = json::array(), negated = json::array(), numeric = json::array();
      for (const auto& t : tpl.affirmative) affirmative.push_back(t);
      for (const auto& t : tpl.negated) negated.push_back(t);
      for (const auto& t : tpl.numeric) numeric.push_back(t);
      qs.push_back({{"question_id", bundle.catalog[q].id},
                    {"p_mention", qp.p_mention},
                    {"p_affirm", qp.p_affirm},
                    {"numeric_mean", qp.numeric_mean},
                    {"numeric_std", qp.numeric_std},
                    {"phrases", tpl.phrases},
                    {"decimals", tpl.decimals},
                    {"affirmative", std::move(affirmative)},
                    {"negated", std::move(negated)},
                    {"numeric", std::move(numeric)}});
    }
    profiles.push_back({{"icd_code", p.icd_code}, {"description", p.description}, {"questions", std::move(qs)}});
  }
  j = json{{"format", "icdlab-catalog"},
           {"tokenizer", bundle.catalog.tokenizer_version()},
           {"catalog_digest", bundle.catalog.digest()},
           {"questions", bundle.catalog.questions()},
           {"profiles", std::move(profiles)}};
}

void from_json(const json& j, CatalogBundle& bundle) {
  auto questions = field<std::vector<ClinicalQuestion>>(j, "questions");
  bundle.catalog = QuestionCatalog(std::move(questions), field<std::string>(j, "tokenizer"));
  if (j.contains("catalog_digest") && j.at("catalog_digest").get<std::string>() != bundle.catalog.digest()) {
    throw ValidationError("catalog digest mismatch: file was edited or is corrupt");
  }
  bundle.profiles.clear();
  for (const auto& jp : j.value("profiles", json::array())) {
    DiseaseProfile p;
    p.icd_code = field<std::string>(jp, "icd_code");
    p.description = jp.value("description", "");
    const auto& qs = jp.at("questions");
    if (qs.size() != bundle.catalog.size()) {
      throw ValidationError("profile " + p.icd_code + " does not cover the catalog");
    }
    for (size_t q = 0; q < qs.size(); ++q) {
      const auto& jq = qs[q];
      if (field<std::string>(jq, "question_id") != bundle.catalog[q].id) {
        throw ValidationError("profile " + p.icd_code + " questions are out of catalog order");
      }
      QuestionProfile qp;
      qp.p_mention = field<double>(jq, "p_mention");
      qp.p_affirm = field<double>(jq, "p_affirm");
      qp.numeric_mean = field<double>(jq, "numeric_mean");
      qp.numeric_std = field<double>(jq, "numeric_std");
      QuestionTemplates tpl;
      tpl.phrases = field<std::vector<std::string>>(jq, "phrases");
      tpl.decimals = jq.value("decimals", 0);
      for (const auto& t : jq.value("affirmative", json::array())) tpl.affirmative.push_back(t.get<SentenceTemplate>());
      for (const auto& t : jq.value("negated", json::array())) tpl.negated.push_back(t.get<SentenceTemplate>());
      for (const auto& t : jq.value("numeric", json::array())) tpl.numeric.push_back(t.get<SentenceTemplate>());
      p.questions.push_back(qp);
      p.templates.push_back(std::move(tpl));
    }
    bundle.profiles.push_back(std::move(p));
  }
}

void to_json(json& j, const CatalogConfig& c) {
  json counts = json::array();
  for (const auto& t : c.counts) counts.push_back({{"binary", t[0]}, {"numeric", t[1]}});
  json diseases = json::array();
  for (const auto& d : c.diseases) {
    diseases.push_back({{"icd_code", d.icd_code}, {"description", d.description}, {"domain", d.domain}});
  }
  j = json{{"counts", std::move(counts)},
           {"diseases", std::move(diseases)},
           {"target_positive_ratio", c.target_positive_ratio},
           {"positive_ratio_sd", c.positive_ratio_sd},
           {"signature_affirm", c.signature_affirm},
           {"rival_affirm", c.rival_affirm},
           {"seed", c.seed}};
}

void from_json(const json& j, CatalogConfig& c) {
  c = CatalogConfig{};
  if (j.contains("counts")) {
    const auto& counts = j.at("counts");
    if (counts.size() != 3) throw ValidationError("catalog.counts needs one entry per tier");
    for (size_t t = 0; t < 3; ++t) {
      c.counts[t] = {counts[t].value("binary", 0), counts[t].value("numeric", 0)};
    }
  }
  if (j.contains("diseases")) {
    c.diseases.clear();
    for (const auto& d : j.at("diseases")) {
      c.diseases.push_back({field<std::string>(d, "icd_code"), d.value("description", ""),
                            field<std::string>(d, "domain")});
    }
  }
  c.target_positive_ratio = j.value("target_positive_ratio", c.target_positive_ratio);
  c.positive_ratio_sd = j.value("positive_ratio_sd", c.positive_ratio_sd);
  c.signature_affirm = j.value("signature_affirm", c.signature_affirm);
  c.rival_affirm = j.value("rival_affirm", c.rival_affirm);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const DemographicsConfig& c) {
  j = json{{"min_age", c.min_age},
           {"max_age", c.max_age},
           {"female_fraction", c.female_fraction},
           {"disease_prior", c.disease_prior},
           {"max_filler_sentences", c.max_filler_sentences},
           {"pii_sentence_rate", c.pii_sentence_rate}};
}

void from_json(const json& j, DemographicsConfig& c) {
  c = DemographicsConfig{};
  c.min_age = j.value("min_age", c.min_age);
  c.max_age = j.value("max_age", c.max_age);
  c.female_fraction = j.value("female_fraction", c.female_fraction);
  c.disease_prior = j.value("disease_prior", c.disease_prior);
  c.max_filler_sentences = j.value("max_filler_sentences", c.max_filler_sentences);
  c.pii_sentence_rate = j.value("pii_sentence_rate", c.pii_sentence_rate);
}

std::string corpus_to_jsonl(const LabeledCorpus& corpus) {
  std::string out;
  const json header{{"format", kCorpusFormat},
                    {"format_version", kCorpusFormatVersion},
                    {"tokenizer", corpus.provenance.tokenizer_version},
                    {"catalog_digest", corpus.provenance.catalog_digest},
                    {"seed", corpus.provenance.seed},
                    {"config_digest", corpus.provenance.config_digest},
                    {"notes", corpus.notes.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& note : corpus.notes) {
    if (note.tokenizer_version != corpus.provenance.tokenizer_version) {
      throw ValidationError("note " + note.id + " uses a different tokenizer than its corpus");
    }
    out += json(note).dump();
    out += '\n';
  }
  return out;
}

LabeledCorpus corpus_from_jsonl(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty corpus file");
  LabeledCorpus corpus;
  size_t expected = 0;
  try {
    const json header = json::parse(line);
    if (header.value("format", "") != kCorpusFormat) throw ValidationError(source + ": not an icdlab corpus");
    if (header.value("format_version", 0) != kCorpusFormatVersion) {
      throw ValidationError(source + ": unsupported corpus format version");
    }
    corpus.provenance.tokenizer_version = field<std::string>(header, "tokenizer");
    corpus.provenance.catalog_digest = field<std::string>(header, "catalog_digest");
    corpus.provenance.seed = field<uint64_t>(header, "seed");
    corpus.provenance.config_digest = header.value("config_digest", "");
    expected = field<size_t>(header, "notes");
    size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      LabeledNote note = json::parse(line).get<LabeledNote>();
      note.tokenizer_version = corpus.provenance.tokenizer_version;
      corpus.notes.push_back(std::move(note));
    }
  } catch (const json::exception& e) {
    throw ValidationError(source + ": malformed corpus: " + e.what());
  }
  if (corpus.notes.size() != expected) {
    throw ValidationError(source + ": header announces " + std::to_string(expected) + " notes, found " +
                          std::to_string(corpus.notes.size()));
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& path, const LabeledCorpus& corpus) {
  write_text_file(path, corpus_to_jsonl(corpus));
}

LabeledCorpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus: " + path.string());
  return corpus_from_jsonl(in, path.string());
}

void write_catalog(const std::filesystem::path& path, const CatalogBundle& bundle) {
  write_json_file(path, json(bundle));
}

CatalogBundle read_catalog(const std::filesystem::path& path) {
  try {
    return read_json_file(path).get<CatalogBundle>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed catalog: " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace icdlab
