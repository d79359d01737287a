#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/extractor.hpp"
#include "icdlab/metrics.hpp"

namespace icdlab {

namespace {

bool is_boundary(const Token& t) {
  return t.kind == TokenKind::punct &&
         (t.text == "." || t.text == "!" || t.text == "?" || t.text == ";" || t.text == ":");
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Word n-grams starting at each position; any non-word token ends the run.
template <typename F>
void for_each_ngram(const std::vector<Token>& tokens, const std::vector<std::string>& lower, size_t begin,
                    size_t end, int max_n, F&& f) {
  for (size_t i = begin; i < end; ++i) {
    std::string key;
    for (int n = 1; n <= max_n; ++n) {
      const size_t j = i + static_cast<size_t>(n) - 1;
      if (j >= end || tokens[j].kind != TokenKind::word) break;
      if (n > 1) key += ' ';
      key += lower[j];
      f(i, j + 1, key);
    }
  }
}

// Ridge-penalized logistic regression by damped Newton. rows[i] excludes the
// intercept, which gets a small fixed penalty so separable data stays finite.
std::vector<double> fit_logistic(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                                 double ridge) {
  const size_t d = rows.empty() ? 0 : rows.front().size();
  const size_t p = d + 1;
  std::vector<double> w(p, 0.0);
  constexpr double kInterceptRidge = 1e-3;
  auto penalty = [&](size_t k) { return k == 0 ? kInterceptRidge : ridge; };
  auto objective = [&](const std::vector<double>& v) {
    double f = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      double z = v[0];
      for (size_t k = 0; k < d; ++k) z += v[k + 1] * rows[i][k];
      // log(1 + exp(-s z)) with s = +-1
      const double m = y[i] == 1 ? -z : z;
      f += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    }
    for (size_t k = 0; k < p; ++k) f += 0.5 * penalty(k) * v[k] * v[k];
    return f;
  };

  double f = objective(w);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> g(p, 0.0);
    std::vector<double> h(p * p, 0.0);
    for (size_t i = 0; i < rows.size(); ++i) {
      double z = w[0];
      for (size_t k = 0; k < d; ++k) z += w[k + 1] * rows[i][k];
      const double mu = sigmoid(z);
      const double r = mu - (y[i] == 1 ? 1.0 : 0.0);
      const double s = mu * (1.0 - mu);
      for (size_t a = 0; a < p; ++a) {
        const double xa = a == 0 ? 1.0 : rows[i][a - 1];
        g[a] += r * xa;
        for (size_t b = 0; b < p; ++b) {
          const double xb = b == 0 ? 1.0 : rows[i][b - 1];
          h[a * p + b] += s * xa * xb;
        }
      }
    }
    for (size_t k = 0; k < p; ++k) {
      g[k] += penalty(k) * w[k];
      h[k * p + k] += penalty(k);
    }
    // Solve h * step = g with partial pivoting.
    std::vector<double> step = g;
    std::vector<double> m = h;
    for (size_t c = 0; c < p; ++c) {
      size_t piv = c;
      for (size_t r = c + 1; r < p; ++r) {
        if (std::abs(m[r * p + c]) > std::abs(m[piv * p + c])) piv = r;
      }
      if (piv != c) {
        for (size_t k = 0; k < p; ++k) std::swap(m[c * p + k], m[piv * p + k]);
        std::swap(step[c], step[piv]);
      }
      const double diag = m[c * p + c];
      for (size_t r = c + 1; r < p; ++r) {
        const double factor = m[r * p + c] / diag;
        for (size_t k = c; k < p; ++k) m[r * p + k] -= factor * m[c * p + k];
        step[r] -= factor * step[c];
      }
    }
    for (size_t c = p; c-- > 0;) {
      for (size_t k = c + 1; k < p; ++k) step[c] -= m[c * p + k] * step[k];
      step[c] /= m[c * p + c];
    }

    double t = 1.0;
    std::vector<double> next(p);
    double f_next = f;
    for (int ls = 0; ls < 40; ++ls) {
      for (size_t k = 0; k < p; ++k) next[k] = w[k] - t * step[k];
      f_next = objective(next);
      if (f_next <= f) break;
      t *= 0.5;
    }
    if (!(f_next <= f)) break;
    w = next;
    const double change = f - f_next;
    f = f_next;
    if (change <= 1e-12 * std::max(1.0, std::abs(f))) break;
  }
  return w;
}

}  // namespace

void to_json(nlohmann::json& j, const LexiconConfig& c) {
  j = nlohmann::json{{"max_ngram", c.max_ngram},         {"min_precision", c.min_precision},
                     {"ridge", c.ridge},                 {"left_window", c.left_window},
                     {"numeric_reach", c.numeric_reach}, {"negation_cues", c.negation_cues},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, LexiconConfig& c) {
  c = LexiconConfig{};
  c.max_ngram = j.value("max_ngram", c.max_ngram);
  c.min_precision = j.value("min_precision", c.min_precision);
  c.ridge = j.value("ridge", c.ridge);
  c.left_window = j.value("left_window", c.left_window);
  c.numeric_reach = j.value("numeric_reach", c.numeric_reach);
  c.negation_cues = j.value("negation_cues", c.negation_cues);
  c.seed = j.value("seed", c.seed);
  if (c.max_ngram < 1) throw ValidationError("lexicon max_ngram must be >= 1");
  if (c.left_window < 0 || c.numeric_reach < 0) throw ValidationError("lexicon windows must be >= 0");
  if (!(c.min_precision > 0.0 && c.min_precision <= 1.0)) {
    throw ValidationError("lexicon min_precision must be in (0, 1]");
  }
  if (!(c.ridge >= 0.0)) throw ValidationError("lexicon ridge must be >= 0");
}

void to_json(nlohmann::json& j, const LexiconExtractorModel& m) {
  auto qs = nlohmann::json::array();
  for (const auto& q : m.questions) {
    qs.push_back({{"question_id", q.question_id},
                  {"answer_kind", to_string(q.answer_kind)},
                  {"patterns", q.patterns},
                  {"answer", {q.answer_slope, q.answer_intercept}},
                  {"polarity", q.polarity},
                  {"numeric_fallback", q.numeric_fallback},
                  {"degenerate", q.degenerate}});
  }
  j = nlohmann::json{{"format", "icdlab-lexicon-extractor"},
                     {"tokenizer", m.tokenizer_version},
                     {"max_ngram", m.max_ngram},
                     {"left_window", m.left_window},
                     {"numeric_reach", m.numeric_reach},
                     {"threshold", m.threshold},
                     {"negation_cues", m.negation_cues},
                     {"questions", std::move(qs)}};
}

void from_json(const nlohmann::json& j, LexiconExtractorModel& m) {
  if (j.value("format", "") != "icdlab-lexicon-extractor") throw ValidationError("not a lexicon extractor model");
  m = LexiconExtractorModel{};
  m.tokenizer_version = j.at("tokenizer").get<std::string>();
  m.max_ngram = j.at("max_ngram").get<int>();
  m.left_window = j.at("left_window").get<int>();
  m.numeric_reach = j.at("numeric_reach").get<int>();
  m.threshold = j.at("threshold").get<double>();
  m.negation_cues = j.at("negation_cues").get<std::vector<std::string>>();
  for (const auto& qj : j.at("questions")) {
    LexiconQuestionModel q;
    q.question_id = qj.at("question_id").get<std::string>();
    q.answer_kind = parse_answer_kind(qj.at("answer_kind").get<std::string>());
    q.patterns = qj.at("patterns").get<std::map<std::string, double>>();
    const auto answer = qj.at("answer").get<std::array<double, 2>>();
    q.answer_slope = answer[0];
    q.answer_intercept = answer[1];
    q.polarity = qj.at("polarity").get<std::array<double, 3>>();
    q.numeric_fallback = qj.at("numeric_fallback").get<double>();
    q.degenerate = qj.at("degenerate").get<bool>();
    m.questions.push_back(std::move(q));
  }
}

std::string LexiconExtractorModel::digest() const {
  nlohmann::json j = *this;
  return hex_digest(j.dump());
}

nlohmann::json to_json(const LexiconTrainingReport& r) {
  return {{"notes", r.notes},
          {"patterns", r.patterns},
          {"threshold", r.threshold},
          {"training_impossible_mcc", r.training_impossible_mcc},
          {"degenerate_questions", r.degenerate_questions}};
}

LexiconExtractor::LexiconExtractor(LexiconExtractorModel model) : model_(std::move(model)) {
  if (model_.max_ngram < 1) throw ValidationError("lexicon model max_ngram must be >= 1");
  for (size_t q = 0; q < model_.questions.size(); ++q) {
    const auto& qm = model_.questions[q];
    if (qm.degenerate) continue;
    for (const auto& [key, weight] : qm.patterns) index_[key].emplace_back(q, weight);
  }
  for (const auto& c : model_.negation_cues) cues_[to_lower_ascii(c)] = true;
}

LexiconExtractor::NoteScan LexiconExtractor::scan(const std::string& text) const {
  NoteScan s;
  s.tokens = tokenize(text);
  const size_t n = s.tokens.size();
  s.lower.reserve(n);
  s.sentence.reserve(n);
  size_t sentence = 0;
  for (const auto& t : s.tokens) {
    s.lower.push_back(to_lower_ascii(t.text));
    s.sentence.push_back(sentence);
    if (is_boundary(t)) ++sentence;
  }

  struct Hit {
    size_t start, end;
    double weight;
  };
  std::vector<std::vector<Hit>> hits(model_.questions.size());
  for_each_ngram(s.tokens, s.lower, 0, n, model_.max_ngram, [&](size_t b, size_t e, const std::string& key) {
    const auto it = index_.find(key);
    if (it == index_.end()) return;
    for (const auto& [q, w] : it->second) hits[q].push_back({b, e, w});
  });

  s.best.assign(model_.questions.size(), std::nullopt);
  for (size_t q = 0; q < hits.size(); ++q) {
    auto& hs = hits[q];
    if (hs.empty()) continue;
    std::stable_sort(hs.begin(), hs.end(), [](const Hit& a, const Hit& b) { return a.start < b.start; });
    Candidate cur{{hs[0].start, hs[0].end}, hs[0].weight};
    auto consider = [&](const Candidate& c) {
      if (!s.best[q] || c.score > s.best[q]->score) s.best[q] = c;
    };
    for (size_t h = 1; h < hs.size(); ++h) {
      const Hit& hit = hs[h];
      // merge when the hit overlaps, touches, or leaves a one-token gap
      if (hit.start <= cur.span.end + 1 && s.sentence[hit.start] == s.sentence[cur.span.start]) {
        cur.span.end = std::max(cur.span.end, hit.end);
        cur.score += hit.weight;
      } else {
        consider(cur);
        cur = Candidate{{hit.start, hit.end}, hit.weight};
      }
    }
    consider(cur);
  }
  return s;
}

int LexiconExtractor::cue_count(const NoteScan& scan, const TokenSpan& span) const {
  const size_t window = static_cast<size_t>(model_.left_window);
  size_t begin = span.start >= window ? span.start - window : 0;
  // the window does not cross into the previous sentence
  while (begin < span.start && scan.sentence[begin] != scan.sentence[span.start]) ++begin;
  int count = 0;
  for (size_t i = begin; i < span.end && i < scan.lower.size(); ++i) {
    if (cues_.count(scan.lower[i])) ++count;
  }
  return count;
}

std::vector<ExtractionResult> LexiconExtractor::do_extract(const LabeledNote& note,
                                                           const QuestionCatalog& catalog) const {
  if (model_.tokenizer_version != catalog.tokenizer_version()) {
    throw ValidationError("lexicon model tokenizer '" + model_.tokenizer_version + "' does not match catalog");
  }
  if (model_.questions.size() != catalog.size()) throw ValidationError("lexicon model does not match catalog");
  const NoteScan s = scan(note.text);
  std::vector<ExtractionResult> out;
  out.reserve(catalog.size());
  for (size_t qi = 0; qi < catalog.size(); ++qi) {
    const LexiconQuestionModel& qm = model_.questions[qi];
    if (qm.question_id != catalog[qi].id) {
      throw ValidationError("lexicon model question " + qm.question_id + " does not match " + catalog[qi].id);
    }
    ExtractionResult r;
    r.question_id = qm.question_id;
    const auto& cand = s.best[qi];
    if (qm.degenerate || !cand) {
      out.push_back(std::move(r));
      continue;
    }
    r.answerable_prob = sigmoid(qm.answer_slope * cand->score + qm.answer_intercept);
    if (r.answerable_prob < model_.threshold) {
      out.push_back(std::move(r));
      continue;
    }
    TokenSpan span = cand->span;
    if (qm.answer_kind == AnswerKind::binary) {
      const double z = qm.polarity[0] + qm.polarity[1] * cue_count(s, span) + qm.polarity[2] * cand->score;
      r.binary_prob = sigmoid(z);
    } else {
      std::optional<double> value;
      const size_t limit = std::min(s.tokens.size(), span.end + static_cast<size_t>(model_.numeric_reach));
      for (size_t i = span.start; i < limit; ++i) {
        if (s.sentence[i] != s.sentence[span.start]) break;
        if (s.tokens[i].kind == TokenKind::number) {
          if (auto v = parse_numeric(s.tokens[i].text)) {
            value = *v;
            span.end = std::max(span.end, i + 1);
            break;
          }
        }
      }
      r.numeric_value = value.value_or(qm.numeric_fallback);
    }
    r.span = to_model_span(span);
    out.push_back(std::move(r));
  }
  return out;
}

LexiconTrainingResult train_lexicon_extractor(const LabeledCorpus& train, const QuestionCatalog& catalog,
                                              const LexiconConfig& config) {
  if (train.empty()) throw ValidationError("cannot train a lexicon extractor on an empty corpus");
  validate_corpus(train, catalog);
  const size_t nq = catalog.size();
  const double n_docs = static_cast<double>(train.size());

  std::unordered_map<std::string, size_t> occurrences;
  std::unordered_map<std::string, size_t> doc_freq;
  std::vector<std::unordered_map<std::string, size_t>> inside(nq);
  std::vector<size_t> answered_count(nq, 0);
  std::vector<double> numeric_sum(nq, 0.0);

  for (const auto& note : train.notes) {
    const auto tokens = tokenize(note.text);
    std::vector<std::string> lower;
    lower.reserve(tokens.size());
    for (const auto& t : tokens) lower.push_back(to_lower_ascii(t.text));
    std::set<std::string> seen;
    for_each_ngram(tokens, lower, 0, tokens.size(), config.max_ngram, [&](size_t, size_t, const std::string& key) {
      ++occurrences[key];
      seen.insert(key);
    });
    for (const auto& key : seen) ++doc_freq[key];
    for (size_t qi = 0; qi < nq; ++qi) {
      const Annotation* a = note.find_annotation(catalog[qi].id);
      if (!a->answered) continue;
      ++answered_count[qi];
      if (a->numeric_value) numeric_sum[qi] += *a->numeric_value;
      for_each_ngram(tokens, lower, a->span->start, std::min(a->span->end, tokens.size()), config.max_ngram,
                     [&](size_t, size_t, const std::string& key) { ++inside[qi][key]; });
    }
  }

  LexiconExtractorModel model;
  model.tokenizer_version = catalog.tokenizer_version();
  model.max_ngram = config.max_ngram;
  model.left_window = config.left_window;
  model.numeric_reach = config.numeric_reach;
  model.negation_cues = config.negation_cues;
  LexiconTrainingReport report;
  report.notes = train.size();

  for (size_t qi = 0; qi < nq; ++qi) {
    LexiconQuestionModel qm;
    qm.question_id = catalog[qi].id;
    qm.answer_kind = catalog[qi].answer_kind;
    if (answered_count[qi] == 0) {
      qm.degenerate = true;
      report.degenerate_questions.push_back(qm.question_id);
    } else {
      if (qm.answer_kind == AnswerKind::numeric) {
        qm.numeric_fallback = numeric_sum[qi] / static_cast<double>(answered_count[qi]);
      }
      for (const auto& [key, count] : inside[qi]) {
        const double precision = static_cast<double>(count) / static_cast<double>(occurrences.at(key));
        if (precision < config.min_precision) continue;
        const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(doc_freq.at(key)))) + 1.0;
        qm.patterns.emplace(key, precision * idf);
      }
      if (qm.patterns.empty()) {
        qm.degenerate = true;
        report.degenerate_questions.push_back(qm.question_id);
      }
    }
    report.patterns += qm.patterns.size();
    model.questions.push_back(std::move(qm));
  }

  // Calibration data from scanning the training notes with the raw patterns.
  const LexiconExtractor raw(model);
  std::vector<std::vector<std::vector<double>>> answer_x(nq);
  std::vector<std::vector<int>> answer_y(nq);
  std::vector<std::vector<std::vector<double>>> polarity_x(nq);
  std::vector<std::vector<int>> polarity_y(nq);
  struct Pooled {
    size_t q;
    double score;
    bool has_candidate;
    bool gold;
  };
  std::vector<Pooled> pooled;
  pooled.reserve(train.size() * nq);

  for (const auto& note : train.notes) {
    const auto s = raw.scan(note.text);
    for (size_t qi = 0; qi < nq; ++qi) {
      const auto& qm = model.questions[qi];
      const Annotation* a = note.find_annotation(qm.question_id);
      const auto& cand = s.best[qi];
      const double score = cand ? cand->score : 0.0;
      pooled.push_back({qi, score, cand.has_value() && !qm.degenerate, a->answered});
      if (qm.degenerate) continue;
      answer_x[qi].push_back({score});
      answer_y[qi].push_back(a->answered ? 1 : 0);
      if (qm.answer_kind == AnswerKind::binary && a->answered) {
        const TokenSpan span = cand ? cand->span : *a->span;
        polarity_x[qi].push_back({static_cast<double>(raw.cue_count(s, span)), score});
        polarity_y[qi].push_back(*a->binary_answer);
      }
    }
  }

  for (size_t qi = 0; qi < nq; ++qi) {
    auto& qm = model.questions[qi];
    if (qm.degenerate) continue;
    const auto w = fit_logistic(answer_x[qi], answer_y[qi], config.ridge);
    qm.answer_intercept = w[0];
    qm.answer_slope = w[1];
    if (qm.answer_kind == AnswerKind::binary && !polarity_x[qi].empty()) {
      const auto pw = fit_logistic(polarity_x[qi], polarity_y[qi], config.ridge);
      qm.polarity = {pw[0], pw[1], pw[2]};
    }
  }

  // One global answerability threshold, chosen on pooled training pairs.
  double best_threshold = 0.5;
  double best_mcc = -2.0;
  for (int step = 1; step <= 19; ++step) {
    const double tau = 0.05 * step;
    BinaryCounts counts;
    for (const auto& p : pooled) {
      const auto& qm = model.questions[p.q];
      const bool predicted =
          p.has_candidate && sigmoid(qm.answer_slope * p.score + qm.answer_intercept) >= tau;
      counts.add(predicted, p.gold);
    }
    const double mcc = binary_mcc(counts);
    const bool closer = std::abs(tau - 0.5) < std::abs(best_threshold - 0.5);
    if (mcc > best_mcc + 1e-12 || (std::abs(mcc - best_mcc) <= 1e-12 && closer)) {
      best_mcc = mcc;
      best_threshold = tau;
    }
  }
  model.threshold = best_threshold;
  report.threshold = best_threshold;
  report.training_impossible_mcc = best_mcc;
  return {std::move(model), std::move(report)};
}

}  // namespace icdlab
