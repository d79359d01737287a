#include "icdlab/features.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "icdlab/corpus_io.hpp"
#include "icdlab/csv.hpp"
#include "icdlab/errors.hpp"

namespace icdlab {

namespace {

struct Cell {
  bool answered = false;
  double binary = 0.0;  // +1 / -1
  double numeric = 0.0;
};

double standardize(const StandardizationStats& stats, const std::string& qid, double v) {
  const NumericStat* s = stats.find(qid);
  if (s == nullptr) throw ValidationError("no standardization statistics for numeric question " + qid);
  return (v - s->mean) / s->std;
}

// Shared by both encoders so the oracle path is bitwise identical to gold.
void write_row(Matrix& m, size_t r, const QuestionCatalog& catalog, const StandardizationStats& stats,
               const std::vector<Cell>& cells) {
  for (size_t q = 0; q < catalog.size(); ++q) {
    const Cell& c = cells[q];
    if (!c.answered) continue;
    const auto& question = catalog[q];
    m(r, 2 * q) = question.answer_kind == AnswerKind::binary ? c.binary
                                                             : standardize(stats, question.id, c.numeric);
    m(r, 2 * q + 1) = 1.0;
  }
}

FeatureMatrix empty_matrix(const LabeledCorpus& notes, const QuestionCatalog& catalog,
                           const StandardizationStats& stats) {
  FeatureMatrix fm;
  fm.columns = feature_columns(catalog);
  fm.values = Matrix(notes.size(), fm.columns.size());
  fm.stats = stats;
  for (const auto& note : notes.notes) {
    fm.row_ids.push_back(note.id);
    fm.labels.push_back(note.icd_code);
  }
  return fm;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}

std::string_view to_string(ColumnRole r) { return r == ColumnRole::answer ? "answer" : "indicator"; }

}  // namespace

const NumericStat* StandardizationStats::find(const std::string& question_id) const {
  for (const auto& s : numeric) {
    if (s.question_id == question_id) return &s;
  }
  return nullptr;
}

std::vector<std::string> FeatureMatrix::column_ids() const {
  std::vector<std::string> ids;
  ids.reserve(columns.size());
  for (const auto& c : columns) ids.push_back(c.id);
  return ids;
}

std::vector<FeatureColumn> feature_columns(const QuestionCatalog& catalog) {
  std::vector<FeatureColumn> cols;
  cols.reserve(2 * catalog.size());
  for (const auto& q : catalog.questions()) {
    cols.push_back({q.id, q.id, q.tier, ColumnRole::answer});
    cols.push_back({q.id + "?", q.id, q.tier, ColumnRole::indicator});
  }
  return cols;
}

StandardizationStats compute_standardization(const LabeledCorpus& train, const QuestionCatalog& catalog) {
  StandardizationStats stats;
  for (const auto& q : catalog.questions()) {
    if (q.answer_kind != AnswerKind::numeric) continue;
    std::vector<double> values;
    for (const auto& note : train.notes) {
      const Annotation* a = note.find_annotation(q.id);
      if (a != nullptr && a->answered && a->numeric_value) values.push_back(*a->numeric_value);
    }
    NumericStat s{q.id, 0.0, 1.0};
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      const double sd = std::sqrt(ss / static_cast<double>(values.size()));
      if (sd > 0.0) s.std = sd;
    }
    stats.numeric.push_back(s);
  }
  return stats;
}

FeatureMatrix encode_gold(const LabeledCorpus& notes, const QuestionCatalog& catalog,
                          const StandardizationStats& stats) {
  FeatureMatrix fm = empty_matrix(notes, catalog, stats);
  std::vector<Cell> cells(catalog.size());
  for (size_t r = 0; r < notes.size(); ++r) {
    const LabeledNote& note = notes.notes[r];
    std::fill(cells.begin(), cells.end(), Cell{});
    for (const auto& a : note.annotations) {
      const auto q = catalog.index_of(a.question_id);
      if (!q) throw ValidationError("note " + note.id + " references unknown question " + a.question_id);
      if (!a.answered) continue;
      Cell& c = cells[*q];
      c.answered = true;
      if (catalog[*q].answer_kind == AnswerKind::binary) {
        if (!a.binary_answer) throw ValidationError("note " + note.id + ": missing binary answer for " + a.question_id);
        c.binary = *a.binary_answer == 1 ? 1.0 : -1.0;
      } else {
        if (!a.numeric_value) throw ValidationError("note " + note.id + ": missing value for " + a.question_id);
        c.numeric = *a.numeric_value;
      }
    }
    write_row(fm.values, r, catalog, stats, cells);
  }
  return fm;
}

FeatureMatrix encode_gold(const LabeledCorpus& notes, const QuestionCatalog& catalog) {
  return encode_gold(notes, catalog, compute_standardization(notes, catalog));
}

FeatureMatrix encode_extracted(const std::vector<std::vector<ExtractionResult>>& results,
                               const LabeledCorpus& notes, const QuestionCatalog& catalog,
                               const StandardizationStats& stats) {
  if (results.size() != notes.size()) throw ValidationError("encode_extracted: one result list per note required");
  FeatureMatrix fm = empty_matrix(notes, catalog, stats);
  std::vector<Cell> cells(catalog.size());
  for (size_t r = 0; r < notes.size(); ++r) {
    std::fill(cells.begin(), cells.end(), Cell{});
    std::vector<bool> seen(catalog.size(), false);
    for (const auto& res : results[r]) {
      const auto q = catalog.index_of(res.question_id);
      if (!q) throw ValidationError("extraction result for unknown question " + res.question_id);
      seen[*q] = true;
      if (!res.answered()) continue;
      Cell& c = cells[*q];
      c.answered = true;
      if (catalog[*q].answer_kind == AnswerKind::binary) {
        if (!res.binary_prob) throw ValidationError("answered binary result without probability: " + res.question_id);
        c.binary = *res.binary_prob >= 0.5 ? 1.0 : -1.0;
      } else {
        if (!res.numeric_value) throw ValidationError("answered numeric result without value: " + res.question_id);
        c.numeric = *res.numeric_value;
      }
    }
    for (size_t q = 0; q < catalog.size(); ++q) {
      if (!seen[q]) {
        throw ValidationError("note " + notes.notes[r].id + ": no extraction result for " + catalog[q].id);
      }
    }
    write_row(fm.values, r, catalog, stats, cells);
  }
  return fm;
}

TierMask tier_mask(const std::vector<FeatureColumn>& columns, int tier) {
  if (tier < 1 || tier > 3) throw ValidationError("tier must be 1, 2 or 3");
  TierMask mask{tier, {}};
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].tier <= tier) mask.columns.push_back(j);
  }
  return mask;
}

FeatureMatrix tier_view(const FeatureMatrix& m, int tier) {
  const TierMask mask = tier_mask(m.columns, tier);
  FeatureMatrix out;
  out.row_ids = m.row_ids;
  out.labels = m.labels;
  out.stats = m.stats;
  out.values = Matrix(m.rows(), mask.columns.size());
  for (size_t k = 0; k < mask.columns.size(); ++k) out.columns.push_back(m.columns[mask.columns[k]]);
  for (size_t r = 0; r < m.rows(); ++r) {
    for (size_t k = 0; k < mask.columns.size(); ++k) out.values(r, k) = m.values(r, mask.columns[k]);
  }
  return out;
}

FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<size_t>& rows) {
  FeatureMatrix out;
  out.columns = m.columns;
  out.stats = m.stats;
  out.values = Matrix(rows.size(), m.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    const size_t r = rows.at(k);
    if (r >= m.rows()) throw ValidationError("select_rows: row index out of range");
    out.row_ids.push_back(m.row_ids[r]);
    out.labels.push_back(m.labels[r]);
    std::copy(m.values.row(r).begin(), m.values.row(r).end(), out.values.row(k).begin());
  }
  return out;
}

FeatureMatrix vstack(const FeatureMatrix& top, const FeatureMatrix& bottom) {
  if (top.columns != bottom.columns) throw ValidationError("vstack: column schemas differ");
  if (top.stats != bottom.stats) throw ValidationError("vstack: standardization statistics differ");
  FeatureMatrix out = top;
  out.row_ids.insert(out.row_ids.end(), bottom.row_ids.begin(), bottom.row_ids.end());
  out.labels.insert(out.labels.end(), bottom.labels.begin(), bottom.labels.end());
  out.values.rows += bottom.values.rows;
  out.values.data.insert(out.values.data.end(), bottom.values.data.begin(), bottom.values.data.end());
  return out;
}

std::string features_to_csv(const FeatureMatrix& m) {
  CsvWriter w;
  std::vector<std::string> header{"note_id", "icd_code"};
  for (const auto& c : m.columns) header.push_back(c.id);
  w.row(header);
  for (size_t r = 0; r < m.rows(); ++r) {
    std::vector<std::string> fields{m.row_ids[r], m.labels[r]};
    for (double v : m.values.row(r)) fields.push_back(format_double(v));
    w.row(fields);
  }
  return w.str();
}

nlohmann::json features_schema(const FeatureMatrix& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : m.columns) {
    cols.push_back({{"id", c.id}, {"question_id", c.question_id}, {"tier", c.tier}, {"role", to_string(c.role)}});
  }
  nlohmann::json masks = nlohmann::json::object();
  for (int t = 1; t <= 3; ++t) masks[std::to_string(t)] = tier_mask(m.columns, t).columns;
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : m.stats.numeric) stats.push_back({{"question_id", s.question_id}, {"mean", s.mean}, {"std", s.std}});
  return {{"format", "icdlab-features"}, {"rows", m.rows()}, {"columns", std::move(cols)},
          {"tier_masks", std::move(masks)}, {"standardization", std::move(stats)}};
}

std::filesystem::path schema_path_for(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".schema.json");
  return p;
}

void write_features(const std::filesystem::path& csv_path, const FeatureMatrix& m) {
  write_text_file(csv_path, features_to_csv(m));
  write_json_file(schema_path_for(csv_path), features_schema(m));
}

FeatureMatrix read_features(const std::filesystem::path& csv_path) {
  const nlohmann::json schema = read_json_file(schema_path_for(csv_path));
  if (schema.value("format", "") != "icdlab-features") throw ValidationError("not a feature schema sidecar");
  FeatureMatrix m;
  try {
    for (const auto& c : schema.at("columns")) {
      const auto role = c.at("role").get<std::string>();
      if (role != "answer" && role != "indicator") throw ValidationError("unknown column role " + role);
      m.columns.push_back({c.at("id").get<std::string>(), c.at("question_id").get<std::string>(),
                           c.at("tier").get<int>(), role == "answer" ? ColumnRole::answer : ColumnRole::indicator});
    }
    for (const auto& s : schema.at("standardization")) {
      m.stats.numeric.push_back(
          {s.at("question_id").get<std::string>(), s.at("mean").get<double>(), s.at("std").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("feature schema: ") + e.what());
  }
  const auto rows = parse_csv(read_text_file(csv_path));
  if (rows.empty()) throw ValidationError(csv_path.string() + ": missing header");
  const auto& header = rows.front();
  if (header.size() != m.columns.size() + 2) throw ValidationError(csv_path.string() + ": header does not match schema");
  for (size_t j = 0; j < m.columns.size(); ++j) {
    if (header[j + 2] != m.columns[j].id) throw ValidationError(csv_path.string() + ": column " + header[j + 2] + " not in schema");
  }
  m.values = Matrix(rows.size() - 1, m.columns.size());
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = csv_path.string() + ":" + std::to_string(r + 1);
    if (row.size() != header.size()) throw ValidationError(where + ": wrong field count");
    m.row_ids.push_back(row[0]);
    m.labels.push_back(row[1]);
    for (size_t j = 0; j < m.columns.size(); ++j) m.values(r - 1, j) = parse_double(row[j + 2], where);
  }
  return m;
}

}  // namespace icdlab
