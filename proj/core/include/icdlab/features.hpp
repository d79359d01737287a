#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "icdlab/corpus.hpp"
#include "icdlab/extractor.hpp"
#include "icdlab/matrix.hpp"

namespace icdlab {

enum class ColumnRole { answer, indicator };

struct FeatureColumn {
  std::string id;  // "<question>" for the answer, "<question>?" for the indicator
  std::string question_id;
  int tier = 1;
  ColumnRole role = ColumnRole::answer;

  bool operator==(const FeatureColumn&) const = default;
};

struct NumericStat {
  std::string question_id;
  double mean = 0.0;
  double std = 1.0;

  bool operator==(const NumericStat&) const = default;
};

// Per numeric question, population moments over the answered training rows.
struct StandardizationStats {
  std::vector<NumericStat> numeric;

  const NumericStat* find(const std::string& question_id) const;
  bool operator==(const StandardizationStats&) const = default;
};

struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> labels;
  std::vector<FeatureColumn> columns;
  Matrix values;
  StandardizationStats stats;

  size_t rows() const { return values.rows; }
  size_t cols() const { return values.cols; }
  std::vector<std::string> column_ids() const;
  bool operator==(const FeatureMatrix&) const = default;
};

std::vector<FeatureColumn> feature_columns(const QuestionCatalog& catalog);

StandardizationStats compute_standardization(const LabeledCorpus& train, const QuestionCatalog& catalog);

// Gold annotations -> design matrix. Without stats, the notes themselves are
// the training rows.
FeatureMatrix encode_gold(const LabeledCorpus& notes, const QuestionCatalog& catalog,
                          const StandardizationStats& stats);
FeatureMatrix encode_gold(const LabeledCorpus& notes, const QuestionCatalog& catalog);

// Extraction results -> design matrix; row ids and labels come from `notes`.
FeatureMatrix encode_extracted(const std::vector<std::vector<ExtractionResult>>& results,
                               const LabeledCorpus& notes, const QuestionCatalog& catalog,
                               const StandardizationStats& stats);

struct TierMask {
  int tier = 3;
  std::vector<size_t> columns;
};

TierMask tier_mask(const std::vector<FeatureColumn>& columns, int tier);
FeatureMatrix tier_view(const FeatureMatrix& m, int tier);
FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<size_t>& rows);
FeatureMatrix vstack(const FeatureMatrix& top, const FeatureMatrix& bottom);

std::string features_to_csv(const FeatureMatrix& m);
nlohmann::json features_schema(const FeatureMatrix& m);
void write_features(const std::filesystem::path& csv_path, const FeatureMatrix& m);
FeatureMatrix read_features(const std::filesystem::path& csv_path);

std::filesystem::path schema_path_for(const std::filesystem::path& csv_path);

}  // namespace icdlab
