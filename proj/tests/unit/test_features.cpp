#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "icdlab/errors.hpp"
#include "icdlab/features.hpp"
#include "icdlab/random.hpp"
#include "fixtures.hpp"

using namespace icdlab;
using icdlab::testing::catalog;
using icdlab::testing::gold303;

namespace {

LabeledCorpus first(size_t n) {
  LabeledCorpus c;
  c.notes.assign(gold303().notes.begin(), gold303().notes.begin() + static_cast<long>(n));
  return c;
}

size_t col(const FeatureMatrix& m, const std::string& id) {
  const auto ids = m.column_ids();
  return static_cast<size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
}

}  // namespace

TEST(Columns, SchemaAndOrder) {
  const auto cols = feature_columns(catalog());
  ASSERT_EQ(cols.size(), 2 * catalog().size());
  for (size_t q = 0; q < catalog().size(); ++q) {
    EXPECT_EQ(cols[2 * q].id, catalog()[q].id);
    EXPECT_EQ(cols[2 * q].role, ColumnRole::answer);
    EXPECT_EQ(cols[2 * q + 1].id, catalog()[q].id + "?");
    EXPECT_EQ(cols[2 * q + 1].role, ColumnRole::indicator);
  }
}

TEST(EncodeGold, NegativeAnswerAndIndicator) {
  auto c = first(1);
  auto& a = c.notes[0].annotations[*catalog().index_of("cough")];
  a.answered = true;
  a.span = TokenSpan{0, 1};
  a.binary_answer = 0;
  const auto m = encode_gold(c, catalog());
  EXPECT_EQ(m.values(0, col(m, "cough")), -1.0);
  EXPECT_EQ(m.values(0, col(m, "cough?")), 1.0);
  a.binary_answer = 1;
  EXPECT_EQ(encode_gold(c, catalog()).values(0, col(m, "cough")), 1.0);
}

TEST(EncodeGold, UnansweredRowIsZero) {
  auto c = first(1);
  for (auto& a : c.notes[0].annotations) a = Annotation{a.question_id};
  const auto m = encode_gold(c, catalog());
  for (double v : m.values.row(0)) EXPECT_EQ(v, 0.0);
}

TEST(EncodeGold, IndicatorZeroForcesZeroAnswer) {
  const auto m = encode_gold(gold303(), catalog());
  for (size_t r = 0; r < m.rows(); ++r) {
    for (size_t q = 0; q < catalog().size(); ++q) {
      const double ind = m.values(r, 2 * q + 1);
      EXPECT_TRUE(ind == 0.0 || ind == 1.0);
      if (ind == 0.0) EXPECT_EQ(m.values(r, 2 * q), 0.0);
    }
  }
}

TEST(EncodeGold, NumericColumnsStandardizedOnTrainingRows) {
  const auto m = encode_gold(gold303(), catalog());
  size_t numeric = 0;
  for (size_t q = 0; q < catalog().size(); ++q) {
    if (catalog()[q].answer_kind != AnswerKind::numeric) continue;
    ++numeric;
    double s = 0, ss = 0;
    size_t n = 0;
    for (size_t r = 0; r < m.rows(); ++r) {
      if (m.values(r, 2 * q + 1) == 0.0) continue;
      const double v = m.values(r, 2 * q);
      s += v;
      ss += v * v;
      ++n;
    }
    ASSERT_GT(n, 1u);
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(ss / n - mean * mean), 1.0, 1e-9);
  }
  EXPECT_EQ(numeric, 7u);
}

TEST(EncodeGold, TestRowsReuseTrainingStats) {
  const auto s = stratified_split(gold303(), {}, 4);
  const auto stats = compute_standardization(s.train, catalog());
  const auto m = encode_gold(s.test, catalog(), stats);
  EXPECT_EQ(m.stats, stats);
  EXPECT_NE(compute_standardization(s.test, catalog()), stats);
  const auto& q = catalog()[*catalog().index_of(stats.numeric[0].question_id)];
  const size_t qi = *catalog().index_of(q.id);
  for (size_t r = 0; r < s.test.size(); ++r) {
    const auto& a = s.test.notes[r].annotations[qi];
    if (!a.numeric_value) continue;
    EXPECT_DOUBLE_EQ(m.values(r, 2 * qi), (*a.numeric_value - stats.numeric[0].mean) / stats.numeric[0].std);
  }
}

TEST(EncodeGold, UnknownQuestionRejected) {
  auto c = first(1);
  c.notes[0].annotations[0].question_id = "not_a_question";
  EXPECT_THROW(encode_gold(c, catalog()), ValidationError);
}

TEST(EncodeGold, LabelBlind) {
  auto c = first(30);
  const auto before = encode_gold(c, catalog());
  Rng rng(1);
  std::vector<std::string> labels;
  for (const auto& n : c.notes) labels.push_back(n.icd_code);
  rng.shuffle(labels);
  for (size_t i = 0; i < c.size(); ++i) c.notes[i].icd_code = labels[i];
  const auto after = encode_gold(c, catalog());
  EXPECT_EQ(before.values, after.values);
  EXPECT_EQ(after.labels, labels);
}

TEST(EncodeExtracted, OracleIsBitwiseGold) {
  const auto& c = gold303();
  const auto stats = compute_standardization(c, catalog());
  const auto results = extract_all(*make_oracle(c, catalog()), c, catalog());
  EXPECT_EQ(encode_extracted(results, c, catalog(), stats), encode_gold(c, catalog(), stats));
}

TEST(EncodeExtracted, TieResolvesAffirmative) {
  const auto c = first(1);
  const auto stats = compute_standardization(c, catalog());
  auto results = extract_all(*make_oracle(c, catalog()), c, catalog());
  const size_t q = *catalog().index_of("cough");
  auto& r = results[0][q];
  r.answerable_prob = 1.0;
  r.span = TokenSpan{1, 2};
  r.binary_prob = 0.5;
  EXPECT_EQ(encode_extracted(results, c, catalog(), stats).values(0, 2 * q), 1.0);
  r.binary_prob = std::nextafter(0.5, 0.0);
  EXPECT_EQ(encode_extracted(results, c, catalog(), stats).values(0, 2 * q), -1.0);
}

TEST(EncodeExtracted, MissingQuestionRejected) {
  const auto c = first(2);
  const auto stats = compute_standardization(c, catalog());
  auto results = extract_all(*make_oracle(c, catalog()), c, catalog());
  results[1].pop_back();
  EXPECT_THROW(encode_extracted(results, c, catalog(), stats), ValidationError);
  results.pop_back();
  EXPECT_THROW(encode_extracted(results, c, catalog(), stats), ValidationError);
}

TEST(EncodeExtracted, HallucinationOnlyTurnsIndicatorsOn) {
  const auto c = first(40);
  const auto stats = compute_standardization(c, catalog());
  NoiseConfig n;
  n.eps_hallucinate = 0.3;
  const auto gold = encode_gold(c, catalog(), stats);
  const auto noisy = encode_extracted(extract_all(*make_noisy(c, catalog(), n, 2), c, catalog()), c, catalog(), stats);
  size_t changed = 0;
  for (size_t r = 0; r < gold.rows(); ++r) {
    for (size_t q = 0; q < catalog().size(); ++q) {
      const bool ind_changed = gold.values(r, 2 * q + 1) != noisy.values(r, 2 * q + 1);
      if (ind_changed) {
        ++changed;
        EXPECT_EQ(gold.values(r, 2 * q + 1), 0.0);
        EXPECT_EQ(noisy.values(r, 2 * q + 1), 1.0);
      } else {
        EXPECT_EQ(gold.values(r, 2 * q), noisy.values(r, 2 * q));
      }
    }
  }
  EXPECT_GT(changed, 0u);
}

TEST(Tiers, MasksNested) {
  const auto cols = feature_columns(catalog());
  const auto m1 = tier_mask(cols, 1), m2 = tier_mask(cols, 2), m3 = tier_mask(cols, 3);
  EXPECT_EQ(m1.columns.size(), 88u);
  EXPECT_EQ(m2.columns.size(), 122u);
  EXPECT_EQ(m3.columns.size(), 128u);
  EXPECT_TRUE(std::includes(m2.columns.begin(), m2.columns.end(), m1.columns.begin(), m1.columns.end()));
  EXPECT_TRUE(std::includes(m3.columns.begin(), m3.columns.end(), m2.columns.begin(), m2.columns.end()));
  EXPECT_THROW(tier_mask(cols, 4), ValidationError);
}

TEST(Tiers, ViewsDropLaterTierColumns) {
  const auto m = encode_gold(first(20), catalog());
  EXPECT_EQ(tier_view(m, 3), m);
  const auto v1 = tier_view(m, 1);
  for (const auto& c : v1.columns) EXPECT_EQ(c.tier, 1);
  const auto ids = v1.column_ids();
  for (const auto& q : catalog().questions()) {
    if (q.tier == 2) EXPECT_EQ(std::find(ids.begin(), ids.end(), q.id), ids.end());
  }
  EXPECT_EQ(v1.rows(), m.rows());
  EXPECT_EQ(v1.labels, m.labels);
}

TEST(Tiers, CommuteWithRowSelection) {
  const auto m = encode_gold(first(30), catalog());
  const std::vector<size_t> rows{4, 0, 17, 29};
  for (int t : {1, 2, 3}) EXPECT_EQ(tier_view(select_rows(m, rows), t), select_rows(tier_view(m, t), rows));
}

TEST(Stack, ChecksSchema) {
  const auto a = encode_gold(first(10), catalog());
  const auto both = vstack(a, a);
  EXPECT_EQ(both.rows(), 20u);
  EXPECT_THROW(vstack(a, tier_view(a, 1)), ValidationError);
  auto other = a;
  other.stats.numeric[0].mean += 1.0;
  EXPECT_THROW(vstack(a, other), ValidationError);
}

TEST(Io, CsvAndSchemaRoundTrip) {
  const auto dir = icdlab::testing::scratch_dir("features_io");
  const auto m = tier_view(encode_gold(first(25), catalog()), 2);
  write_features(dir / "f.csv", m);
  EXPECT_TRUE(std::filesystem::exists(dir / "f.schema.json"));
  EXPECT_EQ(read_features(dir / "f.csv"), m);
  const auto schema = features_schema(m);
  EXPECT_EQ(schema.at("columns").size(), m.cols());
}

TEST(Io, MissingSidecarIsIoError) {
  const auto dir = icdlab::testing::scratch_dir("features_nosidecar");
  write_features(dir / "f.csv", encode_gold(first(3), catalog()));
  std::filesystem::remove(dir / "f.schema.json");
  EXPECT_THROW(read_features(dir / "f.csv"), IoError);
}
