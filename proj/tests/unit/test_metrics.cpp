#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "icdlab/csv.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/metrics.hpp"
#include "icdlab/random.hpp"

using namespace icdlab;

namespace {

double mcc_formula(double tp, double tn, double fp, double fn) {
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
}

double brute_f1(TokenSpan p, TokenSpan g) {
  std::set<size_t> ps, gs;
  for (size_t i = p.start; i < p.end; ++i) ps.insert(i);
  for (size_t i = g.start; i < g.end; ++i) gs.insert(i);
  size_t common = 0;
  for (size_t i : ps) common += gs.count(i);
  if (common == 0) return 0.0;
  const double prec = double(common) / ps.size(), rec = double(common) / gs.size();
  return 2 * prec * rec / (prec + rec);
}

}  // namespace

TEST(SpanF1, Examples) {
  EXPECT_DOUBLE_EQ(token_span_f1(TokenSpan{6, 10}, TokenSpan{5, 9}), 0.75);
  EXPECT_DOUBLE_EQ(token_span_f1(TokenSpan{2, 4}, TokenSpan{2, 4}), 1.0);
  EXPECT_DOUBLE_EQ(token_span_f1(TokenSpan{0, 2}, TokenSpan{5, 9}), 0.0);
  EXPECT_DOUBLE_EQ(token_span_f1(std::nullopt, std::nullopt), 1.0);
  EXPECT_DOUBLE_EQ(token_span_f1(TokenSpan{1, 2}, std::nullopt), 0.0);
  EXPECT_DOUBLE_EQ(token_span_f1(std::nullopt, TokenSpan{1, 2}), 0.0);
  EXPECT_THROW(token_span_f1(TokenSpan{3, 3}, TokenSpan{1, 2}), ValidationError);
}

TEST(SpanF1, MatchesBruteForceAndSymmetric) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    auto draw = [&] {
      const size_t s = rng.below(30);
      return TokenSpan{s, s + 1 + rng.below(8)};
    };
    const auto p = draw(), g = draw();
    EXPECT_NEAR(token_span_f1(p, g), brute_f1(p, g), 1e-12);
    EXPECT_DOUBLE_EQ(token_span_f1(p, g), token_span_f1(g, p));
  }
}

TEST(BinaryMcc, Examples) {
  EXPECT_NEAR(binary_mcc(2, 3, 1, 1), 5.0 / 12.0, 1e-15);
  EXPECT_DOUBLE_EQ(binary_mcc(4, 7, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(binary_mcc(5, 0, 3, 0), 0.0);
  EXPECT_THROW(binary_mcc(0, 0, 0, 0), ValidationError);
}

TEST(BinaryMcc, RandomTuplesAndSymmetry) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    uint64_t c[4];
    for (auto& v : c) v = rng.below(50);
    if (c[0] + c[1] + c[2] + c[3] == 0) c[0] = 1;
    const double m = binary_mcc(c[0], c[1], c[2], c[3]);
    EXPECT_NEAR(m, mcc_formula(c[0], c[1], c[2], c[3]), 1e-12);
    EXPECT_NEAR(m, binary_mcc(c[1], c[0], c[3], c[2]), 1e-12);
    EXPECT_GE(m, -1.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(MulticlassMcc, EqualsBinaryForTwoClasses) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix cm({"neg", "pos"});
    const uint64_t tp = rng.below(40), tn = rng.below(40), fp = rng.below(40), fn = rng.below(40) + 1;
    cm.add(1, 1, tp);
    cm.add(0, 0, tn);
    cm.add(0, 1, fp);
    cm.add(1, 0, fn);
    EXPECT_NEAR(multiclass_mcc(cm), binary_mcc(tp, tn, fp, fn), 1e-12);
  }
}

TEST(MulticlassMcc, EdgeCases) {
  ConfusionMatrix diag({"a", "b", "c"});
  diag.add(0, 0, 3);
  diag.add(1, 1, 2);
  diag.add(2, 2, 5);
  EXPECT_DOUBLE_EQ(multiclass_mcc(diag), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(diag), 1.0);

  ConfusionMatrix constant({"a", "b", "c"});
  constant.add(0, 1, 3);
  constant.add(1, 1, 4);
  constant.add(2, 1, 2);
  EXPECT_DOUBLE_EQ(multiclass_mcc(constant), 0.0);

  EXPECT_THROW(multiclass_mcc(ConfusionMatrix({"a", "b"})), ValidationError);
}

TEST(MulticlassMcc, Bounded) {
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const size_t k = 2 + rng.below(5);
    std::vector<std::string> classes;
    for (size_t c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));
    ConfusionMatrix cm(classes);
    for (size_t a = 0; a < k; ++a)
      for (size_t p = 0; p < k; ++p) cm.add(a, p, rng.below(6));
    if (cm.total() == 0) cm.add(0, 0);
    const double m = multiclass_mcc(cm);
    EXPECT_GE(m, -1.0 - 1e-12);
    EXPECT_LE(m, 1.0 + 1e-12);
  }
}

TEST(ClassReport, PerfectPrediction) {
  const std::vector<std::string> y{"a", "b", "c", "a", "b"};
  const auto r = class_report(y, y, {"a", "b", "c"});
  for (const auto& c : r.classes) {
    EXPECT_DOUBLE_EQ(c.f1, 1.0);
    EXPECT_DOUBLE_EQ(c.mcc, 1.0);
    EXPECT_DOUBLE_EQ(c.tpr, 1.0);
    EXPECT_DOUBLE_EQ(c.tnr, 1.0);
  }
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.weighted.support, 5u);
}

TEST(ClassReport, ZeroSupportClass) {
  const std::vector<std::string> t{"a", "b", "a", "b"};
  const std::vector<std::string> p{"a", "a", "a", "b"};
  const auto r = class_report(t, p, {"a", "b", "z"});
  const auto& z = r.classes[2];
  EXPECT_EQ(z.support, 0u);
  EXPECT_DOUBLE_EQ(z.f1, 0.0);
  EXPECT_DOUBLE_EQ(z.mcc, 0.0);
  EXPECT_DOUBLE_EQ(z.tpr, 0.0);
  EXPECT_DOUBLE_EQ(z.tnr, 1.0);
}

TEST(ClassReport, HandTallyThreeClasses) {
  const std::vector<std::string> t{"a", "a", "a", "a", "b", "b", "b", "c", "c", "c"};
  const std::vector<std::string> p{"a", "a", "b", "c", "b", "b", "a", "c", "c", "b"};
  const auto r = class_report(t, p, {"a", "b", "c"});
  // class a: tp 2, fn 2, fp 1, tn 5
  EXPECT_NEAR(r.classes[0].tpr, 0.5, 1e-15);
  EXPECT_NEAR(r.classes[0].tnr, 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.classes[0].f1, 2.0 * 2 / (2 * 2 + 1 + 2), 1e-15);
  EXPECT_NEAR(r.classes[0].mcc, mcc_formula(2, 5, 1, 2), 1e-15);
  // class b: tp 2, fn 1, fp 2, tn 5
  EXPECT_NEAR(r.classes[1].f1, 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(r.classes[1].mcc, mcc_formula(2, 5, 2, 1), 1e-15);
  // class c: tp 2, fn 1, fp 1, tn 6
  EXPECT_NEAR(r.classes[2].f1, 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.classes[2].tnr, 6.0 / 7.0, 1e-15);
  EXPECT_NEAR(r.accuracy, 0.6, 1e-15);
  const double wf1 = (4 * r.classes[0].f1 + 3 * r.classes[1].f1 + 3 * r.classes[2].f1) / 10.0;
  EXPECT_NEAR(r.weighted.f1, wf1, 1e-15);
  EXPECT_EQ(r.weighted.label, "weighted average");
}

TEST(ClassReport, PermutingLabelsKeepsWeightedAverage) {
  const std::vector<std::string> t{"a", "a", "a", "a", "b", "b", "b", "c", "c", "c"};
  const std::vector<std::string> p{"a", "a", "b", "c", "b", "b", "a", "c", "c", "b"};
  auto rename = [](std::vector<std::string> v) {
    for (auto& s : v) s = s == "a" ? "c" : s == "c" ? "a" : s;
    return v;
  };
  const auto r1 = class_report(t, p, {"a", "b", "c"});
  const auto r2 = class_report(rename(t), rename(p), {"a", "b", "c"});
  EXPECT_NEAR(r1.weighted.f1, r2.weighted.f1, 1e-15);
  EXPECT_NEAR(r1.weighted.mcc, r2.weighted.mcc, 1e-15);
  EXPECT_NEAR(r1.classes[0].f1, r2.classes[2].f1, 1e-15);
  EXPECT_NEAR(r1.multiclass_mcc, r2.multiclass_mcc, 1e-15);
}

TEST(ClassReport, Errors) {
  const std::vector<std::string> t{"a", "q"}, p{"a", "a"};
  EXPECT_THROW(class_report(t, p, {"a", "b"}), ValidationError);
  const std::vector<std::string> shorter{"a"};
  EXPECT_THROW(class_report(t, shorter, {"a", "q"}), ValidationError);
}

TEST(ClassReport, CsvAndJsonShape) {
  const std::vector<std::string> t{"a", "b", "b"}, p{"a", "b", "a"};
  const auto r = class_report(t, p, {"a", "b"});
  const auto rows = parse_csv(class_report_csv(r));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"condition", "f1", "mcc", "tpr", "tnr", "support"}));
  EXPECT_EQ(rows[3][0], "weighted average");
  const auto j = class_report_json(r);
  EXPECT_TRUE(j.contains("accuracy"));
}

TEST(MeanCi, Examples) {
  const std::vector<double> constant{0.4, 0.4, 0.4};
  EXPECT_DOUBLE_EQ(mean_ci(constant).half_width, 0.0);
  const std::vector<double> two{0.0, 1.0};
  const auto ci = mean_ci(two);
  EXPECT_DOUBLE_EQ(ci.mean, 0.5);
  EXPECT_NEAR(ci.half_width, normal_quantile(0.975) * std::sqrt(0.5) / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(ci.half_width, 0.98, 0.001);
  const std::vector<double> one{1.0};
  EXPECT_THROW(mean_ci(one), ValidationError);
}

TEST(MeanCi, WidensWithVariance) {
  Rng rng(12);
  std::vector<double> base(20);
  for (auto& v : base) v = rng.normal();
  double prev = -1.0;
  for (double scale : {0.5, 1.0, 2.0, 4.0}) {
    std::vector<double> s;
    for (double v : base) s.push_back(scale * v);
    const double hw = mean_ci(s).half_width;
    EXPECT_GT(hw, prev);
    prev = hw;
  }
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
}
