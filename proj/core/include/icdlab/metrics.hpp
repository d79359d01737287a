#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "icdlab/corpus.hpp"

namespace icdlab {

// Token-overlap F1 between two half-open spans. Both absent scores 1, exactly
// one absent scores 0.
double token_span_f1(const std::optional<TokenSpan>& pred, const std::optional<TokenSpan>& gold);

struct BinaryCounts {
  uint64_t tp = 0;
  uint64_t tn = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;

  uint64_t total() const { return tp + tn + fp + fn; }
  void add(bool predicted, bool actual);
};

// Matthews correlation; 0 when any marginal is empty. Throws on all-zero counts.
double binary_mcc(uint64_t tp, uint64_t tn, uint64_t fp, uint64_t fn);
inline double binary_mcc(const BinaryCounts& c) { return binary_mcc(c.tp, c.tn, c.fp, c.fn); }

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes);
  static ConfusionMatrix from_labels(std::span<const std::string> y_true, std::span<const std::string> y_pred,
                                     std::vector<std::string> classes);

  void add(size_t actual, size_t predicted, uint64_t n = 1);
  uint64_t at(size_t actual, size_t predicted) const { return counts_[actual * k_ + predicted]; }
  size_t size() const { return k_; }
  uint64_t total() const;
  const std::vector<std::string>& classes() const { return classes_; }
  size_t class_index(const std::string& label) const;

  // One-vs-rest counts for class c.
  BinaryCounts one_vs_rest(size_t c) const;

 private:
  std::vector<std::string> classes_;
  size_t k_;
  std::vector<uint64_t> counts_;  // row = actual, column = predicted
};

// K-category correlation coefficient (covariance form). Equals binary_mcc
// for K = 2; 0 when a variance term vanishes. Throws when empty.
double multiclass_mcc(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

struct ClassMetrics {
  std::string label;
  double f1 = 0.0;
  double mcc = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  uint64_t support = 0;
};

struct ClassReport {
  std::vector<ClassMetrics> classes;
  ClassMetrics weighted;  // label "weighted average", support = total
  double accuracy = 0.0;
  double multiclass_mcc = 0.0;
};

ClassReport class_report(std::span<const std::string> y_true, std::span<const std::string> y_pred,
                         const std::vector<std::string>& classes);

// CSV with columns condition,f1,mcc,tpr,tnr,support; last row is the weighted average.
std::string class_report_csv(const ClassReport& report);
nlohmann::json class_report_json(const ClassReport& report);

struct MeanInterval {
  double mean = 0.0;
  double half_width = 0.0;
};

// Normal-approximation interval: z(level) * sample_sd / sqrt(n).
MeanInterval mean_ci(std::span<const double> samples, double level = 0.95);

double normal_quantile(double p);

}  // namespace icdlab
