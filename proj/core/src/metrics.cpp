#include "icdlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "icdlab/csv.hpp"
#include "icdlab/errors.hpp"

namespace icdlab {

double token_span_f1(const std::optional<TokenSpan>& pred, const std::optional<TokenSpan>& gold) {
  for (const auto* s : {&pred, &gold}) {
    if (s->has_value() && (*s)->start >= (*s)->end) throw ValidationError("span start must be < end");
  }
  if (!pred && !gold) return 1.0;
  if (!pred || !gold) return 0.0;
  const size_t lo = std::max(pred->start, gold->start);
  const size_t hi = std::min(pred->end, gold->end);
  if (hi <= lo) return 0.0;
  const double overlap = static_cast<double>(hi - lo);
  const double precision = overlap / static_cast<double>(pred->length());
  const double recall = overlap / static_cast<double>(gold->length());
  return 2.0 * precision * recall / (precision + recall);
}

void BinaryCounts::add(bool predicted, bool actual) {
  if (predicted && actual) {
    ++tp;
  } else if (!predicted && !actual) {
    ++tn;
  } else if (predicted) {
    ++fp;
  } else {
    ++fn;
  }
}

double binary_mcc(uint64_t tp, uint64_t tn, uint64_t fp, uint64_t fn) {
  if (tp + tn + fp + fn == 0) throw ValidationError("binary_mcc: all counts are zero");
  const double a = static_cast<double>(tp), b = static_cast<double>(tn);
  const double c = static_cast<double>(fp), d = static_cast<double>(fn);
  const double f1 = a + c, f2 = a + d, f3 = b + c, f4 = b + d;
  if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
  return (a * b - c * d) / (std::sqrt(f1 * f2) * std::sqrt(f3 * f4));
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), k_(classes_.size()), counts_(k_ * k_, 0) {
  if (k_ == 0) throw ValidationError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const std::string> y_true,
                                             std::span<const std::string> y_pred,
                                             std::vector<std::string> classes) {
  if (y_true.size() != y_pred.size()) throw ValidationError("label sequences differ in length");
  ConfusionMatrix cm(std::move(classes));
  for (size_t i = 0; i < y_true.size(); ++i) {
    cm.add(cm.class_index(y_true[i]), cm.class_index(y_pred[i]));
  }
  return cm;
}

size_t ConfusionMatrix::class_index(const std::string& label) const {
  const auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) throw ValidationError("unknown label: " + label);
  return static_cast<size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(size_t actual, size_t predicted, uint64_t n) {
  if (actual >= k_ || predicted >= k_) throw ValidationError("confusion matrix index out of range");
  counts_[actual * k_ + predicted] += n;
}

uint64_t ConfusionMatrix::total() const {
  uint64_t t = 0;
  for (auto v : counts_) t += v;
  return t;
}

BinaryCounts ConfusionMatrix::one_vs_rest(size_t c) const {
  BinaryCounts out;
  for (size_t a = 0; a < k_; ++a) {
    for (size_t p = 0; p < k_; ++p) {
      const uint64_t n = at(a, p);
      if (a == c && p == c) {
        out.tp += n;
      } else if (a == c) {
        out.fn += n;
      } else if (p == c) {
        out.fp += n;
      } else {
        out.tn += n;
      }
    }
  }
  return out;
}

double multiclass_mcc(const ConfusionMatrix& cm) {
  const uint64_t n = cm.total();
  if (n == 0) throw ValidationError("multiclass_mcc: empty confusion matrix");
  const size_t k = cm.size();
  double correct = 0.0, sum_pt = 0.0, sum_pp = 0.0, sum_tt = 0.0;
  for (size_t c = 0; c < k; ++c) {
    double t = 0.0, p = 0.0;
    for (size_t o = 0; o < k; ++o) {
      t += static_cast<double>(cm.at(c, o));
      p += static_cast<double>(cm.at(o, c));
    }
    correct += static_cast<double>(cm.at(c, c));
    sum_pt += p * t;
    sum_pp += p * p;
    sum_tt += t * t;
  }
  const double s = static_cast<double>(n);
  const double cov_pp = s * s - sum_pp;
  const double cov_tt = s * s - sum_tt;
  if (cov_pp == 0.0 || cov_tt == 0.0) return 0.0;
  return (correct * s - sum_pt) / (std::sqrt(cov_pp) * std::sqrt(cov_tt));
}

double accuracy(const ConfusionMatrix& cm) {
  const uint64_t n = cm.total();
  if (n == 0) throw ValidationError("accuracy: empty confusion matrix");
  uint64_t correct = 0;
  for (size_t c = 0; c < cm.size(); ++c) correct += cm.at(c, c);
  return static_cast<double>(correct) / static_cast<double>(n);
}

ClassReport class_report(std::span<const std::string> y_true, std::span<const std::string> y_pred,
                         const std::vector<std::string>& classes) {
  const auto cm = ConfusionMatrix::from_labels(y_true, y_pred, classes);
  ClassReport report;
  report.weighted.label = "weighted average";
  const uint64_t total = cm.total();
  for (size_t c = 0; c < classes.size(); ++c) {
    const BinaryCounts b = cm.one_vs_rest(c);
    ClassMetrics m;
    m.label = classes[c];
    m.support = b.tp + b.fn;
    const uint64_t f1_den = 2 * b.tp + b.fp + b.fn;
    m.f1 = f1_den == 0 ? 0.0 : 2.0 * static_cast<double>(b.tp) / static_cast<double>(f1_den);
    m.mcc = b.total() == 0 ? 0.0 : binary_mcc(b);
    m.tpr = b.tp + b.fn == 0 ? 0.0 : static_cast<double>(b.tp) / static_cast<double>(b.tp + b.fn);
    m.tnr = b.tn + b.fp == 0 ? 0.0 : static_cast<double>(b.tn) / static_cast<double>(b.tn + b.fp);
    report.classes.push_back(m);
  }
  if (total > 0) {
    for (const auto& m : report.classes) {
      const double w = static_cast<double>(m.support) / static_cast<double>(total);
      report.weighted.f1 += w * m.f1;
      report.weighted.mcc += w * m.mcc;
      report.weighted.tpr += w * m.tpr;
      report.weighted.tnr += w * m.tnr;
    }
    report.accuracy = accuracy(cm);
    report.multiclass_mcc = multiclass_mcc(cm);
  }
  report.weighted.support = total;
  return report;
}

std::string class_report_csv(const ClassReport& report) {
  CsvWriter w;
  w.row({"condition", "f1", "mcc", "tpr", "tnr", "support"});
  auto emit = [&](const ClassMetrics& m) {
    w.row({m.label, format_double(m.f1), format_double(m.mcc), format_double(m.tpr), format_double(m.tnr),
           std::to_string(m.support)});
  };
  for (const auto& m : report.classes) emit(m);
  emit(report.weighted);
  return w.str();
}

nlohmann::json class_report_json(const ClassReport& report) {
  auto row = [](const ClassMetrics& m) {
    return nlohmann::json{{"condition", m.label}, {"f1", m.f1}, {"mcc", m.mcc},
                          {"tpr", m.tpr},        {"tnr", m.tnr}, {"support", m.support}};
  };
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : report.classes) classes.push_back(row(m));
  return {{"classes", std::move(classes)},
          {"weighted_average", row(report.weighted)},
          {"accuracy", report.accuracy},
          {"multiclass_mcc", report.multiclass_mcc}};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

MeanInterval mean_ci(std::span<const double> samples, double level) {
  if (samples.size() < 2) throw ValidationError("mean_ci needs at least two samples");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("mean_ci: level must be in (0, 1)");
  // Identical samples: report the value itself so no rounding leaks in.
  if (std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples[0]; })) {
    return {samples[0], 0.0};
  }
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double z = normal_quantile(0.5 + level / 2.0);
  return {mean, z * sd / std::sqrt(n)};
}

}  // namespace icdlab
