#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "icdlab/features.hpp"
#include "icdlab/matrix.hpp"

namespace icdlab {

struct TrainConfig {
  double C = 0.2;            // inverse L1 strength; penalty weight is 1/C
  double tolerance = 1e-7;   // relative objective change
  int max_iterations = 20000;
  uint64_t seed = 0;
  bool record_history = false;

  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainingInfo {
  double C = 0.0;
  double tolerance = 0.0;
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
  std::vector<double> history;  // penalized objective after each accepted step

  bool operator==(const TrainingInfo&) const = default;
};

struct LogRegModel {
  std::vector<std::string> classes;
  std::vector<std::string> feature_ids;
  Matrix W;  // K x F
  std::vector<double> b;
  std::vector<double> background_mean;
  TrainingInfo info;

  size_t num_classes() const { return classes.size(); }
  size_t num_features() const { return W.cols; }
  size_t nonzero_weights() const;
  std::string digest() const;
  bool operator==(const LogRegModel&) const = default;
};

void to_json(nlohmann::json& j, const LogRegModel& m);
void from_json(const nlohmann::json& j, LogRegModel& m);

// Multinomial softmax regression with an L1 penalty on W, fit by proximal
// gradient from a zero start. Classes are the sorted distinct labels.
LogRegModel train_logreg(const Matrix& X, std::span<const std::string> y, const TrainConfig& config,
                         std::vector<std::string> feature_ids = {});
LogRegModel train_logreg(const FeatureMatrix& X, const TrainConfig& config);

Matrix logits(const LogRegModel& model, const Matrix& X);
Matrix predict_proba(const LogRegModel& model, const Matrix& X);
std::vector<std::string> predict(const LogRegModel& model, const Matrix& X);

// Smooth part of the objective: summed softmax cross-entropy.
struct SmoothLoss {
  double value = 0.0;
  Matrix grad_W;  // K x F
  std::vector<double> grad_b;
};
SmoothLoss smooth_loss(const Matrix& X, std::span<const size_t> y, const Matrix& W, std::span<const double> b);
double penalized_objective(const Matrix& X, std::span<const size_t> y, const Matrix& W, std::span<const double> b,
                           double C);

struct ShapExplanation {
  std::vector<std::string> classes;
  std::vector<std::string> feature_ids;
  std::vector<double> base;           // per class
  size_t rows = 0;
  std::vector<double> contributions;  // row-major [row][class][feature]

  double at(size_t r, size_t c, size_t j) const {
    return contributions[(r * classes.size() + c) * feature_ids.size() + j];
  }
};

ShapExplanation linear_shap(const LogRegModel& model, const Matrix& X);
// Same, with the background mean recomputed from `background` rows.
ShapExplanation linear_shap(const LogRegModel& model, const Matrix& X, const Matrix& background);

struct FeatureImportance {
  std::string feature_id;
  std::vector<double> per_class;  // mean |contribution|
  double total = 0.0;
};

std::vector<FeatureImportance> importance_summary(const ShapExplanation& explanation, size_t top_n);

// Columns feature_id,class,mean_abs_contribution.
std::string shap_summary_csv(const std::vector<FeatureImportance>& ranked, const std::vector<std::string>& classes);

}  // namespace icdlab
