#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "icdlab/classifier.hpp"
#include "icdlab/corpus.hpp"
#include "icdlab/extractor.hpp"
#include "icdlab/features.hpp"
#include "icdlab/metrics.hpp"

namespace icdlab {

enum class ExtractorKind { oracle, noisy, lexicon };

std::string_view to_string(ExtractorKind kind);
ExtractorKind parse_extractor_kind(std::string_view s);

struct ExtractorSpec {
  std::string name = "lexicon";
  ExtractorKind kind = ExtractorKind::lexicon;
  NoiseConfig noise;
  LexiconConfig lexicon;
  uint64_t seed = 0;

  bool operator==(const ExtractorSpec&) const = default;
};

void to_json(nlohmann::json& j, const ExtractorSpec& s);
void from_json(const nlohmann::json& j, ExtractorSpec& s);

// Trainable extractors learn from `train`; the simulated ones (oracle, noisy)
// read hidden gold for any note in `train` or `lookup` by id.
std::unique_ptr<Extractor> build_extractor(const ExtractorSpec& spec, const LabeledCorpus& train,
                                           const LabeledCorpus& lookup, const QuestionCatalog& catalog);

// Accuracy and multiclass MCC plus the per-class table.
ClassReport evaluate_predictions(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::vector<std::string>& model_classes);

struct PipelineResult {
  LogRegModel model;
  ClassReport report;
  FeatureMatrix train_features;  // tier view actually used for training
};

// Gold rows keep gold features, pool rows are imputed by the extractor, and
// the test split is always gold-encoded.
PipelineResult run_pipeline(const LabeledCorpus& gold_train, const LabeledCorpus& gold_test, const LabeledCorpus& pool,
                            const QuestionCatalog& catalog, const ExtractorSpec& spec, int tier,
                            const TrainConfig& train_config);

struct TierEvaluationConfig {
  SplitRatios split;
  uint64_t seed = 0;
  int tier = 3;
  TrainConfig classifier;
};

struct NamedReport {
  std::string extractor;
  ClassReport report;
};

// Both sides of the split are encoded from the extractor's own output.
std::vector<NamedReport> run_tier_evaluation(const LabeledCorpus& gold, const QuestionCatalog& catalog,
                                             const std::vector<ExtractorSpec>& extractors,
                                             const TierEvaluationConfig& config);

struct AugmentationConfig {
  size_t folds = 5;
  std::vector<size_t> steps{0, 75, 150, 225, 300, 375, 450, 525, 600, 675, 750};
  size_t repeats = 20;
  std::vector<int> tiers{1, 2, 3};
  ExtractorSpec extractor;
  TrainConfig classifier;
  uint64_t seed = 0;

  void validate(size_t pool_size) const;
  std::string digest() const;
  bool operator==(const AugmentationConfig&) const = default;
};

void to_json(nlohmann::json& j, const AugmentationConfig& c);
void from_json(const nlohmann::json& j, AugmentationConfig& c);

struct CurvePoint {
  int tier = 1;
  size_t step = 0;
  MeanInterval accuracy;
  MeanInterval mcc;
};

struct FoldScore {
  double accuracy = 0.0;
  double mcc = 0.0;
};

struct ExperimentCurves {
  std::vector<CurvePoint> points;  // tier-major, then step
  // per tier (config order), per fold: the hand-annotated-only scores
  std::vector<std::vector<FoldScore>> fold_baselines;
  std::string config_digest;
  uint64_t seed = 0;

  const CurvePoint& at(int tier, size_t step) const;
  const CurvePoint& baseline(int tier) const { return at(tier, 0); }
  std::string digest() const;
};

ExperimentCurves run_augmentation(const LabeledCorpus& gold, const LabeledCorpus& pool, const QuestionCatalog& catalog,
                                  const AugmentationConfig& config, unsigned jobs = 1);

// Columns tier,step,metric,mean,ci_half_width,baseline.
std::string curves_csv(const ExperimentCurves& curves);
nlohmann::json curves_json(const ExperimentCurves& curves);

}  // namespace icdlab
