#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icdlab/classifier.hpp"
#include "icdlab/corpus.hpp"
#include "icdlab/experiments.hpp"

namespace icdlab {

// One document, one section per stage. Missing sections take defaults.
struct LabConfig {
  // "corpus"
  size_t gold_notes = 303;
  size_t pool_notes = 750;
  CatalogConfig catalog;
  DemographicsConfig demographics;
  // "split"
  SplitRatios split;
  // "extractor"
  ExtractorSpec extractor;
  // "features"
  int tier = 3;
  // "classifier"
  TrainConfig classifier;
  // "explain"
  size_t top_n = 20;
  // "evaluation": extractors compared by the tier evaluation
  std::vector<ExtractorSpec> evaluation_extractors;
  // "augmentation"
  AugmentationConfig augmentation;

  nlohmann::json to_json() const;
  std::string digest() const;
};

LabConfig lab_config_from_json(const nlohmann::json& j);
LabConfig load_lab_config(const std::filesystem::path& path);

}  // namespace icdlab
