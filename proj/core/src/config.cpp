#include "icdlab/config.hpp"

#include "icdlab/corpus_io.hpp"
#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"

namespace icdlab {

namespace {

const std::vector<std::string> kSections = {"corpus",  "split",   "extractor",  "features",
                                            "classifier", "explain", "evaluation", "augmentation"};

nlohmann::json section(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) return nlohmann::json::object();
  const auto& s = j.at(name);
  if (!s.is_object()) throw ValidationError(std::string("config section '") + name + "' must be an object");
  return s;
}

}  // namespace

nlohmann::json LabConfig::to_json() const {
  nlohmann::json evaluation = nlohmann::json::array();
  for (const auto& e : evaluation_extractors) evaluation.push_back(e);
  return {{"corpus",
           {{"gold_notes", gold_notes},
            {"pool_notes", pool_notes},
            {"catalog", catalog},
            {"demographics", demographics}}},
          {"split", {{"train", split.train}, {"validation", split.validation}, {"test", split.test}}},
          {"extractor", extractor},
          {"features", {{"tier", tier}}},
          {"classifier", classifier},
          {"explain", {{"top_n", top_n}}},
          {"evaluation", {{"extractors", std::move(evaluation)}}},
          {"augmentation", augmentation}};
}

std::string LabConfig::digest() const { return hex_digest(to_json().dump()); }

LabConfig lab_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kSections.begin(), kSections.end(), key) == kSections.end()) {
      throw ValidationError("unknown config section '" + key + "'");
    }
  }
  LabConfig c;
  try {
    const auto corpus = section(j, "corpus");
    c.gold_notes = corpus.value("gold_notes", c.gold_notes);
    c.pool_notes = corpus.value("pool_notes", c.pool_notes);
    if (corpus.contains("catalog")) c.catalog = corpus.at("catalog").get<CatalogConfig>();
    if (corpus.contains("demographics")) c.demographics = corpus.at("demographics").get<DemographicsConfig>();

    const auto split = section(j, "split");
    c.split.train = split.value("train", c.split.train);
    c.split.validation = split.value("validation", c.split.validation);
    c.split.test = split.value("test", c.split.test);

    if (j.contains("extractor")) c.extractor = section(j, "extractor").get<ExtractorSpec>();
    c.tier = section(j, "features").value("tier", c.tier);
    if (c.tier < 1 || c.tier > 3) throw ValidationError("features.tier must be 1, 2 or 3");
    if (j.contains("classifier")) c.classifier = section(j, "classifier").get<TrainConfig>();
    c.top_n = section(j, "explain").value("top_n", c.top_n);

    const auto evaluation = section(j, "evaluation");
    if (evaluation.contains("extractors")) {
      c.evaluation_extractors = evaluation.at("extractors").get<std::vector<ExtractorSpec>>();
    } else {
      ExtractorSpec oracle;
      oracle.name = "oracle";
      oracle.kind = ExtractorKind::oracle;
      c.evaluation_extractors = {oracle, c.extractor};
    }

    // The augmentation study reuses the extractor and classifier sections
    // unless it overrides them.
    auto aug = section(j, "augmentation");
    if (!aug.contains("extractor")) aug["extractor"] = c.extractor;
    if (!aug.contains("classifier")) aug["classifier"] = c.classifier;
    c.augmentation = aug.get<AugmentationConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

LabConfig load_lab_config(const std::filesystem::path& path) { return lab_config_from_json(read_json_file(path)); }

}  // namespace icdlab
