// icdlab: generate corpora, train and evaluate extractors and classifiers,
// and run the augmentation study. Every command writes manifest.json next to
// its outputs.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icdlab/classifier.hpp"
#include "icdlab/config.hpp"
#include "icdlab/corpus.hpp"
#include "icdlab/corpus_io.hpp"
#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/experiments.hpp"
#include "icdlab/features.hpp"
#include "icdlab/metrics.hpp"
#include "icdlab/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace icdlab;

namespace {

struct Common {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
};

class Run {
 public:
  Run(std::string command, const Common& common)
      : command_(std::move(command)), out_(common.out), start_(std::chrono::steady_clock::now()) {
    if (!common.config_path.empty()) {
      config_ = load_lab_config(common.config_path);
      input(common.config_path);
    }
  }

  const LabConfig& config() const { return config_; }
  LabConfig& config() { return config_; }
  const fs::path& out() const { return out_; }

  void seed(const std::string& name, uint64_t value) { seeds_[name] = value; }

  void input(const fs::path& p) {
    inputs_.push_back({{"path", p.string()}, {"digest", hex_digest(read_text_file(p))}});
  }

  void output(const std::string& name, const std::string& contents) {
    write_text_file(out_ / name, contents);
    outputs_.push_back({{"path", name}, {"digest", hex_digest(contents)}});
  }
  void output(const std::string& name, const json& j) { output(name, j.dump(2) + "\n"); }

  void finish() const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m{{"command", command_},
           {"config_digest", config_.digest()},
           {"config", config_.to_json()},
           {"seeds", seeds_},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"wall_clock_seconds", seconds}};
    write_json_file(out_ / "manifest.json", m);
  }

 private:
  std::string command_;
  fs::path out_;
  LabConfig config_;
  json seeds_ = json::object();
  json inputs_ = json::array();
  json outputs_ = json::array();
  std::chrono::steady_clock::time_point start_;
};

uint64_t pick_seed(const Common& c, uint64_t fallback) { return c.seed.value_or(fallback); }

LabeledCorpus load_corpus(Run& run, const std::string& path) {
  run.input(path);
  return read_corpus(path);
}

CatalogBundle load_catalog(Run& run, const std::string& path) {
  run.input(path);
  return read_catalog(path);
}

// Extractor artifact: the ExtractorSpec plus, for trainable kinds, the learned model.
json extractor_artifact(const ExtractorSpec& spec, const LexiconExtractorModel* model) {
  json j{{"format", "icdlab-extractor"}, {"spec", spec}};
  j["model"] = model != nullptr ? json(*model) : json(nullptr);
  return j;
}

// Simulated extractors read hidden gold from `lookup`.
std::unique_ptr<Extractor> load_extractor(Run& run, const std::string& path, const LabeledCorpus& lookup,
                                          const QuestionCatalog& catalog) {
  run.input(path);
  const json j = read_json_file(path);
  if (j.value("format", "") != "icdlab-extractor") throw ValidationError(path + " is not an extractor artifact");
  const auto spec = j.at("spec").get<ExtractorSpec>();
  switch (spec.kind) {
    case ExtractorKind::oracle:
      return make_oracle(lookup, catalog);
    case ExtractorKind::noisy:
      return make_noisy(lookup, catalog, spec.noise, spec.seed);
    case ExtractorKind::lexicon:
      return std::make_unique<LexiconExtractor>(j.at("model").get<LexiconExtractorModel>());
  }
  throw ValidationError("unknown extractor kind");
}

FeatureMatrix load_features(Run& run, const std::string& path) {
  run.input(path);
  run.input(schema_path_for(path));
  return read_features(path);
}

// Columns of `m` in the order of `ids`.
Matrix select_columns(const FeatureMatrix& m, const std::vector<std::string>& ids) {
  const auto have = m.column_ids();
  std::vector<size_t> idx;
  for (const auto& id : ids) {
    const auto it = std::find(have.begin(), have.end(), id);
    if (it == have.end()) throw ValidationError("feature column " + id + " missing from input");
    idx.push_back(static_cast<size_t>(it - have.begin()));
  }
  Matrix out(m.rows(), idx.size());
  for (size_t r = 0; r < m.rows(); ++r) {
    for (size_t k = 0; k < idx.size(); ++k) out(r, k) = m.values(r, idx[k]);
  }
  return out;
}

LogRegModel load_model(Run& run, const std::string& path) {
  run.input(path);
  return read_json_file(path).get<LogRegModel>();
}

void cmd_gen(const Common& c) {
  Run run("gen", c);
  const auto& cfg = run.config();
  const uint64_t seed = pick_seed(c, 0);
  run.seed("seed", seed);
  const CatalogBundle bundle = default_catalog(cfg.catalog);
  const auto gold = generate_corpus(bundle, cfg.gold_notes, cfg.demographics, derive_seed(seed, "gold"), "g");
  run.output("catalog.json", json(bundle));
  run.output("corpus.jsonl", corpus_to_jsonl(gold));
  if (cfg.pool_notes > 0) {
    const auto pool = generate_corpus(bundle, cfg.pool_notes, cfg.demographics, derive_seed(seed, "pool"), "p");
    run.output("pool.jsonl", corpus_to_jsonl(pool));
  }
  run.finish();
}

void cmd_split(const Common& c, const std::string& corpus_path) {
  Run run("split", c);
  const uint64_t seed = pick_seed(c, 0);
  run.seed("seed", seed);
  const auto corpus = load_corpus(run, corpus_path);
  const auto split = stratified_split(corpus, run.config().split, seed);
  run.output("train.jsonl", corpus_to_jsonl(split.train));
  run.output("validation.jsonl", corpus_to_jsonl(split.validation));
  run.output("test.jsonl", corpus_to_jsonl(split.test));
  run.finish();
}

void cmd_train_extractor(const Common& c, const std::string& train_path, const std::string& catalog_path) {
  Run run("train-extractor", c);
  ExtractorSpec spec = run.config().extractor;
  if (c.seed) spec.seed = *c.seed;
  run.seed("extractor", spec.seed);
  const auto bundle = load_catalog(run, catalog_path);
  const auto train = load_corpus(run, train_path);
  validate_corpus(train, bundle.catalog);
  if (spec.kind == ExtractorKind::lexicon) {
    const auto result = train_lexicon_extractor(train, bundle.catalog, spec.lexicon);
    run.output("model.json", extractor_artifact(spec, &result.model));
    run.output("training_report.json", to_json(result.report));
    for (const auto& q : result.report.degenerate_questions) {
      std::cerr << "warning: question " << q << " is never answered in training; it will always be unanswered\n";
    }
  } else {
    run.output("model.json", extractor_artifact(spec, nullptr));
    run.output("training_report.json", json{{"notes", train.size()}, {"kind", to_string(spec.kind)}});
  }
  run.finish();
}

void cmd_eval_extractor(const Common& c, const std::string& model_path, const std::string& test_path,
                        const std::string& catalog_path) {
  Run run("eval-extractor", c);
  const auto bundle = load_catalog(run, catalog_path);
  const auto test = load_corpus(run, test_path);
  validate_corpus(test, bundle.catalog);
  const auto extractor = load_extractor(run, model_path, test, bundle.catalog);
  const auto report = evaluate_extractor(*extractor, test, bundle.catalog);
  run.output("report.json", to_json(report));
  run.finish();
}

void cmd_impute(const Common& c, const std::string& model_path, const std::string& corpus_path,
                const std::string& stats_path, const std::string& catalog_path) {
  Run run("impute", c);
  const auto bundle = load_catalog(run, catalog_path);
  const auto notes = load_corpus(run, corpus_path);
  LabeledCorpus stats_source = notes;
  if (!stats_path.empty()) stats_source = load_corpus(run, stats_path);
  const auto stats = compute_standardization(stats_source, bundle.catalog);
  FeatureMatrix features;
  if (model_path.empty()) {
    validate_corpus(notes, bundle.catalog);
    features = encode_gold(notes, bundle.catalog, stats);
  } else {
    const auto extractor = load_extractor(run, model_path, notes, bundle.catalog);
    LabeledCorpus visible;
    for (const auto& n : notes.notes) visible.notes.push_back(hide_annotations(n));
    features = encode_extracted(extract_all(*extractor, visible, bundle.catalog), visible, bundle.catalog, stats);
  }
  run.output("features.csv", features_to_csv(features));
  run.output("features.schema.json", features_schema(features));
  run.finish();
}

void cmd_train_clf(const Common& c, const std::vector<std::string>& feature_paths) {
  Run run("train-clf", c);
  TrainConfig tc = run.config().classifier;
  if (c.seed) tc.seed = *c.seed;
  run.seed("classifier", tc.seed);
  FeatureMatrix all = load_features(run, feature_paths.front());
  for (size_t i = 1; i < feature_paths.size(); ++i) all = vstack(all, load_features(run, feature_paths[i]));
  const LogRegModel model = train_logreg(tier_view(all, run.config().tier), tc);
  if (!model.info.converged) std::cerr << "warning: classifier stopped at max_iterations\n";
  run.output("model.json", json(model));
  run.finish();
}

void cmd_eval_clf(const Common& c, const std::string& model_path, const std::string& features_path) {
  Run run("eval-clf", c);
  const auto model = load_model(run, model_path);
  const auto features = load_features(run, features_path);
  const auto preds = predict(model, select_columns(features, model.feature_ids));
  const auto report = evaluate_predictions(features.labels, preds, model.classes);
  run.output("class_report.csv", class_report_csv(report));
  run.output("class_report.json", class_report_json(report));
  run.finish();
}

void cmd_explain(const Common& c, const std::string& model_path, const std::string& features_path) {
  Run run("explain", c);
  const auto model = load_model(run, model_path);
  const auto features = load_features(run, features_path);
  const auto shap = linear_shap(model, select_columns(features, model.feature_ids));
  const auto ranked = importance_summary(shap, run.config().top_n);
  run.output("shap_summary.csv", shap_summary_csv(ranked, model.classes));
  run.finish();
}

void cmd_augment(const Common& c, const std::string& gold_path, const std::string& pool_path,
                 const std::string& catalog_path, unsigned jobs) {
  Run run("augment", c);
  AugmentationConfig cfg = run.config().augmentation;
  if (c.seed) cfg.seed = *c.seed;
  run.seed("master", cfg.seed);
  run.seed("extractor", cfg.extractor.seed);
  const auto bundle = load_catalog(run, catalog_path);
  const auto gold = load_corpus(run, gold_path);
  const auto pool = load_corpus(run, pool_path);
  const auto curves = run_augmentation(gold, pool, bundle.catalog, cfg, jobs);
  run.output("curves.csv", curves_csv(curves));
  run.output("curves.json", curves_json(curves));
  run.finish();
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config with per-stage sections");
  sub->add_option("--seed", c.seed, "seed (overrides the config)");
  sub->add_option("--out", c.out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"icdlab: ICD classification from clinical notes with imputed features"};
  app.require_subcommand(1);
  Common common;
  std::string corpus, catalog, train, test, model, stats, gold, pool, features_path;
  std::vector<std::string> features;
  unsigned jobs = 1;

  auto* gen = app.add_subcommand("gen", "generate a gold corpus, an unlabeled pool and the catalog");
  add_common(gen, common);

  auto* split = app.add_subcommand("split", "stratified train/validation/test split");
  add_common(split, common);
  split->add_option("--corpus", corpus)->required();

  auto* train_ex = app.add_subcommand("train-extractor", "train the clinical feature extractor");
  add_common(train_ex, common);
  train_ex->add_option("--train", train)->required();
  train_ex->add_option("--catalog", catalog)->required();

  auto* eval_ex = app.add_subcommand("eval-extractor", "span F1, binary MCC and answerability MCC");
  add_common(eval_ex, common);
  eval_ex->add_option("--model", model)->required();
  eval_ex->add_option("--test", test)->required();
  eval_ex->add_option("--catalog", catalog)->required();

  auto* impute = app.add_subcommand("impute", "encode a corpus into features (gold, or via --model)");
  add_common(impute, common);
  impute->add_option("--corpus", corpus)->required();
  impute->add_option("--catalog", catalog)->required();
  impute->add_option("--model", model, "extractor artifact; omit to encode gold annotations");
  impute->add_option("--stats-from", stats, "gold training corpus for standardization");

  auto* train_clf = app.add_subcommand("train-clf", "train the L1 logistic regression classifier");
  add_common(train_clf, common);
  train_clf->add_option("--features", features, "feature CSV files, stacked in order")->required();

  auto* eval_clf = app.add_subcommand("eval-clf", "per-class report on a feature file");
  add_common(eval_clf, common);
  eval_clf->add_option("--model", model)->required();
  eval_clf->add_option("--features", features_path)->required();

  auto* explain = app.add_subcommand("explain", "linear SHAP importance summary");
  add_common(explain, common);
  explain->add_option("--model", model)->required();
  explain->add_option("--features", features_path)->required();

  auto* augment = app.add_subcommand("augment", "augmentation study over folds, steps and repeats");
  add_common(augment, common);
  augment->add_option("--gold", gold)->required();
  augment->add_option("--pool", pool)->required();
  augment->add_option("--catalog", catalog)->required();
  augment->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) cmd_gen(common);
    if (*split) cmd_split(common, corpus);
    if (*train_ex) cmd_train_extractor(common, train, catalog);
    if (*eval_ex) cmd_eval_extractor(common, model, test, catalog);
    if (*impute) cmd_impute(common, model, corpus, stats, catalog);
    if (*train_clf) cmd_train_clf(common, features);
    if (*eval_clf) cmd_eval_clf(common, model, features_path);
    if (*explain) cmd_explain(common, model, features_path);
    if (*augment) cmd_augment(common, gold, pool, catalog, jobs);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
