#include "icdlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "icdlab/csv.hpp"
#include "icdlab/digest.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/random.hpp"

namespace icdlab {

namespace {

LabeledCorpus hidden(const LabeledCorpus& c) {
  LabeledCorpus out;
  out.provenance = c.provenance;
  out.notes.reserve(c.size());
  for (const auto& n : c.notes) out.notes.push_back(hide_annotations(n));
  return out;
}

LabeledCorpus concat(const LabeledCorpus& a, const LabeledCorpus& b) {
  LabeledCorpus out = a;
  out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
  return out;
}

FeatureMatrix impute(const Extractor& extractor, const LabeledCorpus& notes, const QuestionCatalog& catalog,
                     const StandardizationStats& stats) {
  const LabeledCorpus visible = hidden(notes);
  return encode_extracted(extract_all(extractor, visible, catalog), visible, catalog, stats);
}

// Runs fn(i) for i in [0, n) on `jobs` threads; the first exception wins.
template <typename F>
void parallel_for(size_t n, unsigned jobs, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const unsigned count = static_cast<unsigned>(std::min<size_t>(jobs, n));
  for (unsigned w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

FoldScore score(const LogRegModel& model, const Matrix& X, const std::vector<std::string>& y) {
  const ClassReport r = evaluate_predictions(y, predict(model, X), model.classes);
  return {r.accuracy, r.multiclass_mcc};
}

struct TierData {
  Matrix gold;
  Matrix pool;
  Matrix test;
  std::vector<std::string> feature_ids;
};

struct FoldData {
  std::vector<std::string> gold_labels;
  std::vector<std::string> pool_labels;
  std::vector<std::string> test_labels;
  std::vector<TierData> tiers;  // config tier order
};

}  // namespace

std::string_view to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::oracle:
      return "oracle";
    case ExtractorKind::noisy:
      return "noisy";
    case ExtractorKind::lexicon:
      return "lexicon";
  }
  return "?";
}

ExtractorKind parse_extractor_kind(std::string_view s) {
  if (s == "oracle") return ExtractorKind::oracle;
  if (s == "noisy") return ExtractorKind::noisy;
  if (s == "lexicon") return ExtractorKind::lexicon;
  throw ValidationError("unknown extractor kind '" + std::string(s) + "' (oracle, noisy, lexicon)");
}

void to_json(nlohmann::json& j, const ExtractorSpec& s) {
  j = nlohmann::json{{"name", s.name}, {"kind", to_string(s.kind)}, {"noise", s.noise},
                     {"lexicon", s.lexicon}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, ExtractorSpec& s) {
  s = ExtractorSpec{};
  s.kind = parse_extractor_kind(j.value("kind", std::string(to_string(s.kind))));
  s.name = j.value("name", std::string(to_string(s.kind)));
  if (j.contains("noise")) s.noise = j.at("noise").get<NoiseConfig>();
  if (j.contains("lexicon")) s.lexicon = j.at("lexicon").get<LexiconConfig>();
  s.seed = j.value("seed", s.seed);
}

std::unique_ptr<Extractor> build_extractor(const ExtractorSpec& spec, const LabeledCorpus& train,
                                           const LabeledCorpus& lookup, const QuestionCatalog& catalog) {
  switch (spec.kind) {
    case ExtractorKind::oracle:
      return make_oracle(concat(train, lookup), catalog);
    case ExtractorKind::noisy:
      return make_noisy(concat(train, lookup), catalog, spec.noise, spec.seed);
    case ExtractorKind::lexicon:
      return std::make_unique<LexiconExtractor>(train_lexicon_extractor(train, catalog, spec.lexicon).model);
  }
  throw ValidationError("unknown extractor kind");
}

ClassReport evaluate_predictions(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::vector<std::string>& model_classes) {
  std::set<std::string> classes(model_classes.begin(), model_classes.end());
  classes.insert(y_true.begin(), y_true.end());
  return class_report(y_true, y_pred, std::vector<std::string>(classes.begin(), classes.end()));
}

PipelineResult run_pipeline(const LabeledCorpus& gold_train, const LabeledCorpus& gold_test, const LabeledCorpus& pool,
                            const QuestionCatalog& catalog, const ExtractorSpec& spec, int tier,
                            const TrainConfig& train_config) {
  validate_corpus(gold_train, catalog);
  validate_corpus(gold_test, catalog);
  if (gold_test.empty()) throw ValidationError("run_pipeline: empty test set");
  const StandardizationStats stats = compute_standardization(gold_train, catalog);
  FeatureMatrix train = encode_gold(gold_train, catalog, stats);
  if (!pool.empty()) {
    for (const auto& n : pool.notes) {
      if (n.tokenizer_version != catalog.tokenizer_version()) {
        throw ValidationError("pool note " + n.id + " does not match the catalog tokenizer");
      }
    }
    const auto extractor = build_extractor(spec, gold_train, pool, catalog);
    train = vstack(train, impute(*extractor, pool, catalog, stats));
  }
  PipelineResult out;
  out.train_features = tier_view(train, tier);
  out.model = train_logreg(out.train_features, train_config);
  const FeatureMatrix test = tier_view(encode_gold(gold_test, catalog, stats), tier);
  out.report = evaluate_predictions(test.labels, predict(out.model, test.values), out.model.classes);
  return out;
}

std::vector<NamedReport> run_tier_evaluation(const LabeledCorpus& gold, const QuestionCatalog& catalog,
                                             const std::vector<ExtractorSpec>& extractors,
                                             const TierEvaluationConfig& config) {
  if (extractors.empty()) throw ValidationError("run_tier_evaluation: no extractors given");
  validate_corpus(gold, catalog);
  const CorpusSplit split = stratified_split(gold, config.split, config.seed);
  const StandardizationStats stats = compute_standardization(split.train, catalog);
  std::vector<NamedReport> out;
  for (const auto& spec : extractors) {
    const auto extractor = build_extractor(spec, split.train, split.test, catalog);
    const FeatureMatrix train = tier_view(impute(*extractor, split.train, catalog, stats), config.tier);
    const FeatureMatrix test = tier_view(impute(*extractor, split.test, catalog, stats), config.tier);
    const LogRegModel model = train_logreg(train, config.classifier);
    out.push_back({spec.name, evaluate_predictions(test.labels, predict(model, test.values), model.classes)});
  }
  return out;
}

void AugmentationConfig::validate(size_t pool_size) const {
  if (folds < 2) throw ValidationError("augmentation needs at least 2 folds");
  if (repeats < 2) throw ValidationError("augmentation needs at least 2 repeats for a confidence interval");
  if (steps.empty() || steps.front() != 0) throw ValidationError("augmentation steps must start at 0");
  for (size_t i = 1; i < steps.size(); ++i) {
    if (steps[i] <= steps[i - 1]) throw ValidationError("augmentation steps must be strictly increasing");
  }
  if (steps.back() > pool_size) {
    throw ValidationError("augmentation step " + std::to_string(steps.back()) + " exceeds the pool of " +
                          std::to_string(pool_size) + " notes");
  }
  if (tiers.empty()) throw ValidationError("augmentation needs at least one tier");
  for (int t : tiers) {
    if (t < 1 || t > 3) throw ValidationError("augmentation tiers must be 1, 2 or 3");
  }
}

std::string AugmentationConfig::digest() const {
  nlohmann::json j = *this;
  return hex_digest(j.dump());
}

void to_json(nlohmann::json& j, const AugmentationConfig& c) {
  j = nlohmann::json{{"folds", c.folds},         {"steps", c.steps},           {"repeats", c.repeats},
                     {"tiers", c.tiers},         {"extractor", c.extractor},   {"classifier", c.classifier},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, AugmentationConfig& c) {
  c = AugmentationConfig{};
  c.folds = j.value("folds", c.folds);
  if (j.contains("steps")) {
    c.steps = j.at("steps").get<std::vector<size_t>>();
  } else if (j.contains("step_size") || j.contains("max_step")) {
    const size_t step = j.value("step_size", size_t{75});
    const size_t max_step = j.value("max_step", size_t{750});
    if (step == 0) throw ValidationError("augmentation step_size must be > 0");
    c.steps.clear();
    for (size_t m = 0; m <= max_step; m += step) c.steps.push_back(m);
  }
  c.repeats = j.value("repeats", c.repeats);
  c.tiers = j.value("tiers", c.tiers);
  if (j.contains("extractor")) c.extractor = j.at("extractor").get<ExtractorSpec>();
  if (j.contains("classifier")) c.classifier = j.at("classifier").get<TrainConfig>();
  c.seed = j.value("seed", c.seed);
}

const CurvePoint& ExperimentCurves::at(int tier, size_t step) const {
  for (const auto& p : points) {
    if (p.tier == tier && p.step == step) return p;
  }
  throw ValidationError("no curve point for tier " + std::to_string(tier) + " step " + std::to_string(step));
}

std::string ExperimentCurves::digest() const { return hex_digest(curves_json(*this).dump()); }

ExperimentCurves run_augmentation(const LabeledCorpus& gold, const LabeledCorpus& pool, const QuestionCatalog& catalog,
                                  const AugmentationConfig& config, unsigned jobs) {
  config.validate(pool.size());
  validate_corpus(gold, catalog);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());

  const size_t K = config.folds;
  const auto fold_of = stratified_folds(gold, K, derive_seed(config.seed, "folds"));

  // Per fold: extractor trained on fold-train gold, pool imputed once.
  std::vector<FoldData> folds(K);
  parallel_for(K, jobs, [&](size_t f) {
    std::vector<size_t> train_idx, test_idx;
    for (size_t i = 0; i < gold.size(); ++i) (fold_of[i] == f ? test_idx : train_idx).push_back(i);
    const LabeledCorpus train = gold.subset(train_idx);
    const LabeledCorpus test = gold.subset(test_idx);
    const StandardizationStats stats = compute_standardization(train, catalog);
    const FeatureMatrix g = encode_gold(train, catalog, stats);
    const FeatureMatrix t = encode_gold(test, catalog, stats);
    FeatureMatrix p;
    if (config.steps.back() > 0) {
      const auto extractor = build_extractor(config.extractor, train, pool, catalog);
      p = impute(*extractor, pool, catalog, stats);
    } else {
      p = encode_gold(LabeledCorpus{}, catalog, stats);
    }
    FoldData& fd = folds[f];
    fd.gold_labels = g.labels;
    fd.pool_labels = p.labels;
    fd.test_labels = t.labels;
    for (int tier : config.tiers) {
      TierData td;
      const FeatureMatrix gv = tier_view(g, tier);
      td.gold = gv.values;
      td.pool = tier_view(p, tier).values;
      td.test = tier_view(t, tier).values;
      td.feature_ids = gv.column_ids();
      fd.tiers.push_back(std::move(td));
    }
  });

  const size_t n_tiers = config.tiers.size();
  const size_t n_steps = config.steps.size();
  const size_t R = config.repeats;
  auto slot = [&](size_t ti, size_t si, size_t r, size_t f) { return ((ti * n_steps + si) * R + r) * K + f; };
  std::vector<FoldScore> scores(n_tiers * n_steps * R * K);

  struct Cell {
    size_t tier, step, repeat, fold;
  };
  std::vector<Cell> cells;
  for (size_t ti = 0; ti < n_tiers; ++ti) {
    for (size_t si = 0; si < n_steps; ++si) {
      const size_t m = config.steps[si];
      // no sampling randomness at m = 0 or m = |pool|
      const size_t distinct = (m == 0 || m == pool.size()) ? 1 : R;
      for (size_t r = 0; r < distinct; ++r) {
        for (size_t f = 0; f < K; ++f) cells.push_back({ti, si, r, f});
      }
    }
  }

  parallel_for(cells.size(), jobs, [&](size_t c) {
    const Cell& cell = cells[c];
    const FoldData& fd = folds[cell.fold];
    const TierData& td = fd.tiers[cell.tier];
    const size_t m = config.steps[cell.step];
    std::vector<size_t> subset;
    if (m == pool.size()) {
      subset.resize(m);
      for (size_t i = 0; i < m; ++i) subset[i] = i;
    } else if (m > 0) {
      Rng rng(derive_seed(config.seed, {cell.fold, m, cell.repeat}));
      subset = rng.sample_without_replacement(pool.size(), m);
      std::sort(subset.begin(), subset.end());
    }
    const size_t F = td.gold.cols;
    Matrix X(td.gold.rows + m, F);
    std::copy(td.gold.data.begin(), td.gold.data.end(), X.data.begin());
    std::vector<std::string> y = fd.gold_labels;
    y.reserve(X.rows);
    for (size_t k = 0; k < m; ++k) {
      const auto src = td.pool.row(subset[k]);
      std::copy(src.begin(), src.end(), X.row(td.gold.rows + k).begin());
      y.push_back(fd.pool_labels[subset[k]]);
    }
    const LogRegModel model = train_logreg(X, y, config.classifier, td.feature_ids);
    scores[slot(cell.tier, cell.step, cell.repeat, cell.fold)] = score(model, td.test, fd.test_labels);
  });

  ExperimentCurves curves;
  curves.config_digest = config.digest();
  curves.seed = config.seed;
  for (size_t ti = 0; ti < n_tiers; ++ti) {
    for (size_t si = 0; si < n_steps; ++si) {
      const size_t m = config.steps[si];
      std::vector<double> acc(R), mcc(R);
      for (size_t r = 0; r < R; ++r) {
        const size_t src = (m == 0 || m == pool.size()) ? 0 : r;
        double a = 0.0, c = 0.0;
        for (size_t f = 0; f < K; ++f) {
          a += scores[slot(ti, si, src, f)].accuracy;
          c += scores[slot(ti, si, src, f)].mcc;
        }
        acc[r] = a / static_cast<double>(K);
        mcc[r] = c / static_cast<double>(K);
      }
      curves.points.push_back({config.tiers[ti], m, mean_ci(acc), mean_ci(mcc)});
    }
    std::vector<FoldScore> base(K);
    for (size_t f = 0; f < K; ++f) base[f] = scores[slot(ti, 0, 0, f)];
    curves.fold_baselines.push_back(std::move(base));
  }
  return curves;
}

std::string curves_csv(const ExperimentCurves& curves) {
  CsvWriter w;
  w.row({"tier", "step", "metric", "mean", "ci_half_width", "baseline"});
  for (const auto& p : curves.points) {
    const CurvePoint& base = curves.baseline(p.tier);
    w.row({std::to_string(p.tier), std::to_string(p.step), "accuracy", format_double(p.accuracy.mean),
           format_double(p.accuracy.half_width), format_double(base.accuracy.mean)});
    w.row({std::to_string(p.tier), std::to_string(p.step), "mcc", format_double(p.mcc.mean),
           format_double(p.mcc.half_width), format_double(base.mcc.mean)});
  }
  return w.str();
}

nlohmann::json curves_json(const ExperimentCurves& curves) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curves.points) {
    points.push_back({{"tier", p.tier},
                      {"step", p.step},
                      {"accuracy", {{"mean", p.accuracy.mean}, {"ci_half_width", p.accuracy.half_width}}},
                      {"mcc", {{"mean", p.mcc.mean}, {"ci_half_width", p.mcc.half_width}}}});
  }
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& tier : curves.fold_baselines) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : tier) folds.push_back({{"accuracy", f.accuracy}, {"mcc", f.mcc}});
    baselines.push_back(std::move(folds));
  }
  return {{"config_digest", curves.config_digest}, {"seed", curves.seed}, {"points", std::move(points)},
          {"fold_baselines", std::move(baselines)}};
}

}  // namespace icdlab
