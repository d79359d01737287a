#include <benchmark/benchmark.h>

#include "icdlab/classifier.hpp"
#include "icdlab/corpus.hpp"
#include "icdlab/extractor.hpp"
#include "icdlab/features.hpp"
#include "icdlab/text.hpp"

using namespace icdlab;

namespace {

const CatalogBundle& bundle() {
  static const CatalogBundle b = default_catalog();
  return b;
}

const LabeledCorpus& gold() {
  static const LabeledCorpus c = generate_corpus(bundle(), 303, {}, 11, "g");
  return c;
}

void BM_Tokenize(benchmark::State& state) {
  const auto& notes = gold().notes;
  size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& n : notes) {
      auto tokens = tokenize(n.text);
      benchmark::DoNotOptimize(tokens);
    }
  }
  for (const auto& n : notes) bytes += n.text.size();
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_Tokenize);

void BM_GenerateCorpus(benchmark::State& state) {
  for (auto _ : state) {
    auto c = generate_corpus(bundle(), static_cast<size_t>(state.range(0)), {}, 5);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_GenerateCorpus)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrainLogReg(benchmark::State& state) {
  // Gold rows repeated to the requested size, as in an augmented training set.
  const auto base = encode_gold(gold(), bundle().catalog);
  auto X = base;
  while (static_cast<int64_t>(X.rows()) < state.range(0)) X = vstack(X, base);
  for (auto _ : state) {
    auto m = train_logreg(X, {});
    benchmark::DoNotOptimize(m);
  }
  state.counters["rows"] = static_cast<double>(X.rows());
}
BENCHMARK(BM_TrainLogReg)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrainLexicon(benchmark::State& state) {
  for (auto _ : state) {
    auto r = train_lexicon_extractor(gold(), bundle().catalog);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_TrainLexicon)->Unit(benchmark::kMillisecond);

void BM_LexiconExtract(benchmark::State& state) {
  const LexiconExtractor ex(train_lexicon_extractor(gold(), bundle().catalog).model);
  const auto& notes = gold().notes;
  for (auto _ : state) {
    for (const auto& n : notes) {
      auto r = ex.extract(n, bundle().catalog);
      benchmark::DoNotOptimize(r);
    }
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * notes.size()));
}
BENCHMARK(BM_LexiconExtract)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
