#pragma once

#include <filesystem>
#include <string>

#include "icdlab/corpus.hpp"
#include "icdlab/random.hpp"

namespace icdlab::testing {

inline const CatalogBundle& bundle() {
  static const CatalogBundle b = default_catalog();
  return b;
}

inline const QuestionCatalog& catalog() { return bundle().catalog; }

inline const LabeledCorpus& gold303() {
  static const LabeledCorpus c = generate_corpus(bundle(), 303, {}, derive_seed(7, "gold"), "g");
  return c;
}

inline const LabeledCorpus& pool120() {
  static const LabeledCorpus c = generate_corpus(bundle(), 120, {}, derive_seed(7, "pool"), "p");
  return c;
}

// Fresh directory under the system temp dir, removed by the caller if wanted.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("icdlab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace icdlab::testing
