#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "icdlab/corpus.hpp"

namespace icdlab {

void to_json(nlohmann::json& j, const ClinicalQuestion& q);
void from_json(const nlohmann::json& j, ClinicalQuestion& q);
void to_json(nlohmann::json& j, const LabeledNote& note);
void from_json(const nlohmann::json& j, LabeledNote& note);
void to_json(nlohmann::json& j, const SentenceTemplate& t);
void from_json(const nlohmann::json& j, SentenceTemplate& t);
void to_json(nlohmann::json& j, const CatalogBundle& bundle);
void from_json(const nlohmann::json& j, CatalogBundle& bundle);
void to_json(nlohmann::json& j, const CatalogConfig& config);
void from_json(const nlohmann::json& j, CatalogConfig& config);
void to_json(nlohmann::json& j, const DemographicsConfig& config);
void from_json(const nlohmann::json& j, DemographicsConfig& config);

// JSON Lines: a header object (format, tokenizer version, catalog digest,
// seed, config digest, note count) followed by one note per line.
void write_corpus(const std::filesystem::path& path, const LabeledCorpus& corpus);
LabeledCorpus read_corpus(const std::filesystem::path& path);
std::string corpus_to_jsonl(const LabeledCorpus& corpus);
LabeledCorpus corpus_from_jsonl(std::istream& in, const std::string& source = "<stream>");

void write_catalog(const std::filesystem::path& path, const CatalogBundle& bundle);
CatalogBundle read_catalog(const std::filesystem::path& path);

// Shared file helpers; failures raise IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace icdlab
