#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/corpus.hpp"

namespace episodekit {

// JSON record forms. Field names are the lower_snake_case type field names.
nlohmann::json to_json(const SatItem& item);
nlohmann::json to_json(const Trace& trace);
nlohmann::json to_json(const Annotation& annotation);
nlohmann::json to_json(const UnitRef& ref);

SatItem sat_item_from_json(const nlohmann::json& j);
Trace trace_from_json(const nlohmann::json& j);
Annotation annotation_from_json(const nlohmann::json& j);
UnitRef unit_ref_from_json(const nlohmann::json& j);

// Reads SAT items from a JSON array or JSONL. Accepts both the question-bank
// field names ("Question ID", "Question Difficulty", "Choice A", ...) and the
// canonical names. Unknown fields land in SatItem::extra.
// Throws ParseError naming the record ordinal and the missing field, or
// listing duplicate question ids.
std::vector<SatItem> ingest_sat_items(const std::filesystem::path& path);
std::vector<SatItem> parse_sat_items(const std::string& text, const std::string& source = "<memory>");

// Corpus persistence.
//
// `path` is the corpus file (conventionally corpus.jsonl). Line 1 is a header
// record carrying schema_version and the annotation set names; then one
// record per SAT item and per trace. Each annotation set is written beside it
// as annotations.<set>.jsonl: a header line followed by one event per line.
// Output is canonical (sorted keys, fixed record order), so re-saving a
// loaded corpus is byte-identical.
void save_corpus(const AnnotatedCorpus& corpus, const std::filesystem::path& path);
AnnotatedCorpus load_corpus(const std::filesystem::path& path);

std::filesystem::path annotation_set_path(const std::filesystem::path& corpus_path,
                                          const std::string& set_name);

void save_annotation_set(const AnnotationSet& set, const std::filesystem::path& path);
AnnotationSet load_annotation_set(const std::filesystem::path& path);

std::string serialize_annotation_set(const AnnotationSet& set);
AnnotationSet parse_annotation_set(const std::string& text, const std::string& source = "<memory>");

// Header line of an annotation event file.
std::string annotation_set_header(const std::string& set_name);

// Set names become file names: [A-Za-z0-9_.-]+, not starting with '.'.
bool is_valid_set_name(const std::string& name);

}  // namespace episodekit
