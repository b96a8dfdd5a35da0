#include "episodekit/corpus_io.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "episodekit/error.hpp"
#include "episodekit/fileutil.hpp"

namespace episodekit {

using nlohmann::json;

namespace {

constexpr const char* kCorpusFormat = "episodekit.corpus";
constexpr const char* kAnnotationFormat = "episodekit.annotations";

json parse_line(const std::string& source, std::size_t line, std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, line, std::string("malformed JSON record (truncated line?): ") + e.what());
  }
}

const json& require(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) throw InvariantError(field, "missing field");
  return *it;
}

std::string require_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw InvariantError(field, "expected string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvariantError(field, "expected string");
  return it->get<std::string>();
}

CharSpan span_from_json(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
    throw InvariantError(field, "expected [start, end] of non-negative integers");
  }
  return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
}

std::uint32_t require_index(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number_unsigned()) throw InvariantError(field, "expected non-negative integer");
  return v.get<std::uint32_t>();
}

}  // namespace

json to_json(const UnitRef& ref) {
  return {{"trace_id", ref.trace_id}, {"level", to_string(ref.level)}, {"index", ref.index}};
}

UnitRef unit_ref_from_json(const json& j) {
  if (!j.is_object()) throw InvariantError("unit_ref", "expected object");
  UnitRef ref;
  ref.trace_id = require_string(j, "trace_id");
  const auto level = level_from_string(require_string(j, "level"));
  if (!level) throw InvariantError("level", "expected 'paragraph' or 'sentence'");
  ref.level = *level;
  ref.index = require_index(j, "index");
  return ref;
}

json to_json(const SatItem& item) {
  json j = {{"record", "item"},
            {"question_id", item.question_id},
            {"assessment", item.assessment},
            {"test", item.test},
            {"domain", item.domain},
            {"skill", item.skill},
            {"difficulty", to_string(item.difficulty)},
            {"item_stem", item.item_stem},
            {"question", item.question},
            {"rationale", item.rationale}};
  if (!item.choices.empty()) j["choices"] = item.choices;
  if (item.table) j["table"] = *item.table;
  if (!item.figure.is_null()) j["figure"] = item.figure;
  if (!item.extra.empty()) j["extra"] = item.extra;
  return j;
}

namespace {

// Question-bank field name -> canonical field name.
const std::map<std::string, std::string>& sat_field_aliases() {
  static const std::map<std::string, std::string> kAliases{
      {"Question ID", "question_id"},
      {"Assessment", "assessment"},
      {"Test", "test"},
      {"Domain", "domain"},
      {"Skill", "skill"},
      {"Question Difficulty", "difficulty"},
      {"Item Stem", "item_stem"},
      {"Question", "question"},
      {"Choice A", "choice_a"},
      {"Choice B", "choice_b"},
      {"Choice C", "choice_c"},
      {"Choice D", "choice_d"},
      {"Correct Answer Rationale", "rationale"},
      {"Table", "table"},
      {"Figure", "figure"},
  };
  return kAliases;
}

const std::set<std::string>& canonical_sat_fields() {
  static const std::set<std::string> kFields{
      "question_id", "assessment", "test",     "domain",   "skill",    "difficulty",
      "item_stem",   "question",   "choice_a", "choice_b", "choice_c", "choice_d",
      "choices",     "rationale",  "table",    "figure",   "extra",    "record"};
  return kFields;
}

std::string scalar_text(const json& v, const char* field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw InvariantError(field, "expected string");
}

}  // namespace

SatItem sat_item_from_json(const json& raw) {
  if (!raw.is_object()) throw InvariantError("record", "expected object");
  json j = json::object();
  json extra = raw.contains("extra") && raw["extra"].is_object() ? raw["extra"] : json::object();
  for (const auto& [key, value] : raw.items()) {
    const auto alias = sat_field_aliases().find(key);
    if (alias != sat_field_aliases().end()) {
      j[alias->second] = value;
    } else if (canonical_sat_fields().count(key)) {
      if (key != "extra") j[key] = value;
    } else {
      extra[key] = value;
    }
  }

  auto text = [&](const char* field, bool required) -> std::string {
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
      if (required) throw InvariantError(field, "missing field");
      return {};
    }
    return scalar_text(*it, field);
  };

  SatItem item;
  item.question_id = text("question_id", true);
  item.assessment = text("assessment", false);
  item.test = text("test", false);
  item.domain = text("domain", true);
  item.skill = text("skill", true);
  const auto difficulty = difficulty_from_string(text("difficulty", true));
  if (!difficulty) throw InvariantError("difficulty", "expected easy, medium or hard");
  item.difficulty = *difficulty;
  item.item_stem = text("item_stem", false);
  item.question = text("question", true);
  item.rationale = text("rationale", false);

  if (j.contains("choices") && j["choices"].is_object()) {
    for (const auto& [k, v] : j["choices"].items()) item.choices[k] = scalar_text(v, "choices");
  }
  static constexpr std::pair<const char*, const char*> kChoiceFields[] = {
      {"choice_a", "A"}, {"choice_b", "B"}, {"choice_c", "C"}, {"choice_d", "D"}};
  for (const auto& [field, key] : kChoiceFields) {
    const auto it = j.find(field);
    if (it != j.end() && !it->is_null() && !(it->is_string() && it->get<std::string>().empty())) {
      item.choices[key] = scalar_text(*it, field);
    }
  }
  if (!item.choices.empty()) {
    for (const char* key : {"A", "B", "C", "D"}) {
      if (!item.choices.count(key)) {
        throw InvariantError(std::string("choice_") + static_cast<char>(key[0] - 'A' + 'a'),
                             "missing field (multiple-choice items need all four choices)");
      }
    }
  }
  if (auto t = j.find("table"); t != j.end() && !t->is_null()) {
    item.table = t->is_string() ? t->get<std::string>() : t->dump();
  }
  if (auto f = j.find("figure"); f != j.end()) item.figure = *f;
  item.extra = std::move(extra);
  return item;
}

std::vector<SatItem> parse_sat_items(const std::string& text, const std::string& source) {
  std::vector<std::pair<std::size_t, json>> records;  // (line or 0, record)
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  if (text[first] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(source, 0, std::string("malformed JSON: ") + e.what());
    }
    for (auto& r : arr) records.emplace_back(0, std::move(r));
  } else {
    for (const auto& [line, s] : split_lines(text)) records.emplace_back(line, parse_line(source, line, s));
  }

  std::vector<SatItem> items;
  items.reserve(records.size());
  for (std::size_t ordinal = 0; ordinal < records.size(); ++ordinal) {
    try {
      items.push_back(sat_item_from_json(records[ordinal].second));
    } catch (const InvariantError& e) {
      throw ParseError(source, records[ordinal].first,
                       "record " + std::to_string(ordinal) + ": " + e.what());
    }
  }

  std::map<std::string, int> counts;
  for (const auto& i : items) ++counts[i.question_id];
  std::string dups;
  for (const auto& [id, n] : counts) {
    if (n > 1) dups += (dups.empty() ? "" : ", ") + id;
  }
  if (!dups.empty()) throw ParseError(source, 0, "duplicate question_id: " + dups);
  return items;
}

std::vector<SatItem> ingest_sat_items(const std::filesystem::path& path) {
  return parse_sat_items(read_file(path), path.string());
}

json to_json(const Trace& trace) {
  json paragraphs = json::array();
  for (const auto& p : trace.paragraphs) {
    json sentences = json::array();
    for (const auto& s : p.sentences) {
      json js = {{"index", s.index},
                 {"global_index", s.global_index},
                 {"char_span", {s.char_span.start, s.char_span.end}},
                 {"text", s.text}};
      if (s.label) js["label"] = to_string(*s.label);
      sentences.push_back(std::move(js));
    }
    json jp = {{"index", p.index},
               {"char_span", {p.char_span.start, p.char_span.end}},
               {"sentences", std::move(sentences)}};
    if (p.label) jp["label"] = to_string(*p.label);
    paragraphs.push_back(std::move(jp));
  }
  json j = {{"record", "trace"},
            {"trace_id", trace.trace_id},
            {"raw_text", trace.raw_text},
            {"paragraphs", std::move(paragraphs)}};
  if (trace.question_id) j["question_id"] = *trace.question_id;
  if (trace.segmenter) {
    j["segmenter"] = {{"version", trace.segmenter->version},
                      {"config_hash", trace.segmenter->config_hash}};
  }
  return j;
}

Trace trace_from_json(const json& j) {
  Trace t;
  t.trace_id = require_string(j, "trace_id");
  t.question_id = optional_string(j, "question_id");
  t.raw_text = require_string(j, "raw_text");
  if (auto s = j.find("segmenter"); s != j.end() && !s->is_null()) {
    t.segmenter = SegmenterStamp{require_string(*s, "version"), require_string(*s, "config_hash")};
  }
  const json& paragraphs = require(j, "paragraphs");
  if (!paragraphs.is_array()) throw InvariantError("paragraphs", "expected array");
  for (const auto& jp : paragraphs) {
    Paragraph p;
    p.index = require_index(jp, "index");
    p.char_span = span_from_json(jp, "char_span");
    if (auto l = optional_string(jp, "label")) {
      p.label = paragraph_label_from_string(*l);
      if (!p.label) throw InvariantError("label", "'" + *l + "' is not a paragraph label");
    }
    for (const auto& js : require(jp, "sentences")) {
      Sentence s;
      s.index = require_index(js, "index");
      s.global_index = require_index(js, "global_index");
      s.char_span = span_from_json(js, "char_span");
      s.text = require_string(js, "text");
      if (auto l = optional_string(js, "label")) {
        s.label = episode_label_from_string(*l);
        if (!s.label) throw InvariantError("label", "'" + *l + "' is not a sentence label");
      }
      p.sentences.push_back(std::move(s));
    }
    t.paragraphs.push_back(std::move(p));
  }
  return t;
}

json to_json(const Annotation& a) {
  json j = {{"record", "annotation"},
            {"unit_ref", to_json(a.unit)},
            {"label", to_string(a.label)},
            {"annotator_id", a.annotator_id},
            {"source", to_string(a.source)},
            {"timestamp", a.timestamp}};
  if (a.model_id) j["model_id"] = *a.model_id;
  if (a.prompt_variant) j["prompt_variant"] = to_string(*a.prompt_variant);
  return j;
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  a.unit = unit_ref_from_json(require(j, "unit_ref"));
  const std::string label = require_string(j, "label");
  const auto parsed = label_from_string(a.unit.level, label);
  if (!parsed) {
    throw InvariantError("label", "'" + label + "' is not a " + std::string(to_string(a.unit.level)) +
                                      " label");
  }
  a.label = *parsed;
  a.annotator_id = require_string(j, "annotator_id");
  const auto source = source_from_string(require_string(j, "source"));
  if (!source) throw InvariantError("source", "expected human, llm or classifier");
  a.source = *source;
  a.model_id = optional_string(j, "model_id");
  if (auto v = optional_string(j, "prompt_variant")) {
    a.prompt_variant = prompt_variant_from_string(*v);
    if (!a.prompt_variant) throw InvariantError("prompt_variant", "unknown variant '" + *v + "'");
  }
  a.timestamp = require_string(j, "timestamp");
  return a;
}

bool is_valid_set_name(const std::string& name) {
  if (name.empty() || name.front() == '.') return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::filesystem::path annotation_set_path(const std::filesystem::path& corpus_path,
                                          const std::string& set_name) {
  return corpus_path.parent_path() / ("annotations." + set_name + ".jsonl");
}

std::string annotation_set_header(const std::string& set_name) {
  json header = {{"record", "header"},
                 {"format", kAnnotationFormat},
                 {"schema_version", kSchemaVersion},
                 {"set", set_name}};
  return header.dump() + "\n";
}

std::string serialize_annotation_set(const AnnotationSet& set) {
  std::string out = annotation_set_header(set.name());
  for (const auto& e : set.events()) out += to_json(e).dump() + "\n";
  return out;
}

namespace {

void check_header(const json& header, const std::string& source, const char* format) {
  if (!header.is_object() || header.value("record", "") != "header") {
    throw ParseError(source, 1, "missing header record");
  }
  if (header.value("format", "") != format) {
    throw ParseError(source, 1, std::string("expected format ") + format);
  }
  const auto it = header.find("schema_version");
  if (it == header.end() || !it->is_number_integer()) {
    throw ParseError(source, 1, "header has no schema_version");
  }
  if (it->get<int>() != kSchemaVersion) {
    throw ParseError(source, 1,
                     "schema_version mismatch: expected " + std::to_string(kSchemaVersion) +
                         ", found " + std::to_string(it->get<int>()));
  }
}

}  // namespace

AnnotationSet parse_annotation_set(const std::string& text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(source, 1, "empty annotation file");
  const json header = parse_line(source, lines[0].first, lines[0].second);
  check_header(header, source, kAnnotationFormat);
  const auto name = header.find("set");
  if (name == header.end() || !name->is_string()) throw ParseError(source, 1, "header has no set name");
  AnnotationSet set(name->get<std::string>());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line, s] = lines[i];
    const json j = parse_line(source, line, s);
    try {
      set.append(annotation_from_json(j));
    } catch (const InvariantError& e) {
      throw ParseError(source, line, e.what());
    }
  }
  return set;
}

void save_annotation_set(const AnnotationSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_annotation_set(set));
}

AnnotationSet load_annotation_set(const std::filesystem::path& path) {
  return parse_annotation_set(read_file(path), path.string());
}

void save_corpus(const AnnotatedCorpus& corpus, const std::filesystem::path& path) {
  json set_names = json::array();
  for (const auto& [name, set] : corpus.annotation_sets) {
    if (!is_valid_set_name(name)) throw InvariantError("annotation_sets", "invalid set name '" + name + "'");
    set_names.push_back(name);
  }
  json header = {{"record", "header"},
                 {"format", kCorpusFormat},
                 {"schema_version", kSchemaVersion},
                 {"annotation_sets", std::move(set_names)}};
  std::string out = header.dump() + "\n";
  for (const auto& item : corpus.items) out += to_json(item).dump() + "\n";
  for (const auto& trace : corpus.traces) out += to_json(trace).dump() + "\n";
  write_file_atomic(path, out);
  for (const auto& [name, set] : corpus.annotation_sets) {
    save_annotation_set(set, annotation_set_path(path, name));
  }
}

AnnotatedCorpus load_corpus(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(source, 1, "empty corpus file");
  const json header = parse_line(source, lines[0].first, lines[0].second);
  check_header(header, source, kCorpusFormat);

  AnnotatedCorpus corpus;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line, s] = lines[i];
    const json j = parse_line(source, line, s);
    const std::string kind = j.is_object() ? j.value("record", "") : "";
    try {
      if (kind == "item") {
        corpus.items.push_back(sat_item_from_json(j));
      } else if (kind == "trace") {
        corpus.traces.push_back(trace_from_json(j));
      } else {
        throw InvariantError("record", "unknown record type '" + kind + "'");
      }
    } catch (const InvariantError& e) {
      throw ParseError(source, line, e.what());
    }
  }
  for (const auto& name : header.value("annotation_sets", json::array())) {
    const std::string set_name = name.get<std::string>();
    AnnotationSet set = load_annotation_set(annotation_set_path(path, set_name));
    if (set.name() != set_name) {
      throw ParseError(annotation_set_path(path, set_name).string(), 1,
                       "set name '" + set.name() + "' does not match corpus header '" + set_name + "'");
    }
    corpus.annotation_sets.emplace(set_name, std::move(set));
  }
  return corpus;
}

}  // namespace episodekit
