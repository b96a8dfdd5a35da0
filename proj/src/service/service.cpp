#include "episodekit/service/service.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "episodekit/corpus_io.hpp"
#include "episodekit/dynamics.hpp"
#include "episodekit/fileutil.hpp"
#include "episodekit/metrics.hpp"
#include "episodekit/timeutil.hpp"

namespace episodekit::service {

using nlohmann::json;

std::map<std::string, std::string> load_tokens(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  if (!j.is_object()) throw ParseError(path.string(), 0, "expected an object of token -> annotator id");
  std::map<std::string, std::string> out;
  for (const auto& [token, id] : j.items()) {
    if (!id.is_string() || !is_valid_set_name(id.get<std::string>())) {
      throw ParseError(path.string(), 0, "annotator id for a token must be a valid set name");
    }
    out.emplace(token, id.get<std::string>());
  }
  return out;
}

std::string adjudication_set_name(const std::string& a, const std::string& b) {
  return "adjudicated." + std::min(a, b) + "." + std::max(a, b);
}

AnnotationService::AnnotationService(AnnotatedCorpus corpus, std::filesystem::path corpus_path,
                                     std::map<std::string, std::string> tokens)
    : corpus_(std::move(corpus)), corpus_path_(std::move(corpus_path)), tokens_(std::move(tokens)) {}

std::unique_ptr<AnnotationService> AnnotationService::open(const std::filesystem::path& corpus_path,
                                                           std::map<std::string, std::string> tokens) {
  const auto dir = corpus_path.has_parent_path() ? corpus_path.parent_path() : std::filesystem::path(".");
  static const std::regex pattern(R"(annotations\.(.+)\.jsonl)");
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (std::regex_match(entry.path().filename().string(), pattern)) logs.push_back(entry.path());
  }
  // Only newline-terminated records were acknowledged. Cut a torn tail off
  // before anything reads or appends to the log.
  for (const auto& path : logs) {
    const std::string text = read_file(path);
    if (text.empty() || text.back() == '\n') continue;
    const auto keep = text.find_last_of('\n');
    std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
  }

  AnnotatedCorpus corpus = load_corpus(corpus_path);
  for (const auto& path : logs) {
    std::smatch m;
    const std::string fname = path.filename().string();
    std::regex_match(fname, m, pattern);
    if (corpus.annotation_sets.count(m[1].str())) continue;
    const std::string text = read_file(path);
    if (text.empty()) continue;
    AnnotationSet set = parse_annotation_set(text, path.string());
    corpus.annotation_sets.emplace(set.name(), std::move(set));
  }
  const auto report = validate_corpus(corpus);
  for (const auto& f : report.findings) {
    if (f.severity == Severity::Error) throw Error("corpus does not validate: " + f.where + ": " + f.message);
  }
  return std::make_unique<AnnotationService>(std::move(corpus), corpus_path, std::move(tokens));
}

std::string AnnotationService::authenticate(std::string_view authorization) const {
  constexpr std::string_view prefix = "Bearer ";
  if (authorization.substr(0, prefix.size()) == prefix) {
    const auto it = tokens_.find(std::string(authorization.substr(prefix.size())));
    if (it != tokens_.end()) return it->second;
  }
  throw ServiceError(401, "unauthorized", "missing or unknown bearer token");
}

json AnnotationService::list_traces() const {
  std::shared_lock lock(mutex_);
  json out = json::array();
  for (const auto& t : corpus_.traces) {
    json j = {{"trace_id", t.trace_id},
              {"paragraphs", t.paragraphs.size()},
              {"sentences", t.sentence_count()}};
    j["question_id"] = t.question_id ? json(*t.question_id) : json(nullptr);
    out.push_back(std::move(j));
  }
  return {{"traces", out}};
}

namespace {

json label_or_null(const AnnotationSet* set, const UnitRef& u, const std::string& annotator) {
  if (!set) return nullptr;
  const Annotation* a = set->find(u, annotator);
  return a ? json(to_string(a->label)) : json(nullptr);
}

std::vector<std::uint32_t> unlabeled_paragraphs(const Trace& t, const AnnotationSet* set, const std::string& annotator) {
  std::vector<std::uint32_t> out;
  for (const auto& p : t.paragraphs) {
    if (!set || !set->find({t.trace_id, Level::Paragraph, p.index}, annotator)) out.push_back(p.index);
  }
  return out;
}

UnitRef parse_unit(const json& j) {
  if (j.is_string()) {
    if (auto u = unit_ref_from_string(j.get<std::string>())) return *u;
    throw ServiceError(422, "invalid_field", "malformed unit_ref", {{"field", "unit_ref"}});
  }
  try {
    return unit_ref_from_json(j);
  } catch (const std::exception& e) {
    throw ServiceError(422, "invalid_field", std::string("malformed unit_ref: ") + e.what(), {{"field", "unit_ref"}});
  }
}

}  // namespace

json AnnotationService::get_trace(const std::string& trace_id, const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  const Trace* t = corpus_.find_trace(trace_id);
  if (!t) throw ServiceError(404, "not_found", "no trace '" + trace_id + "'");
  const auto it = corpus_.annotation_sets.find(annotator);
  const AnnotationSet* mine = it == corpus_.annotation_sets.end() ? nullptr : &it->second;

  json paragraphs = json::array();
  std::size_t para_done = 0;
  std::size_t sent_done = 0;
  for (const auto& p : t->paragraphs) {
    json sentences = json::array();
    for (const auto& s : p.sentences) {
      json label = label_or_null(mine, {t->trace_id, Level::Sentence, s.global_index}, annotator);
      if (!label.is_null()) ++sent_done;
      sentences.push_back({{"index", s.index},
                           {"global_index", s.global_index},
                           {"char_span", {s.char_span.start, s.char_span.end}},
                           {"text", s.text},
                           {"label", std::move(label)}});
    }
    json label = label_or_null(mine, {t->trace_id, Level::Paragraph, p.index}, annotator);
    if (!label.is_null()) ++para_done;
    paragraphs.push_back({{"index", p.index},
                          {"char_span", {p.char_span.start, p.char_span.end}},
                          {"text", paragraph_text(*t, p)},
                          {"label", std::move(label)},
                          {"sentences", std::move(sentences)}});
  }
  const bool all_paragraphs = para_done == t->paragraphs.size();
  return {{"trace_id", t->trace_id},
          {"question_id", t->question_id ? json(*t->question_id) : json(nullptr)},
          {"annotator_id", annotator},
          {"phase", all_paragraphs ? "sentence_pass" : "paragraph_pass"},
          {"progress",
           {{"paragraphs_labeled", para_done},
            {"paragraphs", t->paragraphs.size()},
            {"sentences_labeled", sent_done},
            {"sentences", t->sentence_count()}}},
          {"paragraphs", std::move(paragraphs)}};
}

void AnnotationService::append_event(const std::string& set_name, Annotation a) {
  // Caller holds the unique lock.
  auto it = corpus_.annotation_sets.find(set_name);
  AnnotationSet probe(set_name);
  probe.append(a);  // arity check before touching the log
  const auto path = annotation_set_path(corpus_path_, set_name);
  if (it == corpus_.annotation_sets.end() && !std::filesystem::exists(path)) {
    append_line_durable(path, annotation_set_header(set_name));
  }
  append_line_durable(path, to_json(a).dump());
  if (it == corpus_.annotation_sets.end()) it = corpus_.annotation_sets.emplace(set_name, AnnotationSet(set_name)).first;
  it->second.append(std::move(a));
}

json AnnotationService::submit(const std::string& annotator, const json& body) {
  if (!body.is_object()) throw ServiceError(400, "bad_request", "expected a JSON object");
  if (!body.contains("unit_ref")) throw ServiceError(422, "missing_field", "unit_ref is required", {{"field", "unit_ref"}});
  if (!body.contains("label") || !body["label"].is_string()) {
    throw ServiceError(422, "missing_field", "label is required", {{"field", "label"}});
  }
  const UnitRef unit = parse_unit(body["unit_ref"]);
  const std::string label_text = body["label"].get<std::string>();
  const bool override_sequencing = body.value("override_sequencing", false);

  std::unique_lock lock(mutex_);
  if (!corpus_.resolves(unit)) {
    throw ServiceError(404, "not_found", "unit " + to_string(unit) + " does not exist", {{"field", "unit_ref"}});
  }
  const auto label = label_from_string(unit.level, label_text);
  if (!label) {
    throw ServiceError(422, "label_arity_mismatch",
                       "'" + label_text + "' is not a " + std::string(to_string(unit.level)) + "-level label",
                       {{"field", "label"}, {"level", to_string(unit.level)}});
  }
  if (unit.level == Level::Sentence && !override_sequencing) {
    const auto it = corpus_.annotation_sets.find(annotator);
    const auto missing = unlabeled_paragraphs(*corpus_.find_trace(unit.trace_id),
                                              it == corpus_.annotation_sets.end() ? nullptr : &it->second, annotator);
    if (!missing.empty()) {
      throw ServiceError(409, "paragraphs_unlabeled",
                         "label every paragraph of the trace before its sentences",
                         {{"unlabeled_paragraphs", missing}, {"trace_id", unit.trace_id}});
    }
  }
  Annotation a;
  a.unit = unit;
  a.label = *label;
  a.annotator_id = annotator;
  a.source = Source::Human;
  a.timestamp = utc_now();
  append_event(annotator, a);
  const auto& set = corpus_.annotation_sets.at(annotator);
  return {{"set", annotator}, {"annotation", to_json(a)}, {"events", set.events().size()}};
}

const AnnotationSet& AnnotationService::require_set(const std::string& name) const {
  const auto it = corpus_.annotation_sets.find(name);
  if (it == corpus_.annotation_sets.end()) throw ServiceError(404, "not_found", "no annotation set '" + name + "'");
  return it->second;
}

json AnnotationService::annotations(const std::string& set_name) const {
  std::shared_lock lock(mutex_);
  const AnnotationSet& set = require_set(set_name);
  json latest = json::array();
  for (const auto& a : set.latest()) latest.push_back(to_json(a));
  return {{"set", set_name}, {"events", set.events().size()}, {"latest", latest}};
}

json AnnotationService::agreement(const std::string& a, const std::string& b, Level level) const {
  std::shared_lock lock(mutex_);
  const auto la = require_set(a).unit_labels(level);
  const auto lb = require_set(b).unit_labels(level);
  try {
    json out = metrics::to_json(metrics::agreement_report(la, lb, level));
    out["a"] = a;
    out["b"] = b;
    return out;
  } catch (const metrics::NoOverlap& e) {
    throw ServiceError(409, "no_overlap", e.what(), {{"a", a}, {"b", b}, {"level", to_string(level)}});
  }
}

json AnnotationService::disagreements(const std::string& a, const std::string& b, std::optional<Level> level,
                                      bool open_only) const {
  std::shared_lock lock(mutex_);
  const AnnotationSet& sa = require_set(a);
  const AnnotationSet& sb = require_set(b);
  const auto adj_it = corpus_.annotation_sets.find(adjudication_set_name(a, b));
  json out = json::array();
  for (Level l : {Level::Paragraph, Level::Sentence}) {
    if (level && *level != l) continue;
    const auto la = sa.unit_labels(l);
    const auto lb = sb.unit_labels(l);
    std::optional<std::map<UnitRef, AnyLabel>> final_labels;
    if (adj_it != corpus_.annotation_sets.end()) final_labels = adj_it->second.unit_labels(l);
    for (const auto& [unit, label_a] : la) {
      const auto it = lb.find(unit);
      if (it == lb.end() || it->second == label_a) continue;
      json d = {{"unit_ref", to_string(unit)},
                {"labels_by_annotator", {{a, to_string(label_a)}, {b, to_string(it->second)}}}};
      std::optional<AnyLabel> final_label;
      if (final_labels) {
        if (auto f = final_labels->find(unit); f != final_labels->end()) final_label = f->second;
      }
      d["status"] = final_label ? "adjudicated" : "open";
      d["final_label"] = final_label ? json(to_string(*final_label)) : json(nullptr);
      if (open_only && final_label) continue;
      out.push_back(std::move(d));
    }
  }
  return {{"a", a}, {"b", b}, {"disagreements", out}};
}

json AnnotationService::adjudicate(const std::string& annotator, const std::string& unit_text, const json& body) {
  if (!body.is_object()) throw ServiceError(400, "bad_request", "expected a JSON object");
  for (const char* f : {"a", "b", "label"}) {
    if (!body.contains(f) || !body[f].is_string()) {
      throw ServiceError(422, "missing_field", std::string(f) + " is required", {{"field", f}});
    }
  }
  const auto unit = unit_ref_from_string(unit_text);
  if (!unit) throw ServiceError(422, "invalid_field", "malformed unit reference", {{"field", "unit_ref"}});
  const std::string a = body["a"].get<std::string>();
  const std::string b = body["b"].get<std::string>();
  const auto label = label_from_string(unit->level, body["label"].get<std::string>());
  if (!label) {
    throw ServiceError(422, "label_arity_mismatch", "label does not match the unit level",
                       {{"field", "label"}, {"level", to_string(unit->level)}});
  }

  std::unique_lock lock(mutex_);
  const auto la = require_set(a).unit_labels(unit->level);
  const auto lb = require_set(b).unit_labels(unit->level);
  const auto ia = la.find(*unit);
  const auto ib = lb.find(*unit);
  if (ia == la.end() || ib == lb.end() || ia->second == ib->second) {
    throw ServiceError(404, "not_found", "no disagreement between " + a + " and " + b + " at " + unit_text);
  }
  Annotation ann;
  ann.unit = *unit;
  ann.label = *label;
  ann.annotator_id = annotator;
  ann.source = Source::Human;
  ann.timestamp = utc_now();
  const std::string set = adjudication_set_name(a, b);
  append_event(set, ann);
  return {{"unit_ref", unit_text},
          {"labels_by_annotator", {{a, to_string(ia->second)}, {b, to_string(ib->second)}}},
          {"status", "adjudicated"},
          {"final_label", to_string(*label)},
          {"set", set}};
}

json AnnotationService::transitions(const std::string& set, double alpha, Level level) const {
  std::shared_lock lock(mutex_);
  const auto labels = require_set(set).unit_labels(level);
  try {
    json out = dynamics::to_json(dynamics::transition_matrix(labels, corpus_, level, alpha));
    out["set"] = set;
    return out;
  } catch (const InvariantError& e) {
    throw ServiceError(422, "invalid_field", e.what(), {{"field", e.field()}});
  } catch (const Error& e) {
    throw ServiceError(409, "no_transitions", e.what());
  }
}

std::string AnnotationService::export_set(const std::string& set) const {
  std::shared_lock lock(mutex_);
  return serialize_annotation_set(require_set(set));
}

AnnotationSet AnnotationService::snapshot(const std::string& set) const {
  std::shared_lock lock(mutex_);
  return require_set(set);
}

}  // namespace episodekit::service
