#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/labels.hpp"

namespace episodekit {

inline constexpr int kSchemaVersion = 1;

enum class Difficulty : std::uint8_t { Easy, Medium, Hard };

std::string_view to_string(Difficulty d);
// Case-insensitive.
std::optional<Difficulty> difficulty_from_string(std::string_view s);

// The 19 skill categories of the SAT math question bank.
const std::vector<std::string>& known_sat_skills();

struct SatItem {
  std::string question_id;
  std::string assessment;
  std::string test;
  std::string domain;
  std::string skill;
  Difficulty difficulty = Difficulty::Medium;
  std::string item_stem;
  std::string question;
  // Keys "A".."D"; empty for student-produced response items.
  std::map<std::string, std::string> choices;
  std::string rationale;
  std::optional<std::string> table;
  nlohmann::json figure;  // opaque; null when absent
  nlohmann::json extra = nlohmann::json::object();  // unknown input fields, verbatim

  bool operator==(const SatItem&) const = default;
};

// Half-open [start, end) in Unicode scalar offsets.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const CharSpan&) const = default;
};

struct Sentence {
  std::uint32_t index = 0;         // within paragraph
  std::uint32_t global_index = 0;  // within trace
  CharSpan char_span;
  std::string text;
  std::optional<EpisodeLabel> label;

  bool operator==(const Sentence&) const = default;
};

struct Paragraph {
  std::uint32_t index = 0;
  CharSpan char_span;
  std::vector<Sentence> sentences;
  std::optional<ParagraphLabel> label;

  bool operator==(const Paragraph&) const = default;
};

// Identity of the segmentation rules that produced a trace's spans.
struct SegmenterStamp {
  std::string version;
  std::string config_hash;

  bool operator==(const SegmenterStamp&) const = default;
};

struct Trace {
  std::string trace_id;
  std::optional<std::string> question_id;
  std::string raw_text;  // UTF-8
  std::vector<Paragraph> paragraphs;
  std::optional<SegmenterStamp> segmenter;

  std::size_t sentence_count() const;
  // Sentence by trace-wide global index, or nullptr.
  const Sentence* sentence(std::uint32_t global_index) const;
  // Paragraph enclosing a global sentence index, or nullptr.
  const Paragraph* paragraph_of(std::uint32_t global_index) const;

  bool operator==(const Trace&) const = default;
};

struct Annotation {
  UnitRef unit;
  AnyLabel label = EpisodeLabel::Read;
  std::string annotator_id;
  Source source = Source::Human;
  std::optional<std::string> model_id;
  std::optional<PromptVariant> prompt_variant;
  std::string timestamp;  // UTC, see timeutil.hpp

  bool operator==(const Annotation&) const = default;
};

// Append-only annotation history plus the latest-label view derived from it.
// Resubmitting (unit, annotator) replaces the latest label; the event stays.
class AnnotationSet {
 public:
  AnnotationSet() = default;
  explicit AnnotationSet(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  // Throws InvariantError when the label arity does not match the unit level.
  void append(Annotation annotation);

  const std::vector<Annotation>& events() const { return events_; }

  // Latest annotation per (unit, annotator), ordered by (unit, annotator).
  std::vector<Annotation> latest() const;

  // Latest label per unit at `level` across all annotators in the set (most
  // recent event wins).
  std::map<UnitRef, AnyLabel> unit_labels(Level level) const;

  const Annotation* find(const UnitRef& unit, const std::string& annotator_id) const;

  bool empty() const { return events_.empty(); }

  // Sets compare by name and full event history.
  bool operator==(const AnnotationSet& other) const {
    return name_ == other.name_ && events_ == other.events_;
  }

 private:
  std::string name_;
  std::vector<Annotation> events_;
  std::map<std::pair<UnitRef, std::string>, std::size_t> latest_;
};

struct AnnotatedCorpus {
  std::vector<SatItem> items;
  std::vector<Trace> traces;
  std::map<std::string, AnnotationSet> annotation_sets;

  const Trace* find_trace(const std::string& trace_id) const;
  const SatItem* find_item(const std::string& question_id) const;

  // Units of every trace at `level`, in document order.
  std::vector<UnitRef> units(Level level) const;
  // Text of a unit, or nullopt when it does not resolve.
  std::optional<std::string> unit_text(const UnitRef& ref) const;
  bool resolves(const UnitRef& ref) const;

  bool operator==(const AnnotatedCorpus&) const = default;
};

// The raw_text slice covered by a paragraph.
std::string paragraph_text(const Trace& trace, const Paragraph& paragraph);

// Labels stored on the units themselves (e.g. a released gold corpus) as an
// annotation set named `name`.
AnnotationSet embedded_labels(const AnnotatedCorpus& corpus, const std::string& name,
                              const std::string& annotator_id = "embedded");

enum class Severity : std::uint8_t { Error, Warning };

struct Finding {
  Severity severity = Severity::Error;
  std::string where;  // trace id, item id or set name
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  std::size_t traces = 0;
  std::size_t paragraphs = 0;
  std::size_t sentences = 0;
  std::size_t items = 0;
  // Units left without an embedded label in traces that are otherwise labeled.
  std::vector<UnitRef> unlabeled_units;

  bool ok() const { return findings.empty(); }
};

ValidationReport validate_corpus(const AnnotatedCorpus& corpus);

}  // namespace episodekit
