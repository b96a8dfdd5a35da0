#include "episodekit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "episodekit/error.hpp"
#include "episodekit/timeutil.hpp"
#include "episodekit/utf8.hpp"

namespace episodekit {

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "medium";
}

std::optional<Difficulty> difficulty_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "easy") return Difficulty::Easy;
  if (lower == "medium") return Difficulty::Medium;
  if (lower == "hard") return Difficulty::Hard;
  return std::nullopt;
}

const std::vector<std::string>& known_sat_skills() {
  static const std::vector<std::string> kSkills{
      // Algebra
      "Linear equations in one variable", "Linear equations in two variables", "Linear functions",
      "Systems of two linear equations",
      // Advanced Math
      "Equivalent expressions", "Nonlinear equations in one variable",
      "Systems of equations in two variables", "Nonlinear relationships", "Functions",
      // Problem Solving and Data Analysis
      "Ratios, rates, and proportions", "Percents", "Units", "Tables and data inferences",
      "Data collection and conclusions", "Probability and conditional probability",
      // Geometry and Trigonometry
      "Area and volume", "Lines, angles, and triangles", "Right triangles and trigonometry",
      "Circles"};
  return kSkills;
}

std::size_t Trace::sentence_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.sentences.size();
  return n;
}

const Sentence* Trace::sentence(std::uint32_t global_index) const {
  for (const auto& p : paragraphs) {
    for (const auto& s : p.sentences) {
      if (s.global_index == global_index) return &s;
    }
  }
  return nullptr;
}

const Paragraph* Trace::paragraph_of(std::uint32_t global_index) const {
  for (const auto& p : paragraphs) {
    for (const auto& s : p.sentences) {
      if (s.global_index == global_index) return &p;
    }
  }
  return nullptr;
}

void AnnotationSet::append(Annotation annotation) {
  if (level_of(annotation.label) != annotation.unit.level) {
    throw InvariantError("label", "label '" + to_string(annotation.label) + "' does not match level " +
                                      std::string(to_string(annotation.unit.level)));
  }
  auto key = std::make_pair(annotation.unit, annotation.annotator_id);
  events_.push_back(std::move(annotation));
  latest_[std::move(key)] = events_.size() - 1;
}

std::vector<Annotation> AnnotationSet::latest() const {
  std::vector<Annotation> out;
  out.reserve(latest_.size());
  for (const auto& [key, idx] : latest_) out.push_back(events_[idx]);
  return out;
}

std::map<UnitRef, AnyLabel> AnnotationSet::unit_labels(Level level) const {
  // Walking events in log order makes the most recent event win.
  std::map<UnitRef, AnyLabel> out;
  for (const auto& e : events_) {
    if (e.unit.level == level) out.insert_or_assign(e.unit, e.label);
  }
  return out;
}

const Annotation* AnnotationSet::find(const UnitRef& unit, const std::string& annotator_id) const {
  const auto it = latest_.find({unit, annotator_id});
  return it == latest_.end() ? nullptr : &events_[it->second];
}

const Trace* AnnotatedCorpus::find_trace(const std::string& trace_id) const {
  for (const auto& t : traces) {
    if (t.trace_id == trace_id) return &t;
  }
  return nullptr;
}

const SatItem* AnnotatedCorpus::find_item(const std::string& question_id) const {
  for (const auto& i : items) {
    if (i.question_id == question_id) return &i;
  }
  return nullptr;
}

std::vector<UnitRef> AnnotatedCorpus::units(Level level) const {
  std::vector<UnitRef> out;
  for (const auto& t : traces) {
    for (const auto& p : t.paragraphs) {
      if (level == Level::Paragraph) {
        out.push_back({t.trace_id, level, p.index});
        continue;
      }
      for (const auto& s : p.sentences) out.push_back({t.trace_id, level, s.global_index});
    }
  }
  return out;
}

std::optional<std::string> AnnotatedCorpus::unit_text(const UnitRef& ref) const {
  const Trace* t = find_trace(ref.trace_id);
  if (!t) return std::nullopt;
  if (ref.level == Level::Sentence) {
    const Sentence* s = t->sentence(ref.index);
    if (!s) return std::nullopt;
    return s->text;
  }
  if (ref.index >= t->paragraphs.size()) return std::nullopt;
  return paragraph_text(*t, t->paragraphs[ref.index]);
}

std::string paragraph_text(const Trace& trace, const Paragraph& paragraph) {
  return utf8::slice(trace.raw_text, paragraph.char_span.start, paragraph.char_span.end);
}

bool AnnotatedCorpus::resolves(const UnitRef& ref) const {
  const Trace* t = find_trace(ref.trace_id);
  if (!t) return false;
  if (ref.level == Level::Paragraph) return ref.index < t->paragraphs.size();
  return t->sentence(ref.index) != nullptr;
}

AnnotationSet embedded_labels(const AnnotatedCorpus& corpus, const std::string& name,
                              const std::string& annotator_id) {
  AnnotationSet set(name);
  for (const auto& t : corpus.traces) {
    for (const auto& p : t.paragraphs) {
      if (p.label) {
        set.append({{t.trace_id, Level::Paragraph, p.index}, *p.label, annotator_id, Source::Human,
                    std::nullopt, std::nullopt, "1970-01-01T00:00:00Z"});
      }
    }
    for (const auto& p : t.paragraphs) {
      for (const auto& s : p.sentences) {
        if (s.label) {
          set.append({{t.trace_id, Level::Sentence, s.global_index}, *s.label, annotator_id,
                      Source::Human, std::nullopt, std::nullopt, "1970-01-01T00:00:00Z"});
        }
      }
    }
  }
  return set;
}

namespace {

class Validator {
 public:
  explicit Validator(ValidationReport& report) : report_(report) {}

  void error(const std::string& where, std::string message) {
    report_.findings.push_back({Severity::Error, where, std::move(message)});
  }

  void check_items(const std::vector<SatItem>& items) {
    std::map<std::string, int> seen;
    const auto& skills = known_sat_skills();
    for (const auto& item : items) {
      if (item.question_id.empty()) error("item", "empty question_id");
      if (++seen[item.question_id] == 2) error(item.question_id, "duplicate question_id");
      if (!item.choices.empty()) {
        for (const char* key : {"A", "B", "C", "D"}) {
          if (!item.choices.count(key)) {
            error(item.question_id, std::string("choices present but choice ") + key + " missing");
          }
        }
        if (item.choices.size() > 4) error(item.question_id, "choices has keys outside A-D");
      }
      if (std::find(skills.begin(), skills.end(), item.skill) == skills.end()) {
        error(item.question_id, "unknown skill '" + item.skill + "'");
      }
    }
  }

  void check_trace(const Trace& t) {
    std::u32string text;
    try {
      text = utf8::decode(t.raw_text);
    } catch (const Error& e) {
      error(t.trace_id, std::string("raw_text: ") + e.what());
      return;
    }
    const std::string& id = t.trace_id;
    std::vector<bool> covered(text.size(), false);
    std::size_t prev_end = 0;
    std::uint32_t global = 0;
    for (std::size_t pi = 0; pi < t.paragraphs.size(); ++pi) {
      const Paragraph& p = t.paragraphs[pi];
      const std::string pwhere = id + " paragraph " + std::to_string(pi);
      if (p.index != pi) error(id, "paragraph index " + std::to_string(p.index) + " at position " + std::to_string(pi));
      if (p.char_span.start >= p.char_span.end || p.char_span.end > text.size()) {
        error(pwhere, "char_span out of range or empty");
        continue;
      }
      if (pi > 0 && p.char_span.start < prev_end) {
        error(id, "paragraph spans " + std::to_string(pi - 1) + " and " + std::to_string(pi) +
                      " overlap or are out of order");
      }
      prev_end = std::max(prev_end, p.char_span.end);
      for (std::size_t c = p.char_span.start; c < p.char_span.end; ++c) covered[c] = true;

      std::size_t sprev_end = p.char_span.start;
      std::vector<bool> scovered(p.char_span.size(), false);
      for (std::size_t si = 0; si < p.sentences.size(); ++si) {
        const Sentence& s = p.sentences[si];
        const std::string swhere = id + " sentence " + std::to_string(s.global_index);
        if (s.index != si) error(swhere, "index " + std::to_string(s.index) + " at position " + std::to_string(si));
        if (s.global_index != global) {
          error(swhere, "global_index expected " + std::to_string(global));
        }
        ++global;
        if (s.char_span.start >= s.char_span.end || s.char_span.start < p.char_span.start ||
            s.char_span.end > p.char_span.end) {
          error(swhere, "char_span not contained in paragraph " + std::to_string(pi));
          continue;
        }
        if (s.char_span.start < sprev_end) {
          error(id, "sentence spans " + std::to_string(s.global_index == 0 ? 0 : s.global_index - 1) +
                        " and " + std::to_string(s.global_index) + " overlap or are out of order");
        }
        sprev_end = std::max(sprev_end, s.char_span.end);
        for (std::size_t c = s.char_span.start; c < s.char_span.end; ++c) {
          scovered[c - p.char_span.start] = true;
        }
        const auto slice = utf8::encode(
            std::u32string_view(text).substr(s.char_span.start, s.char_span.size()));
        if (slice != s.text) error(swhere, "text differs from raw_text slice");
      }
      for (std::size_t c = 0; c < scovered.size(); ++c) {
        if (!scovered[c] && !utf8::is_space(text[p.char_span.start + c])) {
          error(pwhere, "non-whitespace character at offset " +
                            std::to_string(p.char_span.start + c) + " outside every sentence span");
          break;
        }
      }
    }
    for (std::size_t c = 0; c < covered.size(); ++c) {
      if (!covered[c] && !utf8::is_space(text[c])) {
        error(id, "non-whitespace character at offset " + std::to_string(c) +
                      " outside every paragraph span");
        break;
      }
    }
  }

  void note_unlabeled(const Trace& t) {
    std::vector<UnitRef> missing;
    bool any = false;
    for (const auto& p : t.paragraphs) {
      if (p.label) any = true; else missing.push_back({t.trace_id, Level::Paragraph, p.index});
    }
    for (const auto& p : t.paragraphs) {
      for (const auto& s : p.sentences) {
        if (s.label) any = true; else missing.push_back({t.trace_id, Level::Sentence, s.global_index});
      }
    }
    if (any) {
      report_.unlabeled_units.insert(report_.unlabeled_units.end(), missing.begin(), missing.end());
    }
  }

 private:
  ValidationReport& report_;
};

}  // namespace

ValidationReport validate_corpus(const AnnotatedCorpus& corpus) {
  ValidationReport report;
  Validator v(report);
  v.check_items(corpus.items);
  report.items = corpus.items.size();

  std::set<std::string> ids;
  for (const auto& t : corpus.traces) {
    if (t.trace_id.empty()) v.error("trace", "empty trace_id");
    if (!ids.insert(t.trace_id).second) v.error(t.trace_id, "duplicate trace_id");
    v.check_trace(t);
    v.note_unlabeled(t);
    ++report.traces;
    report.paragraphs += t.paragraphs.size();
    report.sentences += t.sentence_count();
  }

  for (const auto& [name, set] : corpus.annotation_sets) {
    if (name != set.name()) v.error(name, "set stored under a different name '" + set.name() + "'");
    for (const auto& e : set.events()) {
      if (!corpus.resolves(e.unit)) {
        v.error(name, "annotation for unknown unit " + to_string(e.unit));
      }
      if (level_of(e.label) != e.unit.level) {
        v.error(name, "label arity does not match level for " + to_string(e.unit));
      }
      if (!is_utc_timestamp(e.timestamp)) {
        v.error(name, "timestamp '" + e.timestamp + "' is not a UTC instant");
      }
    }
  }
  return report;
}

}  // namespace episodekit
