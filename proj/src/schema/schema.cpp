#include "episodekit/schema.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "episodekit/fileutil.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/rng.hpp"

namespace episodekit::schema {

namespace assets {
extern const char* const kGuidebookParagraph;
extern const char* const kGuidebookSentence;
}  // namespace assets

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Alias {
  std::string_view word;  // lowercase, no punctuation
  Level level;
  std::size_t index;
};

// Canonical names are added from the label tables; these are the extras.
constexpr std::array<Alias, 15> kAliases{{
    {"impl", Level::Sentence, 3},         {"expl", Level::Sentence, 4},
    {"verif", Level::Sentence, 5},        {"monit", Level::Sentence, 6},
    {"implementation", Level::Sentence, 3}, {"verification", Level::Sentence, 5},
    {"monitoring", Level::Sentence, 6},   {"analysis", Level::Sentence, 1},
    {"exploration", Level::Sentence, 4},  {"planning", Level::Sentence, 2},
    {"reading", Level::Sentence, 0},      {"expl", Level::Paragraph, 1},
    {"verif", Level::Paragraph, 2},       {"exploration", Level::Paragraph, 1},
    {"verification", Level::Paragraph, 2},
}};

std::optional<std::size_t> lookup_word(std::string_view word, Level level) {
  const std::string w = lower(word);
  for (std::size_t i = 0; i < label_count(level); ++i) {
    if (lower(label_name(level, i)) == w) return i;
  }
  for (const auto& a : kAliases) {
    if (a.level == level && a.word == w) return a.index;
  }
  return std::nullopt;
}

bool is_word_char(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::optional<AnyLabel> try_parse_label(std::string_view text, Level level) {
  // Whole-text match after stripping markup and punctuation at both ends.
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && !is_word_char(text[b])) ++b;
  while (e > b && !is_word_char(text[e - 1])) --e;
  const std::string_view core = text.substr(b, e - b);
  if (core.empty()) return std::nullopt;
  if (auto i = lookup_word(core, level)) return label_at(level, *i);

  // Otherwise the text must mention exactly one distinct label.
  std::set<std::size_t> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    if (auto idx = lookup_word(text.substr(i, j - i), level)) found.insert(*idx);
    i = j;
  }
  if (found.size() == 1) return label_at(level, *found.begin());
  return std::nullopt;
}

AnyLabel parse_label(std::string_view text, Level level) {
  if (auto l = try_parse_label(text, level)) return *l;
  throw UnparsedLabel(std::string(text));
}

namespace {

GuidebookAsset make_asset(Level level, std::string body) {
  GuidebookAsset g;
  g.level = level;
  g.version = "v1-" + sha256_hex(body).substr(0, 12);
  g.body = std::move(body);
  return g;
}

}  // namespace

const GuidebookAsset& guidebook(Level level) {
  static const GuidebookAsset paragraph = make_asset(Level::Paragraph, assets::kGuidebookParagraph);
  static const GuidebookAsset sentence = make_asset(Level::Sentence, assets::kGuidebookSentence);
  return level == Level::Paragraph ? paragraph : sentence;
}

GuidebookAsset load_guidebook(Level level, const std::string& path) {
  return make_asset(level, read_file(path));
}

std::vector<LabeledExample> example_pool(const AnnotatedCorpus& corpus,
                                         const std::map<UnitRef, AnyLabel>& labels, Level level) {
  std::vector<LabeledExample> out;
  for (const UnitRef& u : corpus.units(level)) {
    const auto it = labels.find(u);
    if (it == labels.end()) continue;
    out.push_back({u, corpus.unit_text(u).value_or(std::string()), it->second});
  }
  return out;
}

std::vector<LabeledExample> select_examples(const std::vector<LabeledExample>& pool, Level level,
                                            std::size_t k, std::uint64_t seed,
                                            const std::string& exclude_trace) {
  const std::size_t n_labels = label_count(level);
  std::vector<std::vector<const LabeledExample*>> by_label(n_labels);
  for (const auto& ex : pool) {
    if (ex.unit.trace_id == exclude_trace || level_of(ex.label) != level) continue;
    by_label[label_index(ex.label)].push_back(&ex);
  }
  std::vector<std::size_t> quota(n_labels, k / n_labels);
  for (std::size_t c = 0; c < k % n_labels; ++c) ++quota[c];

  Rng rng(seed);
  for (std::size_t c = 0; c < n_labels; ++c) {
    auto& group = by_label[c];
    if (group.size() < quota[c]) {
      throw Error("example pool has " + std::to_string(group.size()) + " " +
                  std::string(label_name(level, c)) + " example(s) outside the target trace; " +
                  std::to_string(quota[c]) + " required");
    }
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->unit < b->unit; });
    rng.shuffle(std::span<const LabeledExample*>(group));
  }

  std::vector<LabeledExample> out;
  out.reserve(k);
  for (std::size_t round = 0; out.size() < k; ++round) {
    for (std::size_t c = 0; c < n_labels; ++c) {
      if (round < quota[c]) out.push_back(*by_label[c][round]);
    }
  }
  return out;
}

namespace {

std::string label_list(Level level) {
  std::string out;
  for (std::size_t i = 0; i < label_count(level); ++i) {
    if (i) out += ", ";
    out += label_name(level, i);
  }
  return out;
}

std::string_view unit_noun(Level level) { return level == Level::Paragraph ? "paragraph" : "sentence"; }

std::string context_for(const Trace& trace, const UnitRef& unit,
                        const PromptOptions& options, const std::map<UnitRef, AnyLabel>* paragraph_labels) {
  std::string out;
  if (unit.level == Level::Paragraph) {
    const auto& ps = trace.paragraphs;
    out += "Previous paragraph:\n";
    out += unit.index > 0 ? paragraph_text(trace, ps[unit.index - 1]) : std::string("(none)");
    out += "\n\nNext paragraph:\n";
    out += unit.index + 1 < ps.size() ? paragraph_text(trace, ps[unit.index + 1]) : std::string("(none)");
    return out;
  }
  const Paragraph* p = trace.paragraph_of(unit.index);
  if (options.paragraph_label_context && paragraph_labels) {
    const auto it = paragraph_labels->find({trace.trace_id, Level::Paragraph, p->index});
    if (it != paragraph_labels->end()) out += "Paragraph label: " + to_string(it->second) + "\n\n";
  }
  out += "Enclosing paragraph:\n" + paragraph_text(trace, *p) + "\n\n";
  const Sentence* prev = unit.index > 0 ? trace.sentence(unit.index - 1) : nullptr;
  const Sentence* next = trace.sentence(unit.index + 1);
  out += "Previous sentence: " + (prev ? prev->text : std::string("(none)")) + "\n";
  out += "Next sentence: " + (next ? next->text : std::string("(none)"));
  return out;
}

}  // namespace

PromptBundle build_bundle(const AnnotatedCorpus& corpus, const UnitRef& unit,
                          const std::vector<LabeledExample>& pool, const PromptOptions& options,
                          const std::map<UnitRef, AnyLabel>* paragraph_labels,
                          const GuidebookAsset* guidebook_override) {
  const Trace* trace = corpus.find_trace(unit.trace_id);
  const auto text = corpus.unit_text(unit);
  if (!trace || !text) throw Error("unit " + to_string(unit) + " does not resolve");

  PromptBundle b;
  b.level = unit.level;
  b.variant = options.variant;
  b.system_preamble = "You annotate the reasoning steps of model-written math solutions.";
  b.target_unit = *text;
  b.context_window = context_for(*trace, unit, options, paragraph_labels);
  const bool with_examples = options.variant == PromptVariant::Example || options.variant == PromptVariant::ExGuide;
  const bool with_guidebook =
      options.variant == PromptVariant::Guidebook || options.variant == PromptVariant::ExGuide;
  if (with_examples) {
    b.examples = select_examples(pool, unit.level, options.k_examples, options.seed, unit.trace_id);
  }
  if (with_guidebook) b.guidebook = guidebook_override ? *guidebook_override : guidebook(unit.level);
  return b;
}

const std::string& default_template() {
  static const std::string t = "{{instruction}}{{guidebook}}{{examples}}{{context}}{{target}}{{format}}";
  return t;
}

namespace {

constexpr std::array<std::string_view, 6> kPlaceholders{"instruction", "guidebook", "examples",
                                                        "context",     "target",    "format"};

// Calls on_text / on_placeholder over the template in order.
template <typename Text, typename Placeholder>
void scan_template(const std::string& tmpl, Text on_text, Placeholder on_placeholder) {
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    on_text(std::string_view(tmpl).substr(pos, open - pos));
    on_placeholder(std::string_view(tmpl).substr(open + 2, close - open - 2));
    pos = close + 2;
  }
  on_text(std::string_view(tmpl).substr(std::min(pos, tmpl.size())));
}

}  // namespace

void validate_template(const std::string& tmpl) {
  bool has_target = false;
  scan_template(
      tmpl, [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(kPlaceholders.begin(), kPlaceholders.end(), name) == kPlaceholders.end()) {
          throw InvariantError("template", "unknown placeholder {{" + std::string(name) + "}}");
        }
        if (name == "target") has_target = true;
      });
  if (!has_target) throw InvariantError("template", "missing {{target}}");
}

RenderedPrompt render(const PromptBundle& b, const std::string& tmpl) {
  validate_template(tmpl);
  const std::string noun(unit_noun(b.level));
  std::map<std::string_view, std::string> blocks;
  blocks["instruction"] = "Label one " + noun +
                          " from a model's step-by-step solution of a math problem with the "
                          "problem-solving episode it shows. The possible labels are: " +
                          label_list(b.level) + ".\n\n";
  if (b.guidebook) {
    blocks["guidebook"] = "## Annotation guidebook (" + b.guidebook->version + ")\n\n" + b.guidebook->body + "\n";
  }
  if (!b.examples.empty()) {
    std::string ex = "## Labeled examples\n\n";
    for (const auto& e : b.examples) ex += "Text: " + e.text + "\nLabel: " + to_string(e.label) + "\n\n";
    blocks["examples"] = std::move(ex);
  }
  blocks["context"] = "## Context\n\n" + b.context_window + "\n\n";
  blocks["target"] = "## " + std::string(1, static_cast<char>(std::toupper(noun[0]))) + noun.substr(1) +
                     " to label\n\n" + b.target_unit + "\n\n";
  blocks["format"] = "Reply with exactly one label from this list and nothing else: " + label_list(b.level) + "\n";

  RenderedPrompt out;
  out.system = b.system_preamble;
  scan_template(
      tmpl, [&](std::string_view t) { out.user += t; },
      [&](std::string_view name) { out.user += blocks[name]; });
  return out;
}

std::string format_reminder(Level level) {
  return "Your previous reply could not be read as a label. Reply with exactly one of: " + label_list(level) +
         ". Output only the label.";
}

}  // namespace episodekit::schema
