#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "episodekit/corpus.hpp"
#include "episodekit/error.hpp"
#include "episodekit/labels.hpp"

namespace episodekit::schema {

// Raised when text cannot be normalized to a label; carries the raw text.
class UnparsedLabel : public Error {
 public:
  explicit UnparsedLabel(std::string raw)
      : Error("cannot parse a label from '" + raw + "'"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Lenient normalization of model output or table headers. Matches canonical
// names, the short header forms (Impl., Expl., Verif., Monit.) and a few
// noun synonyms (Implementation, Verification, ...), case-insensitively,
// ignoring surrounding punctuation and markup. When the whole text is not a
// label, a text mentioning exactly one distinct label of the level is
// accepted ("The label is: Implement.").
std::optional<AnyLabel> try_parse_label(std::string_view text, Level level);
AnyLabel parse_label(std::string_view text, Level level);

struct GuidebookAsset {
  Level level = Level::Sentence;
  std::string body;     // markdown
  std::string version;  // "v1-" + content hash prefix
};

// Built-in guidebooks compiled from assets/.
const GuidebookAsset& guidebook(Level level);

// Reads a guidebook override from disk (same versioning scheme).
GuidebookAsset load_guidebook(Level level, const std::string& path);

struct LabeledExample {
  UnitRef unit;
  std::string text;
  AnyLabel label;
};

// Units of `corpus` carrying a label in `labels`, in document order.
std::vector<LabeledExample> example_pool(const AnnotatedCorpus& corpus,
                                         const std::map<UnitRef, AnyLabel>& labels, Level level);

// k examples stratified over the canonical label order: every label gets
// k / L, the first k % L labels one more. Within a label the pick is a
// seeded shuffle of the candidates sorted by unit. Units of `exclude_trace`
// are never chosen. Output is round-robin in canonical order.
// Throws Error naming the first label with too few candidates.
std::vector<LabeledExample> select_examples(const std::vector<LabeledExample>& pool, Level level,
                                            std::size_t k, std::uint64_t seed,
                                            const std::string& exclude_trace);

struct PromptOptions {
  PromptVariant variant = PromptVariant::Base;
  std::size_t k_examples = 7;
  std::uint64_t seed = 0;
  // Show the enclosing paragraph's label (when known) in sentence prompts.
  bool paragraph_label_context = true;
};

struct PromptBundle {
  Level level = Level::Sentence;
  PromptVariant variant = PromptVariant::Base;
  std::string system_preamble;
  std::string target_unit;
  std::string context_window;
  std::vector<LabeledExample> examples;
  std::optional<GuidebookAsset> guidebook;
};

// Assembles the bundle for one unit. `paragraph_labels` may be null.
// Throws Error when the unit does not resolve or the pool is deficient.
PromptBundle build_bundle(const AnnotatedCorpus& corpus, const UnitRef& unit,
                          const std::vector<LabeledExample>& pool, const PromptOptions& options,
                          const std::map<UnitRef, AnyLabel>* paragraph_labels = nullptr,
                          const GuidebookAsset* guidebook_override = nullptr);

// User-message template. Placeholders: {{instruction}}, {{guidebook}},
// {{examples}}, {{context}}, {{target}}, {{format}}; blocks a variant does
// not use render empty.
const std::string& default_template();

// Throws InvariantError("template", ...) for unknown placeholders or a
// template without {{target}}.
void validate_template(const std::string& tmpl);

struct RenderedPrompt {
  std::string system;
  std::string user;
};

RenderedPrompt render(const PromptBundle& bundle, const std::string& tmpl = default_template());

// Appended to the conversation after an unparseable reply.
std::string format_reminder(Level level);

}  // namespace episodekit::schema
