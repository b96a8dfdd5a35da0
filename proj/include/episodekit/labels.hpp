#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace episodekit {

enum class Level : std::uint8_t { Paragraph, Sentence };

// Three-way paragraph role.
enum class ParagraphLabel : std::uint8_t { General, Explore, Verify };

// Seven sentence-level episodes. The enumerator order is the canonical order
// used for matrix axes and every tie-break.
enum class EpisodeLabel : std::uint8_t { Read, Analyze, Plan, Implement, Explore, Verify, Monitor };

inline constexpr std::array<ParagraphLabel, 3> kParagraphLabels{
    ParagraphLabel::General, ParagraphLabel::Explore, ParagraphLabel::Verify};

inline constexpr std::array<EpisodeLabel, 7> kEpisodeLabels{
    EpisodeLabel::Read,    EpisodeLabel::Analyze, EpisodeLabel::Plan,   EpisodeLabel::Implement,
    EpisodeLabel::Explore, EpisodeLabel::Verify,  EpisodeLabel::Monitor};

enum class PromptVariant : std::uint8_t { Base, Example, Guidebook, ExGuide };

inline constexpr std::array<PromptVariant, 4> kPromptVariants{
    PromptVariant::Base, PromptVariant::Example, PromptVariant::Guidebook, PromptVariant::ExGuide};

enum class Source : std::uint8_t { Human, Llm, Classifier };

// A label of either level. The alternative fixes the arity.
using AnyLabel = std::variant<ParagraphLabel, EpisodeLabel>;

std::string_view to_string(Level level);
std::string_view to_string(ParagraphLabel label);
std::string_view to_string(EpisodeLabel label);
std::string_view to_string(PromptVariant variant);
std::string_view to_string(Source source);
std::string to_string(const AnyLabel& label);

// Strict parsers accepting only the canonical spelling (case-sensitive).
// Lenient normalization of model output lives in schema::parse_label.
std::optional<Level> level_from_string(std::string_view s);
std::optional<ParagraphLabel> paragraph_label_from_string(std::string_view s);
std::optional<EpisodeLabel> episode_label_from_string(std::string_view s);
std::optional<PromptVariant> prompt_variant_from_string(std::string_view s);
std::optional<Source> source_from_string(std::string_view s);
std::optional<AnyLabel> label_from_string(Level level, std::string_view s);

// Number of labels at a level (3 or 7).
constexpr std::size_t label_count(Level level) { return level == Level::Paragraph ? 3 : 7; }

constexpr Level level_of(const AnyLabel& label) {
  return std::holds_alternative<ParagraphLabel>(label) ? Level::Paragraph : Level::Sentence;
}

// Position in the canonical ordering of the label's level.
constexpr std::size_t label_index(const AnyLabel& label) {
  return std::visit([](auto l) { return static_cast<std::size_t>(l); }, label);
}

// Inverse of label_index; `index` < label_count(level).
AnyLabel label_at(Level level, std::size_t index);

std::string_view label_name(Level level, std::size_t index);

// Identifies one segmentation unit. For sentences `index` is the trace-wide
// global index; for paragraphs it is the paragraph index.
struct UnitRef {
  std::string trace_id;
  Level level = Level::Sentence;
  std::uint32_t index = 0;

  auto operator<=>(const UnitRef&) const = default;
  bool operator==(const UnitRef&) const = default;
};

// "trace_id:level:index", used in URLs and messages.
std::string to_string(const UnitRef& ref);
std::optional<UnitRef> unit_ref_from_string(std::string_view s);

}  // namespace episodekit
