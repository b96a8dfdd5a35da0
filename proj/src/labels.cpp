#include "episodekit/labels.hpp"

#include <charconv>
#include <stdexcept>

namespace episodekit {

namespace {

constexpr std::array<std::string_view, 3> kParagraphNames{"General", "Explore", "Verify"};
constexpr std::array<std::string_view, 7> kEpisodeNames{"Read",    "Analyze", "Plan",   "Implement",
                                                        "Explore", "Verify",  "Monitor"};
constexpr std::array<std::string_view, 4> kVariantNames{"Base", "Example", "Guidebook", "ExGuide"};
constexpr std::array<std::string_view, 3> kSourceNames{"human", "llm", "classifier"};
constexpr std::array<std::string_view, 2> kLevelNames{"paragraph", "sentence"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Level level) { return kLevelNames[static_cast<std::size_t>(level)]; }
std::string_view to_string(ParagraphLabel label) {
  return kParagraphNames[static_cast<std::size_t>(label)];
}
std::string_view to_string(EpisodeLabel label) {
  return kEpisodeNames[static_cast<std::size_t>(label)];
}
std::string_view to_string(PromptVariant variant) {
  return kVariantNames[static_cast<std::size_t>(variant)];
}
std::string_view to_string(Source source) { return kSourceNames[static_cast<std::size_t>(source)]; }

std::string to_string(const AnyLabel& label) {
  return std::visit([](auto l) { return std::string(to_string(l)); }, label);
}

std::optional<Level> level_from_string(std::string_view s) { return lookup<Level>(kLevelNames, s); }
std::optional<ParagraphLabel> paragraph_label_from_string(std::string_view s) {
  return lookup<ParagraphLabel>(kParagraphNames, s);
}
std::optional<EpisodeLabel> episode_label_from_string(std::string_view s) {
  return lookup<EpisodeLabel>(kEpisodeNames, s);
}
std::optional<PromptVariant> prompt_variant_from_string(std::string_view s) {
  return lookup<PromptVariant>(kVariantNames, s);
}
std::optional<Source> source_from_string(std::string_view s) {
  return lookup<Source>(kSourceNames, s);
}

std::optional<AnyLabel> label_from_string(Level level, std::string_view s) {
  if (level == Level::Paragraph) {
    if (auto l = paragraph_label_from_string(s)) return AnyLabel{*l};
  } else {
    if (auto l = episode_label_from_string(s)) return AnyLabel{*l};
  }
  return std::nullopt;
}

AnyLabel label_at(Level level, std::size_t index) {
  if (index >= label_count(level)) throw std::out_of_range("label index out of range");
  if (level == Level::Paragraph) return static_cast<ParagraphLabel>(index);
  return static_cast<EpisodeLabel>(index);
}

std::string_view label_name(Level level, std::size_t index) {
  if (index >= label_count(level)) throw std::out_of_range("label index out of range");
  return level == Level::Paragraph ? kParagraphNames[index] : kEpisodeNames[index];
}

std::string to_string(const UnitRef& ref) {
  return ref.trace_id + ":" + std::string(to_string(ref.level)) + ":" + std::to_string(ref.index);
}

std::optional<UnitRef> unit_ref_from_string(std::string_view s) {
  const auto last = s.rfind(':');
  if (last == std::string_view::npos || last == 0) return std::nullopt;
  const auto mid = s.rfind(':', last - 1);
  if (mid == std::string_view::npos || mid == 0) return std::nullopt;
  const auto level = level_from_string(s.substr(mid + 1, last - mid - 1));
  if (!level) return std::nullopt;
  const auto digits = s.substr(last + 1);
  std::uint32_t index = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    return std::nullopt;
  }
  return UnitRef{std::string(s.substr(0, mid)), *level, index};
}

}  // namespace episodekit
