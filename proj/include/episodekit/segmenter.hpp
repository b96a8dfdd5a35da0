#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/corpus.hpp"

namespace episodekit::segment {

// Bumped whenever a rule change could move a span.
inline constexpr std::string_view kSegmenterVersion = "1";

struct SegmentationConfig {
  std::vector<std::string> abbreviations{"e.g.", "i.e.", "vs.", "etc.", "Dr.", "Eq.", "Fig.", "approx."};
  bool protect_math = true;
  std::size_t min_sentence_chars = 1;

  // Throws InvariantError for empty abbreviations, ones not ending in '.',
  // or min_sentence_chars == 0.
  void validate() const;

  nlohmann::json to_json() const;
  static SegmentationConfig from_json(const nlohmann::json& j);

  // Short stable hash of the canonical JSON form, stored in each trace.
  std::string hash() const;
};

struct SegmentationWarning {
  std::size_t offset = 0;  // scalar offset where the problem starts
  std::string message;
};

struct SentenceSplit {
  std::vector<CharSpan> spans;
  std::vector<SegmentationWarning> warnings;
};

struct SegmentationResult {
  Trace trace;
  std::vector<SegmentationWarning> warnings;
};

// Maximal runs of non-blank lines, trimmed of surrounding whitespace.
// Offsets are Unicode scalar offsets into `raw_text`.
std::vector<CharSpan> split_paragraphs(std::string_view raw_text);
std::vector<CharSpan> split_paragraphs(std::u32string_view text);

// Sentence spans relative to the start of `paragraph_text`.
SentenceSplit split_sentences(std::string_view paragraph_text, const SegmentationConfig& cfg = {});
SentenceSplit split_sentences(std::u32string_view paragraph_text, const SegmentationConfig& cfg = {});

SegmentationResult segment_trace(std::string trace_id, std::string raw_text,
                                 const SegmentationConfig& cfg = {});

}  // namespace episodekit::segment
