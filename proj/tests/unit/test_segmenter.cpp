#include <doctest.h>

#include <string>
#include <vector>

#include "episodekit/error.hpp"
#include "episodekit/rng.hpp"
#include "episodekit/segmenter.hpp"
#include "episodekit/utf8.hpp"
#include "support/generators.hpp"
#include "support/support.hpp"

using namespace episodekit;
using segment::segment_trace;
using segment::split_paragraphs;
using segment::split_sentences;
using testsupport::random_paragraph;
using testsupport::random_trace;

namespace {

std::vector<std::string> slices(std::string_view text, const std::vector<CharSpan>& spans) {
  const std::u32string u = utf8::decode(text);
  std::vector<std::string> out;
  for (const auto& s : spans) out.push_back(utf8::encode(u.substr(s.start, s.size())));
  return out;
}

std::vector<std::string> sentences_of(std::string_view text) {
  return slices(text, split_sentences(text).spans);
}

std::vector<std::pair<std::vector<CharSpan>, std::vector<CharSpan>>> spans_of(const Trace& t) {
  std::vector<std::pair<std::vector<CharSpan>, std::vector<CharSpan>>> out;
  for (const auto& p : t.paragraphs) {
    std::vector<CharSpan> s;
    for (const auto& sent : p.sentences) s.push_back(sent.char_span);
    out.push_back({{p.char_span}, s});
  }
  return out;
}

}  // namespace

TEST_CASE("paragraphs split on blank lines") {
  CHECK(slices("A\n\nB", split_paragraphs("A\n\nB")) == std::vector<std::string>{"A", "B"});
  CHECK(slices("A\nB\n\n\nC", split_paragraphs("A\nB\n\n\nC")) == std::vector<std::string>{"A\nB", "C"});
  CHECK(split_paragraphs("").empty());
  CHECK(split_paragraphs("  \n\t\n ").empty());
  CHECK(slices("  A \n \nB\n", split_paragraphs("  A \n \nB\n")) == std::vector<std::string>{"A", "B"});
}

TEST_CASE("sentence rules") {
  CHECK(sentences_of("But wait, hold on.") == std::vector<std::string>{"But wait, hold on."});
  const std::string subst =
      "Substituting \\(x = 3\\) into the equation, we get \\(2(3) + 5 = 6 + 5 = 11\\).";
  CHECK(sentences_of(subst) == std::vector<std::string>{subst});
  CHECK(sentences_of("Hmm. Wait. Let me think.") == std::vector<std::string>{"Hmm.", "Wait.", "Let me think."});
  CHECK(sentences_of("The value is 3.5 so x = 7.") == std::vector<std::string>{"The value is 3.5 so x = 7."});
  CHECK(sentences_of("We use e.g. This one. Done.") == std::vector<std::string>{"We use e.g. This one.", "Done."});
  // The dots stay with the sentence they end; no stray "." fragment.
  CHECK(sentences_of("So... Then it works.") == std::vector<std::string>{"So...", "Then it works."});
  CHECK(sentences_of("Wait... maybe not.") == std::vector<std::string>{"Wait... maybe not."});
  CHECK(sentences_of("It is $3. 5$ now. Next.") == std::vector<std::string>{"It is $3. 5$ now.", "Next."});
  CHECK(sentences_of("Is it 4? 5 is right.") == std::vector<std::string>{"Is it 4?", "5 is right."});
  CHECK(sentences_of("Stop. \"Quoted\" start.") == std::vector<std::string>{"Stop.", "\"Quoted\" start."});
  CHECK(sentences_of("done. lower case") == std::vector<std::string>{"done. lower case"});
}

TEST_CASE("unterminated math warns and keeps the remainder whole") {
  const auto split = split_sentences("Start \\(x = 1. Next one. Last.");
  CHECK(split.spans.size() == 1);
  REQUIRE(split.warnings.size() == 1);
  CHECK(split.warnings[0].offset == 6);
}

TEST_CASE("min_sentence_chars merges short sentences forward") {
  segment::SegmentationConfig cfg;
  cfg.min_sentence_chars = 6;
  const std::string text = "Hmm. Wait. Let me think.";
  CHECK(slices(text, split_sentences(text, cfg).spans) == std::vector<std::string>{"Hmm. Wait.", "Let me think."});
}

TEST_CASE("config validation") {
  segment::SegmentationConfig cfg;
  cfg.abbreviations = {"eg"};
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  cfg.abbreviations = {""};
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  cfg = {};
  cfg.min_sentence_chars = 0;
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  cfg = {};
  CHECK(segment::SegmentationConfig::from_json(cfg.to_json()).hash() == cfg.hash());
}

TEST_CASE("segment_trace small cases") {
  auto one = segment_trace("t", "no terminal punctuation here").trace;
  CHECK(one.paragraphs.size() == 1);
  CHECK(one.sentence_count() == 1);
  auto two = segment_trace("t", "First one.\n\nSecond one.").trace;
  CHECK(two.paragraphs.size() == 2);
  CHECK(two.sentence_count() == 2);
  CHECK(two.paragraphs[1].sentences[0].global_index == 1);
  REQUIRE(two.segmenter.has_value());
  CHECK(two.segmenter->config_hash == segment::SegmentationConfig{}.hash());
}

TEST_CASE("fixture trace counts") {
  const auto labels = nlohmann::json::parse(testsupport::fixture_text("example_labels.json"));
  const auto trace = segment_trace("t", testsupport::fixture_text("example_trace.txt")).trace;
  CHECK(trace.paragraphs.size() == labels["paragraph_labels"].size());
  CHECK(trace.sentence_count() == labels["sentence_labels"].size());
  CHECK(trace.paragraphs.size() == 5);
  CHECK(trace.sentence_count() == 16);
}

TEST_CASE("randomized traces: determinism, idempotence, coverage, monotonicity") {
  Rng rng(20240601);
  for (int n = 0; n < 200; ++n) {
    const std::string text = random_trace(rng);
    const auto a = segment_trace("t", text);
    const auto b = segment_trace("t", text);
    REQUIRE(a.trace == b.trace);

    // Rebuilding the text from paragraph slices joined by blank lines gives
    // the same sentence structure.
    std::string rebuilt;
    for (const auto& p : a.trace.paragraphs) {
      if (!rebuilt.empty()) rebuilt += "\n\n";
      rebuilt += paragraph_text(a.trace, p);
    }
    const auto c = segment_trace("t", rebuilt);
    REQUIRE(c.trace.paragraphs.size() == a.trace.paragraphs.size());
    for (std::size_t i = 0; i < a.trace.paragraphs.size(); ++i) {
      const auto& pa = a.trace.paragraphs[i];
      const auto& pc = c.trace.paragraphs[i];
      REQUIRE(pa.sentences.size() == pc.sentences.size());
      for (std::size_t s = 0; s < pa.sentences.size(); ++s) {
        CHECK(pa.sentences[s].text == pc.sentences[s].text);
        CHECK(pa.sentences[s].char_span.start - pa.char_span.start ==
              pc.sentences[s].char_span.start - pc.char_span.start);
      }
    }

    // Every non-whitespace scalar of a paragraph is in exactly one sentence.
    const std::u32string u = utf8::decode(text);
    for (const auto& p : a.trace.paragraphs) {
      std::vector<int> hits(p.char_span.size(), 0);
      for (const auto& s : p.sentences) {
        REQUIRE(s.char_span.start >= p.char_span.start);
        REQUIRE(s.char_span.end <= p.char_span.end);
        for (auto i = s.char_span.start; i < s.char_span.end; ++i) ++hits[i - p.char_span.start];
      }
      for (auto i = p.char_span.start; i < p.char_span.end; ++i) {
        const char32_t ch = u[i];
        const bool ws = ch == U' ' || ch == U'\n' || ch == U'\t' || ch == U'\r';
        if (!ws) CHECK(hits[i - p.char_span.start] == 1);
        CHECK(hits[i - p.char_span.start] <= 1);
      }
    }

    const auto extended = segment_trace("t", text + "\n\n" + random_paragraph(rng));
    const auto before = spans_of(a.trace);
    const auto after = spans_of(extended.trace);
    REQUIRE(after.size() >= before.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == before[i]);
  }
}
