#pragma once

// Hand-rolled random inputs shared by the unit suites and the acceptance run.

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "episodekit/classify/matrix.hpp"
#include "episodekit/corpus.hpp"
#include "episodekit/rng.hpp"
#include "episodekit/segmenter.hpp"

namespace testsupport {

using episodekit::Rng;

inline const std::vector<std::string> kWords{"Let", "x", "be", "3.5", "the", "value", "\\(x+1\\)", "Wait", "Hmm",
                                             "e.g.", "so", "we", "get", "$y=2$", "Dr.", "check", "it", "again",
                                             "été", "π", "10", "...", "\"Okay"};
inline const std::vector<std::string> kEnders{".", "!", "?", "", "."};

inline std::string random_paragraph(Rng& rng) {
  std::string p;
  const auto sentences = 1 + rng.below(4);
  for (std::uint64_t s = 0; s < sentences; ++s) {
    const auto words = 1 + rng.below(6);
    for (std::uint64_t w = 0; w < words; ++w) {
      if (!p.empty()) p += rng.below(8) == 0 ? "\n" : " ";
      p += kWords[rng.below(kWords.size())];
    }
    p += kEnders[rng.below(kEnders.size())];
  }
  return p;
}

inline std::string random_trace(Rng& rng) {
  std::string t;
  const auto paragraphs = 1 + rng.below(5);
  for (std::uint64_t i = 0; i < paragraphs; ++i) {
    if (i) t += rng.below(2) ? "\n\n" : "\n \n\n";
    t += random_paragraph(rng);
  }
  return t;
}

// Small random corpus built through the segmenter so spans are valid.
inline episodekit::AnnotatedCorpus random_corpus(Rng& rng) {
  using namespace episodekit;
  static const std::vector<std::string> words{"Alpha", "beta", "x=2.5", "Wait.", "Hmm?", "ünï", "\\(a\\)", "go."};
  AnnotatedCorpus c;
  const auto traces = rng.below(3);
  for (std::uint64_t t = 0; t < traces; ++t) {
    std::string text;
    const auto paras = 1 + rng.below(3);
    for (std::uint64_t p = 0; p < paras; ++p) {
      if (p) text += "\n\n";
      const auto n = 1 + rng.below(6);
      for (std::uint64_t w = 0; w < n; ++w) text += (w ? " " : "") + words[rng.below(words.size())];
    }
    auto trace = segment::segment_trace("trace-" + std::to_string(t), text).trace;
    if (rng.below(2)) trace.question_id = "q" + std::to_string(t);
    for (auto& p : trace.paragraphs) {
      if (rng.below(2)) p.label = kParagraphLabels[rng.below(3)];
      for (auto& s : p.sentences)
        if (rng.below(2)) s.label = kEpisodeLabels[rng.below(7)];
    }
    c.traces.push_back(std::move(trace));
  }
  const auto items = rng.below(3);
  for (std::uint64_t i = 0; i < items; ++i) {
    SatItem item;
    item.question_id = "q" + std::to_string(i);
    item.skill = "Linear equations in one variable";
    item.difficulty = static_cast<Difficulty>(rng.below(3));
    item.item_stem = "Solve \\(2x = " + std::to_string(i) + "\\).";
    if (rng.below(2)) item.choices = {{"A", "1"}, {"B", "2"}, {"C", "3"}, {"D", "4"}};
    if (rng.below(2)) item.table = "| a | b |";
    if (rng.below(2)) item.extra["Source Page"] = rng.below(100);
    c.items.push_back(std::move(item));
  }
  if (!c.traces.empty()) {
    for (const std::string name : {"human", "llm"}) {
      if (rng.below(3) == 0) continue;
      AnnotationSet set(name);
      for (const auto& unit : c.units(Level::Sentence)) {
        if (rng.below(2)) continue;
        Annotation a;
        a.unit = unit;
        a.label = kEpisodeLabels[rng.below(7)];
        a.annotator_id = name;
        a.timestamp = "2025-01-0" + std::to_string(1 + rng.below(9)) + "T00:00:00Z";
        if (name == "llm") {
          a.source = Source::Llm;
          a.model_id = "gpt-4.1";
          a.prompt_variant = PromptVariant::ExGuide;
        }
        set.append(a);
      }
      c.annotation_sets.emplace(name, std::move(set));
    }
  }
  return c;
}

// A trace of `n` one-word sentences in a single paragraph.
inline episodekit::Trace plain_trace(const std::string& id, std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + std::string("Step") + std::to_string(i) + ".";
  return episodekit::segment::segment_trace(id, text).trace;
}

struct DynamicsCase {
  episodekit::AnnotatedCorpus corpus;
  std::map<episodekit::UnitRef, episodekit::AnyLabel> labels;
  std::uint64_t expected = 0;  // sum over traces of (labeled run lengths - runs)
};

// Sentence labels with random gaps; the expected transition count is
// tallied independently while generating.
inline DynamicsCase random_dynamics_case(Rng& rng) {
  using namespace episodekit;
  DynamicsCase rc;
  const auto traces = 1 + rng.below(5);
  for (std::uint64_t t = 0; t < traces; ++t) {
    const auto n = rng.below(15);
    const std::string id = "t" + std::to_string(t);
    if (n > 0) rc.corpus.traces.push_back(plain_trace(id, n));
    std::uint64_t run = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (rng.below(5) == 0) {
        if (run) rc.expected += run - 1;
        run = 0;
        continue;
      }
      rc.labels[{id, Level::Sentence, i}] = kEpisodeLabels[rng.below(3) == 0 ? rng.below(7) : rng.below(3)];
      ++run;
    }
    if (run) rc.expected += run - 1;
  }
  return rc;
}

inline std::vector<std::pair<episodekit::UnitRef, episodekit::AnyLabel>> labeled_units(
    const std::vector<std::size_t>& class_sizes) {
  using namespace episodekit;
  std::vector<std::pair<UnitRef, AnyLabel>> units;
  std::uint32_t idx = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    for (std::size_t i = 0; i < class_sizes[c]; ++i) {
      units.push_back({UnitRef{"t" + std::to_string(idx % 3), Level::Sentence, idx}, kEpisodeLabels[c]});
      ++idx;
    }
  }
  return units;
}

// Seven well separated clusters in `dim` dimensions, `per` points each.
inline std::pair<episodekit::classify::Matrix, std::vector<std::size_t>> clusters(Rng& rng, std::size_t per,
                                                                                  std::size_t dim) {
  episodekit::classify::Matrix x(7 * per, dim);
  std::vector<std::size_t> y;
  for (std::size_t c = 0; c < 7; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      const auto r = c * per + i;
      for (std::size_t d = 0; d < dim; ++d) x(r, d) = rng.uniform(-0.2, 0.2);
      x(r, c % dim) += 3.0 * (c < dim ? 1.0 : -1.0);
      y.push_back(c);
    }
  }
  return {x, y};
}

inline std::vector<std::size_t> random_labels(Rng& rng, std::size_t n, std::size_t L, std::size_t skew) {
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = rng.below(skew) == 0 ? rng.below(L) : rng.below(std::max<std::size_t>(1, L / 2));
  return out;
}

}  // namespace testsupport
