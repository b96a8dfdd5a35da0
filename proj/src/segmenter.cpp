#include "episodekit/segmenter.hpp"

#include <algorithm>

#include "episodekit/error.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/utf8.hpp"

namespace episodekit::segment {

using utf8::is_space;

void SegmentationConfig::validate() const {
  for (const auto& a : abbreviations) {
    if (a.empty() || a.back() != '.') {
      throw InvariantError("abbreviation_list", "'" + a + "' must be non-empty and end with '.'");
    }
  }
  if (min_sentence_chars < 1) throw InvariantError("min_sentence_chars", "must be >= 1");
}

nlohmann::json SegmentationConfig::to_json() const {
  auto sorted = abbreviations;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return {{"abbreviation_list", sorted},
          {"protect_math", protect_math},
          {"min_sentence_chars", min_sentence_chars}};
}

SegmentationConfig SegmentationConfig::from_json(const nlohmann::json& j) {
  SegmentationConfig cfg;
  if (!j.is_object()) throw InvariantError("config", "expected object");
  if (j.contains("abbreviation_list")) {
    cfg.abbreviations = j.at("abbreviation_list").get<std::vector<std::string>>();
  }
  if (j.contains("protect_math")) cfg.protect_math = j.at("protect_math").get<bool>();
  if (j.contains("min_sentence_chars")) {
    const auto& v = j.at("min_sentence_chars");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw InvariantError("min_sentence_chars", "must be an integer >= 1");
    }
    cfg.min_sentence_chars = v.get<std::size_t>();
  }
  cfg.validate();
  return cfg;
}

std::string SegmentationConfig::hash() const { return sha256_hex(to_json().dump()).substr(0, 16); }

std::vector<CharSpan> split_paragraphs(std::u32string_view text) {
  std::vector<CharSpan> out;
  std::size_t run_start = 0;
  std::size_t run_end = 0;
  bool in_run = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find(U'\n', pos);
    if (nl == std::u32string_view::npos) nl = text.size();
    std::size_t first = pos;
    while (first < nl && is_space(text[first])) ++first;
    if (first < nl) {
      std::size_t last = nl;
      while (last > first && is_space(text[last - 1])) --last;
      if (!in_run) {
        run_start = first;
        in_run = true;
      }
      run_end = last;
    } else if (in_run) {
      out.push_back({run_start, run_end});
      in_run = false;
    }
    pos = nl + 1;
  }
  if (in_run) out.push_back({run_start, run_end});
  return out;
}

std::vector<CharSpan> split_paragraphs(std::string_view raw_text) {
  return split_paragraphs(std::u32string_view(utf8::decode(raw_text)));
}

namespace {

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'…'; }

bool is_closer(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'”' || c == U'’' || c == U')' || c == U']' ||
         c == U'»';
}

bool is_upper(char32_t c) {
  return (c >= U'A' && c <= U'Z') || (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) ||
         (c >= 0x0391 && c <= 0x03A9) || (c >= 0x0410 && c <= 0x042F);
}

bool is_opener(char32_t c) {
  return is_upper(c) || (c >= U'0' && c <= U'9') || c == U'"' || c == U'\'' || c == U'“' ||
         c == U'‘' || c == U'«' || c == U'-' || c == U'–' || c == U'—';
}

bool is_leading_punct(char32_t c) {
  return c == U'(' || c == U'[' || c == U'"' || c == U'\'' || c == U'“' || c == U'‘';
}

char32_t fold(char32_t c) { return (c >= U'A' && c <= U'Z') ? c - U'A' + U'a' : c; }

bool equals_folded(std::u32string_view a, std::u32string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (fold(a[i]) != fold(b[i])) return false;
  }
  return true;
}

enum class Math { None, Paren, Bracket, Dollar, DoubleDollar };

class SentenceScanner {
 public:
  SentenceScanner(std::u32string_view text, const SegmentationConfig& cfg) : t_(text), cfg_(cfg) {
    for (const auto& a : cfg.abbreviations) abbreviations_.push_back(utf8::decode(a));
  }

  SentenceSplit run() {
    SentenceSplit result;
    std::size_t start = 0;
    while (start < t_.size() && is_space(t_[start])) ++start;
    if (start == t_.size()) return result;

    Math math = Math::None;
    std::size_t math_open = 0;
    std::size_t i = start;
    while (i < t_.size()) {
      const char32_t c = t_[i];
      if (cfg_.protect_math) {
        if (math == Math::None) {
          if (c == U'\\' && i + 1 < t_.size()) {
            if (t_[i + 1] == U'(' || t_[i + 1] == U'[') {
              math = t_[i + 1] == U'(' ? Math::Paren : Math::Bracket;
              math_open = i;
            }
            i += 2;  // escaped character or opening delimiter
            continue;
          }
          if (c == U'$') {
            math_open = i;
            if (i + 1 < t_.size() && t_[i + 1] == U'$') {
              math = Math::DoubleDollar;
              i += 2;
            } else {
              math = Math::Dollar;
              ++i;
            }
            continue;
          }
        } else {
          if (c == U'\\' && i + 1 < t_.size()) {
            if ((math == Math::Paren && t_[i + 1] == U')') ||
                (math == Math::Bracket && t_[i + 1] == U']')) {
              math = Math::None;
            }
            i += 2;
            continue;
          }
          if (c == U'$') {
            if (math == Math::Dollar) {
              math = Math::None;
              ++i;
              continue;
            }
            if (math == Math::DoubleDollar && i + 1 < t_.size() && t_[i + 1] == U'$') {
              math = Math::None;
              i += 2;
              continue;
            }
          }
          ++i;
          continue;
        }
      }

      if (!is_terminator(c)) {
        ++i;
        continue;
      }
      std::size_t end = i;
      while (end < t_.size() && is_terminator(t_[end])) ++end;
      const std::size_t run_length = end - i;
      while (end < t_.size() && is_closer(t_[end])) ++end;
      if (end >= t_.size() || !is_space(t_[end])) {
        i = end;
        continue;
      }
      std::size_t next = end;
      while (next < t_.size() && is_space(t_[next])) ++next;
      if (next >= t_.size() || !is_opener(t_[next])) {
        i = end;
        continue;
      }
      if (run_length == 1 && c == U'.' && is_abbreviation(i)) {
        i = end;
        continue;
      }
      result.spans.push_back({start, end});
      start = next;
      i = next;
    }
    if (math != Math::None) {
      result.warnings.push_back(
          {math_open, "unterminated math delimiter; remainder of paragraph kept as one sentence"});
    }
    std::size_t last = t_.size();
    while (last > start && is_space(t_[last - 1])) --last;
    if (last > start) result.spans.push_back({start, last});
    merge_short(result.spans);
    return result;
  }

 private:
  // True when the token ending at the period at `dot` is a listed abbreviation.
  bool is_abbreviation(std::size_t dot) const {
    std::size_t begin = dot;
    while (begin > 0 && !is_space(t_[begin - 1])) --begin;
    while (begin < dot && is_leading_punct(t_[begin])) ++begin;
    const auto token = t_.substr(begin, dot + 1 - begin);
    for (const auto& a : abbreviations_) {
      if (equals_folded(token, a)) return true;
    }
    return false;
  }

  void merge_short(std::vector<CharSpan>& spans) const {
    if (cfg_.min_sentence_chars <= 1) return;
    std::size_t k = 0;
    while (k < spans.size() && spans.size() > 1) {
      if (spans[k].size() >= cfg_.min_sentence_chars) {
        ++k;
        continue;
      }
      if (k + 1 < spans.size()) {
        spans[k + 1].start = spans[k].start;
        spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        spans[k - 1].end = spans[k].end;
        spans.pop_back();
      }
    }
  }

  std::u32string_view t_;
  const SegmentationConfig& cfg_;
  std::vector<std::u32string> abbreviations_;
};

}  // namespace

SentenceSplit split_sentences(std::u32string_view paragraph_text, const SegmentationConfig& cfg) {
  return SentenceScanner(paragraph_text, cfg).run();
}

SentenceSplit split_sentences(std::string_view paragraph_text, const SegmentationConfig& cfg) {
  return split_sentences(std::u32string_view(utf8::decode(paragraph_text)), cfg);
}

SegmentationResult segment_trace(std::string trace_id, std::string raw_text,
                                 const SegmentationConfig& cfg) {
  cfg.validate();
  SegmentationResult result;
  const std::u32string text = utf8::decode(raw_text);
  const std::u32string_view view(text);
  Trace& trace = result.trace;
  trace.trace_id = std::move(trace_id);
  trace.segmenter = SegmenterStamp{std::string(kSegmenterVersion), cfg.hash()};

  std::uint32_t global = 0;
  for (const CharSpan& ps : split_paragraphs(view)) {
    Paragraph p;
    p.index = static_cast<std::uint32_t>(trace.paragraphs.size());
    p.char_span = ps;
    auto split = split_sentences(view.substr(ps.start, ps.size()), cfg);
    for (auto& w : split.warnings) {
      w.offset += ps.start;
      result.warnings.push_back(std::move(w));
    }
    for (const CharSpan& rel : split.spans) {
      Sentence s;
      s.index = static_cast<std::uint32_t>(p.sentences.size());
      s.global_index = global++;
      s.char_span = {ps.start + rel.start, ps.start + rel.end};
      s.text = utf8::encode(view.substr(s.char_span.start, s.char_span.size()));
      p.sentences.push_back(std::move(s));
    }
    trace.paragraphs.push_back(std::move(p));
  }
  trace.raw_text = std::move(raw_text);
  return result;
}

}  // namespace episodekit::segment
