#include "episodekit/dynamics.hpp"

#include <algorithm>
#include <cstdio>

#include "episodekit/error.hpp"

namespace episodekit::dynamics {

std::uint64_t TransitionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

TransitionMatrix from_counts(Level level, std::vector<std::vector<std::uint64_t>> counts, double alpha) {
  if (!(alpha >= 0)) throw InvariantError("alpha", "must be >= 0");
  const std::size_t n = label_count(level);
  TransitionMatrix m;
  m.level = level;
  m.alpha = alpha;
  m.counts = std::move(counts);
  m.probabilities.assign(n, std::vector<double>(n, 0.0));
  m.empty_rows.assign(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    std::uint64_t row = 0;
    for (auto c : m.counts[r]) row += c;
    const double denom = static_cast<double>(row) + alpha * static_cast<double>(n);
    if (denom == 0.0) {
      m.empty_rows[r] = true;
      continue;
    }
    for (std::size_t c = 0; c < n; ++c) {
      m.probabilities[r][c] = (static_cast<double>(m.counts[r][c]) + alpha) / denom;
    }
  }
  return m;
}

namespace {

using Counts = std::vector<std::vector<std::uint64_t>>;

Counts zero_counts(Level level) {
  const std::size_t n = label_count(level);
  return Counts(n, std::vector<std::uint64_t>(n, 0));
}

// Adds the transitions of one trace; gaps are std::nullopt.
void count_sequence(const std::vector<std::optional<std::size_t>>& seq, Counts& counts) {
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (seq[i - 1] && seq[i]) ++counts[*seq[i - 1]][*seq[i]];
  }
}

std::vector<std::optional<std::size_t>> trace_sequence(const std::map<UnitRef, AnyLabel>& labels, const Trace& trace,
                                                       Level level) {
  const std::size_t n = level == Level::Paragraph ? trace.paragraphs.size() : trace.sentence_count();
  std::vector<std::optional<std::size_t>> seq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = labels.find({trace.trace_id, level, static_cast<std::uint32_t>(i)});
    if (it == labels.end()) continue;
    if (level_of(it->second) != level) throw InvariantError("label", "level mismatch at " + to_string(it->first));
    seq[i] = label_index(it->second);
  }
  return seq;
}

TransitionMatrix finish(Level level, Counts counts, double alpha) {
  TransitionMatrix m = from_counts(level, std::move(counts), alpha);
  if (m.total() == 0) throw Error("no transitions: no trace has two consecutive labeled units");
  return m;
}

}  // namespace

TransitionMatrix transition_matrix(const std::map<UnitRef, AnyLabel>& labels, const AnnotatedCorpus& corpus,
                                   Level level, double alpha) {
  if (!(alpha >= 0)) throw InvariantError("alpha", "must be >= 0");
  Counts counts = zero_counts(level);
  for (const Trace& t : corpus.traces) count_sequence(trace_sequence(labels, t, level), counts);
  return finish(level, std::move(counts), alpha);
}

TransitionMatrix transition_matrix(const std::vector<std::vector<AnyLabel>>& sequences, Level level, double alpha) {
  if (!(alpha >= 0)) throw InvariantError("alpha", "must be >= 0");
  Counts counts = zero_counts(level);
  for (const auto& s : sequences) {
    std::vector<std::optional<std::size_t>> seq;
    for (const auto& l : s) {
      if (level_of(l) != level) throw InvariantError("label", "level mismatch in sequence");
      seq.push_back(label_index(l));
    }
    count_sequence(seq, counts);
  }
  return finish(level, std::move(counts), alpha);
}

std::vector<Transition> top_transitions(const TransitionMatrix& m, std::size_t n, bool exclude_diagonal) {
  std::vector<Transition> all;
  for (std::size_t r = 0; r < m.probabilities.size(); ++r) {
    for (std::size_t c = 0; c < m.probabilities[r].size(); ++c) {
      if (exclude_diagonal && r == c) continue;
      if (m.probabilities[r][c] > 0) all.push_back({r, c, m.probabilities[r][c]});
    }
  }
  if (all.empty()) {
    throw Error(exclude_diagonal ? "matrix has no positive off-diagonal entry" : "matrix has no positive entry");
  }
  // Stable sort keeps the canonical (from, to) order among equal values.
  std::stable_sort(all.begin(), all.end(),
                   [](const Transition& a, const Transition& b) { return a.probability > b.probability; });
  if (all.size() > n) all.resize(n);
  return all;
}

Stratified stratified_dynamics(const std::map<UnitRef, AnyLabel>& labels, const AnnotatedCorpus& corpus,
                               Stratifier by, Level level, double alpha) {
  if (!(alpha >= 0)) throw InvariantError("alpha", "must be >= 0");
  std::map<std::string, Counts> counts;
  Stratified out;
  for (const Trace& t : corpus.traces) {
    const SatItem* item = t.question_id ? corpus.find_item(*t.question_id) : nullptr;
    if (!item) {
      out.notices.push_back("trace " + t.trace_id + " links to no item; skipped");
      continue;
    }
    const std::string key = by == Stratifier::Difficulty ? std::string(to_string(item->difficulty)) : item->skill;
    auto [it, inserted] = counts.try_emplace(key, zero_counts(level));
    count_sequence(trace_sequence(labels, t, level), it->second);
  }
  for (auto& [key, c] : counts) {
    TransitionMatrix m = from_counts(level, std::move(c), alpha);
    if (m.total() == 0) {
      out.notices.push_back("stratum '" + key + "' has no transitions; omitted");
      continue;
    }
    out.strata.emplace(key, std::move(m));
  }
  return out;
}

std::string heatmap_csv(const TransitionMatrix& m) {
  const std::size_t n = m.probabilities.size();
  std::string out = "from\\to";
  for (std::size_t c = 0; c < n; ++c) out += "," + std::string(label_name(m.level, c));
  out += "\n";
  char buf[32];
  for (std::size_t r = 0; r < n; ++r) {
    out += label_name(m.level, r);
    for (std::size_t c = 0; c < n; ++c) {
      std::snprintf(buf, sizeof buf, "%.6f", m.probabilities[r][c]);
      out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const TransitionMatrix& m) {
  nlohmann::json labels = nlohmann::json::array();
  nlohmann::json empty = nlohmann::json::array();
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    labels.push_back(label_name(m.level, i));
    if (m.empty_rows[i]) empty.push_back(label_name(m.level, i));
  }
  return {{"level", to_string(m.level)}, {"labels", labels},          {"alpha", m.alpha},
          {"counts", m.counts},          {"probabilities", m.probabilities}, {"empty_rows", empty}};
}

}  // namespace episodekit::dynamics
