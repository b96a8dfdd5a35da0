#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/corpus.hpp"
#include "episodekit/labels.hpp"

namespace episodekit::dynamics {

struct TransitionMatrix {
  Level level = Level::Sentence;
  double alpha = 0.0;
  std::vector<std::vector<std::uint64_t>> counts;  // from -> to
  std::vector<std::vector<double>> probabilities;
  // Rows with no outgoing transition while alpha is 0; their probabilities
  // are left at zero rather than invented.
  std::vector<bool> empty_rows;

  std::uint64_t total() const;
};

// Probabilities (c + alpha) / (row + alpha * L) from a count table.
TransitionMatrix from_counts(Level level, std::vector<std::vector<std::uint64_t>> counts, double alpha);

// Counts label -> label over consecutive units of each trace. A unit without
// a label breaks the chain. Throws Error when no trace yields a transition,
// InvariantError for alpha < 0.
TransitionMatrix transition_matrix(const std::map<UnitRef, AnyLabel>& labels, const AnnotatedCorpus& corpus,
                                   Level level = Level::Sentence, double alpha = 0.0);

// The same over bare label sequences (one per trace).
TransitionMatrix transition_matrix(const std::vector<std::vector<AnyLabel>>& sequences, Level level,
                                   double alpha = 0.0);

struct Transition {
  std::size_t from = 0;
  std::size_t to = 0;
  double probability = 0;
};

// Positive entries by descending probability, ties in canonical (from, to)
// order. Throws Error when exclude_diagonal leaves no positive entry.
std::vector<Transition> top_transitions(const TransitionMatrix& m, std::size_t n, bool exclude_diagonal);

enum class Stratifier { Difficulty, Skill };

struct Stratified {
  std::map<std::string, TransitionMatrix> strata;
  std::vector<std::string> notices;  // omitted strata and unlinked traces
};

Stratified stratified_dynamics(const std::map<UnitRef, AnyLabel>& labels, const AnnotatedCorpus& corpus,
                               Stratifier by, Level level = Level::Sentence, double alpha = 0.0);

// Heatmap data: header row of labels, one row of probabilities per label.
std::string heatmap_csv(const TransitionMatrix& m);
nlohmann::json to_json(const TransitionMatrix& m);

}  // namespace episodekit::dynamics
