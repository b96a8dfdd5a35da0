#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/error.hpp"
#include "episodekit/labels.hpp"

namespace episodekit::metrics {

using LabelMap = std::map<UnitRef, AnyLabel>;

// The two sets share no unit at the requested level.
class NoOverlap : public Error {
 public:
  using Error::Error;
};

enum class Normalization { Counts, PercentOfTotal, PercentOfRow };

std::string_view to_string(Normalization n);

// Rows are reference (true) labels, columns predicted labels, both in the
// canonical order of `level`. Cells are real so that published percentage
// tables can be loaded as weights.
struct ConfusionMatrix {
  Level level = Level::Sentence;
  std::vector<std::vector<double>> cells;
  // Strict mode only: per reference label, units the other set left
  // unlabeled. They count in row sums and the total but in no column.
  std::vector<double> unpredicted;
  // When set, used as the total instead of the cell sum. Loading a
  // percentage table sets 100: its cells are shares of all units, and their
  // printed sum drifts from 100 by rounding.
  std::optional<double> nominal_total;

  explicit ConfusionMatrix(Level l = Level::Sentence);

  std::size_t size() const { return cells.size(); }
  double diagonal() const;
  double row_sum(std::size_t r) const;
  double col_sum(std::size_t c) const;
  double cell_sum() const;
  double total() const;

  // Unrounded. percent_of_total divides by total(); empty rows stay zero
  // in percent_of_row.
  std::vector<std::vector<double>> normalized(Normalization n) const;
};

struct CompareOptions {
  // Score units the second set left unlabeled as wrong instead of
  // excluding them.
  bool missing_as_wrong = false;
  // Units that should have been labeled; defaults to the union of both sets.
  std::optional<std::vector<UnitRef>> universe;
};

struct Comparison {
  ConfusionMatrix matrix;
  std::size_t n_total = 0;
  std::size_t n_compared = 0;
  std::size_t n_missing_excluded = 0;
};

// Builds the matrix over units labeled in both sets at `level`. Throws
// NoOverlap when nothing can be compared.
Comparison compare(const LabelMap& reference, const LabelMap& predicted, Level level,
                   const CompareOptions& options = {});

// trace / total. Throws Error when the total is not positive.
double accuracy(const ConfusionMatrix& m);

// Unweighted Cohen's kappa; nullopt when chance agreement is 1.
std::optional<double> cohen_kappa(const ConfusionMatrix& m);

// Chance agreement from the row and column marginals.
double chance_agreement(const ConfusionMatrix& m);

struct LabelStats {
  std::string label;
  double support = 0;  // reference row sum
  std::optional<double> precision;
  std::optional<double> recall;
};

// Published figures to reconcile a matrix against.
struct Reference {
  std::string name;
  std::optional<double> accuracy;
  std::optional<double> kappa;
};

struct AgreementReport {
  Level level = Level::Sentence;
  std::size_t n_units_total = 0;
  std::size_t n_units_compared = 0;
  std::size_t n_missing_excluded = 0;
  bool missing_as_wrong = false;
  double accuracy = 0;
  std::optional<double> kappa;
  std::vector<LabelStats> per_label;
  ConfusionMatrix confusion;
  std::vector<std::string> notes;
};

AgreementReport agreement_report(const LabelMap& a, const LabelMap& b, Level level,
                                 const CompareOptions& options = {});

// Report for a matrix given directly (e.g. a published table). When
// `reference` carries figures, a note compares them with the recomputed
// ones and states how much of the gap cell rounding could explain.
AgreementReport report_from_matrix(const ConfusionMatrix& m, const std::optional<Reference>& reference = {});

// Reads a square CSV: header ",<label>,..." then "<label>,v,v,...". Labels
// go through schema::parse_label, so short headers like "Impl." work.
// `given` says what the values are; percent_of_total sets nominal_total 100.
ConfusionMatrix load_confusion_csv(const std::filesystem::path& path, Level level,
                                   Normalization given = Normalization::Counts);

// Emitters. Percentages are printed with one decimal.
nlohmann::json to_json(const AgreementReport& r);
std::string confusion_csv(const ConfusionMatrix& m, Normalization n);
// Confusion table with the short column headers.
std::string confusion_markdown(const ConfusionMatrix& m, Normalization n, const std::string& title = {});

struct ModelScore {
  std::string model;
  double accuracy = 0;
  std::optional<double> kappa;
};
// Model | Accuracy | Cohen's κ.
std::string score_table_markdown(const std::vector<ModelScore>& rows);

struct VariantScores {
  std::string model;
  // Per prompt variant: (paragraph accuracy, sentence accuracy).
  std::map<PromptVariant, std::pair<std::optional<double>, std::optional<double>>> cells;
};
// Model by prompt variant, Para and Sent columns for each variant.
std::string variant_table_markdown(const std::vector<VariantScores>& rows);

// Short column header for a label ("Impl.", "Verif.", ...).
std::string short_name(Level level, std::size_t index);

// One decimal, no trailing noise: 11.3, 0.0.
std::string format_percent(double v);
// Three decimals, or "n/a".
std::string format_score(std::optional<double> v);

}  // namespace episodekit::metrics
