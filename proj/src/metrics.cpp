#include "episodekit/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "episodekit/fileutil.hpp"
#include "episodekit/schema.hpp"

namespace episodekit::metrics {

using nlohmann::json;

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::Counts: return "counts";
    case Normalization::PercentOfTotal: return "percent_of_total";
    case Normalization::PercentOfRow: return "percent_of_row";
  }
  return "counts";
}

ConfusionMatrix::ConfusionMatrix(Level l)
    : level(l),
      cells(label_count(l), std::vector<double>(label_count(l), 0.0)),
      unpredicted(label_count(l), 0.0) {}

double ConfusionMatrix::diagonal() const {
  double d = 0;
  for (std::size_t i = 0; i < size(); ++i) d += cells[i][i];
  return d;
}

double ConfusionMatrix::row_sum(std::size_t r) const {
  double s = unpredicted[r];
  for (double v : cells[r]) s += v;
  return s;
}

double ConfusionMatrix::col_sum(std::size_t c) const {
  double s = 0;
  for (const auto& row : cells) s += row[c];
  return s;
}

double ConfusionMatrix::cell_sum() const {
  double s = 0;
  for (std::size_t r = 0; r < size(); ++r) s += row_sum(r);
  return s;
}

double ConfusionMatrix::total() const { return nominal_total.value_or(cell_sum()); }

std::vector<std::vector<double>> ConfusionMatrix::normalized(Normalization n) const {
  auto out = cells;
  if (n == Normalization::Counts) return out;
  for (std::size_t r = 0; r < size(); ++r) {
    const double denom = n == Normalization::PercentOfTotal ? total() : row_sum(r);
    for (double& v : out[r]) v = denom > 0 ? 100.0 * v / denom : 0.0;
  }
  return out;
}

Comparison compare(const LabelMap& reference, const LabelMap& predicted, Level level,
                   const CompareOptions& options) {
  std::set<UnitRef> universe;
  if (options.universe) {
    for (const auto& u : *options.universe) {
      if (u.level == level) universe.insert(u);
    }
  } else {
    for (const auto& [u, _] : reference) {
      if (u.level == level) universe.insert(u);
    }
    for (const auto& [u, _] : predicted) {
      if (u.level == level) universe.insert(u);
    }
  }

  Comparison out;
  out.matrix = ConfusionMatrix(level);
  out.n_total = universe.size();
  for (const UnitRef& u : universe) {
    const auto a = reference.find(u);
    const auto b = predicted.find(u);
    if (a != reference.end() && b != predicted.end()) {
      if (level_of(a->second) != level || level_of(b->second) != level) {
        throw InvariantError("label", "label level does not match unit " + episodekit::to_string(u));
      }
      out.matrix.cells[label_index(a->second)][label_index(b->second)] += 1.0;
      ++out.n_compared;
    } else if (options.missing_as_wrong && a != reference.end()) {
      out.matrix.unpredicted[label_index(a->second)] += 1.0;
      ++out.n_compared;
    } else {
      ++out.n_missing_excluded;
    }
  }
  if (out.n_compared == 0) {
    throw NoOverlap("no " + std::string(episodekit::to_string(level)) + " unit is labeled in both sets");
  }
  return out;
}

double accuracy(const ConfusionMatrix& m) {
  const double t = m.total();
  if (!(t > 0)) throw Error("accuracy of an empty confusion matrix");
  return m.diagonal() / t;
}

double chance_agreement(const ConfusionMatrix& m) {
  const double t = m.total();
  if (!(t > 0)) throw Error("chance agreement of an empty confusion matrix");
  double pe = 0;
  for (std::size_t i = 0; i < m.size(); ++i) pe += m.row_sum(i) * m.col_sum(i);
  return pe / (t * t);
}

std::optional<double> cohen_kappa(const ConfusionMatrix& m) {
  const double po = accuracy(m);
  const double pe = chance_agreement(m);
  if (1.0 - pe <= 1e-12) return std::nullopt;
  return (po - pe) / (1.0 - pe);
}

namespace {

std::vector<LabelStats> label_stats(const ConfusionMatrix& m) {
  std::vector<LabelStats> out;
  for (std::size_t c = 0; c < m.size(); ++c) {
    LabelStats s;
    s.label = std::string(label_name(m.level, c));
    s.support = m.row_sum(c);
    const double col = m.col_sum(c);
    if (col > 0) s.precision = m.cells[c][c] / col;
    if (s.support > 0) s.recall = m.cells[c][c] / s.support;
    out.push_back(std::move(s));
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

AgreementReport agreement_report(const LabelMap& a, const LabelMap& b, Level level, const CompareOptions& options) {
  const Comparison cmp = compare(a, b, level, options);
  AgreementReport r = report_from_matrix(cmp.matrix);
  r.n_units_total = cmp.n_total;
  r.n_units_compared = cmp.n_compared;
  r.n_missing_excluded = cmp.n_missing_excluded;
  r.missing_as_wrong = options.missing_as_wrong;
  if (cmp.n_missing_excluded > 0) {
    r.notes.push_back(std::to_string(cmp.n_missing_excluded) + " unit(s) lacking a label in either set were excluded");
  }
  if (options.missing_as_wrong) {
    double unpredicted = 0;
    for (double v : cmp.matrix.unpredicted) unpredicted += v;
    if (unpredicted > 0) {
      r.notes.push_back(fixed(unpredicted, 0) + " unit(s) without a prediction were scored as wrong");
    }
  }
  return r;
}

AgreementReport report_from_matrix(const ConfusionMatrix& m, const std::optional<Reference>& reference) {
  AgreementReport r;
  r.level = m.level;
  r.confusion = m;
  r.accuracy = accuracy(m);
  r.kappa = cohen_kappa(m);
  r.per_label = label_stats(m);
  if (!r.kappa) r.notes.push_back("kappa undefined: chance agreement is 1");
  if (!reference) return r;

  const std::string who = reference->name.empty() ? std::string("reference") : reference->name;
  if (reference->accuracy) {
    const double gap = *reference->accuracy - r.accuracy;
    // Each printed cell is within 0.05 percentage points of its true value.
    const double slack = 0.0005 * static_cast<double>(m.size());
    std::string note = who + ": diagonal accuracy " + fixed(r.accuracy, 3) + " vs reported " +
                       fixed(*reference->accuracy, 3) + " (gap " + fixed(std::abs(gap), 3) + "). ";
    if (m.nominal_total) {
      note += "Cells sum to " + fixed(m.cell_sum(), 1) + " against a nominal " + fixed(*m.nominal_total, 0) + ". ";
    }
    note += "Rounding the " + std::to_string(m.size()) + " diagonal cells to one decimal moves accuracy by at most " +
            fixed(slack, 4);
    note += std::abs(gap) <= slack + 1e-12 ? ", which covers the gap." : ", so cell rounding alone does not cover the gap.";
    r.notes.push_back(std::move(note));
  }
  if (reference->kappa) {
    if (r.kappa) {
      r.notes.push_back(who + ": kappa " + fixed(*r.kappa, 3) + " vs reported " + fixed(*reference->kappa, 3) +
                        " (gap " + fixed(std::abs(*reference->kappa - *r.kappa), 3) + ").");
    } else {
      r.notes.push_back(who + ": kappa undefined here, reported " + fixed(*reference->kappa, 3) + ".");
    }
  }
  return r;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    std::string field(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    const auto b = field.find_first_not_of(" \t\"");
    const auto e = field.find_last_not_of(" \t\"");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

ConfusionMatrix load_confusion_csv(const std::filesystem::path& path, Level level, Normalization given) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  const std::string src = path.string();
  const std::size_t n = label_count(level);
  if (lines.empty()) throw ParseError(src, 0, "empty file");

  auto parse_axis = [&](const std::string& s, std::size_t line) {
    const auto l = schema::try_parse_label(s, level);
    if (!l) throw ParseError(src, line, "unknown label '" + s + "'");
    return label_index(*l);
  };

  const auto header = split_csv_line(lines[0].second);
  if (header.size() != n + 1) throw ParseError(src, lines[0].first, "expected " + std::to_string(n) + " label columns");
  std::vector<std::size_t> col_of(n);
  std::set<std::size_t> seen;
  for (std::size_t c = 0; c < n; ++c) {
    col_of[c] = parse_axis(header[c + 1], lines[0].first);
    if (!seen.insert(col_of[c]).second) throw ParseError(src, lines[0].first, "duplicate column " + header[c + 1]);
  }
  if (lines.size() != n + 1) throw ParseError(src, 0, "expected " + std::to_string(n) + " label rows");

  ConfusionMatrix m(level);
  seen.clear();
  for (std::size_t r = 0; r < n; ++r) {
    const auto [line, s] = lines[r + 1];
    const auto fields = split_csv_line(s);
    if (fields.size() != n + 1) throw ParseError(src, line, "expected " + std::to_string(n + 1) + " fields");
    const std::size_t row = parse_axis(fields[0], line);
    if (!seen.insert(row).second) throw ParseError(src, line, "duplicate row " + fields[0]);
    for (std::size_t c = 0; c < n; ++c) {
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(fields[c + 1], &used);
        if (used != fields[c + 1].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError(src, line, "not a number: '" + fields[c + 1] + "'");
      }
      if (!(v >= 0)) throw ParseError(src, line, "negative cell");
      m.cells[row][col_of[c]] = v;
    }
  }
  if (given == Normalization::PercentOfTotal) m.nominal_total = 100.0;
  if (given == Normalization::PercentOfRow) throw Error("row-normalized tables cannot be loaded as a joint matrix");
  return m;
}

std::string short_name(Level level, std::size_t index) {
  if (level == Level::Sentence) {
    static const char* const names[] = {"Read", "Analyze", "Plan", "Impl.", "Expl.", "Verif.", "Monit."};
    return names[index];
  }
  return std::string(label_name(level, index));
}

std::string format_percent(double v) {
  std::string s = fixed(v, 1);
  return s == "-0.0" ? "0.0" : s;
}

std::string format_score(std::optional<double> v) { return v ? fixed(*v, 3) : "n/a"; }

namespace {

std::string cell_text(double v, Normalization n) {
  if (n != Normalization::Counts) return format_percent(v);
  if (v == std::floor(v) && std::abs(v) < 1e15) return fixed(v, 0);
  return fixed(v, 1);
}

json optional_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const AgreementReport& r) {
  json per_label = json::array();
  for (const auto& s : r.per_label) {
    per_label.push_back({{"label", s.label},
                         {"support", s.support},
                         {"precision", optional_json(s.precision)},
                         {"recall", optional_json(s.recall)}});
  }
  json labels = json::array();
  for (std::size_t i = 0; i < r.confusion.size(); ++i) labels.push_back(label_name(r.level, i));
  json out = {{"level", episodekit::to_string(r.level)},
              {"n_units_total", r.n_units_total},
              {"n_units_compared", r.n_units_compared},
              {"n_missing_excluded", r.n_missing_excluded},
              {"missing_as_wrong", r.missing_as_wrong},
              {"accuracy", r.accuracy},
              {"kappa", optional_json(r.kappa)},
              {"per_label", per_label},
              {"confusion", {{"labels", labels}, {"counts", r.confusion.cells}}},
              {"note", r.notes}};
  if (r.missing_as_wrong) out["confusion"]["unpredicted"] = r.confusion.unpredicted;
  return out;
}

std::string confusion_csv(const ConfusionMatrix& m, Normalization n) {
  const auto v = m.normalized(n);
  std::string out = "true\\predicted";
  for (std::size_t c = 0; c < m.size(); ++c) out += "," + std::string(label_name(m.level, c));
  out += "\n";
  for (std::size_t r = 0; r < m.size(); ++r) {
    out += label_name(m.level, r);
    for (std::size_t c = 0; c < m.size(); ++c) out += "," + cell_text(v[r][c], n);
    out += "\n";
  }
  return out;
}

namespace {

// Pads every column to its widest cell.
std::string aligned_table(const std::vector<std::vector<std::string>>& rows, std::size_t left_cols) {
  std::vector<std::size_t> width(rows.at(0).size(), 0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto pad = [&](const std::string& s, std::size_t c) {
    const std::string fill(width[c] - s.size(), ' ');
    return c < left_cols ? s + fill : fill + s;
  };
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += "|";
    for (std::size_t c = 0; c < rows[i].size(); ++c) out += " " + pad(rows[i][c], c) + " |";
    out += "\n";
    if (i == 0) {
      out += "|";
      for (std::size_t c = 0; c < width.size(); ++c) {
        out += c < left_cols ? " " + std::string(width[c], '-') + " |" : " " + std::string(width[c] - 1, '-') + ": |";
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace

std::string confusion_markdown(const ConfusionMatrix& m, Normalization n, const std::string& title) {
  const auto v = m.normalized(n);
  std::vector<std::vector<std::string>> rows;
  rows.push_back({title});
  for (std::size_t c = 0; c < m.size(); ++c) rows[0].push_back(short_name(m.level, c));
  for (std::size_t r = 0; r < m.size(); ++r) {
    std::vector<std::string> row{std::string(label_name(m.level, r))};
    for (std::size_t c = 0; c < m.size(); ++c) row.push_back(cell_text(v[r][c], n));
    rows.push_back(std::move(row));
  }
  return aligned_table(rows, 1);
}

std::string score_table_markdown(const std::vector<ModelScore>& scores) {
  std::vector<std::vector<std::string>> rows{{"Model", "Accuracy", "Cohen's κ"}};
  for (const auto& s : scores) rows.push_back({s.model, format_score(s.accuracy), format_score(s.kappa)});
  return aligned_table(rows, 1);
}

std::string variant_table_markdown(const std::vector<VariantScores>& scores) {
  std::vector<std::vector<std::string>> rows{{"Model"}};
  for (PromptVariant v : kPromptVariants) {
    const std::string name = v == PromptVariant::ExGuide ? "Ex+Guide" : std::string(episodekit::to_string(v));
    rows[0].push_back(name + " Para");
    rows[0].push_back(name + " Sent");
  }
  for (const auto& s : scores) {
    std::vector<std::string> row{s.model};
    for (PromptVariant v : kPromptVariants) {
      const auto it = s.cells.find(v);
      row.push_back(it == s.cells.end() ? "n/a" : format_score(it->second.first));
      row.push_back(it == s.cells.end() ? "n/a" : format_score(it->second.second));
    }
    rows.push_back(std::move(row));
  }
  return aligned_table(rows, 1);
}

}  // namespace episodekit::metrics
