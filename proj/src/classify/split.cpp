#include "episodekit/classify/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "episodekit/error.hpp"
#include "episodekit/rng.hpp"

namespace episodekit::classify {

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvariantError("train_fraction", "must be in (0, 1)");
  }
}

TrainTestSplit split_train_test(const std::vector<std::pair<UnitRef, AnyLabel>>& units,
                                const SplitSpec& spec) {
  spec.validate();
  std::vector<UnitRef> all;
  for (const auto& entry : units) all.push_back(entry.first);
  std::sort(all.begin(), all.end());
  if (auto dup = std::adjacent_find(all.begin(), all.end()); dup != all.end()) {
    throw InvariantError("units", to_string(*dup) + " listed twice");
  }
  std::map<AnyLabel, std::vector<UnitRef>> by_label;
  for (const auto& [unit, label] : units) by_label[label].push_back(unit);

  TrainTestSplit out;
  // One generator for the whole split, consumed in canonical label order.
  Rng rng(spec.seed);
  for (auto& [label, members] : by_label) {
    std::sort(members.begin(), members.end());
    if (members.size() < 2) {
      out.warnings.push_back("label " + to_string(label) + " has " + std::to_string(members.size()) +
                             " member(s); placed wholly in train");
      out.train.insert(out.train.end(), members.begin(), members.end());
      continue;
    }
    rng.shuffle(std::span<UnitRef>(members));
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace episodekit::classify
