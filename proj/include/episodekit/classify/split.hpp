#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "episodekit/labels.hpp"

namespace episodekit::classify {

struct SplitSpec {
  double train_fraction = 0.70;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainTestSplit {
  std::vector<UnitRef> train;  // sorted
  std::vector<UnitRef> test;   // sorted
  std::vector<std::string> warnings;
};

// Stratified by label: each class contributes round(train_fraction * size)
// members to train, chosen by a seeded shuffle of the class sorted by unit.
// Classes with fewer than two members go wholly to train with a warning.
TrainTestSplit split_train_test(const std::vector<std::pair<UnitRef, AnyLabel>>& units,
                                const SplitSpec& spec);

}  // namespace episodekit::classify
