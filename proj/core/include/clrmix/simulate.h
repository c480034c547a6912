#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "clrmix/clr.h"

namespace clrmix {

// Synthetic strata with i.i.d. N(0, 1) predictors and winners drawn from the
// model's own softmax at beta.
struct SimulationConfig {
  std::size_t strata = 500;
  std::size_t stratum_size = 8;
  std::vector<double> beta{1.5, 0.8, 2.0};
  std::uint64_t seed = 2019;
};

// Predictors are named x1..xp, strata s0001.., competitors c1..cn. No
// prospective stratum.
Dataset simulate_dataset(const SimulationConfig& config);

}  // namespace clrmix
