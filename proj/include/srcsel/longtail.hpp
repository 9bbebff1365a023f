#pragma once

#include <cstddef>
#include <vector>

#include "srcsel/dataset.hpp"

namespace srcsel {

// Lorenz-curve Gini coefficient of a class-count distribution.
struct GiniResult {
  std::vector<std::size_t> sorted_counts;  // ascending, zero counts removed
  std::vector<double> cumulative;          // C_1..C_k, ending at 1
  double area_b = 0.0;                     // area under the Lorenz curve
  double area_a = 0.0;                     // 0.5 - area_b
  double delta = 0.0;                      // A / (A + B)
};

// Cumulative shares are normalized by the total count so the curve ends at
// 1. Throws std::invalid_argument when no count is positive.
GiniResult gini(const std::vector<std::size_t>& counts);
GiniResult gini(const ClassCounts& counts);

}  // namespace srcsel
