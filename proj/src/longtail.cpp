#include "srcsel/longtail.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace srcsel {

GiniResult gini(const std::vector<std::size_t>& counts) {
  GiniResult res;
  for (std::size_t c : counts)
    if (c > 0) res.sorted_counts.push_back(c);
  if (res.sorted_counts.empty()) throw std::invalid_argument("gini: no positive class counts");
  std::sort(res.sorted_counts.begin(), res.sorted_counts.end());

  // Areas are formed from exact integer sums: with S_i the running totals,
  // B = sum(S_i + S_{i-1}) / (2kT) and A = (kT - sum(S_i + S_{i-1})) / (2kT).
  const std::uint64_t k = res.sorted_counts.size();
  std::uint64_t total = 0;
  for (std::size_t c : res.sorted_counts) total += c;

  std::uint64_t running = 0;
  std::uint64_t trapezoid_sum = 0;
  res.cumulative.reserve(res.sorted_counts.size());
  for (std::size_t c : res.sorted_counts) {
    const std::uint64_t previous = running;
    running += c;
    trapezoid_sum += running + previous;
    res.cumulative.push_back(static_cast<double>(running) / static_cast<double>(total));
  }
  const double denom = 2.0 * static_cast<double>(k) * static_cast<double>(total);
  res.area_b = static_cast<double>(trapezoid_sum) / denom;
  res.area_a = static_cast<double>(k * total - trapezoid_sum) / denom;
  res.delta = static_cast<double>(k * total - trapezoid_sum) / static_cast<double>(k * total);
  return res;
}

GiniResult gini(const ClassCounts& counts) {
  std::vector<std::size_t> values;
  values.reserve(counts.size());
  for (const auto& [label, n] : counts) values.push_back(n);
  return gini(values);
}

}  // namespace srcsel
