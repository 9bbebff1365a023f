#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace srcsel {

using Color = std::array<double, 3>;

inline double squared_distance(const Color& a, const Color& b) {
  const double d0 = a[0] - b[0];
  const double d1 = a[1] - b[1];
  const double d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

// Points with non-negative masses. Pixels enter with mass 1 (or their
// multiplicity after deduplication); image centroids enter with their weight.
struct WeightedPoints {
  std::vector<Color> points;
  std::vector<double> mass;

  std::size_t size() const { return points.size(); }
};

struct KMeansResult {
  std::vector<Color> centers;           // empty clusters keep their last position
  std::vector<double> cluster_mass;     // total member mass per center
  std::vector<std::size_t> assignment;  // point -> center index
  std::size_t iterations = 0;
  std::vector<double> rss_history;      // weighted RSS after each assignment step
};

constexpr std::size_t kMaxLloydIterations = 100;

// k-means++ seeding driven by `seed`. Returns fewer than k centers when the
// input has fewer than k distinct points with positive mass.
std::vector<Color> kmeanspp_seed(const WeightedPoints& data, std::size_t k, std::uint64_t seed);

// Adds one more k-means++ center to an existing set; returns false when every
// point already coincides with a center.
bool kmeanspp_extend(const WeightedPoints& data, std::vector<Color>& centers, std::uint64_t seed);

// Textbook Lloyd iteration. Reference implementation for the accelerated path.
KMeansResult lloyd_naive(const WeightedPoints& data, std::vector<Color> init,
                         std::size_t max_iterations = kMaxLloydIterations);

// Lloyd iteration with Elkan's triangle-inequality bounds. Produces the same
// assignments and centers as lloyd_naive from the same initialization.
KMeansResult lloyd_elkan(const WeightedPoints& data, std::vector<Color> init,
                         std::size_t max_iterations = kMaxLloydIterations);

// Index of the nearest center; ties go to the lowest index.
std::size_t nearest_center(const Color& p, std::span<const Color> centers);

// Weighted RSS under nearest-center assignment.
double weighted_rss(const WeightedPoints& data, std::span<const Color> centers);

}  // namespace srcsel
