#include "srcsel/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "srcsel/random.hpp"

namespace srcsel {

namespace {

// Draws an index with probability proportional to score[i]. score must have
// a positive sum.
std::size_t draw_weighted(const std::vector<double>& score, double total, Rng& rng) {
  const double r = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (score[i] <= 0.0) continue;
    acc += score[i];
    last_positive = i;
    if (r < acc) return i;
  }
  return last_positive;
}

bool extend_with(const WeightedPoints& data, std::vector<Color>& centers, Rng& rng) {
  std::vector<double> score(data.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.mass[i] <= 0.0) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) best = std::min(best, squared_distance(data.points[i], c));
    if (centers.empty()) best = 1.0;
    score[i] = best * data.mass[i];
    total += score[i];
  }
  if (!(total > 0.0)) return false;
  centers.push_back(data.points[draw_weighted(score, total, rng)]);
  return true;
}

void check_input(const WeightedPoints& data) {
  if (data.points.size() != data.mass.size())
    throw std::invalid_argument("k-means: points and masses differ in length");
  if (data.points.empty()) throw std::invalid_argument("k-means: no points");
}

void update_centers(const WeightedPoints& data, const std::vector<std::size_t>& assignment,
                    std::vector<Color>& centers, std::vector<double>& cluster_mass) {
  const std::size_t k = centers.size();
  std::vector<Color> sums(k, Color{0.0, 0.0, 0.0});
  cluster_mass.assign(k, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t a = assignment[i];
    const double w = data.mass[i];
    cluster_mass[a] += w;
    sums[a][0] += w * data.points[i][0];
    sums[a][1] += w * data.points[i][1];
    sums[a][2] += w * data.points[i][2];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (cluster_mass[j] > 0.0) {
      centers[j] = {sums[j][0] / cluster_mass[j], sums[j][1] / cluster_mass[j],
                    sums[j][2] / cluster_mass[j]};
    }
  }
}

double assigned_rss(const WeightedPoints& data, const std::vector<std::size_t>& assignment,
                    const std::vector<Color>& centers) {
  double rss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    rss += data.mass[i] * squared_distance(data.points[i], centers[assignment[i]]);
  return rss;
}

// Bound slack absorbing floating error in the triangle-inequality bounds, so
// a pruned center is always strictly farther than the current one.
inline bool strictly_below(double value, double bound) {
  return value + 1e-9 * (1.0 + std::abs(bound)) < bound;
}

}  // namespace

std::size_t nearest_center(const Color& p, std::span<const Color> centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double d = squared_distance(p, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

double weighted_rss(const WeightedPoints& data, std::span<const Color> centers) {
  if (centers.empty()) throw std::invalid_argument("weighted_rss: no centers");
  double rss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    rss += data.mass[i] * squared_distance(data.points[i], centers[nearest_center(data.points[i], centers)]);
  }
  return rss;
}

std::vector<Color> kmeanspp_seed(const WeightedPoints& data, std::size_t k, std::uint64_t seed) {
  check_input(data);
  if (k == 0) throw std::invalid_argument("k-means: K must be at least 1");
  Rng rng(seed);
  std::vector<Color> centers;
  centers.reserve(k);
  while (centers.size() < k && extend_with(data, centers, rng)) {
  }
  return centers;
}

bool kmeanspp_extend(const WeightedPoints& data, std::vector<Color>& centers, std::uint64_t seed) {
  check_input(data);
  Rng rng(seed);
  return extend_with(data, centers, rng);
}

KMeansResult lloyd_naive(const WeightedPoints& data, std::vector<Color> init,
                         std::size_t max_iterations) {
  check_input(data);
  if (init.empty()) throw std::invalid_argument("k-means: no initial centers");
  KMeansResult res;
  res.centers = std::move(init);
  res.assignment.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    res.assignment[i] = nearest_center(data.points[i], res.centers);
  res.rss_history.push_back(assigned_rss(data, res.assignment, res.centers));

  std::vector<std::size_t> next(data.size());
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    update_centers(data, res.assignment, res.centers, res.cluster_mass);
    bool changed = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
      next[i] = nearest_center(data.points[i], res.centers);
      changed |= next[i] != res.assignment[i];
    }
    res.assignment.swap(next);
    res.iterations = it;
    res.rss_history.push_back(assigned_rss(data, res.assignment, res.centers));
    if (!changed) break;
  }
  update_centers(data, res.assignment, res.centers, res.cluster_mass);
  return res;
}

KMeansResult lloyd_elkan(const WeightedPoints& data, std::vector<Color> init,
                         std::size_t max_iterations) {
  check_input(data);
  if (init.empty()) throw std::invalid_argument("k-means: no initial centers");
  const std::size_t n = data.size();
  const std::size_t k = init.size();

  KMeansResult res;
  res.centers = std::move(init);
  res.assignment.resize(n);
  std::vector<double> upper(n);
  std::vector<double> lower(n * k);

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double d2 = squared_distance(data.points[i], res.centers[j]);
      lower[i * k + j] = std::sqrt(d2);
      if (d2 < best_d) {
        best_d = d2;
        best = j;
      }
    }
    res.assignment[i] = best;
    upper[i] = std::sqrt(best_d);
  }
  res.rss_history.push_back(assigned_rss(data, res.assignment, res.centers));

  std::vector<Color> previous(k);
  std::vector<double> drift(k);
  std::vector<double> center_dist(k * k);
  std::vector<double> half_gap(k);

  for (std::size_t it = 1; it <= max_iterations; ++it) {
    previous = res.centers;
    update_centers(data, res.assignment, res.centers, res.cluster_mass);
    for (std::size_t j = 0; j < k; ++j) drift[j] = std::sqrt(squared_distance(previous[j], res.centers[j]));
    for (std::size_t i = 0; i < n; ++i) {
      upper[i] += drift[res.assignment[i]];
      for (std::size_t j = 0; j < k; ++j) lower[i * k + j] = std::max(0.0, lower[i * k + j] - drift[j]);
    }
    for (std::size_t a = 0; a < k; ++a) {
      half_gap[a] = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < k; ++b) {
        const double d = std::sqrt(squared_distance(res.centers[a], res.centers[b]));
        center_dist[a * k + b] = d;
        if (a != b) half_gap[a] = std::min(half_gap[a], 0.5 * d);
      }
    }

    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t a = res.assignment[i];
      if (strictly_below(upper[i], half_gap[a])) continue;
      const Color& x = data.points[i];
      bool tight = false;
      double a_d2 = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == a) continue;
        if (strictly_below(upper[i], lower[i * k + j]) ||
            strictly_below(upper[i], 0.5 * center_dist[a * k + j]))
          continue;
        if (!tight) {
          a_d2 = squared_distance(x, res.centers[a]);
          upper[i] = std::sqrt(a_d2);
          lower[i * k + a] = upper[i];
          tight = true;
          if (strictly_below(upper[i], lower[i * k + j]) ||
              strictly_below(upper[i], 0.5 * center_dist[a * k + j]))
            continue;
        }
        const double j_d2 = squared_distance(x, res.centers[j]);
        lower[i * k + j] = std::sqrt(j_d2);
        if (j_d2 < a_d2 || (j_d2 == a_d2 && j < a)) {
          a = j;
          a_d2 = j_d2;
          upper[i] = lower[i * k + j];
        }
      }
      if (a != res.assignment[i]) {
        res.assignment[i] = a;
        changed = true;
      }
    }
    res.iterations = it;
    res.rss_history.push_back(assigned_rss(data, res.assignment, res.centers));
    if (!changed) break;
  }
  update_centers(data, res.assignment, res.centers, res.cluster_mass);
  return res;
}

}  // namespace srcsel
