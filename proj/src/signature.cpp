#include "srcsel/signature.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "srcsel/error.hpp"
#include "srcsel/random.hpp"

namespace fs = std::filesystem;

namespace srcsel {

namespace {

// Collapses identical colors and drops zero-mass entries; result sorted by color.
WeightedPoints merge_points(const std::vector<Color>& points, const std::vector<double>& mass) {
  std::map<Color, double> merged;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mass[i] > 0.0) merged[points[i]] += mass[i];
  }
  WeightedPoints out;
  out.points.reserve(merged.size());
  out.mass.reserve(merged.size());
  for (const auto& [c, m] : merged) {
    out.points.push_back(c);
    out.mass.push_back(m);
  }
  return out;
}

// Keeps non-empty clusters, merges coincident centers, normalizes weights.
std::pair<std::vector<Color>, std::vector<double>> normalized_clusters(const KMeansResult& res) {
  WeightedPoints kept = merge_points(res.centers, res.cluster_mass);
  double total = 0.0;
  for (double m : kept.mass) total += m;
  for (double& m : kept.mass) m /= total;
  return {std::move(kept.points), std::move(kept.mass)};
}

}  // namespace

WeightedPoints color_histogram(const PixelBlock& pixels) {
  std::vector<std::uint32_t> keys(pixels.pixel_count());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::uint8_t* px = &pixels.data[i * 3];
    keys[i] = (std::uint32_t{px[0]} << 16) | (std::uint32_t{px[1]} << 8) | std::uint32_t{px[2]};
  }
  std::sort(keys.begin(), keys.end());
  WeightedPoints out;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const std::uint32_t key = keys[i];
    out.points.push_back({static_cast<double>((key >> 16) & 0xff), static_cast<double>((key >> 8) & 0xff),
                          static_cast<double>(key & 0xff)});
    out.mass.push_back(static_cast<double>(j - i));
    i = j;
  }
  return out;
}

PixelBlock subsample_pixels(const PixelBlock& pixels, std::size_t max_pixels, std::uint64_t seed) {
  if (pixels.pixel_count() <= max_pixels) return pixels;
  const auto chosen = sample_indices(pixels.pixel_count(), max_pixels, seed);
  // Stored as a single row; only the color multiset matters downstream.
  PixelBlock out(1, chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    std::copy_n(&pixels.data[chosen[i] * 3], 3, &out.data[i * 3]);
  }
  return out;
}

ImageSignature image_kmeans(const PixelBlock& pixels, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("image_kmeans: K must be at least 1");
  if (pixels.pixel_count() == 0) throw std::invalid_argument("image_kmeans: empty pixel block");
  const WeightedPoints hist = color_histogram(pixels);
  KMeansResult res = lloyd_elkan(hist, kmeanspp_seed(hist, k, seed));
  auto [centroids, weights] = normalized_clusters(res);
  return ImageSignature{std::move(centroids), std::move(weights)};
}

double rss(const PixelBlock& pixels, const ImageSignature& signature) {
  if (signature.centroids.empty()) throw std::invalid_argument("rss: signature has no centroids");
  return weighted_rss(color_histogram(pixels), signature.centroids);
}

KSelectionReport select_k(const std::vector<PixelBlock>& sample, std::size_t k_min,
                          std::size_t k_max, double drop_threshold, std::uint64_t seed) {
  if (sample.empty()) throw std::invalid_argument("select_k: empty sample");
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("select_k: invalid K range");
  if (!(drop_threshold >= 0.0)) throw std::invalid_argument("select_k: negative drop threshold");

  KSelectionReport report;
  for (std::size_t k = k_min; k <= k_max; ++k) report.candidates.push_back(k);
  report.mean_rss.assign(report.candidates.size(), 0.0);

  for (const auto& pixels : sample) {
    if (pixels.pixel_count() == 0) throw std::invalid_argument("select_k: empty image in sample");
    const WeightedPoints hist = color_histogram(pixels);
    std::vector<Color> centers = lloyd_elkan(hist, kmeanspp_seed(hist, k_min, seed)).centers;
    report.mean_rss[0] += weighted_rss(hist, centers);
    for (std::size_t idx = 1; idx < report.candidates.size(); ++idx) {
      if (kmeanspp_extend(hist, centers, derive_seed(seed, report.candidates[idx]))) {
        centers = lloyd_elkan(hist, std::move(centers)).centers;
      }
      report.mean_rss[idx] += weighted_rss(hist, centers);
    }
  }
  for (double& r : report.mean_rss) r /= static_cast<double>(sample.size());

  const double base = report.mean_rss[0];
  report.chosen_k = k_max;
  for (std::size_t idx = 0; idx + 1 < report.candidates.size(); ++idx) {
    const double gain = report.mean_rss[idx] - report.mean_rss[idx + 1];
    if (report.mean_rss[idx] == 0.0 || gain < drop_threshold * base) {
      report.chosen_k = report.candidates[idx];
      break;
    }
  }
  return report;
}

DatasetSignature dataset_signature(const std::vector<ImageSignature>& signatures, std::size_t k,
                                   std::uint64_t seed) {
  if (signatures.empty()) throw std::invalid_argument("dataset_signature: no image signatures");
  if (k < 1) throw std::invalid_argument("dataset_signature: K must be at least 1");
  std::vector<Color> points;
  std::vector<double> mass;
  for (const auto& s : signatures) {
    points.insert(points.end(), s.centroids.begin(), s.centroids.end());
    mass.insert(mass.end(), s.weights.begin(), s.weights.end());
  }
  const WeightedPoints data = merge_points(points, mass);
  if (data.size() == 0) throw std::invalid_argument("dataset_signature: signatures carry no mass");
  KMeansResult res = lloyd_elkan(data, kmeanspp_seed(data, k, seed));
  auto [centroids, weights] = normalized_clusters(res);

  DatasetSignature out;
  out.centroids = std::move(centroids);
  out.weights = std::move(weights);
  out.k = k;
  out.seed = seed;
  return out;
}

std::vector<ImageSignature> image_signatures(const DatasetManifest& manifest, std::size_t k,
                                             std::uint64_t seed, const SignatureOptions& options) {
  const std::size_t n = manifest.records.size();
  std::vector<ImageSignature> out(n);
  std::vector<std::exception_ptr> errors(n);

  auto work = [&](std::size_t i) {
    try {
      const ImageRecord& rec = manifest.records[i];
      PixelBlock pixels = load_pixels(manifest, rec);
      if (options.subsample && pixels.pixel_count() > options.max_pixels) {
        pixels = subsample_pixels(pixels, options.max_pixels, derive_seed(seed, rec.id));
      }
      out[i] = image_kmeans(pixels, k, seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

DatasetSignature compute_dataset_signature(const DatasetManifest& manifest, std::size_t k,
                                           std::uint64_t seed, const SignatureOptions& options) {
  if (manifest.records.empty())
    throw std::invalid_argument("dataset '" + manifest.dataset_id + "' has no images");
  DatasetSignature sig = dataset_signature(image_signatures(manifest, k, seed, options), k, seed);
  sig.dataset_id = manifest.dataset_id;
  return sig;
}

std::vector<std::size_t> k_selection_sample(const DatasetManifest& manifest,
                                            std::size_t sample_size, std::uint64_t seed) {
  return sample_indices(manifest.records.size(), sample_size, derive_seed(seed, "k-selection"));
}

json signature_to_json(const DatasetSignature& s) {
  json centroids = json::array();
  for (const auto& c : s.centroids) centroids.push_back({c[0], c[1], c[2]});
  return json{{"dataset_id", s.dataset_id}, {"content_hash", s.content_hash}, {"K", s.k},
              {"seed", s.seed},             {"centroids", centroids},        {"weights", s.weights}};
}

DatasetSignature signature_from_json(const json& doc) {
  DatasetSignature s;
  s.dataset_id = doc.at("dataset_id").get<std::string>();
  s.content_hash = doc.at("content_hash").get<std::string>();
  s.k = doc.at("K").get<std::size_t>();
  s.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& c : doc.at("centroids")) {
    if (!c.is_array() || c.size() != 3) throw std::invalid_argument("centroid must have 3 components");
    s.centroids.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});
  }
  s.weights = doc.at("weights").get<std::vector<double>>();
  if (s.weights.size() != s.centroids.size() || s.centroids.empty())
    throw std::invalid_argument("centroid/weight count mismatch");
  double total = 0.0;
  for (double w : s.weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("weights do not sum to 1");
  return s;
}

void save_signature(const DatasetSignature& signature, const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write signature cache '" + file.string() + "'");
  out << signature_to_json(signature).dump(2) << '\n';
}

std::optional<DatasetSignature> load_signature(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return signature_from_json(json::parse(in));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string signature_cache_key(const std::string& manifest_hash, const SignatureOptions& options) {
  std::string material = manifest_hash;
  material += '|';
  material += kSignatureAlgorithmVersion;
  material += options.subsample ? "|sub=" + std::to_string(options.max_pixels) : "|sub=off";
  return sha256_hex(material);
}

}  // namespace srcsel
