#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/kmeans.hpp"

namespace srcsel {

// Bumped whenever signature extraction changes in a way that alters output.
inline constexpr const char* kSignatureAlgorithmVersion = "srcsel-signature-1";

// Color centroids with weights summing to one. Used for single images and,
// through DatasetSignature, for whole datasets.
struct ImageSignature {
  std::vector<Color> centroids;
  std::vector<double> weights;

  std::size_t size() const { return centroids.size(); }
};

struct DatasetSignature {
  std::vector<Color> centroids;
  std::vector<double> weights;

  std::string dataset_id;
  std::string content_hash;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return centroids.size(); }
};

struct KSelectionReport {
  std::vector<std::size_t> candidates;
  std::vector<double> mean_rss;  // aligned with candidates
  std::size_t chosen_k = 0;
  std::vector<std::string> sample_ids;
};

struct SignatureOptions {
  bool subsample = true;
  std::size_t max_pixels = std::size_t{1} << 18;
  unsigned threads = 1;
};

// Distinct colors of the block with their pixel multiplicities, sorted by color.
WeightedPoints color_histogram(const PixelBlock& pixels);

// Seeded uniform subsample down to max_pixels; returns the input when already small.
PixelBlock subsample_pixels(const PixelBlock& pixels, std::size_t max_pixels, std::uint64_t seed);

ImageSignature image_kmeans(const PixelBlock& pixels, std::size_t k, std::uint64_t seed);

// Squared distance of every pixel to its nearest signature centroid, summed.
double rss(const PixelBlock& pixels, const ImageSignature& signature);

// Averages RSS over the sample for each K in [k_min, k_max]. Each K warm
// starts from the previous K's centers plus one k-means++ draw, so the RSS
// curve is non-increasing. The chosen K is the first whose step to K+1 gains
// less than drop_threshold of the RSS at k_min (or whose RSS is already 0);
// k_max when no such K exists.
KSelectionReport select_k(const std::vector<PixelBlock>& sample, std::size_t k_min,
                          std::size_t k_max, double drop_threshold, std::uint64_t seed);

// Weighted re-clustering of all per-image centroids (mass = image weight).
DatasetSignature dataset_signature(const std::vector<ImageSignature>& signatures, std::size_t k,
                                   std::uint64_t seed);

// Per-image signatures for every record, in record order. Parallel over
// records when options.threads > 1; output does not depend on thread count.
std::vector<ImageSignature> image_signatures(const DatasetManifest& manifest, std::size_t k,
                                             std::uint64_t seed, const SignatureOptions& options);

// Full extraction for a manifest. content_hash is filled by the caller (or
// by compute_dataset_signature_cached).
DatasetSignature compute_dataset_signature(const DatasetManifest& manifest, std::size_t k,
                                           std::uint64_t seed, const SignatureOptions& options);

// Sample used for K selection: min(sample_size, M) records chosen by seed.
std::vector<std::size_t> k_selection_sample(const DatasetManifest& manifest,
                                            std::size_t sample_size, std::uint64_t seed);

// Signature cache files.
json signature_to_json(const DatasetSignature& signature);
DatasetSignature signature_from_json(const json& doc);
void save_signature(const DatasetSignature& signature, const std::filesystem::path& file);
// Returns nullopt on a missing file or any corruption.
std::optional<DatasetSignature> load_signature(const std::filesystem::path& file);

// Combines the manifest content hash with the algorithm version and options.
std::string signature_cache_key(const std::string& manifest_hash, const SignatureOptions& options);

}  // namespace srcsel
