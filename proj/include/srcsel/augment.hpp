#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srcsel/dataset.hpp"

namespace srcsel {

enum class TransformKind {
  HorizontalFlip,
  VerticalFlip,
  Rotate90,  // clockwise
  Rotate180,
  Rotate270,
  ContrastScale,
  GaussianNoise,
};

std::string to_string(TransformKind kind);
TransformKind parse_transform_kind(const std::string& text);
const std::vector<TransformKind>& all_transform_kinds();

struct TransformOp {
  TransformKind kind = TransformKind::HorizontalFlip;
  double factor = 1.0;      // ContrastScale, > 0
  double sigma = 0.0;       // GaussianNoise, >= 0
  std::uint64_t seed = 0;   // GaussianNoise

  // Flips and rotations move pixels and would invalidate box geometry.
  bool geometric() const;
  std::string describe() const;

  static TransformOp flip_horizontal() { return {TransformKind::HorizontalFlip}; }
  static TransformOp flip_vertical() { return {TransformKind::VerticalFlip}; }
  static TransformOp rotate(int degrees);
  static TransformOp contrast(double factor);
  static TransformOp noise(double sigma, std::uint64_t seed);
};

using TransformChain = std::vector<TransformOp>;

std::string describe(const TransformChain& chain);

PixelBlock apply_transform(const PixelBlock& pixels, const TransformOp& op);
PixelBlock apply_chain(PixelBlock pixels, const TransformChain& chain);

struct AugmentConfig {
  std::size_t min_count = 1;
  std::size_t max_count = 1;
  std::uint64_t seed = 0;
  std::vector<TransformKind> allowed_ops = all_transform_kinds();

  static AugmentConfig from_json(const json& doc);
  json to_json() const;
};

// min = median class count, max = 3 x median.
std::pair<std::size_t, std::size_t> default_band(const ClassCounts& counts);

struct OversampleDirective {
  std::string image_id;
  TransformChain chain;
  std::string new_id;
};

struct AugmentPlan {
  std::size_t min_count = 0;
  std::size_t max_count = 0;
  std::uint64_t seed = 0;
  std::map<LabelId, std::size_t> target_counts;
  std::vector<OversampleDirective> oversample;
  std::vector<std::string> undersample;  // original image ids to drop
  ClassCounts projected_counts;          // counts after applying the plan
  std::vector<LabelId> infeasible;       // classes the plan could not bring into band

  bool empty() const { return oversample.empty() && undersample.empty(); }
  json to_json() const;
};

// Metadata keys treated as annotation geometry; images carrying any of them
// are only augmented with photometric ops.
bool has_geometry_metadata(const ImageRecord& record);

AugmentPlan plan_augmentation(const DatasetManifest& manifest, const AugmentConfig& config);
AugmentPlan plan_augmentation(const DatasetManifest& manifest, std::size_t min_count,
                              std::size_t max_count, std::uint64_t seed);

// Writes augmented images under output_dir/images and output_dir/manifest.json.
// Returns the written manifest (base_dir = output_dir).
DatasetManifest materialize(const AugmentPlan& plan, const DatasetManifest& manifest,
                            const std::filesystem::path& output_dir, unsigned threads = 1);

}  // namespace srcsel
