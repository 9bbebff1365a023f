#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "srcsel/dataset.hpp"

namespace srcsel::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "srcsel");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Per-dataset, per-label instance counts of the eleven magnetic-tile datasets
// (rows y_0..y_19), zero entries omitted.
const std::vector<std::string>& table1_datasets();
const std::map<std::string, std::size_t>& table1_counts(const std::string& dataset_id);
// "Samples" row: total annotated instances per dataset.
std::size_t table1_samples(const std::string& dataset_id);

// A manifest reproducing the counts with one label per image. Image files are
// not created.
DatasetManifest count_manifest(const std::string& dataset_id, const std::map<std::string, std::size_t>& counts);

// Solid two-color image: the first `first_fraction` of pixels (row-major) take
// color a, the rest color b; uniform per-channel noise in [-noise, noise].
PixelBlock two_color_image(std::size_t height, std::size_t width, const std::array<int, 3>& a,
                           const std::array<int, 3>& b, double first_fraction, int noise, std::uint64_t seed);

struct SyntheticImage {
  PixelBlock pixels;
  std::vector<std::string> labels;
  json meta;
};

// Writes images as PNG under dir/images and a manifest at dir/manifest.json.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::string& dataset_id,
                                    const std::vector<SyntheticImage>& images);

// Target / A / B / C datasets used by the end-to-end ranking checks:
// A shares the target's two-color mixture, B shifts one color by 120 per
// channel, C uses labels disjoint from the target.
struct RankingFixture {
  std::filesystem::path target;
  std::filesystem::path source_a;
  std::filesystem::path source_b;
  std::filesystem::path source_c;
};
RankingFixture make_ranking_fixture(const std::filesystem::path& dir, std::uint64_t seed,
                                    std::size_t images_per_dataset = 64, std::size_t side = 64);

// Reads a whole file as bytes.
std::string read_file(const std::filesystem::path& file);

}  // namespace srcsel::testing
