#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace srcsel {

using json = nlohmann::json;

// Symbolic category identifier, e.g. "y_2". Compared by exact string value.
struct LabelId {
  std::string name;

  LabelId() = default;
  explicit LabelId(std::string n);

  auto operator<=>(const LabelId&) const = default;
};

using LabelSet = std::set<LabelId>;

struct ImageRecord {
  std::string id;
  std::string path;  // as written in the manifest; see DatasetManifest::resolve
  int width = 0;
  int height = 0;
  std::vector<LabelId> labels;  // one entry per annotated instance
  json meta;                    // opaque; null when absent
  json extra = json::object();  // unknown record fields, carried through
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<ImageRecord> records;
  json extra = json::object();  // unknown top-level fields

  // Directory relative record paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ImageRecord& record) const;
  const ImageRecord* find(const std::string& id) const;
  std::size_t instance_count() const;
};

// Label -> instance count. Labels with zero instances are absent.
using ClassCounts = std::map<LabelId, std::size_t>;

// Row-major height x width x 3 block of 8-bit channel values.
struct PixelBlock {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  PixelBlock() = default;
  PixelBlock(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), data(h * w * 3, fill) {}

  std::size_t pixel_count() const { return height * width; }
  std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch) {
    return data[(row * width + col) * 3 + ch];
  }
  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data[(row * width + col) * 3 + ch];
  }

  bool operator==(const PixelBlock&) const = default;
};

// Validates against the manifest schema; errors name the offending field.
DatasetManifest parse_manifest(const json& doc, const std::filesystem::path& base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);

json manifest_to_json(const DatasetManifest& manifest);

// Relative record paths are rewritten so they still resolve from the new
// location. The output is byte-stable for equal manifests.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

ClassCounts class_counts(const DatasetManifest& manifest);
LabelSet label_set(const DatasetManifest& manifest);

// Decodes the record's image. Grayscale is replicated to three channels,
// alpha is dropped, 16-bit input is reduced to 8 bits.
PixelBlock load_pixels(const DatasetManifest& manifest, const ImageRecord& record);
PixelBlock load_pixels(const std::filesystem::path& file);
PixelBlock load_pixels(const std::filesystem::path& file, int expected_width, int expected_height);

// Lossless PNG.
void write_pixels(const PixelBlock& pixels, const std::filesystem::path& file);

// Hex SHA-256 helpers used for cache keys and derived file names.
std::string sha256_hex(const std::string& bytes);
std::string file_sha256_hex(const std::filesystem::path& file);

// Hash over the canonical manifest document and every referenced image file.
std::string manifest_content_hash(const DatasetManifest& manifest);

}  // namespace srcsel
