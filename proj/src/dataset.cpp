#include "srcsel/dataset.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <openssl/evp.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "srcsel/error.hpp"

namespace fs = std::filesystem;

namespace srcsel {

LabelId::LabelId(std::string n) : name(std::move(n)) {
  if (name.empty()) throw std::invalid_argument("label id must be non-empty");
}

fs::path DatasetManifest::resolve(const ImageRecord& record) const {
  fs::path p(record.path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

const ImageRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& r : records)
    if (r.id == id) return &r;
  return nullptr;
}

std::size_t DatasetManifest::instance_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.labels.size();
  return n;
}

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
  throw ManifestError("manifest schema violation at '" + field + "': " + what);
}

int read_dimension(const json& img, const char* key, const std::string& where) {
  const std::string field = where + "." + key;
  if (!img.contains(key)) schema_error(field, "missing");
  const json& v = img.at(key);
  if (!v.is_number_integer()) schema_error(field, "expected integer");
  const auto n = v.get<long long>();
  if (n < 1 || n > (1LL << 30)) schema_error(field, "expected integer >= 1");
  return static_cast<int>(n);
}

std::string read_string(const json& obj, const char* key, const std::string& where,
                        bool allow_empty) {
  const std::string field = where.empty() ? std::string(key) : where + "." + key;
  if (!obj.contains(key)) schema_error(field, "missing");
  const json& v = obj.at(key);
  if (!v.is_string()) schema_error(field, "expected string");
  auto s = v.get<std::string>();
  if (!allow_empty && s.empty()) schema_error(field, "must be non-empty");
  return s;
}

}  // namespace

DatasetManifest parse_manifest(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) schema_error("$", "expected object");
  DatasetManifest m;
  m.base_dir = base_dir;
  m.dataset_id = read_string(doc, "dataset_id", "", false);
  if (!doc.contains("images")) schema_error("images", "missing");
  const json& images = doc.at("images");
  if (!images.is_array()) schema_error("images", "expected array");

  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "dataset_id" && it.key() != "images") m.extra[it.key()] = it.value();
  }

  std::unordered_set<std::string> seen;
  m.records.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const json& img = images[i];
    if (!img.is_object()) schema_error(where, "expected object");
    ImageRecord r;
    r.id = read_string(img, "id", where, false);
    r.path = read_string(img, "path", where, false);
    r.width = read_dimension(img, "width", where);
    r.height = read_dimension(img, "height", where);
    if (!img.contains("labels")) schema_error(where + ".labels", "missing");
    const json& labels = img.at("labels");
    if (!labels.is_array()) schema_error(where + ".labels", "expected array");
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const std::string lf = where + ".labels[" + std::to_string(j) + "]";
      if (!labels[j].is_string()) schema_error(lf, "expected string");
      auto name = labels[j].get<std::string>();
      if (name.empty()) schema_error(lf, "must be non-empty");
      r.labels.emplace_back(std::move(name));
    }
    if (img.contains("meta")) {
      const json& meta = img.at("meta");
      if (!meta.is_object() && !meta.is_null()) schema_error(where + ".meta", "expected object");
      r.meta = meta;
    }
    for (auto f = img.begin(); f != img.end(); ++f) {
      const auto& k = f.key();
      if (k != "id" && k != "path" && k != "width" && k != "height" && k != "labels" && k != "meta")
        r.extra[k] = f.value();
    }
    if (!seen.insert(r.id).second) throw ManifestError("duplicate image id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_manifest(doc, fs::absolute(path).parent_path());
}

namespace {

json to_json_with_paths(const DatasetManifest& m, const fs::path* new_base) {
  json doc = m.extra;
  doc["dataset_id"] = m.dataset_id;
  json images = json::array();
  for (const auto& r : m.records) {
    json img = r.extra;
    img["id"] = r.id;
    std::string path = r.path;
    if (new_base && !fs::path(r.path).is_absolute()) {
      path = fs::proximate(fs::weakly_canonical(m.resolve(r)), *new_base).generic_string();
    }
    img["path"] = path;
    img["width"] = r.width;
    img["height"] = r.height;
    json labels = json::array();
    for (const auto& l : r.labels) labels.push_back(l.name);
    img["labels"] = std::move(labels);
    if (!r.meta.is_null()) img["meta"] = r.meta;
    images.push_back(std::move(img));
  }
  doc["images"] = std::move(images);
  return doc;
}

}  // namespace

json manifest_to_json(const DatasetManifest& manifest) {
  return to_json_with_paths(manifest, nullptr);
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path target_dir = fs::weakly_canonical(fs::absolute(path).parent_path());
  fs::create_directories(target_dir);
  json doc = to_json_with_paths(manifest, &target_dir);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ManifestError("cannot write manifest '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw ManifestError("failed writing manifest '" + path.string() + "'");
}

ClassCounts class_counts(const DatasetManifest& manifest) {
  ClassCounts counts;
  for (const auto& r : manifest.records)
    for (const auto& l : r.labels) ++counts[l];
  return counts;
}

LabelSet label_set(const DatasetManifest& manifest) {
  LabelSet out;
  for (const auto& r : manifest.records) out.insert(r.labels.begin(), r.labels.end());
  return out;
}

PixelBlock load_pixels(const fs::path& file) {
  cv::Mat img = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw ImageError("cannot read image '" + file.string() + "'");
  if (img.depth() == CV_16U) {
    img.convertTo(img, CV_8U, 1.0 / 257.0);
  } else if (img.depth() != CV_8U) {
    throw ImageError("unsupported pixel depth in '" + file.string() + "'");
  }
  const int channels = img.channels();
  if (channels != 1 && channels != 3 && channels != 4)
    throw ImageError("unsupported channel count in '" + file.string() + "'");

  PixelBlock block(static_cast<std::size_t>(img.rows), static_cast<std::size_t>(img.cols));
  for (int r = 0; r < img.rows; ++r) {
    const std::uint8_t* row = img.ptr<std::uint8_t>(r);
    for (int c = 0; c < img.cols; ++c) {
      const std::uint8_t* px = row + static_cast<std::ptrdiff_t>(c) * channels;
      const auto rr = static_cast<std::size_t>(r);
      const auto cc = static_cast<std::size_t>(c);
      if (channels == 1) {
        block.at(rr, cc, 0) = block.at(rr, cc, 1) = block.at(rr, cc, 2) = px[0];
      } else {
        // OpenCV stores BGR(A)
        block.at(rr, cc, 0) = px[2];
        block.at(rr, cc, 1) = px[1];
        block.at(rr, cc, 2) = px[0];
      }
    }
  }
  return block;
}

PixelBlock load_pixels(const fs::path& file, int expected_width, int expected_height) {
  PixelBlock block = load_pixels(file);
  if (block.width != static_cast<std::size_t>(expected_width) ||
      block.height != static_cast<std::size_t>(expected_height)) {
    std::ostringstream msg;
    msg << "dimension mismatch for '" << file.string() << "': manifest declares "
        << expected_width << "x" << expected_height << ", file is " << block.width << "x"
        << block.height;
    throw ImageError(msg.str());
  }
  return block;
}

PixelBlock load_pixels(const DatasetManifest& manifest, const ImageRecord& record) {
  try {
    return load_pixels(manifest.resolve(record), record.width, record.height);
  } catch (const ImageError& e) {
    throw ImageError("image '" + record.id + "': " + e.what());
  }
}

void write_pixels(const PixelBlock& pixels, const fs::path& file) {
  cv::Mat img(static_cast<int>(pixels.height), static_cast<int>(pixels.width), CV_8UC3);
  for (std::size_t r = 0; r < pixels.height; ++r) {
    auto* row = img.ptr<std::uint8_t>(static_cast<int>(r));
    for (std::size_t c = 0; c < pixels.width; ++c) {
      row[c * 3 + 0] = pixels.at(r, c, 2);
      row[c * 3 + 1] = pixels.at(r, c, 1);
      row[c * 3 + 2] = pixels.at(r, c, 0);
    }
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  if (!cv::imwrite(file.string(), img))
    throw ImageError("cannot write image '" + file.string() + "'");
}

namespace {

std::string to_hex(const unsigned char* digest, unsigned int len) {
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
  return out.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 initialisation failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len) { EVP_DigestUpdate(ctx_, data, len); }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, digest, &len);
    return to_hex(digest, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string file_sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ImageError("cannot read '" + file.string() + "'");
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string manifest_content_hash(const DatasetManifest& manifest) {
  std::string material = manifest_to_json(manifest).dump();
  for (const auto& r : manifest.records) {
    material += '\n';
    material += r.id;
    material += ':';
    material += file_sha256_hex(manifest.resolve(r));
  }
  return sha256_hex(material);
}

}  // namespace srcsel
