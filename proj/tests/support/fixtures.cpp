#include "fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "srcsel/random.hpp"

namespace fs = std::filesystem;

namespace srcsel::testing {

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  Rng rng(derive_seed(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()),
                      ++counter));
  for (;;) {
    path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rng.next() % 1000000000ULL));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

using Column = std::map<std::string, std::size_t>;

// Non-zero cells of the per-dataset class-count table.
const std::map<std::string, Column>& table1() {
  static const std::map<std::string, Column> t = {
      {"dc-1", {{"y_2", 349}, {"y_4", 2}, {"y_8", 2}, {"y_9", 4}, {"y_13", 18}, {"y_14", 10}}},
      {"jy-381-2",
       {{"y_1", 3041}, {"y_2", 62}, {"y_3", 1}, {"y_4", 3}, {"y_6", 10}, {"y_7", 6}, {"y_15", 34}, {"y_16", 6},
        {"y_17", 2}}},
      {"jy-381-4", {{"y_1", 1676}, {"y_2", 250}, {"y_3", 212}, {"y_6", 325}, {"y_7", 1}}},
      {"lc-101",
       {{"y_1", 3875}, {"y_2", 2178}, {"y_3", 84}, {"y_4", 2778}, {"y_6", 183}, {"y_7", 3}, {"y_8", 2}, {"y_9", 2},
        {"y_13", 315}, {"y_14", 64}, {"y_19", 2}}},
      {"lc-201",
       {{"y_1", 4070}, {"y_2", 631}, {"y_3", 393}, {"y_4", 294}, {"y_6", 744}, {"y_7", 20}, {"y_9", 1},
        {"y_10", 8}, {"y_13", 2}, {"y_14", 8}}},
      {"nj-101",
       {{"y_1", 1021}, {"y_2", 3058}, {"y_3", 1}, {"y_4", 705}, {"y_6", 27}, {"y_7", 7}, {"y_8", 1}, {"y_9", 7},
        {"y_13", 119}, {"y_14", 850}}},
      {"nj-201",
       {{"y_1", 1944}, {"y_2", 2787}, {"y_3", 2}, {"y_4", 762}, {"y_6", 561}, {"y_7", 43}, {"y_9", 2},
        {"y_10", 26}, {"y_13", 101}, {"y_14", 645}}},
      {"xh-1",
       {{"y_1", 3102}, {"y_2", 1403}, {"y_3", 40}, {"y_4", 373}, {"y_5", 14}, {"y_6", 5}, {"y_7", 263},
        {"y_8", 14}, {"y_9", 6}, {"y_10", 1}, {"y_11", 4}, {"y_13", 146}, {"y_14", 73}}},
      {"xh-2",
       {{"y_0", 267}, {"y_1", 1515}, {"y_2", 1002}, {"y_4", 138}, {"y_5", 4}, {"y_6", 94}, {"y_7", 2},
        {"y_13", 3}, {"y_14", 15}}},
      {"xh-3",
       {{"y_1", 1209}, {"y_2", 341}, {"y_4", 272}, {"y_5", 234}, {"y_6", 79}, {"y_7", 3}, {"y_8", 3},
        {"y_10", 338}, {"y_12", 26}, {"y_13", 2}, {"y_14", 328}}},
      {"xh-4",
       {{"y_1", 1613}, {"y_2", 54}, {"y_6", 7}, {"y_8", 5}, {"y_10", 2}, {"y_12", 342}, {"y_13", 3},
        {"y_14", 141}, {"y_17", 1}, {"y_18", 1}}},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& table1_datasets() {
  static const std::vector<std::string> ids = {"dc-1",   "jy-381-2", "jy-381-4", "lc-101", "lc-201", "nj-101",
                                               "nj-201", "xh-1",     "xh-2",     "xh-3",   "xh-4"};
  return ids;
}

const std::map<std::string, std::size_t>& table1_counts(const std::string& dataset_id) {
  return table1().at(dataset_id);
}

std::size_t table1_samples(const std::string& dataset_id) {
  static const std::map<std::string, std::size_t> samples = {
      {"dc-1", 385},    {"jy-381-2", 3165}, {"jy-381-4", 2464}, {"lc-101", 9486}, {"lc-201", 6171}, {"nj-101", 5796},
      {"nj-201", 6873}, {"xh-1", 5444},     {"xh-2", 3040},     {"xh-3", 2835},   {"xh-4", 2169}};
  return samples.at(dataset_id);
}

DatasetManifest count_manifest(const std::string& dataset_id, const std::map<std::string, std::size_t>& counts) {
  DatasetManifest m;
  m.dataset_id = dataset_id;
  std::size_t n = 0;
  for (const auto& [label, count] : counts) {
    for (std::size_t i = 0; i < count; ++i) {
      ImageRecord r;
      r.id = dataset_id + "-" + std::to_string(n++);
      r.path = r.id + ".png";
      r.width = r.height = 8;
      r.labels.emplace_back(label);
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

PixelBlock two_color_image(std::size_t height, std::size_t width, const std::array<int, 3>& a,
                           const std::array<int, 3>& b, double first_fraction, int noise, std::uint64_t seed) {
  PixelBlock px(height, width);
  Rng rng(seed);
  const std::size_t split = static_cast<std::size_t>(first_fraction * static_cast<double>(height * width) + 0.5);
  for (std::size_t i = 0; i < height * width; ++i) {
    const auto& c = i < split ? a : b;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      int v = c[ch];
      if (noise > 0) v += static_cast<int>(rng.below(static_cast<std::size_t>(2 * noise + 1))) - noise;
      px.data[i * 3 + ch] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
  }
  return px;
}

fs::path write_dataset(const fs::path& dir, const std::string& dataset_id, const std::vector<SyntheticImage>& images) {
  DatasetManifest m;
  m.dataset_id = dataset_id;
  m.base_dir = dir;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ImageRecord r;
    r.id = dataset_id + "-img" + std::to_string(i);
    r.path = "images/" + r.id + ".png";
    r.width = static_cast<int>(images[i].pixels.width);
    r.height = static_cast<int>(images[i].pixels.height);
    for (const auto& l : images[i].labels) r.labels.emplace_back(l);
    r.meta = images[i].meta;
    write_pixels(images[i].pixels, dir / r.path);
    m.records.push_back(std::move(r));
  }
  const fs::path file = dir / "manifest.json";
  save_manifest(m, file);
  return file;
}

RankingFixture make_ranking_fixture(const fs::path& dir, std::uint64_t seed, std::size_t images_per_dataset,
                                    std::size_t side) {
  const std::array<int, 3> dark{40, 40, 40};
  const std::array<int, 3> warm{200, 120, 60};
  const std::array<int, 3> shifted{160, 160, 160};  // dark + 120 per channel

  auto build = [&](const std::string& id, const std::array<int, 3>& first, bool disjoint_labels) {
    std::vector<SyntheticImage> imgs;
    Rng rng(derive_seed(seed, id));
    for (std::size_t i = 0; i < images_per_dataset; ++i) {
      SyntheticImage s;
      const double frac = 0.4 + 0.2 * rng.uniform();
      s.pixels = two_color_image(side, side, first, warm, frac, 4, rng.next());
      const std::string a = disjoint_labels ? "z_1" : "y_1";
      const std::string b = disjoint_labels ? "z_2" : "y_2";
      s.labels.push_back(a);
      if (i % 4 == 0) s.labels.push_back(b);
      imgs.push_back(std::move(s));
    }
    return write_dataset(dir / id, id, imgs);
  };

  RankingFixture f;
  f.target = build("target", dark, false);
  f.source_a = build("source-a", dark, false);
  f.source_b = build("source-b", shifted, false);
  f.source_c = build("source-c", dark, true);
  return f;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace srcsel::testing
