#include "srcsel/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "srcsel/error.hpp"
#include "srcsel/random.hpp"

namespace fs = std::filesystem;

namespace srcsel {

namespace {

constexpr double kContrastLow = 0.8;
constexpr double kContrastHigh = 1.25;
constexpr double kNoiseSigma = 8.0;

std::uint8_t clamp_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

}  // namespace

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::HorizontalFlip: return "horizontal-flip";
    case TransformKind::VerticalFlip: return "vertical-flip";
    case TransformKind::Rotate90: return "rotate-90";
    case TransformKind::Rotate180: return "rotate-180";
    case TransformKind::Rotate270: return "rotate-270";
    case TransformKind::ContrastScale: return "contrast-scale";
    case TransformKind::GaussianNoise: return "gaussian-noise";
  }
  return "unknown";
}

TransformKind parse_transform_kind(const std::string& text) {
  for (auto k : all_transform_kinds())
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown transform '" + text + "'");
}

const std::vector<TransformKind>& all_transform_kinds() {
  static const std::vector<TransformKind> kinds = {
      TransformKind::HorizontalFlip, TransformKind::VerticalFlip,  TransformKind::Rotate90,
      TransformKind::Rotate180,      TransformKind::Rotate270,     TransformKind::ContrastScale,
      TransformKind::GaussianNoise};
  return kinds;
}

bool TransformOp::geometric() const {
  return kind != TransformKind::ContrastScale && kind != TransformKind::GaussianNoise;
}

std::string TransformOp::describe() const {
  char buf[96];
  switch (kind) {
    case TransformKind::ContrastScale:
      std::snprintf(buf, sizeof buf, "contrast-scale(%.17g)", factor);
      return buf;
    case TransformKind::GaussianNoise:
      std::snprintf(buf, sizeof buf, "gaussian-noise(%.17g,%llu)", sigma,
                    static_cast<unsigned long long>(seed));
      return buf;
    default:
      return to_string(kind);
  }
}

TransformOp TransformOp::rotate(int degrees) {
  switch (((degrees % 360) + 360) % 360) {
    case 90: return {TransformKind::Rotate90};
    case 180: return {TransformKind::Rotate180};
    case 270: return {TransformKind::Rotate270};
    default: throw std::invalid_argument("rotation must be 90, 180 or 270 degrees");
  }
}

TransformOp TransformOp::contrast(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("contrast factor must be > 0");
  TransformOp op{TransformKind::ContrastScale};
  op.factor = factor;
  return op;
}

TransformOp TransformOp::noise(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("noise sigma must be >= 0");
  TransformOp op{TransformKind::GaussianNoise};
  op.sigma = sigma;
  op.seed = seed;
  return op;
}

std::string describe(const TransformChain& chain) {
  std::string out;
  for (const auto& op : chain) {
    if (!out.empty()) out += '+';
    out += op.describe();
  }
  return out;
}

PixelBlock apply_transform(const PixelBlock& in, const TransformOp& op) {
  const std::size_t h = in.height;
  const std::size_t w = in.width;
  switch (op.kind) {
    case TransformKind::HorizontalFlip: {
      PixelBlock out(h, w);
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
          for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = in.at(r, w - 1 - c, ch);
      return out;
    }
    case TransformKind::VerticalFlip: {
      PixelBlock out(h, w);
      for (std::size_t r = 0; r < h; ++r)
        std::copy_n(&in.data[(h - 1 - r) * w * 3], w * 3, &out.data[r * w * 3]);
      return out;
    }
    case TransformKind::Rotate90: {
      PixelBlock out(w, h);
      for (std::size_t r = 0; r < w; ++r)
        for (std::size_t c = 0; c < h; ++c)
          for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = in.at(h - 1 - c, r, ch);
      return out;
    }
    case TransformKind::Rotate180: {
      PixelBlock out(h, w);
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
          for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = in.at(h - 1 - r, w - 1 - c, ch);
      return out;
    }
    case TransformKind::Rotate270: {
      PixelBlock out(w, h);
      for (std::size_t r = 0; r < w; ++r)
        for (std::size_t c = 0; c < h; ++c)
          for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = in.at(c, w - 1 - r, ch);
      return out;
    }
    case TransformKind::ContrastScale: {
      if (!(op.factor > 0.0)) throw std::invalid_argument("contrast factor must be > 0");
      PixelBlock out = in;
      for (auto& v : out.data) v = clamp_channel(128.0 + op.factor * (static_cast<double>(v) - 128.0));
      return out;
    }
    case TransformKind::GaussianNoise: {
      if (!(op.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
      PixelBlock out = in;
      if (op.sigma == 0.0) return out;
      Rng rng(op.seed);
      for (auto& v : out.data) v = clamp_channel(static_cast<double>(v) + op.sigma * rng.normal());
      return out;
    }
  }
  throw std::invalid_argument("unknown transform kind");
}

PixelBlock apply_chain(PixelBlock pixels, const TransformChain& chain) {
  for (const auto& op : chain) pixels = apply_transform(pixels, op);
  return pixels;
}

AugmentConfig AugmentConfig::from_json(const json& doc) {
  AugmentConfig cfg;
  cfg.min_count = doc.at("min_count").get<std::size_t>();
  cfg.max_count = doc.at("max_count").get<std::size_t>();
  cfg.seed = doc.value("seed", std::uint64_t{0});
  if (doc.contains("allowed_ops")) {
    cfg.allowed_ops.clear();
    for (const auto& op : doc.at("allowed_ops")) cfg.allowed_ops.push_back(parse_transform_kind(op.get<std::string>()));
  }
  return cfg;
}

json AugmentConfig::to_json() const {
  json ops = json::array();
  for (auto k : allowed_ops) ops.push_back(to_string(k));
  return json{{"min_count", min_count}, {"max_count", max_count}, {"seed", seed}, {"allowed_ops", ops}};
}

std::pair<std::size_t, std::size_t> default_band(const ClassCounts& counts) {
  if (counts.empty()) return {1, 3};
  std::vector<std::size_t> v;
  for (const auto& [l, n] : counts) v.push_back(n);
  std::sort(v.begin(), v.end());
  const std::size_t median = std::max<std::size_t>(1, v[(v.size() - 1) / 2]);
  return {median, 3 * median};
}

bool has_geometry_metadata(const ImageRecord& record) {
  static const char* const keys[] = {"boxes", "bboxes", "bbox", "annotations", "polygons", "segmentation"};
  if (!record.meta.is_object()) return false;
  for (const char* k : keys)
    if (record.meta.contains(k)) return true;
  return false;
}

namespace {

// Fixed enumeration of chains of length 1 and 2 over the allowed kinds.
// Noise seeds are left at 0 and filled per directive.
std::vector<TransformChain> candidate_chains(const std::vector<TransformKind>& allowed) {
  auto allowed_kind = [&](TransformKind k) { return std::find(allowed.begin(), allowed.end(), k) != allowed.end(); };
  std::vector<TransformOp> geometric;
  for (auto k : {TransformKind::HorizontalFlip, TransformKind::VerticalFlip, TransformKind::Rotate90,
                 TransformKind::Rotate180, TransformKind::Rotate270})
    if (allowed_kind(k)) geometric.push_back({k});
  std::vector<TransformOp> photometric;
  if (allowed_kind(TransformKind::ContrastScale)) {
    photometric.push_back(TransformOp::contrast(kContrastLow));
    photometric.push_back(TransformOp::contrast(kContrastHigh));
  }
  if (allowed_kind(TransformKind::GaussianNoise)) photometric.push_back(TransformOp::noise(kNoiseSigma, 0));

  std::vector<TransformChain> chains;
  for (const auto& g : geometric) chains.push_back({g});
  for (const auto& p : photometric) chains.push_back({p});
  for (const auto& g : geometric)
    for (const auto& p : photometric) chains.push_back({g, p});
  for (const auto& a : photometric)
    for (const auto& b : photometric)
      if (a.kind == TransformKind::ContrastScale && b.kind == TransformKind::GaussianNoise) chains.push_back({a, b});
  return chains;
}

bool photometric_only(const TransformChain& chain) {
  return std::none_of(chain.begin(), chain.end(), [](const TransformOp& op) { return op.geometric(); });
}

std::string sanitize(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.' || c == '~';
    if (!ok) c = '_';
  }
  return out;
}

std::map<LabelId, std::size_t> label_multiplicity(const ImageRecord& rec) {
  std::map<LabelId, std::size_t> m;
  for (const auto& l : rec.labels) ++m[l];
  return m;
}

}  // namespace

AugmentPlan plan_augmentation(const DatasetManifest& manifest, const AugmentConfig& config) {
  if (config.min_count < 1 || config.min_count > config.max_count)
    throw std::invalid_argument("plan_augmentation: require 1 <= min_count <= max_count");

  AugmentPlan plan;
  plan.min_count = config.min_count;
  plan.max_count = config.max_count;
  plan.seed = config.seed;

  ClassCounts counts = class_counts(manifest);
  for (const auto& [label, n] : counts)
    plan.target_counts[label] = std::clamp(n, config.min_count, config.max_count);

  const std::vector<TransformChain> base_chains = candidate_chains(config.allowed_ops);
  std::set<std::string> used_ids;
  for (const auto& r : manifest.records) used_ids.insert(r.id);
  std::set<std::string> augmentation_sources;

  // Oversample, smallest classes first.
  std::vector<LabelId> ascending;
  for (const auto& [label, n] : counts) ascending.push_back(label);
  std::stable_sort(ascending.begin(), ascending.end(),
                   [&](const LabelId& a, const LabelId& b) { return counts[a] < counts[b]; });

  std::size_t directive_index = 0;
  for (const auto& label : ascending) {
    if (counts[label] >= config.min_count) continue;

    std::vector<TransformChain> chains = base_chains;
    Rng(derive_seed(config.seed, "chains:" + label.name)).shuffle(chains);

    struct Source {
      const ImageRecord* record;
      std::vector<const TransformChain*> eligible;
    };
    std::vector<const ImageRecord*> members;
    for (const auto& r : manifest.records)
      if (std::find(r.labels.begin(), r.labels.end(), label) != r.labels.end()) members.push_back(&r);
    Rng(derive_seed(config.seed, "images:" + label.name)).shuffle(members);

    std::vector<Source> sources;
    for (const ImageRecord* r : members) {
      Source s{r, {}};
      const bool geometry = has_geometry_metadata(*r);
      for (const auto& c : chains)
        if (!geometry || photometric_only(c)) s.eligible.push_back(&c);
      if (!s.eligible.empty()) sources.push_back(std::move(s));
    }
    if (sources.empty()) continue;

    for (std::size_t t = 0; counts[label] < config.min_count; ++t) {
      const std::size_t r = t % sources.size();
      const std::size_t q = t / sources.size();
      const Source& src = sources[r];
      TransformChain chain = *src.eligible[(q + r) % src.eligible.size()];
      for (auto& op : chain)
        if (op.kind == TransformKind::GaussianNoise)
          op.seed = derive_seed(config.seed, src.record->id + "#" + std::to_string(directive_index));

      std::string new_id = src.record->id + "~aug-" + sha256_hex(describe(chain)).substr(0, 10);
      if (used_ids.count(new_id)) {
        std::size_t suffix = 2;
        while (used_ids.count(new_id + "-" + std::to_string(suffix))) ++suffix;
        new_id += "-" + std::to_string(suffix);
      }
      used_ids.insert(new_id);
      augmentation_sources.insert(src.record->id);
      for (const auto& l : src.record->labels) ++counts[l];
      plan.oversample.push_back({src.record->id, std::move(chain), std::move(new_id)});
      ++directive_index;
    }
  }

  // Undersample, largest classes first. Images feeding augmentation and
  // unlabeled images are never dropped.
  std::vector<LabelId> descending(ascending.rbegin(), ascending.rend());
  std::stable_sort(descending.begin(), descending.end(),
                   [&](const LabelId& a, const LabelId& b) { return counts[a] > counts[b]; });
  std::set<std::string> dropped;
  for (const auto& label : descending) {
    if (counts[label] <= config.max_count) continue;
    std::vector<const ImageRecord*> members;
    for (const auto& r : manifest.records)
      if (std::find(r.labels.begin(), r.labels.end(), label) != r.labels.end()) members.push_back(&r);
    Rng(derive_seed(config.seed, "drop:" + label.name)).shuffle(members);

    for (const ImageRecord* r : members) {
      if (counts[label] <= config.max_count) break;
      if (dropped.count(r->id) || augmentation_sources.count(r->id)) continue;
      const auto mult = label_multiplicity(*r);
      const bool safe = std::all_of(mult.begin(), mult.end(), [&](const auto& lm) {
        return counts[lm.first] >= lm.second + config.min_count;
      });
      if (!safe) continue;
      for (const auto& [l, n] : mult) counts[l] -= n;
      dropped.insert(r->id);
      plan.undersample.push_back(r->id);
    }
  }

  for (const auto& [label, n] : counts) {
    if (n > 0) plan.projected_counts[label] = n;
    if (n < config.min_count || n > config.max_count) plan.infeasible.push_back(label);
  }
  return plan;
}

AugmentPlan plan_augmentation(const DatasetManifest& manifest, std::size_t min_count,
                              std::size_t max_count, std::uint64_t seed) {
  AugmentConfig cfg;
  cfg.min_count = min_count;
  cfg.max_count = max_count;
  cfg.seed = seed;
  return plan_augmentation(manifest, cfg);
}

json AugmentPlan::to_json() const {
  json over = json::array();
  for (const auto& d : oversample)
    over.push_back({{"image_id", d.image_id}, {"transforms", describe(d.chain)}, {"new_id", d.new_id}});
  json targets = json::object();
  for (const auto& [l, n] : target_counts) targets[l.name] = n;
  json projected = json::object();
  for (const auto& [l, n] : projected_counts) projected[l.name] = n;
  json bad = json::array();
  for (const auto& l : infeasible) bad.push_back(l.name);
  return json{{"min_count", min_count},   {"max_count", max_count}, {"seed", seed},
              {"target_counts", targets}, {"oversample", over},     {"undersample", undersample},
              {"projected_counts", projected}, {"infeasible", bad}};
}

DatasetManifest materialize(const AugmentPlan& plan, const DatasetManifest& manifest,
                            const fs::path& output_dir, unsigned threads) {
  fs::create_directories(output_dir);
  const fs::path out_dir = fs::weakly_canonical(fs::absolute(output_dir));

  DatasetManifest out;
  out.dataset_id = manifest.dataset_id;
  out.extra = manifest.extra;
  out.base_dir = out_dir;

  const std::set<std::string> dropped(plan.undersample.begin(), plan.undersample.end());
  for (const auto& rec : manifest.records) {
    if (dropped.count(rec.id)) continue;
    ImageRecord copy = rec;
    const fs::path src = manifest.resolve(rec);
    if (!fs::path(rec.path).is_absolute())
      copy.path = fs::proximate(fs::weakly_canonical(fs::absolute(src)), out_dir).generic_string();
    out.records.push_back(std::move(copy));
  }

  const std::size_t n = plan.oversample.size();
  std::vector<ImageRecord> augmented(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    const auto& d = plan.oversample[i];
    try {
      const ImageRecord* src = manifest.find(d.image_id);
      if (!src) throw Error("source image not in manifest");
      PixelBlock pixels = apply_chain(load_pixels(manifest, *src), d.chain);
      const std::string rel = "images/" + sanitize(d.new_id) + ".png";
      write_pixels(pixels, out_dir / rel);

      ImageRecord rec;
      rec.id = d.new_id;
      rec.path = rel;
      rec.width = static_cast<int>(pixels.width);
      rec.height = static_cast<int>(pixels.height);
      rec.labels = src->labels;
      rec.meta = src->meta.is_object() ? src->meta : json::object();
      rec.meta["augmentation"] = {{"source_id", src->id}, {"transforms", describe(d.chain)}};
      rec.extra = src->extra;
      augmented[i] = std::move(rec);
    } catch (const std::exception& e) {
      errors[i] = std::make_exception_ptr(Error("augment directive #" + std::to_string(i) + " (" +
                                                d.image_id + " -> " + d.new_id + "): " + e.what()));
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& rec : augmented) out.records.push_back(std::move(rec));
  save_manifest(out, out_dir / "manifest.json");
  return out;
}

}  // namespace srcsel
