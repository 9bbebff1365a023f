#include "srcsel/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>

#include "srcsel/error.hpp"
#include "srcsel/random.hpp"

namespace fs = std::filesystem;

namespace srcsel {

void RunConfig::validate() const {
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("invalid K range: need 1 <= k-min <= k-max");
  if (!(k_threshold >= 0.0) || k_threshold > 1.0) throw std::invalid_argument("--k-threshold must be in [0, 1]");
  if (k_sample < 1) throw std::invalid_argument("--k-sample must be at least 1");
  if (k_override && *k_override < 1) throw std::invalid_argument("--k must be at least 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("--epsilon must be non-negative");
  if (min_count && *min_count < 1) throw std::invalid_argument("--min-count must be at least 1");
  if (min_count && max_count && *min_count > *max_count)
    throw std::invalid_argument("--min-count must not exceed --max-count");
  if (threads < 1) throw std::invalid_argument("--threads must be at least 1");
}

SignatureOptions RunConfig::signature_options() const {
  SignatureOptions o;
  o.subsample = subsample;
  o.threads = threads;
  return o;
}

fs::path default_cache_dir() {
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) return fs::path(env);
  return fs::path(".srcsel-cache");
}

namespace {

std::string file_stem_for(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string k_selection_key(const std::string& manifest_hash, const RunConfig& config) {
  std::string material = manifest_hash + "|" + kSignatureAlgorithmVersion;
  material += "|kmin=" + std::to_string(config.k_min) + "|kmax=" + std::to_string(config.k_max);
  material += "|thr=" + format_double(config.k_threshold) + "|sample=" + std::to_string(config.k_sample);
  material += "|seed=" + std::to_string(config.seed) + (config.subsample ? "|sub" : "|nosub");
  return sha256_hex(material);
}

json k_report_to_json(const KSelectionReport& r) {
  return json{{"candidates", r.candidates},
              {"mean_rss", r.mean_rss},
              {"chosen_k", r.chosen_k},
              {"sample_ids", r.sample_ids}};
}

KSelectionReport k_report_from_json(const json& j) {
  KSelectionReport r;
  r.candidates = j.at("candidates").get<std::vector<std::size_t>>();
  r.mean_rss = j.at("mean_rss").get<std::vector<double>>();
  r.chosen_k = j.at("chosen_k").get<std::size_t>();
  r.sample_ids = j.at("sample_ids").get<std::vector<std::string>>();
  if (r.candidates.size() != r.mean_rss.size() || r.chosen_k < 1)
    throw std::invalid_argument("malformed K-selection report");
  return r;
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + file.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + file.string() + "'");
}

KSelectionReport run_k_selection(const DatasetManifest& manifest, const RunConfig& config) {
  if (manifest.records.empty())
    throw std::invalid_argument("target dataset '" + manifest.dataset_id + "' has no images");
  const auto picks = k_selection_sample(manifest, config.k_sample, config.seed);
  std::vector<PixelBlock> sample;
  std::vector<std::string> ids;
  for (std::size_t i : picks) {
    const ImageRecord& rec = manifest.records[i];
    PixelBlock px = load_pixels(manifest, rec);
    if (config.subsample) px = subsample_pixels(px, config.signature_options().max_pixels, derive_seed(config.seed, rec.id));
    sample.push_back(std::move(px));
    ids.push_back(rec.id);
  }
  KSelectionReport report = select_k(sample, config.k_min, config.k_max, config.k_threshold, config.seed);
  report.sample_ids = std::move(ids);
  return report;
}

}  // namespace

SignatureRun cmd_signature(const std::vector<fs::path>& manifests, const RunConfig& config, std::ostream& log) {
  config.validate();
  if (manifests.empty()) throw std::invalid_argument("signature: no manifests given");

  SignatureRun run;
  std::vector<std::string> hashes;
  for (const auto& p : manifests) {
    run.manifests.push_back(load_manifest(p));
    hashes.push_back(manifest_content_hash(run.manifests.back()));
  }
  const bool caching = !config.cache_dir.empty();
  const SignatureOptions options = config.signature_options();

  if (config.k_override) {
    run.k = *config.k_override;
  } else {
    const DatasetManifest& target = run.manifests.front();
    const std::string key = k_selection_key(hashes.front(), config);
    const fs::path file = config.cache_dir / (file_stem_for(target.dataset_id) + ".kselect.json");
    if (caching && fs::exists(file)) {
      try {
        std::ifstream in(file, std::ios::binary);
        json doc = json::parse(in);
        if (doc.at("key").get<std::string>() == key) {
          run.k_selection = k_report_from_json(doc.at("report"));
          run.k_selection_cached = true;
        }
      } catch (const std::exception& e) {
        log << "warning: K-selection cache '" << file.string() << "' is corrupt (" << e.what()
            << "); recomputing\n";
      }
    }
    if (!run.k_selection) {
      run.k_selection = run_k_selection(target, config);
      if (caching) write_text(file, json{{"key", key}, {"report", k_report_to_json(*run.k_selection)}}.dump(2) + "\n");
    }
    run.k = run.k_selection->chosen_k;
  }

  for (std::size_t i = 0; i < run.manifests.size(); ++i) {
    const DatasetManifest& m = run.manifests[i];
    const std::string content_hash = signature_cache_key(hashes[i], options);
    const fs::path file = config.cache_dir / (file_stem_for(m.dataset_id) + ".K" + std::to_string(run.k) + ".s" +
                                              std::to_string(config.seed) + ".sig.json");
    std::optional<DatasetSignature> cached;
    if (caching && fs::exists(file)) {
      cached = load_signature(file);
      if (!cached) {
        log << "warning: signature cache '" << file.string() << "' is corrupt; recomputing\n";
      } else if (cached->content_hash != content_hash || cached->k != run.k || cached->seed != config.seed ||
                 cached->dataset_id != m.dataset_id) {
        cached.reset();
      }
    }
    const bool hit = cached.has_value();
    if (!hit) {
      cached = compute_dataset_signature(m, run.k, config.seed, options);
      cached->content_hash = content_hash;
      if (caching) save_signature(*cached, file);
    }
    run.signatures.push_back(std::move(*cached));
    run.cache_hits.push_back(hit);
  }
  return run;
}

ScoreRun cmd_score(const fs::path& target, const std::vector<fs::path>& sources, const RunConfig& config,
                   std::ostream& log) {
  if (sources.empty()) throw std::invalid_argument("score: at least one source manifest is required");
  std::vector<fs::path> all{target};
  all.insert(all.end(), sources.begin(), sources.end());

  ScoreRun run;
  run.signatures = cmd_signature(all, config, log);

  std::vector<ScoredDataset> datasets;
  std::map<std::string, std::size_t> samples;
  for (std::size_t i = 0; i < all.size(); ++i) {
    datasets.push_back({&run.signatures.manifests[i], &run.signatures.signatures[i]});
    samples[run.signatures.manifests[i].dataset_id] = run.signatures.manifests[i].instance_count();
  }
  run.matrix = config.all_pairs ? score_matrix(datasets, config.epsilon, config.threads)
                                : score_rows(datasets, {0}, config.epsilon, config.threads);

  json scores = json::array();
  json selections = json::array();
  for (const auto& row : run.matrix.rows) {
    for (const auto& s : row) scores.push_back(score_to_json(s));
    try {
      run.selections.push_back(select_source(row, samples));
      selections.push_back(selection_to_json(run.selections.back()));
    } catch (const NoValidSourceError& e) {
      run.failures.push_back(e.what());
      selections.push_back({{"target_id", row.front().target_id}, {"error", e.what()}});
    }
  }
  run.csv = score_matrix_csv(run.matrix);
  run.report = json{{"epsilon", config.epsilon},
                    {"seed", config.seed},
                    {"K", run.signatures.k},
                    {"datasets", run.matrix.source_ids},
                    {"sample_counts", samples},
                    {"scores", scores},
                    {"selections", selections}};
  if (run.signatures.k_selection) run.report["k_selection"] = k_report_to_json(*run.signatures.k_selection);

  if (!config.out.empty()) {
    write_text(config.out / "scores.csv", run.csv);
    write_text(config.out / "scores.json", run.report.dump(2) + "\n");
  }
  return run;
}

FilteredManifest cmd_subset(const fs::path& source, const fs::path& target, const RunConfig& config) {
  const DatasetManifest src = load_manifest(source);
  const DatasetManifest tgt = load_manifest(target);
  FilteredManifest filtered = filter_subset(src, label_set(tgt), config.policy);
  if (!config.out.empty()) {
    save_manifest(filtered.manifest, config.out);
    fs::path report = config.out;
    report.replace_filename(config.out.stem().string() + ".report.json");
    write_text(report, removal_report(filtered).dump(2) + "\n");
  }
  return filtered;
}

AugmentRun cmd_augment(const fs::path& manifest_path, const RunConfig& config) {
  config.validate();
  if (config.out.empty()) throw std::invalid_argument("augment: an output directory is required");
  const DatasetManifest manifest = load_manifest(manifest_path);

  AugmentConfig cfg;
  if (config.augment_config) {
    std::ifstream in(*config.augment_config, std::ios::binary);
    if (!in) throw Error("cannot open augmentation config '" + config.augment_config->string() + "'");
    cfg = AugmentConfig::from_json(json::parse(in));
  } else {
    const auto [lo, hi] = default_band(class_counts(manifest));
    cfg.min_count = lo;
    cfg.max_count = hi;
    cfg.seed = config.seed;
  }
  if (config.min_count) cfg.min_count = *config.min_count;
  if (config.max_count) cfg.max_count = *config.max_count;
  if (cfg.max_count < cfg.min_count) cfg.max_count = cfg.min_count;

  AugmentRun run;
  run.plan = plan_augmentation(manifest, cfg);
  run.manifest = materialize(run.plan, manifest, config.out, config.threads);
  write_text(config.out / "plan.json", run.plan.to_json().dump(2) + "\n");
  return run;
}

}  // namespace srcsel
