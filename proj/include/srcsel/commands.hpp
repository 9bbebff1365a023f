#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "srcsel/augment.hpp"
#include "srcsel/dataset.hpp"
#include "srcsel/scoring.hpp"
#include "srcsel/signature.hpp"
#include "srcsel/subset.hpp"

namespace srcsel {

// Environment variable overriding the default cache directory.
inline constexpr const char* kCacheDirEnv = "SRCSEL_CACHE_DIR";

enum class ReportFormat { Csv, Json };

// Defaults are tool choices; see README.
struct RunConfig {
  std::size_t k_min = 1;
  std::size_t k_max = 16;
  double k_threshold = 0.05;
  std::size_t k_sample = 64;
  std::optional<std::size_t> k_override;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  SubsetPolicy policy = SubsetPolicy::Strict;
  std::optional<std::size_t> min_count;
  std::optional<std::size_t> max_count;
  std::optional<std::filesystem::path> augment_config;
  std::filesystem::path cache_dir;  // empty disables caching
  std::filesystem::path out;        // output directory or file, per command
  bool all_pairs = false;
  ReportFormat format = ReportFormat::Csv;
  unsigned threads = 1;
  bool subsample = true;

  void validate() const;
  SignatureOptions signature_options() const;
};

// Cache directory from the environment, falling back to ".srcsel-cache".
std::filesystem::path default_cache_dir();

struct SignatureRun {
  std::size_t k = 0;
  std::optional<KSelectionReport> k_selection;  // absent when K was forced
  bool k_selection_cached = false;
  std::vector<DatasetManifest> manifests;
  std::vector<DatasetSignature> signatures;
  std::vector<bool> cache_hits;
};

// Chooses K on the first (target) manifest unless forced, then computes or
// loads every dataset signature with that K.
SignatureRun cmd_signature(const std::vector<std::filesystem::path>& manifests, const RunConfig& config,
                           std::ostream& log);

struct ScoreRun {
  SignatureRun signatures;
  ScoreMatrix matrix;
  std::vector<SelectionResult> selections;
  std::vector<std::string> failures;  // diagnostics for rows without a valid source
  std::string csv;
  json report;

  bool ok() const { return failures.empty(); }
};

// Writes scores.csv and scores.json under config.out (a directory) when set.
ScoreRun cmd_score(const std::filesystem::path& target, const std::vector<std::filesystem::path>& sources,
                   const RunConfig& config, std::ostream& log);

// Writes the filtered manifest to config.out and the removal report next to
// it as <stem>.report.json.
FilteredManifest cmd_subset(const std::filesystem::path& source, const std::filesystem::path& target,
                            const RunConfig& config);

struct AugmentRun {
  AugmentPlan plan;
  DatasetManifest manifest;
};

// Plans and materializes into config.out (a directory); plan.json is written
// alongside the manifest.
AugmentRun cmd_augment(const std::filesystem::path& manifest, const RunConfig& config);

}  // namespace srcsel
