// srcsel: score candidate source datasets against a target, pick a source,
// and prepare label-conditioned, class-balanced manifests for training.
//
// Exit codes: 0 success, 1 error, 2 no valid source for a scored target.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srcsel/commands.hpp"
#include "srcsel/error.hpp"

namespace fs = std::filesystem;
using namespace srcsel;

namespace {

constexpr int kExitNoValidSource = 2;

void add_signature_flags(CLI::App* cmd, RunConfig& cfg, std::size_t& k_forced) {
  cmd->add_option("--k-max", cfg.k_max, "Largest K tried during K selection")->capture_default_str();
  cmd->add_option("--k-min", cfg.k_min, "Smallest K tried during K selection")->capture_default_str();
  cmd->add_option("--k-threshold", cfg.k_threshold, "Elbow threshold (fraction of RSS at k-min)")
      ->capture_default_str();
  cmd->add_option("--k-sample", cfg.k_sample, "Images sampled from the target for K selection")
      ->capture_default_str();
  cmd->add_option("--k", k_forced, "Force K instead of selecting it");
  cmd->add_option("--seed", cfg.seed, "Seed for sampling and k-means++")->capture_default_str();
  cmd->add_option("--cache-dir", cfg.cache_dir, "Signature cache directory (env SRCSEL_CACHE_DIR)");
  cmd->add_flag("--no-cache", "Disable the signature cache");
  cmd->add_flag("--no-subsample", "Cluster every pixel of large images");
  cmd->add_option("--threads", cfg.threads, "Worker threads")->capture_default_str();
}

void finish_signature_flags(CLI::App* cmd, RunConfig& cfg, std::size_t k_forced) {
  if (cmd->count("--k")) cfg.k_override = k_forced;
  if (cmd->count("--no-cache")) cfg.cache_dir.clear();
  if (cmd->count("--no-subsample")) cfg.subsample = false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source dataset selection by color-signature EMD, label overlap and Gini long-tailedness"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.cache_dir = default_cache_dir();
  std::size_t k_forced = 0;
  std::string policy = "strict";
  std::string format = "csv";
  std::size_t min_count = 0;
  std::size_t max_count = 0;
  std::vector<fs::path> manifests;
  fs::path target;
  fs::path source;
  std::vector<fs::path> sources;

  auto* sig = app.add_subcommand("signature", "Compute (or refresh cached) dataset signatures");
  sig->add_option("manifests", manifests, "Manifests; the first one is the target")->required();
  add_signature_flags(sig, cfg, k_forced);

  auto* score = app.add_subcommand("score", "Score sources against a target and recommend one");
  score->add_option("target", target, "Target manifest")->required();
  score->add_option("sources", sources, "Source manifests")->required();
  add_signature_flags(score, cfg, k_forced);
  score->add_option("--epsilon", cfg.epsilon, "Overlap guard added to the denominator")->capture_default_str();
  score->add_flag("--all-pairs", cfg.all_pairs, "Score every ordered pair of datasets");
  score->add_option("--format", format, "Standard output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  score->add_option("--out", cfg.out, "Directory for scores.csv and scores.json");

  auto* sub = app.add_subcommand("subset", "Restrict a source manifest to the target label set");
  sub->add_option("source", source, "Source manifest")->required();
  sub->add_option("target", target, "Target manifest")->required();
  sub->add_option("--policy", policy, "strict | relaxed")
      ->check(CLI::IsMember({"strict", "relaxed"}))
      ->capture_default_str();
  sub->add_option("--out", cfg.out, "Output manifest path")->required();

  auto* aug = app.add_subcommand("augment", "Balance class counts by oversampling and undersampling");
  aug->add_option("manifest", source, "Manifest to balance")->required();
  aug->add_option("--config", cfg.augment_config, "Augmentation config JSON");
  aug->add_option("--min-count", min_count, "Lower class-count bound (default: median)");
  aug->add_option("--max-count", max_count, "Upper class-count bound (default: 3 x median)");
  aug->add_option("--seed", cfg.seed, "Seed for the plan")->capture_default_str();
  aug->add_option("--threads", cfg.threads, "Worker threads")->capture_default_str();
  aug->add_option("--out", cfg.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sig) {
      finish_signature_flags(sig, cfg, k_forced);
      const SignatureRun run = cmd_signature(manifests, cfg, std::cerr);
      if (run.k_selection) std::cout << "K = " << run.k << (run.k_selection_cached ? " (cached)" : "") << "\n";
      for (std::size_t i = 0; i < run.signatures.size(); ++i) {
        const auto& s = run.signatures[i];
        std::cout << s.dataset_id << ": " << s.size() << " clusters" << (run.cache_hits[i] ? " (cached)" : "")
                  << "\n";
      }
      return 0;
    }
    if (*score) {
      finish_signature_flags(score, cfg, k_forced);
      cfg.format = format == "json" ? ReportFormat::Json : ReportFormat::Csv;
      const ScoreRun run = cmd_score(target, sources, cfg, std::cerr);
      if (cfg.format == ReportFormat::Json) {
        std::cout << run.report.dump(2) << "\n";
      } else {
        std::cout << run.csv;
        for (const auto& s : run.selections) {
          std::cout << "# selected " << s.target_id << " -> " << s.chosen << " (candidates:";
          for (const auto& c : s.candidates) std::cout << " " << c.source_id << "=" << c.score;
          std::cout << ")\n";
        }
      }
      for (const auto& f : run.failures) std::cerr << "error: " << f << "\n";
      return run.ok() ? 0 : kExitNoValidSource;
    }
    if (*sub) {
      cfg.policy = parse_subset_policy(policy);
      const FilteredManifest out = cmd_subset(source, target, cfg);
      std::cout << "kept " << out.manifest.records.size() << " images, removed " << out.removed_images
                << ", pruned " << out.pruned_annotations << " annotations\n";
      return 0;
    }
    if (*aug) {
      if (aug->count("--min-count")) cfg.min_count = min_count;
      if (aug->count("--max-count")) cfg.max_count = max_count;
      const AugmentRun run = cmd_augment(source, cfg);
      std::cout << "oversampled " << run.plan.oversample.size() << ", undersampled " << run.plan.undersample.size()
                << ", " << run.manifest.records.size() << " images written to manifest\n";
      for (const auto& l : run.plan.infeasible)
        std::cerr << "warning: class " << l.name << " could not be brought into [" << run.plan.min_count << ", "
                  << run.plan.max_count << "]\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
