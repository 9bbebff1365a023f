#include "srcsel/subset.hpp"

#include <algorithm>
#include <stdexcept>

namespace srcsel {

std::string to_string(SubsetPolicy policy) {
  return policy == SubsetPolicy::Strict ? "strict" : "relaxed";
}

SubsetPolicy parse_subset_policy(const std::string& text) {
  if (text == "strict") return SubsetPolicy::Strict;
  if (text == "relaxed") return SubsetPolicy::Relaxed;
  throw std::invalid_argument("unknown subset policy '" + text + "' (expected strict|relaxed)");
}

FilteredManifest filter_subset(const DatasetManifest& source, const LabelSet& target_labels,
                               SubsetPolicy policy) {
  if (target_labels.empty()) throw std::invalid_argument("filter_subset: empty target label set");

  FilteredManifest out;
  out.policy = policy;
  out.manifest.dataset_id = source.dataset_id;
  out.manifest.extra = source.extra;
  out.manifest.base_dir = source.base_dir;

  for (const auto& rec : source.records) {
    const auto in_target = [&](const LabelId& l) { return target_labels.count(l) > 0; };
    const std::size_t shared = static_cast<std::size_t>(std::count_if(rec.labels.begin(), rec.labels.end(), in_target));

    if (rec.labels.empty() || shared == rec.labels.size()) {
      out.manifest.records.push_back(rec);
    } else if (policy == SubsetPolicy::Relaxed && shared > 0) {
      ImageRecord kept = rec;
      kept.labels.clear();
      std::copy_if(rec.labels.begin(), rec.labels.end(), std::back_inserter(kept.labels), in_target);
      out.pruned_annotations += rec.labels.size() - shared;
      out.manifest.records.push_back(std::move(kept));
    } else {
      ++out.removed_images;
    }
  }
  return out;
}

json removal_report(const FilteredManifest& filtered) {
  return json{{"removed_images", filtered.removed_images},
              {"pruned_annotations", filtered.pruned_annotations},
              {"policy", to_string(filtered.policy)}};
}

}  // namespace srcsel
