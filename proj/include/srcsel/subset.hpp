#pragma once

#include <cstddef>
#include <string>

#include "srcsel/dataset.hpp"

namespace srcsel {

// strict: keep an image only when all of its labels are in the target set.
// relaxed: keep an image when any label is in the target set and prune the rest.
// Unlabeled images are kept under both.
enum class SubsetPolicy { Strict, Relaxed };

std::string to_string(SubsetPolicy policy);
SubsetPolicy parse_subset_policy(const std::string& text);

struct FilteredManifest {
  DatasetManifest manifest;
  std::size_t removed_images = 0;
  std::size_t pruned_annotations = 0;
  SubsetPolicy policy = SubsetPolicy::Strict;
};

FilteredManifest filter_subset(const DatasetManifest& source, const LabelSet& target_labels,
                               SubsetPolicy policy);

// {removed_images, pruned_annotations, policy}
json removal_report(const FilteredManifest& filtered);

}  // namespace srcsel
