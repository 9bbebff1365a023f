#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/signature.hpp"

namespace srcsel {

struct DiscrepancyScore {
  std::string target_id;
  std::string source_id;
  double emd = 0.0;
  double delta = 0.0;
  std::size_t overlap = 0;
  double epsilon = 1.0;
  double score = 0.0;
  bool degenerate = false;
};

struct ScoreMatrix {
  std::vector<std::string> ids;                    // row (target) order
  std::vector<std::string> source_ids;             // column order
  std::vector<std::vector<DiscrepancyScore>> rows;  // rows[target][source]
};

// A dataset as the scorer sees it.
struct ScoredDataset {
  const DatasetManifest* manifest = nullptr;
  const DatasetSignature* signature = nullptr;
};

// One entry of a score row, detached from how the score was produced.
struct RowEntry {
  std::string source_id;
  double score = 0.0;
  bool degenerate = false;
};

struct SelectionCandidate {
  std::string source_id;
  double score = 0.0;
  std::size_t sample_count = 0;
};

struct SelectionResult {
  std::string target_id;
  std::vector<SelectionCandidate> candidates;  // at most three, ascending score
  std::string chosen;
};

inline constexpr double kDefaultEpsilon = 1.0;
inline constexpr std::size_t kSelectionPoolSize = 3;

std::size_t overlap(const LabelSet& target_labels, const LabelSet& source_labels);

// Source class counts restricted to the labels shared with the target.
ClassCounts restricted_counts(const ClassCounts& source_counts, const LabelSet& shared);

// score = emd * delta / (overlap + epsilon), with delta the Gini coefficient
// of the source's counts on the shared labels.
DiscrepancyScore disc(const ScoredDataset& target, const ScoredDataset& source, double epsilon);

// Composes a score from its components; used by disc and by callers that
// already hold the EMD.
DiscrepancyScore compose_score(std::string target_id, std::string source_id, double emd_value,
                               const ClassCounts& source_counts, const LabelSet& target_labels,
                               double epsilon);

// Every ordered (target, source) pair in input order. Pairs are evaluated
// in parallel when threads > 1.
ScoreMatrix score_matrix(const std::vector<ScoredDataset>& datasets, double epsilon,
                         unsigned threads = 1);

// Scores of the given targets against every dataset in `datasets`.
ScoreMatrix score_rows(const std::vector<ScoredDataset>& datasets,
                       const std::vector<std::size_t>& target_indices, double epsilon,
                       unsigned threads = 1);

// Drops degenerate entries and the target itself, keeps the three lowest
// scores (ties: larger sample count, then id) and picks the candidate with
// the most samples.
SelectionResult select_source(const std::string& target_id, const std::vector<RowEntry>& row,
                              const std::map<std::string, std::size_t>& sample_counts);
SelectionResult select_source(const std::vector<DiscrepancyScore>& row,
                              const std::map<std::string, std::size_t>& sample_counts);

// Table layout: header "target,<source ids...>", values to 4 decimals.
std::string score_matrix_csv(const ScoreMatrix& matrix);

json score_to_json(const DiscrepancyScore& s);
json selection_to_json(const SelectionResult& s);

}  // namespace srcsel
