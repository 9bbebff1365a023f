#include "srcsel/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <stdexcept>
#include <thread>

#include "srcsel/emd.hpp"
#include "srcsel/error.hpp"
#include "srcsel/longtail.hpp"

namespace srcsel {

std::size_t overlap(const LabelSet& target_labels, const LabelSet& source_labels) {
  std::size_t n = 0;
  for (const auto& l : target_labels) n += source_labels.count(l);
  return n;
}

ClassCounts restricted_counts(const ClassCounts& source_counts, const LabelSet& shared) {
  ClassCounts out;
  for (const auto& [label, n] : source_counts)
    if (n > 0 && shared.count(label)) out.emplace(label, n);
  return out;
}

DiscrepancyScore compose_score(std::string target_id, std::string source_id, double emd_value,
                               const ClassCounts& source_counts, const LabelSet& target_labels,
                               double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("disc: epsilon must be non-negative");
  LabelSet source_labels;
  for (const auto& [label, n] : source_counts)
    if (n > 0) source_labels.insert(label);

  DiscrepancyScore s;
  s.target_id = std::move(target_id);
  s.source_id = std::move(source_id);
  s.emd = emd_value;
  s.epsilon = epsilon;
  s.overlap = overlap(target_labels, source_labels);
  if (s.overlap == 0 && epsilon == 0.0)
    throw std::domain_error("disc: no shared labels and epsilon 0 (division by zero)");

  LabelSet shared;
  for (const auto& l : target_labels)
    if (source_labels.count(l)) shared.insert(l);
  s.delta = shared.empty() ? 0.0 : gini(restricted_counts(source_counts, shared)).delta;
  s.score = s.emd * s.delta / (static_cast<double>(s.overlap) + epsilon);
  s.degenerate = s.emd == 0.0 || s.delta == 0.0 || s.overlap == 0;
  return s;
}

DiscrepancyScore disc(const ScoredDataset& target, const ScoredDataset& source, double epsilon) {
  if (!target.manifest || !target.signature || !source.manifest || !source.signature)
    throw std::invalid_argument("disc: dataset is missing its manifest or signature");
  const double d = emd(*target.signature, *source.signature).distance;
  return compose_score(target.manifest->dataset_id, source.manifest->dataset_id, d,
                       class_counts(*source.manifest), label_set(*target.manifest), epsilon);
}

ScoreMatrix score_rows(const std::vector<ScoredDataset>& datasets,
                       const std::vector<std::size_t>& target_indices, double epsilon,
                       unsigned threads) {
  std::set<std::string> seen;
  ScoreMatrix out;
  for (const auto& d : datasets) {
    if (!d.manifest || !d.signature) throw std::invalid_argument("score_matrix: incomplete dataset");
    if (!seen.insert(d.manifest->dataset_id).second)
      throw std::invalid_argument("score_matrix: duplicate dataset id '" + d.manifest->dataset_id + "'");
    out.source_ids.push_back(d.manifest->dataset_id);
  }
  for (std::size_t t : target_indices) {
    if (t >= datasets.size()) throw std::out_of_range("score_matrix: bad target index");
    out.ids.push_back(datasets[t].manifest->dataset_id);
  }

  const std::size_t n = datasets.size();
  const std::size_t jobs = target_indices.size() * n;
  out.rows.assign(target_indices.size(), std::vector<DiscrepancyScore>(n));
  std::vector<std::exception_ptr> errors(jobs);
  auto work = [&](std::size_t job) {
    const std::size_t r = job / n;
    const std::size_t c = job % n;
    try {
      out.rows[r][c] = disc(datasets[target_indices[r]], datasets[c], epsilon);
    } catch (...) {
      errors[job] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) work(j);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

ScoreMatrix score_matrix(const std::vector<ScoredDataset>& datasets, double epsilon, unsigned threads) {
  if (datasets.size() < 2) throw std::invalid_argument("score_matrix: need at least two datasets");
  std::vector<std::size_t> all(datasets.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return score_rows(datasets, all, epsilon, threads);
}

SelectionResult select_source(const std::string& target_id, const std::vector<RowEntry>& row,
                              const std::map<std::string, std::size_t>& sample_counts) {
  auto count_of = [&](const std::string& id) {
    auto it = sample_counts.find(id);
    return it == sample_counts.end() ? std::size_t{0} : it->second;
  };

  std::vector<SelectionCandidate> pool;
  for (const auto& e : row) {
    if (e.degenerate || e.source_id == target_id) continue;
    pool.push_back({e.source_id, e.score, count_of(e.source_id)});
  }
  if (pool.empty())
    throw NoValidSourceError("no valid source for target '" + target_id +
                             "': every candidate score is degenerate");

  std::sort(pool.begin(), pool.end(), [](const SelectionCandidate& a, const SelectionCandidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.sample_count != b.sample_count) return a.sample_count > b.sample_count;
    return a.source_id < b.source_id;
  });
  if (pool.size() > kSelectionPoolSize) pool.resize(kSelectionPoolSize);

  SelectionResult res;
  res.target_id = target_id;
  res.candidates = pool;
  const auto best = std::max_element(pool.begin(), pool.end(),
                                     [](const SelectionCandidate& a, const SelectionCandidate& b) {
                                       return a.sample_count < b.sample_count;
                                     });
  res.chosen = best->source_id;
  return res;
}

SelectionResult select_source(const std::vector<DiscrepancyScore>& row,
                              const std::map<std::string, std::size_t>& sample_counts) {
  if (row.empty()) throw NoValidSourceError("no valid source: empty score row");
  std::vector<RowEntry> entries;
  entries.reserve(row.size());
  for (const auto& s : row) entries.push_back({s.source_id, s.score, s.degenerate});
  return select_source(row.front().target_id, entries, sample_counts);
}

std::string score_matrix_csv(const ScoreMatrix& matrix) {
  std::string out = "target";
  for (const auto& id : matrix.source_ids) out += "," + id;
  out += '\n';
  char buf[64];
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    out += matrix.ids[r];
    for (const auto& s : matrix.rows[r]) {
      std::snprintf(buf, sizeof buf, ",%.4f", s.score);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

json score_to_json(const DiscrepancyScore& s) {
  return json{{"target_id", s.target_id}, {"source_id", s.source_id}, {"emd", s.emd},
              {"delta", s.delta},         {"overlap", s.overlap},     {"epsilon", s.epsilon},
              {"score", s.score},         {"degenerate", s.degenerate}};
}

json selection_to_json(const SelectionResult& s) {
  json candidates = json::array();
  for (const auto& c : s.candidates)
    candidates.push_back({{"source_id", c.source_id}, {"score", c.score}, {"sample_count", c.sample_count}});
  return json{{"target_id", s.target_id}, {"candidates", candidates}, {"chosen", s.chosen}};
}

}  // namespace srcsel
