#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "emofs/dataset.hpp"
#include "emofs/eval.hpp"
#include "emofs/svm.hpp"

namespace emofs {

struct AfsConfig {
  std::vector<std::size_t> n_grid = default_grid();
  std::size_t som_iterations = 200;
  std::uint64_t rng_seed = 0;
  SvmConfig svm;

  static std::vector<std::size_t> default_grid();  // 5, 10, ..., 100
  void validate() const;
};

/// Features partitioned by their final best-matching unit on the map.
struct ClusterAssignment {
  std::size_t n_units = 0;
  std::vector<std::size_t> assignment;            // per feature, unit id
  std::vector<std::vector<std::size_t>> members;  // per unit, ascending
  Matrix codebook;                                // n_units x m
  // Mean squared feature-to-BMU distance, recorded at every assignment
  // step (one entry per training iteration plus the final assignment).
  std::vector<double> quantization_errors;
  std::vector<std::string> warnings;
};

/// Batch-trains a self-organizing map over the feature columns of the
/// z-scored data, so features cluster by their behavior across instances.
/// The map is a near-square grid with hexagonal geometry; the neighborhood
/// is a truncated Gaussian whose radius decays linearly to 1 over the first
/// three quarters of the iterations and stays there.
ClusterAssignment som_cluster_features(const LabeledDataset& data,
                                       std::size_t n_units,
                                       const AfsConfig& config = {});

struct AfsEvaluatedCluster {
  std::size_t n = 0;
  std::size_t cluster = 0;
  std::size_t member_count = 0;
  double uar = 0.0;
};

struct AfsResult {
  std::size_t chosen_n = 0;
  std::size_t chosen_cluster = 0;
  std::vector<std::size_t> selected_indices;
  double chosen_uar = 0.0;
  std::vector<AfsEvaluatedCluster> table;  // every evaluated (N, cluster)
  EvalReport chosen_report;
  std::vector<std::string> warnings;
};

/// Clusters features for every N in the grid, scores each non-empty cluster
/// by LOSO UAR of its members, and picks the global best. Ties prefer fewer
/// features, then lower N, then lower cluster id.
AfsResult afs_select(const LabeledDataset& data, const AfsConfig& config = {});

}  // namespace emofs
