#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "emofs/common.hpp"
#include "emofs/dataset.hpp"

namespace emofs {

/// A scored permutation of feature indices: order is sorted by descending
/// score with ties broken by ascending index.
struct FeatureRanking {
  std::string method;
  std::vector<double> scores;
  std::vector<std::size_t> order;
  std::string config_echo;  // compact JSON of the generating configuration
  std::vector<std::string> warnings;
};

/// Builds the ranking for a score vector. Throws on empty or non-finite
/// input. The caller fills method and config_echo.
FeatureRanking scores_to_ranking(std::vector<double> scores);

/// Ratio of between-class mean scatter to pooled within-class variance per
/// feature: sum_c n_c (mu_cf - mu_f)^2 / sum_c n_c var_cf, with population
/// variances. Denominators below 1e-12 score 0.
FeatureRanking fisher_scores(const LabeledDataset& data);

struct ReliefFConfig {
  std::size_t k_neighbors = 10;
  std::size_t sample_count = 0;  // 0 evaluates every instance, in row order
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Neighbor-based weighting: each evaluated instance pulls its weight down
/// by distance to nearest same-class neighbors (hits) and up by distance to
/// nearest neighbors of every other class (misses), the latter weighted by
/// class prior. Distances are range-normalized Manhattan. Zero-distance
/// candidates are treated as duplicates of the instance and skipped.
FeatureRanking relieff_scores(const LabeledDataset& data,
                              const ReliefFConfig& config = {});

struct IlfsConfig {
  std::size_t token_bins = 6;
  std::size_t latent_topics = 2;  // relevant / irrelevant; fixed
  std::size_t em_iterations = 300;
  double em_tolerance = 1e-10;
  // Damping is alpha_fraction / spectral_radius(adjacency), keeping the
  // path series convergent.
  double alpha_fraction = 0.9;

  void validate() const;
};

/// Feature graph whose entries mix the per-feature probability of the
/// "relevant" latent topic; relevance aggregates every walk through it.
struct IlfsGraph {
  Matrix adjacency;
  double alpha = 0.0;
  Matrix relevance;  // (I - alpha A)^-1 - I
  bool em_converged = true;  // false means the last EM iterate was used
};

/// Closed form of the damped walk sum: (I - alpha A)^-1 - I.
Matrix ilfs_relevance_from(const Matrix& adjacency, double alpha);

/// Largest eigenvalue magnitude of a symmetric nonnegative matrix, by power
/// iteration from the all-ones vector.
double spectral_radius(const Matrix& a);

IlfsGraph build_ilfs_graph(const LabeledDataset& data,
                           const IlfsConfig& config = {});

/// Ranks features by row sums of the walk-relevance matrix built from a
/// two-topic latent semantic model of per-feature descriptor tokens.
FeatureRanking ilfs_scores(const LabeledDataset& data,
                           const IlfsConfig& config = {});

}  // namespace emofs
