#pragma once

#include "emofs/afs.hpp"
#include "emofs/dataset.hpp"
#include "emofs/selectors.hpp"

namespace emofs::reference {

/// Serial twins of the parallel kernels. Each accumulates in the same
/// per-output order as its parallel counterpart, so results are bit-equal
/// for any thread count; the parity tests and the benchmark tool hold the
/// two sides together.

Matrix apply_zscore(const NormalizationStats& stats, const Matrix& data);

FeatureRanking fisher_scores(const LabeledDataset& data);

FeatureRanking relieff_scores(const LabeledDataset& data,
                              const ReliefFConfig& config = {});

FeatureRanking ilfs_scores(const LabeledDataset& data,
                           const IlfsConfig& config = {});

ClusterAssignment som_cluster_features(const LabeledDataset& data,
                                       std::size_t n_units,
                                       const AfsConfig& config = {});

}  // namespace emofs::reference
