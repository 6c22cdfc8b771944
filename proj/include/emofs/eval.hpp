#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "emofs/dataset.hpp"
#include "emofs/selectors.hpp"
#include "emofs/svm.hpp"

namespace emofs {

struct Fold {
  std::string subject;  // held out
  std::vector<std::size_t> test_indices;
  std::vector<std::size_t> train_indices;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

/// One fold per distinct subject, ordered by the subject's first appearance.
/// Requires at least two subjects.
FoldPlan loso_folds(const LabeledDataset& data);

struct ConfusionMatrix {
  std::vector<std::string> class_set;
  std::vector<std::size_t> counts;  // row-major; rows true, columns predicted

  std::size_t at(std::size_t true_class, std::size_t predicted) const {
    return counts[true_class * class_set.size() + predicted];
  }
  std::size_t& at(std::size_t true_class, std::size_t predicted) {
    return counts[true_class * class_set.size() + predicted];
  }
  std::size_t row_sum(std::size_t true_class) const;
  std::size_t total() const;
};

struct EvalReport {
  double uar = 0.0;
  std::vector<double> per_class_recall;  // NaN for classes with no instances
  ConfusionMatrix confusion;
  std::size_t num_features_used = 0;
  SvmConfig config;
};

/// Pools labels into a confusion matrix; UAR averages recall over classes
/// with at least one true instance.
EvalReport confusion_and_uar(std::span<const std::string> true_labels,
                             std::span<const std::string> predicted_labels,
                             std::span<const std::string> class_set);

/// LOSO evaluation of a feature subset: per fold, standardization is fitted
/// on the training side only, a one-vs-one SVM is trained on the subset
/// columns, and held-out predictions are pooled into one report. The subset
/// is canonicalized to ascending order, so index order never matters.
EvalReport evaluate_feature_subset(const LabeledDataset& data,
                                   std::span<const std::size_t> subset,
                                   const SvmConfig& svm_config);

struct SweepPoint {
  std::size_t k;
  EvalReport report;
};

struct SweepCurve {
  std::vector<SweepPoint> points;  // ascending k
  std::vector<std::string> warnings;
};

/// Evaluates the top-k ranked features for every k in the grid. Values above
/// the feature count clip to it; duplicates after clipping collapse. Both
/// adjustments leave a warning.
SweepCurve sweep_topk(const LabeledDataset& data, const FeatureRanking& ranking,
                      std::span<const std::size_t> k_grid,
                      const SvmConfig& svm_config);

}  // namespace emofs
