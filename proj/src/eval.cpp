#include "emofs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace emofs {

FoldPlan loso_folds(const LabeledDataset& data) {
  std::vector<std::string> subjects;  // first-appearance order
  std::unordered_map<std::string, std::size_t> subject_index;
  for (const auto& s : data.subject_ids) {
    if (subject_index.emplace(s, subjects.size()).second) subjects.push_back(s);
  }
  if (subjects.size() < 2)
    throw Error("value",
                "leave-one-subject-out needs at least 2 distinct subjects");

  FoldPlan plan;
  plan.folds.resize(subjects.size());
  for (std::size_t f = 0; f < subjects.size(); ++f)
    plan.folds[f].subject = subjects[f];
  for (std::size_t i = 0; i < data.subject_ids.size(); ++i) {
    const std::size_t held = subject_index[data.subject_ids[i]];
    for (std::size_t f = 0; f < subjects.size(); ++f) {
      if (f == held)
        plan.folds[f].test_indices.push_back(i);
      else
        plan.folds[f].train_indices.push_back(i);
    }
  }
  return plan;
}

std::size_t ConfusionMatrix::row_sum(std::size_t true_class) const {
  std::size_t s = 0;
  for (std::size_t c = 0; c < class_set.size(); ++c) s += at(true_class, c);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t v : counts) s += v;
  return s;
}

EvalReport confusion_and_uar(std::span<const std::string> true_labels,
                             std::span<const std::string> predicted_labels,
                             std::span<const std::string> class_set) {
  if (true_labels.size() != predicted_labels.size())
    throw Error("dimension", "true and predicted label counts differ");
  if (class_set.empty()) throw Error("value", "class_set is empty");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < class_set.size(); ++c) index[class_set[c]] = c;

  EvalReport report;
  report.confusion.class_set.assign(class_set.begin(), class_set.end());
  report.confusion.counts.assign(class_set.size() * class_set.size(), 0);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const auto t = index.find(true_labels[i]);
    const auto p = index.find(predicted_labels[i]);
    if (t == index.end())
      throw Error("value", "true label outside class_set: " + true_labels[i]);
    if (p == index.end())
      throw Error("value",
                  "predicted label outside class_set: " + predicted_labels[i]);
    report.confusion.at(t->second, p->second) += 1;
  }

  report.per_class_recall.assign(class_set.size(),
                                 std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < class_set.size(); ++c) {
    const std::size_t row = report.confusion.row_sum(c);
    if (row == 0) continue;
    report.per_class_recall[c] =
        static_cast<double>(report.confusion.at(c, c)) /
        static_cast<double>(row);
    sum += report.per_class_recall[c];
    ++present;
  }
  if (present == 0)
    throw Error("value", "no class has any true instance");
  report.uar = sum / static_cast<double>(present);
  return report;
}

namespace {

std::vector<std::size_t> canonical_subset(std::span<const std::size_t> subset,
                                          std::size_t n) {
  if (subset.empty()) throw Error("value", "feature subset must be non-empty");
  std::vector<std::size_t> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] >= n)
      throw Error("dimension",
                  "feature index " + std::to_string(sorted[i]) + " out of range");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw Error("value", "duplicate feature index " +
                               std::to_string(sorted[i]) + " in subset");
  }
  return sorted;
}

// Classes can vanish from a training fold when one subject holds every
// instance of a class; the fold's model is then trained over the remaining
// classes only (an unseen class is never predicted).
LabeledDataset fold_train_view(const LabeledDataset& data,
                               const std::vector<std::size_t>& rows,
                               const Matrix& columns) {
  LabeledDataset train;
  train.name = data.name;
  train.features = select_rows(columns, rows);
  train.subject_ids.reserve(rows.size());
  train.labels.reserve(rows.size());
  std::unordered_set<std::string> present;
  for (std::size_t i : rows) {
    train.subject_ids.push_back(data.subject_ids[i]);
    train.labels.push_back(data.labels[i]);
    present.insert(data.labels[i]);
  }
  for (const auto& c : data.class_set)
    if (present.count(c)) train.class_set.push_back(c);
  train.feature_names.reserve(columns.cols());
  for (std::size_t j = 0; j < columns.cols(); ++j)
    train.feature_names.push_back("f" + std::to_string(j));
  return train;
}

}  // namespace

EvalReport evaluate_feature_subset(const LabeledDataset& data,
                                   std::span<const std::size_t> subset,
                                   const SvmConfig& svm_config) {
  const std::vector<std::size_t> indices =
      canonical_subset(subset, data.num_features());
  const FoldPlan plan = loso_folds(data);
  const Matrix columns = select_columns(data.features, indices);

  std::vector<std::string> predictions(data.num_instances());
  std::vector<std::exception_ptr> errors(plan.folds.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    try {
      const Fold& fold = plan.folds[f];
      LabeledDataset train = fold_train_view(data, fold.train_indices, columns);
      const NormalizationStats stats = fit_zscore(train.features);
      train.features = apply_zscore(stats, train.features);

      std::vector<std::size_t> identity(indices.size());
      for (std::size_t j = 0; j < identity.size(); ++j) identity[j] = j;
      const MulticlassSvmModel model =
          train_one_vs_one(train, identity, svm_config);

      const Matrix test_rows = select_rows(columns, fold.test_indices);
      const Matrix test = apply_zscore(stats, test_rows);
      for (std::size_t t = 0; t < fold.test_indices.size(); ++t)
        predictions[fold.test_indices[t]] = model.predict(test.row(t));
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalReport report =
      confusion_and_uar(data.labels, predictions, data.class_set);
  report.num_features_used = indices.size();
  report.config = svm_config;
  return report;
}

SweepCurve sweep_topk(const LabeledDataset& data, const FeatureRanking& ranking,
                      std::span<const std::size_t> k_grid,
                      const SvmConfig& svm_config) {
  if (k_grid.empty()) throw Error("value", "k grid must be non-empty");
  const std::size_t n = data.num_features();
  if (ranking.order.size() != n)
    throw Error("dimension", "ranking does not cover the dataset's features");

  SweepCurve curve;
  std::vector<std::size_t> ks;
  for (std::size_t k : k_grid) {
    if (k == 0) throw Error("value", "k values must be at least 1");
    if (k > n) {
      curve.warnings.push_back("k=" + std::to_string(k) + " clipped to " +
                               std::to_string(n));
      k = n;
    }
    ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  const auto dup = std::unique(ks.begin(), ks.end());
  if (dup != ks.end())
    curve.warnings.push_back("duplicate k values collapsed");
  ks.erase(dup, ks.end());

  for (std::size_t k : ks) {
    const std::span<const std::size_t> top(ranking.order.data(), k);
    curve.points.push_back({k, evaluate_feature_subset(data, top, svm_config)});
  }
  return curve;
}

}  // namespace emofs
