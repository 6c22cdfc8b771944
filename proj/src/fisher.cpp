#include <algorithm>
#include <cmath>

#include "emofs/selectors.hpp"

namespace emofs {

FeatureRanking scores_to_ranking(std::vector<double> scores) {
  if (scores.empty()) throw Error("value", "cannot rank an empty score list");
  for (double s : scores)
    if (!std::isfinite(s)) throw Error("value", "non-finite feature score");
  FeatureRanking ranking;
  ranking.order.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ranking.order[i] = i;
  // Stable sort on score only keeps ties in ascending index order.
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  ranking.scores = std::move(scores);
  return ranking;
}

FeatureRanking fisher_scores(const LabeledDataset& data) {
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::size_t num_classes = data.class_set.size();
  if (num_classes < 2)
    throw Error("value", "fisher scoring requires at least 2 classes");

  const std::vector<std::size_t> labels = data.label_indices();
  std::vector<std::size_t> class_count(num_classes, 0);
  for (std::size_t l : labels) class_count[l] += 1;

  std::vector<double> scores(n, 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t f = 0; f < n; ++f) {
    std::vector<double> class_mean(num_classes, 0.0);
    double overall = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = data.features(i, f);
      class_mean[labels[i]] += v;
      overall += v;
    }
    for (std::size_t c = 0; c < num_classes; ++c)
      class_mean[c] /= static_cast<double>(class_count[c]);
    overall /= static_cast<double>(m);

    double within = 0.0;  // sum_c n_c * population variance of class c
    for (std::size_t i = 0; i < m; ++i) {
      const double d = data.features(i, f) - class_mean[labels[i]];
      within += d * d;
    }
    double between = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double d = class_mean[c] - overall;
      between += static_cast<double>(class_count[c]) * d * d;
    }
    scores[f] = within < 1e-12 ? 0.0 : between / within;
  }

  FeatureRanking ranking = scores_to_ranking(std::move(scores));
  ranking.method = "fisher";
  ranking.config_echo = "{}";
  return ranking;
}

}  // namespace emofs
