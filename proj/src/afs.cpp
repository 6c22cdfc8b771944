#include <algorithm>

#include "emofs/afs.hpp"

namespace emofs {

namespace {

// Clips grid values to the feature count and drops repeats (first occurrence
// wins), so clipped tails don't recluster identically.
std::vector<std::size_t> prepare_grid(const std::vector<std::size_t>& requested,
                                      std::size_t n,
                                      std::vector<std::string>& warnings) {
  std::vector<std::size_t> grid;
  for (std::size_t value : requested) {
    std::size_t clipped = value;
    if (clipped > n) {
      warnings.push_back("cluster count " + std::to_string(value) +
                         " clipped to " + std::to_string(n) + " features");
      clipped = n;
    }
    if (std::find(grid.begin(), grid.end(), clipped) != grid.end()) {
      warnings.push_back("duplicate cluster count " + std::to_string(clipped) +
                         " skipped");
      continue;
    }
    grid.push_back(clipped);
  }
  return grid;
}

}  // namespace

AfsResult afs_select(const LabeledDataset& data, const AfsConfig& config) {
  config.validate();

  AfsResult result;
  const std::vector<std::size_t> grid =
      prepare_grid(config.n_grid, data.num_features(), result.warnings);

  bool have_best = false;
  for (std::size_t n_units : grid) {
    ClusterAssignment clusters = som_cluster_features(data, n_units, config);
    for (std::size_t u = 0; u < clusters.n_units; ++u) {
      const auto& members = clusters.members[u];
      if (members.empty()) continue;
      EvalReport report = evaluate_feature_subset(data, members, config.svm);
      result.table.push_back({n_units, u, members.size(), report.uar});

      const bool better =
          !have_best || report.uar > result.chosen_uar ||
          (report.uar == result.chosen_uar &&
           (members.size() < result.selected_indices.size() ||
            (members.size() == result.selected_indices.size() &&
             (n_units < result.chosen_n ||
              (n_units == result.chosen_n && u < result.chosen_cluster)))));
      if (better) {
        have_best = true;
        result.chosen_n = n_units;
        result.chosen_cluster = u;
        result.chosen_uar = report.uar;
        result.selected_indices = members;
        result.chosen_report = std::move(report);
      }
    }
  }
  if (!have_best)
    throw Error("value", "no non-empty cluster was available to evaluate");
  return result;
}

}  // namespace emofs
