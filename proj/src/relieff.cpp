#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "emofs/selectors.hpp"

namespace emofs {

void ReliefFConfig::validate() const {
  if (k_neighbors == 0) throw Error("config", "k_neighbors must be at least 1");
}

namespace {

struct NeighborSet {
  bool skipped = false;  // no hit candidate existed
  std::vector<std::size_t> hits;
  std::vector<std::vector<std::size_t>> misses;  // per class, empty for own
};

}  // namespace

FeatureRanking relieff_scores(const LabeledDataset& data,
                              const ReliefFConfig& config) {
  config.validate();
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::size_t num_classes = data.class_set.size();
  if (num_classes < 2)
    throw Error("value", "relieff requires at least 2 classes");

  const std::vector<std::size_t> labels = data.label_indices();
  std::vector<double> prior(num_classes, 0.0);
  for (std::size_t l : labels) prior[l] += 1.0;
  for (double& p : prior) p /= static_cast<double>(m);

  // Per-feature reciprocal range; zero-range features never contribute.
  std::vector<double> inv_range(n, 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t f = 0; f < n; ++f) {
    double lo = data.features(0, f);
    double hi = lo;
    for (std::size_t i = 1; i < m; ++i) {
      lo = std::min(lo, data.features(i, f));
      hi = std::max(hi, data.features(i, f));
    }
    if (hi > lo) inv_range[f] = 1.0 / (hi - lo);
  }

  std::vector<std::size_t> sampled;
  std::vector<std::string> warnings;
  if (config.sample_count == 0) {
    sampled.resize(m);
    for (std::size_t i = 0; i < m; ++i) sampled[i] = i;
  } else {
    std::size_t count = config.sample_count;
    if (count > m) {
      warnings.push_back("sample_count " + std::to_string(count) +
                         " clipped to " + std::to_string(m) + " instances");
      count = m;
    }
    Rng rng(config.rng_seed);
    sampled = rng.sample_without_replacement(m, count);
  }
  const double divisor = static_cast<double>(sampled.size());

  // Neighbor selection per evaluated instance: candidates of each group are
  // ordered by (distance, index); a zero-distance candidate duplicates the
  // instance and is excluded from hits and misses alike.
  std::vector<NeighborSet> neighbors(sampled.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::size_t s = 0; s < sampled.size(); ++s) {
    const std::size_t r = sampled[s];
    std::vector<std::pair<double, std::size_t>> by_class_sorted;
    NeighborSet& set = neighbors[s];
    set.misses.resize(num_classes);
    for (std::size_t group = 0; group < num_classes; ++group) {
      by_class_sorted.clear();
      for (std::size_t i = 0; i < m; ++i) {
        if (i == r || labels[i] != group) continue;
        double dist = 0.0;
        for (std::size_t f = 0; f < n; ++f)
          dist += std::abs(data.features(i, f) - data.features(r, f)) *
                  inv_range[f];
        if (dist == 0.0) continue;
        by_class_sorted.emplace_back(dist, i);
      }
      std::sort(by_class_sorted.begin(), by_class_sorted.end());
      const std::size_t take =
          std::min(config.k_neighbors, by_class_sorted.size());
      auto& out = group == labels[r] ? set.hits : set.misses[group];
      out.reserve(take);
      for (std::size_t j = 0; j < take; ++j)
        out.push_back(by_class_sorted[j].second);
    }
    set.skipped = set.hits.empty();
  }

  std::size_t skipped = 0;
  std::size_t clipped = 0;
  for (const auto& set : neighbors) {
    if (set.skipped) {
      ++skipped;
      continue;
    }
    bool clip = set.hits.size() < config.k_neighbors;
    for (std::size_t c = 0; c < set.misses.size(); ++c)
      if (!set.misses[c].empty() && set.misses[c].size() < config.k_neighbors)
        clip = true;
    if (clip) ++clipped;
  }
  if (skipped > 0)
    warnings.push_back(std::to_string(skipped) +
                       " instance(s) skipped: no same-class neighbor at "
                       "nonzero distance");
  if (clipped > 0)
    warnings.push_back("fewer than k neighbors available for " +
                       std::to_string(clipped) + " instance(s); averaged over "
                       "what exists");

  std::vector<double> scores(n, 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t f = 0; f < n; ++f) {
    double w = 0.0;
    for (std::size_t s = 0; s < sampled.size(); ++s) {
      const NeighborSet& set = neighbors[s];
      if (set.skipped) continue;
      const std::size_t r = sampled[s];
      const double rv = data.features(r, f);

      double hit_term = 0.0;
      for (std::size_t h : set.hits)
        hit_term += std::abs(data.features(h, f) - rv) * inv_range[f];
      hit_term /= static_cast<double>(set.hits.size());

      double miss_term = 0.0;
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (c == labels[r] || set.misses[c].empty()) continue;
        double d = 0.0;
        for (std::size_t miss : set.misses[c])
          d += std::abs(data.features(miss, f) - rv) * inv_range[f];
        d /= static_cast<double>(set.misses[c].size());
        miss_term += prior[c] / (1.0 - prior[labels[r]]) * d;
      }
      w += (miss_term - hit_term) / divisor;
    }
    scores[f] = w;
  }

  FeatureRanking ranking = scores_to_ranking(std::move(scores));
  ranking.method = "relieff";
  nlohmann::json echo;
  echo["distance"] = "range-normalized-manhattan";
  echo["k_neighbors"] = config.k_neighbors;
  echo["rng_seed"] = config.rng_seed;
  if (config.sample_count == 0)
    echo["sample_count"] = "all";
  else
    echo["sample_count"] = config.sample_count;
  ranking.config_echo = echo.dump();
  ranking.warnings = std::move(warnings);
  return ranking;
}

}  // namespace emofs
