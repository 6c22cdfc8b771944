#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "emofs/harness.hpp"
#include "emofs/selectors.hpp"
#include "test_support.hpp"

using namespace emofs;

namespace {

// Plain two-pass per-feature scatter ratio, written straight from the
// definition: sum_c n_c (mu_cf - mu_f)^2 over sum_c n_c var_cf.
std::vector<double> fisher_oracle(const LabeledDataset& data) {
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::vector<std::size_t> labels = data.label_indices();
  const std::size_t num_classes = data.class_set.size();

  std::vector<double> out(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += data.features(i, f);
    mu /= static_cast<double>(m);

    double between = 0.0;
    double within = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      double count = 0.0;
      double class_mu = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (labels[i] != c) continue;
        count += 1.0;
        class_mu += data.features(i, f);
      }
      class_mu /= count;
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (labels[i] != c) continue;
        var += (data.features(i, f) - class_mu) * (data.features(i, f) - class_mu);
      }
      var /= count;  // population variance
      between += count * (class_mu - mu) * (class_mu - mu);
      within += count * var;
    }
    out[f] = within < 1e-12 ? 0.0 : between / within;
  }
  return out;
}

// Exhaustive neighbor enumeration with the documented edge rules: reciprocal
// range scaling, zero-distance candidates dropped, (distance, index) order,
// group means clipped to what exists, instances with no hit skipped but still
// counted in the divisor.
std::vector<double> relieff_oracle(const LabeledDataset& data, std::size_t k) {
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::vector<std::size_t> labels = data.label_indices();
  const std::size_t num_classes = data.class_set.size();

  std::vector<double> prior(num_classes, 0.0);
  for (std::size_t l : labels) prior[l] += 1.0;
  for (double& p : prior) p /= static_cast<double>(m);

  std::vector<double> inv_range(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    double lo = data.features(0, f);
    double hi = lo;
    for (std::size_t i = 1; i < m; ++i) {
      lo = std::min(lo, data.features(i, f));
      hi = std::max(hi, data.features(i, f));
    }
    if (hi > lo) inv_range[f] = 1.0 / (hi - lo);
  }

  const double divisor = static_cast<double>(m);
  std::vector<double> scores(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    std::vector<std::vector<std::size_t>> group(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<std::pair<double, std::size_t>> cand;
      for (std::size_t i = 0; i < m; ++i) {
        if (i == r || labels[i] != c) continue;
        double dist = 0.0;
        for (std::size_t f = 0; f < n; ++f)
          dist += std::abs(data.features(i, f) - data.features(r, f)) * inv_range[f];
        if (dist == 0.0) continue;
        cand.emplace_back(dist, i);
      }
      std::sort(cand.begin(), cand.end());
      for (std::size_t j = 0; j < std::min(k, cand.size()); ++j)
        group[c].push_back(cand[j].second);
    }
    if (group[labels[r]].empty()) continue;  // counted in divisor, no update

    for (std::size_t f = 0; f < n; ++f) {
      double hit = 0.0;
      for (std::size_t h : group[labels[r]])
        hit += std::abs(data.features(h, f) - data.features(r, f)) * inv_range[f];
      hit /= static_cast<double>(group[labels[r]].size());

      double miss = 0.0;
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (c == labels[r] || group[c].empty()) continue;
        double d = 0.0;
        for (std::size_t i : group[c])
          d += std::abs(data.features(i, f) - data.features(r, f)) * inv_range[f];
        d /= static_cast<double>(group[c].size());
        miss += prior[c] / (1.0 - prior[labels[r]]) * d;
      }
      scores[f] += (miss - hit) / divisor;
    }
  }
  return scores;
}

// Dataset mixing continuous and coarse-grid columns so that duplicate rows,
// zero distances, and distance ties actually occur.
LabeledDataset gridded_dataset(Rng& rng, std::size_t m, std::size_t n,
                               std::size_t num_classes) {
  std::vector<std::vector<double>> columns(n, std::vector<double>(m));
  std::vector<std::string> labels(m);
  for (std::size_t i = 0; i < m; ++i)
    labels[i] = "c" + std::to_string(i % num_classes);
  for (std::size_t f = 0; f < n; ++f)
    for (std::size_t i = 0; i < m; ++i)
      columns[f][i] = f % 2 == 0 ? static_cast<double>(rng.index(4)) * 0.5
                                 : rng.normal();
  return test_support::dataset_from_columns(columns, labels);
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) s += a(i, t) * b(t, j);
      out(i, j) = s;
    }
  return out;
}

// Truncated walk series sum_{l=1..terms} (alpha A)^l.
Matrix series_relevance(const Matrix& a, double alpha, std::size_t terms) {
  const std::size_t n = a.rows();
  Matrix scaled(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled(i, j) = alpha * a(i, j);
  Matrix acc = scaled;
  Matrix power = scaled;
  for (std::size_t l = 2; l <= terms; ++l) {
    power = naive_matmul(power, scaled);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) acc(i, j) += power(i, j);
  }
  return acc;
}

bool has_warning(const std::vector<std::string>& warnings, const std::string& piece) {
  for (const std::string& w : warnings)
    if (w.find(piece) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("score ranking order and validation") {
  const FeatureRanking r = scores_to_ranking({0.1, 0.5, 0.3});
  CHECK(r.order == std::vector<std::size_t>{1, 2, 0});
  CHECK(r.scores == std::vector<double>{0.1, 0.5, 0.3});

  const FeatureRanking tied = scores_to_ranking({0.5, 0.5});
  CHECK(tied.order == std::vector<std::size_t>{0, 1});

  CHECK_THROWS_AS(scores_to_ranking({}), Error);
  CHECK_THROWS_AS(scores_to_ranking({0.1, std::numeric_limits<double>::quiet_NaN()}),
                  Error);
  CHECK_THROWS_AS(scores_to_ranking({std::numeric_limits<double>::infinity()}), Error);
}

TEST_CASE("fisher scatter ratio on hand-checked columns") {
  const std::vector<std::string> labels = {"A", "A", "B", "B"};
  SUBCASE("well separated pair of class clumps") {
    const LabeledDataset data =
        test_support::dataset_from_columns({{0.0, 1.0, 10.0, 11.0}}, labels);
    const FeatureRanking r = fisher_scores(data);
    CHECK(r.scores[0] == 100.0);
  }
  SUBCASE("equal class means score zero") {
    const LabeledDataset data =
        test_support::dataset_from_columns({{0.0, 2.0, 2.0, 0.0}}, labels);
    CHECK(fisher_scores(data).scores[0] == 0.0);
  }
  SUBCASE("constant features score zero") {
    const LabeledDataset data =
        test_support::dataset_from_columns({{3.0, 3.0, 3.0, 3.0}}, labels);
    CHECK(fisher_scores(data).scores[0] == 0.0);
  }
  SUBCASE("single class is rejected") {
    const LabeledDataset data =
        test_support::dataset_from_columns({{0.0, 1.0}}, {"A", "A"});
    CHECK_THROWS_AS(fisher_scores(data), Error);
  }
}

TEST_CASE("fisher matches the loop oracle on random data") {
  Rng rng(101);
  for (int t = 0; t < 30; ++t) {
    const std::size_t num_classes = 2 + rng.index(3);
    const std::size_t m = num_classes * (2 + rng.index(6));
    const std::size_t n = 1 + rng.index(10);
    const LabeledDataset data = test_support::random_dataset(m, n, num_classes, 500 + t);
    const FeatureRanking r = fisher_scores(data);
    const std::vector<double> oracle = fisher_oracle(data);
    for (std::size_t f = 0; f < n; ++f)
      CHECK(std::abs(r.scores[f] - oracle[f]) <= 1e-9);
  }
}

TEST_CASE("fisher is invariant to positive affine feature maps") {
  const LabeledDataset data = test_support::random_dataset(24, 5, 3, 77);
  LabeledDataset mapped = data;
  for (std::size_t i = 0; i < mapped.num_instances(); ++i)
    for (std::size_t f = 0; f < mapped.num_features(); ++f)
      mapped.features(i, f) = 3.25 * mapped.features(i, f) - 7.0;

  const FeatureRanking a = fisher_scores(data);
  const FeatureRanking b = fisher_scores(mapped);
  for (std::size_t f = 0; f < data.num_features(); ++f)
    CHECK(std::abs(a.scores[f] - b.scores[f]) <=
          1e-9 * std::max(1.0, std::abs(a.scores[f])));
  CHECK(a.order == b.order);
}

TEST_CASE("fisher commutes with column permutation") {
  const LabeledDataset data = test_support::random_dataset(20, 6, 2, 13);
  const std::vector<std::size_t> perm = {4, 0, 5, 2, 1, 3};
  LabeledDataset shuffled = data;
  for (std::size_t f = 0; f < perm.size(); ++f) {
    shuffled.feature_names[f] = data.feature_names[perm[f]];
    for (std::size_t i = 0; i < data.num_instances(); ++i)
      shuffled.features(i, f) = data.features(i, perm[f]);
  }
  const FeatureRanking a = fisher_scores(data);
  const FeatureRanking b = fisher_scores(shuffled);
  for (std::size_t f = 0; f < perm.size(); ++f)
    CHECK(b.scores[f] == a.scores[perm[f]]);
}

TEST_CASE("relieff recovers the worked four-point weights") {
  const std::vector<std::string> labels = {"A", "A", "B", "B"};
  const LabeledDataset data = test_support::dataset_from_columns(
      {{0.0, 0.0, 1.0, 1.0}, {0.0, 1.0, 0.0, 1.0}}, labels);
  ReliefFConfig config;
  config.k_neighbors = 1;
  const FeatureRanking r = relieff_scores(data, config);
  CHECK(r.scores[0] == 1.0);
  CHECK(r.scores[1] == -1.0);
  CHECK(r.order == std::vector<std::size_t>{0, 1});

  // Duplicating every row adds zero-distance twins, which the neighbor
  // search ignores, so the weights hold.
  LabeledDataset doubled = test_support::dataset_from_columns(
      {{0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0},
       {0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0}},
      {"A", "A", "B", "B", "A", "A", "B", "B"});
  const FeatureRanking d = relieff_scores(doubled, config);
  CHECK(d.scores[0] == 1.0);
  CHECK(d.scores[1] == -1.0);
}

TEST_CASE("relieff matches the enumeration oracle exactly") {
  Rng rng(909);
  for (int t = 0; t < 50; ++t) {
    const std::size_t num_classes = 2 + rng.index(2);
    const std::size_t m = std::max<std::size_t>(5, num_classes + 3 + rng.index(15));
    const std::size_t n = 1 + rng.index(6);
    const LabeledDataset data = gridded_dataset(rng, m, n, num_classes);
    ReliefFConfig config;
    config.k_neighbors = 1 + t % 2;
    const FeatureRanking r = relieff_scores(data, config);
    const std::vector<double> oracle = relieff_oracle(data, config.k_neighbors);
    for (std::size_t f = 0; f < n; ++f) CHECK(r.scores[f] == oracle[f]);
  }
}

TEST_CASE("relieff weights stay within the unit interval") {
  const LabeledDataset data = test_support::random_dataset(40, 8, 3, 321);
  const FeatureRanking r = relieff_scores(data);
  for (double s : r.scores) {
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("relieff surfaces sampling and degeneracy warnings") {
  SUBCASE("oversized sample request clips") {
    const LabeledDataset data = test_support::random_dataset(12, 3, 2, 5);
    ReliefFConfig config;
    config.sample_count = 50;
    const FeatureRanking r = relieff_scores(data, config);
    CHECK(has_warning(r.warnings, "clipped"));
  }
  SUBCASE("singleton class instances are skipped") {
    const LabeledDataset data = test_support::dataset_from_columns(
        {{0.0, 0.2, 0.4, 5.0}}, {"A", "A", "A", "B"});
    ReliefFConfig config;
    config.k_neighbors = 1;
    const FeatureRanking r = relieff_scores(data, config);
    CHECK(has_warning(r.warnings, "skipped"));
  }
  SUBCASE("fully duplicated data scores zero everywhere") {
    const LabeledDataset data = test_support::dataset_from_columns(
        {{1.0, 1.0, 1.0, 1.0}, {2.0, 2.0, 2.0, 2.0}}, {"A", "B", "A", "B"});
    const FeatureRanking r = relieff_scores(data);
    CHECK(r.scores == std::vector<double>{0.0, 0.0});
    CHECK(has_warning(r.warnings, "skipped"));
  }
}

TEST_CASE("relieff subsampling is deterministic in the seed") {
  const LabeledDataset data = test_support::random_dataset(30, 5, 3, 88);
  ReliefFConfig config;
  config.sample_count = 11;
  config.rng_seed = 3;
  const FeatureRanking a = relieff_scores(data, config);
  const FeatureRanking b = relieff_scores(data, config);
  CHECK(a.scores == b.scores);
  CHECK(a.order == b.order);

  config.rng_seed = 4;
  const FeatureRanking c = relieff_scores(data, config);
  CHECK(a.scores != c.scores);  // different subsample, different weights
}

TEST_CASE("ilfs walk relevance agrees with the truncated series") {
  SUBCASE("zero adjacency yields zero relevance") {
    const Matrix zero(4, 4);
    const Matrix rel = ilfs_relevance_from(zero, 0.7);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(rel(i, j) == 0.0);
  }
  SUBCASE("moderate damping, 50 terms") {
    const LabeledDataset data = test_support::random_dataset(36, 12, 3, 246);
    IlfsConfig config;
    config.alpha_fraction = 0.3;
    const IlfsGraph graph = build_ilfs_graph(data, config);
    REQUIRE(graph.alpha > 0.0);
    CHECK(std::abs(spectral_radius(graph.adjacency) * graph.alpha - 0.3) <= 1e-6);
    const Matrix series = series_relevance(graph.adjacency, graph.alpha, 50);
    for (std::size_t i = 0; i < graph.relevance.rows(); ++i)
      for (std::size_t j = 0; j < graph.relevance.cols(); ++j)
        CHECK(std::abs(graph.relevance(i, j) - series(i, j)) <= 1e-9);
  }
  SUBCASE("boundary damping needs a longer series") {
    const LabeledDataset data = test_support::random_dataset(30, 8, 2, 135);
    IlfsConfig config;  // default alpha_fraction 0.9
    const IlfsGraph graph = build_ilfs_graph(data, config);
    REQUIRE(graph.alpha > 0.0);
    const Matrix series = series_relevance(graph.adjacency, graph.alpha, 400);
    for (std::size_t i = 0; i < graph.relevance.rows(); ++i)
      for (std::size_t j = 0; j < graph.relevance.cols(); ++j)
        CHECK(std::abs(graph.relevance(i, j) - series(i, j)) <= 1e-9);
  }
}

TEST_CASE("ilfs scores are the relevance row sums") {
  const LabeledDataset data = test_support::random_dataset(30, 7, 3, 71);
  const IlfsConfig config;
  const IlfsGraph graph = build_ilfs_graph(data, config);
  const FeatureRanking r = ilfs_scores(data, config);
  for (std::size_t f = 0; f < data.num_features(); ++f) {
    double row = 0.0;
    for (std::size_t j = 0; j < data.num_features(); ++j) row += graph.relevance(f, j);
    CHECK(r.scores[f] == row);
  }
}

TEST_CASE("indistinguishable features rank in index order") {
  // Every column identical: token rows coincide, the graph carries nothing.
  const std::vector<double> column = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  const LabeledDataset data = test_support::dataset_from_columns(
      {column, column, column, column}, {"A", "B", "A", "B", "A", "B"});
  const FeatureRanking r = ilfs_scores(data);
  CHECK(r.scores == std::vector<double>(4, 0.0));
  CHECK(r.order == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("ilfs commutes with column permutation on separated data") {
  const PlantedDataset planted = generate_planted_dataset(40, 6, 2, 2, 31);
  const LabeledDataset& data = planted.data;
  const std::vector<std::size_t> perm = {3, 5, 0, 2, 4, 1};
  LabeledDataset shuffled = data;
  for (std::size_t f = 0; f < perm.size(); ++f) {
    shuffled.feature_names[f] = data.feature_names[perm[f]];
    for (std::size_t i = 0; i < data.num_instances(); ++i)
      shuffled.features(i, f) = data.features(i, perm[f]);
  }
  const FeatureRanking a = ilfs_scores(data);
  const FeatureRanking b = ilfs_scores(shuffled);
  for (std::size_t f = 0; f < perm.size(); ++f)
    CHECK(std::abs(b.scores[f] - a.scores[perm[f]]) <=
          1e-9 * std::max(1.0, std::abs(a.scores[perm[f]])));
}

TEST_CASE("ilfs reports an exhausted iteration budget") {
  const LabeledDataset data = test_support::random_dataset(30, 8, 3, 55);
  IlfsConfig config;
  config.em_iterations = 1;
  const FeatureRanking r = ilfs_scores(data, config);
  CHECK(has_warning(r.warnings, "iteration budget"));
}
