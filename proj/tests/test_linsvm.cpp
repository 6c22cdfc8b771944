#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "emofs/serialize.hpp"
#include "emofs/svm.hpp"
#include "test_support.hpp"

using namespace emofs;

namespace {

double dual_objective(const Matrix& x, const std::vector<int>& y,
                      const std::vector<double>& alpha) {
  const std::size_t m = x.rows();
  double linear = 0.0;
  for (double a : alpha) linear += a;
  double quad = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double k = 0.0;
      for (std::size_t f = 0; f < x.cols(); ++f) k += x(i, f) * x(j, f);
      quad += alpha[i] * alpha[j] * y[i] * y[j] * k;
    }
  }
  return linear - 0.5 * quad;
}

// Brute-force maximizer of the box-and-equality-constrained dual for up to
// 4 points: all but one alpha walk a grid, the last is pinned by
// sum(alpha_i y_i) = 0, and the winning cell is refined six times.
double qp_oracle(const Matrix& x, const std::vector<int>& y, double c) {
  const std::size_t m = x.rows();
  REQUIRE(m >= 2);
  REQUIRE(m <= 4);
  const std::size_t free_count = m - 1;

  std::vector<double> center(free_count, c / 2.0);
  double span = c / 2.0;  // grid half-width per free variable
  double best = -1e300;
  std::vector<double> alpha(m, 0.0);
  std::vector<double> best_free(center);

  for (int round = 0; round < 7; ++round) {
    const std::size_t steps = round == 0 ? 41 : 21;
    std::vector<std::size_t> idx(free_count, 0);
    while (true) {
      bool feasible = true;
      double pinned = 0.0;
      for (std::size_t v = 0; v < free_count; ++v) {
        const double lo = std::max(0.0, center[v] - span);
        const double hi = std::min(c, center[v] + span);
        alpha[v] = lo + (hi - lo) * static_cast<double>(idx[v]) /
                            static_cast<double>(steps - 1);
        pinned += alpha[v] * y[v];
      }
      alpha[m - 1] = -pinned * y[m - 1];
      feasible = alpha[m - 1] >= -1e-12 && alpha[m - 1] <= c + 1e-12;
      if (feasible) {
        alpha[m - 1] = std::min(std::max(alpha[m - 1], 0.0), c);
        const double obj = dual_objective(x, y, alpha);
        if (obj > best) {
          best = obj;
          for (std::size_t v = 0; v < free_count; ++v) best_free[v] = alpha[v];
        }
      }
      std::size_t v = 0;
      for (; v < free_count; ++v) {
        if (++idx[v] < steps) break;
        idx[v] = 0;
      }
      if (v == free_count) break;
    }
    center = best_free;
    span /= 5.0;
  }
  return best;
}

// Random binary problem; margin > 0 separates the classes, margin = 0 mixes
// them freely.
std::pair<Matrix, std::vector<int>> random_problem(Rng& rng, std::size_t m,
                                                   std::size_t n,
                                                   double margin) {
  Matrix x(m, n);
  std::vector<int> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = i % 2 == 0 ? 1 : -1;
    for (std::size_t f = 0; f < n; ++f)
      x(i, f) = rng.normal() + (f == 0 ? margin * y[i] : 0.0);
  }
  return {std::move(x), std::move(y)};
}

}  // namespace

TEST_CASE("separable 1-D pair is classified with the default box") {
  Matrix x(2, 1);
  x(0, 0) = -1.0;
  x(1, 0) = 1.0;
  const std::vector<int> y = {-1, 1};
  SvmConfig config;
  CHECK(config.box_constraint == 0.75);
  const BinarySvmModel model = train_binary_smo(x, y, config);
  CHECK(model.decision_value(x.row(0)) < 0.0);
  CHECK(model.decision_value(x.row(1)) > 0.0);
  CHECK(model.diagnostics.converged);
}

TEST_CASE("dual objective matches a brute-force QP oracle") {
  SvmConfig config;
  config.kkt_tolerance = 1e-8;  // drive suboptimality well under the bar

  SUBCASE("fixed 4-point 2-D problem") {
    Matrix x(4, 2);
    const double pts[4][2] = {{1.0, 1.2}, {0.8, -0.3}, {-1.1, 0.4}, {-0.6, -1.0}};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t f = 0; f < 2; ++f) x(i, f) = pts[i][f];
    const std::vector<int> y = {1, 1, -1, -1};
    const BinarySvmModel model = train_binary_smo(x, y, config);
    const double oracle = qp_oracle(x, y, config.box_constraint);
    CHECK(std::abs(model.diagnostics.dual_objective - oracle) <= 1e-6);
  }
  SUBCASE("random problems of 2 to 4 points") {
    Rng rng(42);
    for (int t = 0; t < 25; ++t) {
      const std::size_t m = 2 + rng.index(3);
      const std::size_t n = 1 + rng.index(3);
      const double margin = t % 2 == 0 ? 1.0 : 0.0;
      auto [x, y] = random_problem(rng, m, n, margin);
      const BinarySvmModel model = train_binary_smo(x, y, config);
      const double oracle = qp_oracle(x, y, config.box_constraint);
      CHECK(std::abs(model.diagnostics.dual_objective - oracle) <= 1e-6);
      CHECK(model.diagnostics.duality_gap >= -1e-9);
    }
  }
}

TEST_CASE("KKT residuals stay within tolerance on random problems") {
  Rng rng(7);
  SvmConfig config;  // default 1e-3 tolerance
  for (int t = 0; t < 40; ++t) {
    const std::size_t m = 4 + rng.index(30);
    const std::size_t n = 1 + rng.index(6);
    const double margin = t % 2 == 0 ? 2.0 : 0.0;
    auto [x, y] = random_problem(rng, m, n, margin);
    const BinarySvmModel model = train_binary_smo(x, y, config);
    REQUIRE(model.diagnostics.converged);
    CHECK(max_kkt_violation(x, y, model, config) <= config.kkt_tolerance);
  }
}

TEST_CASE("separable data with a large box reaches zero training error") {
  Rng rng(3);
  SvmConfig config;
  config.box_constraint = 100.0;
  auto [x, y] = random_problem(rng, 20, 3, 3.0);
  const BinarySvmModel model = train_binary_smo(x, y, config);
  for (std::size_t i = 0; i < x.rows(); ++i)
    CHECK(model.decision_value(x.row(i)) * y[i] > 0.0);
}

TEST_CASE("degenerate label vectors are rejected") {
  Matrix x(3, 1);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  SvmConfig config;
  CHECK_THROWS_AS(train_binary_smo(x, std::vector<int>{1, 1, 1}, config), Error);
  CHECK_THROWS_AS(train_binary_smo(x, std::vector<int>{1, -1, 2}, config),
                  Error);
}

TEST_CASE("exhausted iteration budget returns a flagged usable model") {
  Rng rng(9);
  auto [x, y] = random_problem(rng, 24, 3, 0.0);
  SvmConfig config;
  config.max_iterations = 2;
  const BinarySvmModel model = train_binary_smo(x, y, config);
  CHECK_FALSE(model.diagnostics.converged);
  CHECK(std::isfinite(model.b));
  for (double w : model.w) CHECK(std::isfinite(w));
}

TEST_CASE("training is deterministic") {
  Rng rng(12);
  auto [x, y] = random_problem(rng, 18, 4, 0.5);
  SvmConfig config;
  const BinarySvmModel a = train_binary_smo(x, y, config);
  const BinarySvmModel b = train_binary_smo(x, y, config);
  CHECK(a.w == b.w);
  CHECK(a.b == b.b);
  CHECK(a.diagnostics.alphas == b.diagnostics.alphas);
}

TEST_CASE("one-vs-one builds one model per class pair") {
  using test_support::random_dataset;
  SvmConfig config;
  SUBCASE("7 classes give 21 pairs") {
    const LabeledDataset ds = random_dataset(42, 3, 7, 21);
    std::vector<std::size_t> subset = {0, 1, 2};
    const MulticlassSvmModel model = train_one_vs_one(ds, subset, config);
    CHECK(model.pairs.size() == 21);
    CHECK(model.num_features == 3);
  }
  SUBCASE("2 classes give 1 pair") {
    const LabeledDataset ds = random_dataset(10, 2, 2, 5);
    std::vector<std::size_t> subset = {0, 1};
    CHECK(train_one_vs_one(ds, subset, config).pairs.size() == 1);
  }
  SUBCASE("single class errors") {
    const LabeledDataset ds = random_dataset(6, 2, 1, 2);
    std::vector<std::size_t> subset = {0};
    CHECK_THROWS_AS(train_one_vs_one(ds, subset, config), Error);
  }
  SUBCASE("empty or invalid subsets error") {
    const LabeledDataset ds = random_dataset(10, 2, 2, 5);
    CHECK_THROWS_AS(train_one_vs_one(ds, std::vector<std::size_t>{}, config),
                    Error);
    CHECK_THROWS_AS(
        train_one_vs_one(ds, std::vector<std::size_t>{0, 0}, config), Error);
    CHECK_THROWS_AS(train_one_vs_one(ds, std::vector<std::size_t>{9}, config),
                    Error);
  }
}

TEST_CASE("voting ties fall back to summed winning margins") {
  // Hand-built 3-class model over one feature: each class wins exactly one
  // pair at x=1, so the margin sums decide.
  MulticlassSvmModel model;
  model.class_set = {"a", "b", "c"};
  model.num_features = 1;
  auto pair = [](std::size_t ca, std::size_t cb, double w) {
    PairwiseModel p;
    p.class_a = ca;
    p.class_b = cb;
    p.model.w = {w};
    p.model.b = 0.0;
    return p;
  };
  model.pairs = {pair(0, 1, 0.9), pair(0, 2, -0.2), pair(1, 2, 0.1)};
  // Votes at x=1: a beats b (0.9), c beats a (0.2), b beats c (0.1), so one
  // vote each; margin sums a: 0.9, b: 0.1, c: 0.2.
  const std::vector<double> x = {1.0};
  CHECK(model.predict(x) == "a");

  SUBCASE("prediction is invariant under uniform margin scaling") {
    for (auto& p : model.pairs) {
      p.model.w[0] *= 37.0;
      p.model.b *= 37.0;
    }
    CHECK(model.predict(x) == "a");
  }
  SUBCASE("full margin tie falls back to class_set order") {
    model.pairs = {pair(0, 1, 0.5), pair(0, 2, -0.5), pair(1, 2, 0.5)};
    // Every class wins one pair with margin 0.5.
    CHECK(model.predict(x) == "a");
  }
  SUBCASE("dimension mismatch is rejected") {
    const std::vector<double> bad = {1.0, 2.0};
    CHECK_THROWS_AS(model.predict(bad), Error);
  }
}

TEST_CASE("labels are invariant under feature column reordering") {
  // Integer-valued data keeps every dot product exact, so the permuted
  // problem solves identically and labels cannot drift.
  using test_support::dataset_from_columns;
  const std::vector<std::vector<double>> cols = {
      {1, 2, 7, 8, 1, 7}, {4, 1, 2, 2, 3, 1}, {0, 1, 5, 4, 1, 6}};
  const std::vector<std::string> labels = {"lo", "lo", "hi", "hi", "lo", "hi"};
  const LabeledDataset ds = dataset_from_columns(cols, labels);
  const std::vector<std::size_t> perm = {2, 0, 1};
  const std::vector<std::vector<double>> cols_p = {cols[2], cols[0], cols[1]};
  const LabeledDataset ds_p = dataset_from_columns(cols_p, labels);

  SvmConfig config;
  const std::vector<std::size_t> all = {0, 1, 2};
  const MulticlassSvmModel m1 = train_one_vs_one(ds, all, config);
  const MulticlassSvmModel m2 = train_one_vs_one(ds_p, all, config);
  for (std::size_t i = 0; i < ds.num_instances(); ++i) {
    const auto r = ds.features.row(i);
    std::vector<double> xp = {r[2], r[0], r[1]};
    CHECK(m1.predict(r) == m2.predict(xp));
  }
}

TEST_CASE("model JSON roundtrip preserves decisions bit-exactly") {
  using test_support::random_dataset;
  const LabeledDataset ds = random_dataset(24, 4, 3, 31);
  SvmConfig config;
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  const MulticlassSvmModel model = train_one_vs_one(ds, all, config);
  const MulticlassSvmModel back =
      multiclass_model_from_json(multiclass_model_to_json(model));
  CHECK(back.class_set == model.class_set);
  REQUIRE(back.pairs.size() == model.pairs.size());
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    CHECK(back.pairs[p].model.w == model.pairs[p].model.w);
    CHECK(back.pairs[p].model.b == model.pairs[p].model.b);
  }
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x;
    for (int f = 0; f < 4; ++f) x.push_back(rng.normal());
    CHECK(model.predict(x) == back.predict(x));
  }
}
