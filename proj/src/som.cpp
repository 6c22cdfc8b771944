#include <algorithm>
#include <cmath>
#include <limits>

#include "emofs/afs.hpp"

namespace emofs {

std::vector<std::size_t> AfsConfig::default_grid() {
  std::vector<std::size_t> grid;
  for (std::size_t n = 5; n <= 100; n += 5) grid.push_back(n);
  return grid;
}

void AfsConfig::validate() const {
  if (n_grid.empty()) throw Error("config", "cluster-count grid is empty");
  for (std::size_t n : n_grid)
    if (n == 0) throw Error("config", "cluster counts must be at least 1");
  if (som_iterations == 0)
    throw Error("config", "som_iterations must be positive");
  svm.validate();
}

namespace {

struct HexGrid {
  std::size_t height = 1;
  std::size_t width = 1;
  std::vector<double> x;  // per unit, offset coordinates
  std::vector<double> y;

  explicit HexGrid(std::size_t units) {
    // Most-square factorization; primes degenerate to a single row.
    for (std::size_t h = static_cast<std::size_t>(std::sqrt(
             static_cast<double>(units)));
         h >= 1; --h) {
      if (units % h == 0) {
        height = h;
        width = units / h;
        break;
      }
    }
    x.resize(units);
    y.resize(units);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const std::size_t u = r * width + c;
        x[u] = static_cast<double>(c) + 0.5 * static_cast<double>(r % 2);
        y[u] = static_cast<double>(r) * std::sqrt(3.0) / 2.0;
      }
    }
  }

  double dist2(std::size_t a, std::size_t b) const {
    const double dx = x[a] - x[b];
    const double dy = y[a] - y[b];
    return dx * dx + dy * dy;
  }

  double diagonal() const { return std::sqrt(dist2(0, x.size() - 1)); }
};

// Truncated Gaussian: exactly zero at and beyond the radius, so the final
// radius-1 phase reduces to plain per-unit mean updates (nearest hex
// neighbors sit at distance 1).
double kernel(double dist2, double sigma) {
  if (dist2 >= sigma * sigma - 1e-9) return 0.0;
  return std::exp(-dist2 / (2.0 * sigma * sigma));
}

}  // namespace

ClusterAssignment som_cluster_features(const LabeledDataset& data,
                                       std::size_t n_units,
                                       const AfsConfig& config) {
  if (n_units == 0) throw Error("value", "cluster count must be at least 1");
  if (config.som_iterations == 0)
    throw Error("config", "som_iterations must be positive");
  const std::size_t n = data.num_features();
  const std::size_t m = data.num_instances();
  if (n == 0) throw Error("value", "dataset has no features");

  ClusterAssignment out;
  if (n_units > n) {
    out.warnings.push_back("cluster count " + std::to_string(n_units) +
                           " clipped to " + std::to_string(n) + " features");
    n_units = n;
  }
  out.n_units = n_units;

  // Features are points in instance space: columns of the standardized data.
  const Matrix z = apply_zscore(fit_zscore(data.features), data.features);
  Matrix points(n, m);
  for (std::size_t f = 0; f < n; ++f)
    for (std::size_t i = 0; i < m; ++i) points(f, i) = z(i, f);

  const HexGrid grid(n_units);
  const double sigma0 = std::max(1.0, grid.diagonal() / 2.0);
  const std::size_t total = config.som_iterations;
  const std::size_t plateau_start = total * 3 / 4;

  Rng rng(mix_seed(config.rng_seed, n_units));
  const std::vector<std::size_t> init = rng.sample_without_replacement(n, n_units);
  Matrix codebook(n_units, m);
  for (std::size_t u = 0; u < n_units; ++u)
    std::copy(points.row(init[u]).begin(), points.row(init[u]).end(),
              codebook.row(u).begin());

  std::vector<std::size_t> assignment(n, 0);
  std::vector<double> best_dist2(n, 0.0);
  auto assign = [&]() {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t f = 0; f < n; ++f) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < n_units; ++u) {
        double d = 0.0;
        auto p = points.row(f);
        auto c = codebook.row(u);
        for (std::size_t i = 0; i < m; ++i) {
          const double diff = p[i] - c[i];
          d += diff * diff;
        }
        if (d < bd) {
          bd = d;
          best = u;
        }
      }
      assignment[f] = best;
      best_dist2[f] = bd;
    }
    double qe = 0.0;
    for (std::size_t f = 0; f < n; ++f) qe += best_dist2[f];
    out.quantization_errors.push_back(qe / static_cast<double>(n));
  };

  Matrix unit_sum(n_units, m);
  std::vector<double> unit_count(n_units);
  for (std::size_t t = 0; t < total; ++t) {
    assign();

    const double sigma =
        t < plateau_start
            ? sigma0 + (1.0 - sigma0) * static_cast<double>(t) /
                  static_cast<double>(std::max<std::size_t>(plateau_start, 2) - 1)
            : 1.0;

    std::fill(unit_sum.data().begin(), unit_sum.data().end(), 0.0);
    std::fill(unit_count.begin(), unit_count.end(), 0.0);
    for (std::size_t f = 0; f < n; ++f) {
      auto dst = unit_sum.row(assignment[f]);
      auto p = points.row(f);
      for (std::size_t i = 0; i < m; ++i) dst[i] += p[i];
      unit_count[assignment[f]] += 1.0;
    }

#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t u = 0; u < n_units; ++u) {
      std::vector<double> num(m, 0.0);
      double den = 0.0;
      for (std::size_t v = 0; v < n_units; ++v) {
        if (unit_count[v] == 0.0) continue;
        const double h = kernel(grid.dist2(u, v), sigma);
        if (h == 0.0) continue;
        auto sv = unit_sum.row(v);
        for (std::size_t i = 0; i < m; ++i) num[i] += h * sv[i];
        den += h * unit_count[v];
      }
      if (den > 0.0) {
        auto c = codebook.row(u);
        for (std::size_t i = 0; i < m; ++i) c[i] = num[i] / den;
      }
      // A unit with no weight anywhere keeps its previous vector.
    }
  }
  assign();

  out.assignment = assignment;
  out.members.resize(n_units);
  for (std::size_t f = 0; f < n; ++f) out.members[assignment[f]].push_back(f);
  out.codebook = std::move(codebook);
  return out;
}

}  // namespace emofs
