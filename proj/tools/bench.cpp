// Times each parallel kernel against its serial reference twin on one
// synthetic dataset and checks the outputs are bit-identical. Exits nonzero
// on any mismatch, so it doubles as a coarse parity check.

#include <cstdio>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "emofs/harness.hpp"
#include "emofs/reference.hpp"

namespace {

double best_of(std::size_t reps, const std::function<void()>& fn) {
  double best = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (r == 0 || s < best) best = s;
  }
  return best;
}

bool same_ranking(const emofs::FeatureRanking& a,
                  const emofs::FeatureRanking& b) {
  return a.scores == b.scores && a.order == b.order;
}

bool same_clustering(const emofs::ClusterAssignment& a,
                     const emofs::ClusterAssignment& b) {
  return a.assignment == b.assignment && a.codebook == b.codebook &&
         a.quantization_errors == b.quantization_errors;
}

void report_row(const std::string& kernel, double serial_s, double parallel_s,
                bool identical) {
  std::printf("%-10s %12.1f %12.1f %9.2fx   %s\n", kernel.c_str(),
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parallel-vs-serial kernel benchmark"};
  std::size_t instances = 600;
  std::size_t features = 400;
  std::size_t reps = 3;
  std::uint64_t seed = 1;
  app.add_option("--instances", instances, "rows of synthetic data")
      ->capture_default_str();
  app.add_option("--features", features, "feature columns")
      ->capture_default_str();
  app.add_option("--reps", reps, "repetitions; best time is kept")
      ->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const emofs::PlantedDataset planted = emofs::generate_planted_dataset(
      instances, features, features / 10, 4, seed);
  const emofs::LabeledDataset& data = planted.data;

#if defined(_OPENMP)
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("data: %zu instances x %zu features\n\n", data.num_instances(),
              data.num_features());
  std::printf("%-10s %12s %12s %10s\n", "kernel", "serial ms", "parallel ms",
              "speedup");

  bool all_identical = true;
  auto check = [&](const std::string& kernel, double serial_s,
                   double parallel_s, bool identical) {
    report_row(kernel, serial_s, parallel_s, identical);
    all_identical = all_identical && identical;
  };

  {
    const emofs::NormalizationStats stats = emofs::fit_zscore(data.features);
    emofs::Matrix serial_out, parallel_out;
    const double ts = best_of(reps, [&] {
      serial_out = emofs::reference::apply_zscore(stats, data.features);
    });
    const double tp = best_of(reps, [&] {
      parallel_out = emofs::apply_zscore(stats, data.features);
    });
    check("zscore", ts, tp, serial_out == parallel_out);
  }
  {
    emofs::FeatureRanking serial_out, parallel_out;
    const double ts = best_of(
        reps, [&] { serial_out = emofs::reference::fisher_scores(data); });
    const double tp =
        best_of(reps, [&] { parallel_out = emofs::fisher_scores(data); });
    check("fisher", ts, tp, same_ranking(serial_out, parallel_out));
  }
  {
    emofs::ReliefFConfig config;
    emofs::FeatureRanking serial_out, parallel_out;
    const double ts = best_of(reps, [&] {
      serial_out = emofs::reference::relieff_scores(data, config);
    });
    const double tp =
        best_of(reps, [&] { parallel_out = emofs::relieff_scores(data, config); });
    check("relieff", ts, tp, same_ranking(serial_out, parallel_out));
  }
  {
    emofs::IlfsConfig config;
    emofs::FeatureRanking serial_out, parallel_out;
    const double ts = best_of(
        reps, [&] { serial_out = emofs::reference::ilfs_scores(data, config); });
    const double tp =
        best_of(reps, [&] { parallel_out = emofs::ilfs_scores(data, config); });
    check("ilfs", ts, tp, same_ranking(serial_out, parallel_out));
  }
  {
    emofs::AfsConfig config;
    config.som_iterations = 50;
    const std::size_t n_units = 25;
    emofs::ClusterAssignment serial_out, parallel_out;
    const double ts = best_of(reps, [&] {
      serial_out = emofs::reference::som_cluster_features(data, n_units, config);
    });
    const double tp = best_of(reps, [&] {
      parallel_out = emofs::som_cluster_features(data, n_units, config);
    });
    check("som", ts, tp, same_clustering(serial_out, parallel_out));
  }

  if (!all_identical) {
    std::fprintf(stderr, "parallel and serial kernels disagree\n");
    return 1;
  }
  return 0;
}
