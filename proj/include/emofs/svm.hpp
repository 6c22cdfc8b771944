#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emofs/common.hpp"
#include "emofs/dataset.hpp"

namespace emofs {

struct SvmConfig {
  double box_constraint = 0.75;
  double kkt_tolerance = 1e-3;
  std::size_t max_iterations = 1000000;
  std::uint64_t rng_seed = 0;  // echoed in configs; the solver is deterministic

  void validate() const;
};

struct TrainDiagnostics {
  std::size_t iterations = 0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  bool converged = false;
  std::vector<double> alphas;
};

/// Linear decision function w.x + b over a fixed feature order.
struct BinarySvmModel {
  std::vector<double> w;
  double b = 0.0;
  TrainDiagnostics diagnostics;

  double decision_value(std::span<const double> x) const;
};

/// Solves the soft-margin dual by sequential minimal optimization, updating
/// the maximal violating pair each step. y entries must be +1 or -1, with
/// both classes present. Exhausting the iteration budget returns the last
/// iterate with diagnostics.converged = false.
BinarySvmModel train_binary_smo(const Matrix& x, std::span<const int> y,
                                const SvmConfig& config);

/// Largest residual of the optimality conditions at the model's (w, b),
/// judged with the trained dual variables:
///   alpha = 0  ->  y f(x) >= 1,  alpha = C  ->  y f(x) <= 1,
///   0 < alpha < C  ->  y f(x) = 1.
/// A converged model keeps this within config.kkt_tolerance.
double max_kkt_violation(const Matrix& x, std::span<const int> y,
                         const BinarySvmModel& model, const SvmConfig& config);

struct PairwiseModel {
  std::size_t class_a = 0;  // index into class_set; decision >= 0 votes for it
  std::size_t class_b = 0;
  BinarySvmModel model;
};

struct MulticlassSvmModel {
  std::vector<std::string> class_set;
  std::vector<PairwiseModel> pairs;  // all (a, b) with a < b, lexicographic
  SvmConfig config;
  std::size_t num_features = 0;

  /// Pairwise voting. Ties go to the largest summed absolute margin over won
  /// pairs, then to the earliest class in class_set.
  std::size_t predict_index(std::span<const double> x) const;
  const std::string& predict(std::span<const double> x) const;
};

/// Trains one binary model per class pair, each restricted to the pair's
/// instances and the given feature columns.
MulticlassSvmModel train_one_vs_one(const LabeledDataset& data,
                                    std::span<const std::size_t> feature_subset,
                                    const SvmConfig& config);

}  // namespace emofs
