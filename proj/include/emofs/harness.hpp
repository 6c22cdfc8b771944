#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emofs/afs.hpp"
#include "emofs/dataset.hpp"
#include "emofs/eval.hpp"
#include "emofs/selectors.hpp"
#include "emofs/svm.hpp"

namespace emofs {

struct PlantedDataset {
  LabeledDataset data;
  std::vector<std::size_t> informative_indices;  // ground truth, ascending
};

/// Synthetic oracle data: informative columns get class-dependent means at
/// least 4 sigma apart (a distinct level per class), noise columns are pure
/// standard normal, and subjects rotate round-robin over 4 ids so every
/// LOSO fold keeps every class in training.
PlantedDataset generate_planted_dataset(std::size_t m, std::size_t n,
                                        std::size_t n_informative,
                                        std::size_t n_classes,
                                        std::uint64_t seed);

struct ExperimentConfig {
  std::vector<DatasetManifest> manifests;  // combined in order when several
  std::string selector = "baseline";  // baseline|fisher|relieff|ilfs|afs
  ReliefFConfig relieff;
  IlfsConfig ilfs;
  AfsConfig afs;
  std::vector<std::size_t> k_grid;  // empty uses 1..n step max(1, n/50), plus n
  SvmConfig svm;
  std::uint64_t rng_seed = 0;
  std::string experiment_id;  // "<selector>-<hash prefix>" when empty
  std::string output_dir = ".";

  void validate() const;
};

/// Canonical JSON of everything that identifies the computation; storage
/// fields (output_dir, experiment_id) stay out so the hash names the
/// experiment, not where it landed.
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
std::string experiment_config_hash(const ExperimentConfig& config);

struct CurveEntry {
  std::size_t k = 0;
  double uar = 0.0;
};

struct ResultRecord {
  std::string experiment_id;
  std::string config_hash;
  std::string dataset_name;
  std::string selector;
  std::size_t num_instances = 0;
  std::size_t num_features = 0;
  std::vector<std::string> class_set;
  std::vector<std::string> feature_names;
  std::vector<CurveEntry> curve;  // ascending k; single entry for afs/baseline
  std::size_t best_num_features = 0;
  double best_uar = 0.0;
  std::vector<std::size_t> best_selected_indices;  // ascending
  EvalReport best_report;
  std::vector<AfsEvaluatedCluster> afs_table;  // afs runs only
  std::vector<std::string> warnings;
  ExperimentConfig config;
};

nlohmann::json result_record_to_json(const ResultRecord& record);
ResultRecord result_record_from_json(const nlohmann::json& j);

/// Runs the configured experiment and persists record.json (deterministic
/// payload), meta.json (timings), and the selector's ranking or cluster
/// table under <output_dir>/<experiment_id>/.
ResultRecord run_experiment(const ExperimentConfig& config);

/// Writes best_results.csv plus per-record curve and confusion CSVs.
void emit_reports(std::span<const ResultRecord> records,
                  const std::string& out_dir);

/// Self-contained reduced-feature inference artifact.
struct DeploymentBundle {
  std::string dataset_name;
  std::string selector;
  std::string config_hash;
  std::vector<std::string> feature_names;      // full input feature space
  std::vector<std::size_t> selected_indices;   // ascending, into feature_names
  NormalizationStats stats;                    // per selected column
  MulticlassSvmModel model;                    // dimension = |selected|
};

/// Trains the deployment model on the whole dataset, restricted to the
/// record's best subset: standardization fitted on the selected columns,
/// then a one-vs-one SVM under the record's solver settings.
std::pair<MulticlassSvmModel, NormalizationStats> train_deployment_model(
    const ResultRecord& record, const LabeledDataset& data);

DeploymentBundle export_bundle(const ResultRecord& record,
                               const MulticlassSvmModel& model,
                               const NormalizationStats& stats);

/// Bundle files carry a checksum over the payload; load refuses mismatches.
void save_bundle(const DeploymentBundle& bundle, const std::string& path);
DeploymentBundle load_bundle(const std::string& path);

struct ClassifyOutcome {
  std::vector<std::string> labels;
  // Feature cells actually parsed; stays at rows * |selected| because
  // non-selected columns are never even converted.
  std::size_t values_read = 0;
};

/// Applies the bundle to a feature CSV: selected columns are located by
/// name, standardized with the stored stats, and classified row by row.
/// Every bundle feature name must appear in the header exactly once.
ClassifyOutcome classify_csv(const DeploymentBundle& bundle,
                             const std::string& csv_path);

}  // namespace emofs
