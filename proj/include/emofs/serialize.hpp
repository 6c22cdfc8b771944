#pragma once

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "emofs/afs.hpp"
#include "emofs/eval.hpp"
#include "emofs/selectors.hpp"
#include "emofs/svm.hpp"

namespace emofs {

nlohmann::json svm_config_to_json(const SvmConfig& config);
SvmConfig svm_config_from_json(const nlohmann::json& j);

nlohmann::json relieff_config_to_json(const ReliefFConfig& config);
ReliefFConfig relieff_config_from_json(const nlohmann::json& j);

nlohmann::json ilfs_config_to_json(const IlfsConfig& config);
IlfsConfig ilfs_config_from_json(const nlohmann::json& j);

nlohmann::json afs_config_to_json(const AfsConfig& config);
AfsConfig afs_config_from_json(const nlohmann::json& j);

nlohmann::json confusion_to_json(const ConfusionMatrix& confusion);
ConfusionMatrix confusion_from_json(const nlohmann::json& j);
std::string confusion_to_csv(const ConfusionMatrix& confusion);

nlohmann::json eval_report_to_json(const EvalReport& report);
/// Accepts null recall entries (classes absent from the data) as NaN.
EvalReport eval_report_from_json(const nlohmann::json& j);

nlohmann::json ranking_to_json(const FeatureRanking& ranking,
                               std::span<const std::string> feature_names);

nlohmann::json afs_result_to_json(const AfsResult& result);

/// Pairwise weights and biases round-trip through shortest decimal strings,
/// so a reloaded model reproduces decision values bit-exactly.
nlohmann::json multiclass_model_to_json(const MulticlassSvmModel& model);
MulticlassSvmModel multiclass_model_from_json(const nlohmann::json& j);

}  // namespace emofs
