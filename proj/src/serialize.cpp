#include "emofs/serialize.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace emofs {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw Error("parse", std::string("missing field: ") + key);
  return j.at(key);
}

}  // namespace

nlohmann::json svm_config_to_json(const SvmConfig& config) {
  return {{"box_constraint", config.box_constraint},
          {"kkt_tolerance", config.kkt_tolerance},
          {"max_iterations", config.max_iterations},
          {"rng_seed", config.rng_seed}};
}

SvmConfig svm_config_from_json(const nlohmann::json& j) {
  SvmConfig config;
  config.box_constraint = require(j, "box_constraint").get<double>();
  config.kkt_tolerance = require(j, "kkt_tolerance").get<double>();
  config.max_iterations = require(j, "max_iterations").get<std::size_t>();
  config.rng_seed = require(j, "rng_seed").get<std::uint64_t>();
  config.validate();
  return config;
}

nlohmann::json relieff_config_to_json(const ReliefFConfig& config) {
  nlohmann::json j = {{"k_neighbors", config.k_neighbors},
                      {"rng_seed", config.rng_seed}};
  if (config.sample_count == 0)
    j["sample_count"] = "all";
  else
    j["sample_count"] = config.sample_count;
  return j;
}

ReliefFConfig relieff_config_from_json(const nlohmann::json& j) {
  ReliefFConfig config;
  config.k_neighbors = require(j, "k_neighbors").get<std::size_t>();
  config.rng_seed = require(j, "rng_seed").get<std::uint64_t>();
  const auto& count = require(j, "sample_count");
  if (count.is_string()) {
    if (count.get<std::string>() != "all")
      throw Error("parse", "sample_count must be \"all\" or a positive number");
    config.sample_count = 0;
  } else {
    config.sample_count = count.get<std::size_t>();
    if (config.sample_count == 0)
      throw Error("parse", "sample_count must be \"all\" or a positive number");
  }
  config.validate();
  return config;
}

nlohmann::json ilfs_config_to_json(const IlfsConfig& config) {
  return {{"token_bins", config.token_bins},
          {"latent_topics", config.latent_topics},
          {"em_iterations", config.em_iterations},
          {"em_tolerance", config.em_tolerance},
          {"alpha_fraction", config.alpha_fraction}};
}

IlfsConfig ilfs_config_from_json(const nlohmann::json& j) {
  IlfsConfig config;
  config.token_bins = require(j, "token_bins").get<std::size_t>();
  config.latent_topics = require(j, "latent_topics").get<std::size_t>();
  config.em_iterations = require(j, "em_iterations").get<std::size_t>();
  config.em_tolerance = require(j, "em_tolerance").get<double>();
  config.alpha_fraction = require(j, "alpha_fraction").get<double>();
  config.validate();
  return config;
}

nlohmann::json afs_config_to_json(const AfsConfig& config) {
  return {{"n_grid", config.n_grid},
          {"som_iterations", config.som_iterations},
          {"rng_seed", config.rng_seed},
          {"svm", svm_config_to_json(config.svm)}};
}

AfsConfig afs_config_from_json(const nlohmann::json& j) {
  AfsConfig config;
  config.n_grid = require(j, "n_grid").get<std::vector<std::size_t>>();
  config.som_iterations = require(j, "som_iterations").get<std::size_t>();
  config.rng_seed = require(j, "rng_seed").get<std::uint64_t>();
  config.svm = svm_config_from_json(require(j, "svm"));
  config.validate();
  return config;
}

nlohmann::json confusion_to_json(const ConfusionMatrix& confusion) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < confusion.class_set.size(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < confusion.class_set.size(); ++p)
      row.push_back(confusion.at(t, p));
    rows.push_back(std::move(row));
  }
  return {{"class_set", confusion.class_set}, {"counts", std::move(rows)}};
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  ConfusionMatrix confusion;
  confusion.class_set = require(j, "class_set").get<std::vector<std::string>>();
  const std::size_t k = confusion.class_set.size();
  const auto& rows = require(j, "counts");
  if (!rows.is_array() || rows.size() != k)
    throw Error("parse", "confusion counts must hold one row per class");
  confusion.counts.assign(k * k, 0);
  for (std::size_t t = 0; t < k; ++t) {
    if (!rows[t].is_array() || rows[t].size() != k)
      throw Error("parse", "confusion counts must be square");
    for (std::size_t p = 0; p < k; ++p)
      confusion.counts[t * k + p] = rows[t][p].get<std::size_t>();
  }
  return confusion;
}

std::string confusion_to_csv(const ConfusionMatrix& confusion) {
  std::ostringstream out;
  out << "true_class";
  for (const auto& c : confusion.class_set) out << ',' << c;
  out << '\n';
  for (std::size_t t = 0; t < confusion.class_set.size(); ++t) {
    out << confusion.class_set[t];
    for (std::size_t p = 0; p < confusion.class_set.size(); ++p)
      out << ',' << confusion.at(t, p);
    out << '\n';
  }
  return out.str();
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
  return {{"uar", report.uar},
          {"per_class_recall", report.per_class_recall},
          {"confusion", confusion_to_json(report.confusion)},
          {"num_features_used", report.num_features_used},
          {"svm_config", svm_config_to_json(report.config)}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.uar = require(j, "uar").get<double>();
  for (const auto& r : require(j, "per_class_recall"))
    report.per_class_recall.push_back(
        r.is_null() ? std::numeric_limits<double>::quiet_NaN()
                    : r.get<double>());
  report.confusion = confusion_from_json(require(j, "confusion"));
  report.num_features_used = require(j, "num_features_used").get<std::size_t>();
  report.config = svm_config_from_json(require(j, "svm_config"));
  return report;
}

nlohmann::json ranking_to_json(const FeatureRanking& ranking,
                               std::span<const std::string> feature_names) {
  return {{"method", ranking.method},
          {"config", nlohmann::json::parse(ranking.config_echo)},
          {"scores", ranking.scores},
          {"order", ranking.order},
          {"feature_names",
           std::vector<std::string>(feature_names.begin(), feature_names.end())},
          {"warnings", ranking.warnings}};
}

nlohmann::json afs_result_to_json(const AfsResult& result) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : result.table)
    table.push_back({{"n", row.n},
                     {"cluster", row.cluster},
                     {"member_count", row.member_count},
                     {"uar", row.uar}});
  return {{"chosen_n", result.chosen_n},
          {"chosen_cluster", result.chosen_cluster},
          {"chosen_uar", result.chosen_uar},
          {"selected_indices", result.selected_indices},
          {"table", std::move(table)},
          {"report", eval_report_to_json(result.chosen_report)},
          {"warnings", result.warnings}};
}

nlohmann::json multiclass_model_to_json(const MulticlassSvmModel& model) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pair : model.pairs) {
    pairs.push_back({{"class_a", model.class_set[pair.class_a]},
                     {"class_b", model.class_set[pair.class_b]},
                     {"w", pair.model.w},
                     {"b", pair.model.b}});
  }
  return {{"format_version", 1},
          {"class_set", model.class_set},
          {"num_features", model.num_features},
          {"config", svm_config_to_json(model.config)},
          {"pairs", std::move(pairs)}};
}

MulticlassSvmModel multiclass_model_from_json(const nlohmann::json& j) {
  if (require(j, "format_version").get<int>() != 1)
    throw Error("parse", "unsupported model format version");
  MulticlassSvmModel model;
  model.class_set = require(j, "class_set").get<std::vector<std::string>>();
  model.num_features = require(j, "num_features").get<std::size_t>();
  model.config = svm_config_from_json(require(j, "config"));
  auto class_index = [&](const std::string& name) {
    const auto it =
        std::find(model.class_set.begin(), model.class_set.end(), name);
    if (it == model.class_set.end())
      throw Error("parse", "pair references unknown class: " + name);
    return static_cast<std::size_t>(it - model.class_set.begin());
  };
  for (const auto& p : require(j, "pairs")) {
    PairwiseModel pair;
    pair.class_a = class_index(require(p, "class_a").get<std::string>());
    pair.class_b = class_index(require(p, "class_b").get<std::string>());
    pair.model.w = require(p, "w").get<std::vector<double>>();
    pair.model.b = require(p, "b").get<double>();
    if (pair.model.w.size() != model.num_features)
      throw Error("dimension", "pair weight vector does not match num_features");
    model.pairs.push_back(std::move(pair));
  }
  const std::size_t expected =
      model.class_set.size() * (model.class_set.size() - 1) / 2;
  if (model.pairs.size() != expected)
    throw Error("parse", "model must carry one binary model per class pair");
  return model;
}

}  // namespace emofs
