#include "emofs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

#include "emofs/serialize.hpp"

namespace emofs {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw Error("parse", std::string("missing field: ") + key);
  return j.at(key);
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write file: " + path.string());
  out << text;
  if (!out) throw Error("io", "write failed: " + path.string());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char out[32];
  std::strftime(out, sizeof out, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return out;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  return {{"csv_path", m.csv_path},
          {"feature_set_tag", feature_set_tag_name(m.feature_set_tag)},
          {"expected_dimension", m.expected_dimension},
          {"label_column", m.label_column},
          {"subject_column", m.subject_column},
          {"name", m.name}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.csv_path = require(j, "csv_path").get<std::string>();
  m.feature_set_tag =
      feature_set_tag_from_name(require(j, "feature_set_tag").get<std::string>());
  m.expected_dimension = require(j, "expected_dimension").get<std::size_t>();
  m.label_column = require(j, "label_column").get<std::string>();
  m.subject_column = require(j, "subject_column").get<std::string>();
  m.name = require(j, "name").get<std::string>();
  return m;
}

bool known_selector(const std::string& s) {
  return s == "baseline" || s == "fisher" || s == "relieff" || s == "ilfs" ||
         s == "afs";
}

std::vector<std::size_t> default_k_grid(std::size_t n) {
  const std::size_t step = std::max<std::size_t>(1, n / 50);
  std::vector<std::size_t> grid;
  for (std::size_t k = 1; k <= n; k += step) grid.push_back(k);
  if (grid.back() != n) grid.push_back(n);
  return grid;
}

}  // namespace

PlantedDataset generate_planted_dataset(std::size_t m, std::size_t n,
                                        std::size_t n_informative,
                                        std::size_t n_classes,
                                        std::uint64_t seed) {
  if (n == 0) throw Error("value", "planted dataset needs at least 1 feature");
  if (n_classes < 2)
    throw Error("value", "planted dataset needs at least 2 classes");
  if (n_informative > n)
    throw Error("value", "n_informative exceeds the feature count");
  // 4 subjects, round-robin classes: every subject needs one full class cycle
  // or some LOSO training fold would be missing a class.
  if (m < 4 * n_classes)
    throw Error("value", "planted dataset needs at least 4 * n_classes rows");

  PlantedDataset out;
  // Evenly spread truth columns so contiguous-block assumptions can't pass
  // by accident.
  std::vector<std::size_t> level_of(n, 0);
  std::vector<char> informative(n, 0);
  for (std::size_t t = 0; t < n_informative; ++t) {
    const std::size_t j = t * n / n_informative;
    out.informative_indices.push_back(j);
    informative[j] = 1;
  }

  Rng rng(seed);
  // One class-level permutation per informative column, drawn before any
  // values so adding rows never shifts the level layout.
  std::vector<std::vector<std::size_t>> levels;
  for (std::size_t t = 0; t < n_informative; ++t) {
    levels.push_back(rng.permutation(n_classes));
    level_of[out.informative_indices[t]] = t;
  }

  LabeledDataset& ds = out.data;
  ds.name = "planted";
  ds.features = Matrix(m, n);
  for (std::size_t c = 0; c < n_classes; ++c)
    ds.class_set.push_back("c" + std::to_string(c));
  for (std::size_t j = 0; j < n; ++j)
    ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = i % n_classes;
    ds.labels.push_back(ds.class_set[c]);
    ds.subject_ids.push_back("s" + std::to_string((i / n_classes) % 4));
    for (std::size_t j = 0; j < n; ++j) {
      double v = rng.normal();
      if (informative[j])
        // Unit-variance noise around class means 4 apart: any class pair
        // differs by at least 4 sigma in every informative column.
        v += 4.0 * static_cast<double>(levels[level_of[j]][c]);
      ds.features(i, j) = v;
    }
  }
  validate_dataset(ds);
  return out;
}

void ExperimentConfig::validate() const {
  if (!known_selector(selector))
    throw Error("config", "unknown selector: " + selector);
  if (manifests.empty())
    throw Error("config", "experiment needs at least one dataset manifest");
  for (const std::size_t k : k_grid)
    if (k == 0) throw Error("config", "k_grid entries must be positive");
  svm.validate();
  relieff.validate();
  ilfs.validate();
  afs.validate();
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json manifests = nlohmann::json::array();
  for (const auto& m : config.manifests) manifests.push_back(manifest_to_json(m));
  return {{"manifests", std::move(manifests)},
          {"selector", config.selector},
          {"relieff", relieff_config_to_json(config.relieff)},
          {"ilfs", ilfs_config_to_json(config.ilfs)},
          {"afs", afs_config_to_json(config.afs)},
          {"k_grid", config.k_grid},  // empty means the automatic grid
          {"svm", svm_config_to_json(config.svm)},
          {"rng_seed", config.rng_seed}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  for (const auto& m : require(j, "manifests"))
    config.manifests.push_back(manifest_from_json(m));
  config.selector = require(j, "selector").get<std::string>();
  config.relieff = relieff_config_from_json(require(j, "relieff"));
  config.ilfs = ilfs_config_from_json(require(j, "ilfs"));
  config.afs = afs_config_from_json(require(j, "afs"));
  config.k_grid = require(j, "k_grid").get<std::vector<std::size_t>>();
  config.svm = svm_config_from_json(require(j, "svm"));
  config.rng_seed = require(j, "rng_seed").get<std::uint64_t>();
  return config;
}

std::string experiment_config_hash(const ExperimentConfig& config) {
  return to_hex(fnv1a64(experiment_config_to_json(config).dump()));
}

nlohmann::json result_record_to_json(const ResultRecord& record) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : record.curve)
    curve.push_back({{"k", p.k}, {"uar", p.uar}});
  nlohmann::json j = {
      {"format_version", 1},
      {"experiment_id", record.experiment_id},
      {"config_hash", record.config_hash},
      {"dataset_name", record.dataset_name},
      {"selector", record.selector},
      {"num_instances", record.num_instances},
      {"num_features", record.num_features},
      {"class_set", record.class_set},
      {"feature_names", record.feature_names},
      {"curve", std::move(curve)},
      {"best",
       {{"num_features", record.best_num_features},
        {"uar", record.best_uar},
        {"selected_indices", record.best_selected_indices},
        {"report", eval_report_to_json(record.best_report)}}},
      {"warnings", record.warnings},
      {"config", experiment_config_to_json(record.config)}};
  if (record.selector == "afs") {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : record.afs_table)
      table.push_back({{"n", row.n},
                       {"cluster", row.cluster},
                       {"member_count", row.member_count},
                       {"uar", row.uar}});
    j["afs_table"] = std::move(table);
  }
  return j;
}

ResultRecord result_record_from_json(const nlohmann::json& j) {
  if (require(j, "format_version").get<int>() != 1)
    throw Error("parse", "unsupported record format version");
  ResultRecord record;
  record.experiment_id = require(j, "experiment_id").get<std::string>();
  record.config_hash = require(j, "config_hash").get<std::string>();
  record.dataset_name = require(j, "dataset_name").get<std::string>();
  record.selector = require(j, "selector").get<std::string>();
  record.num_instances = require(j, "num_instances").get<std::size_t>();
  record.num_features = require(j, "num_features").get<std::size_t>();
  record.class_set = require(j, "class_set").get<std::vector<std::string>>();
  record.feature_names =
      require(j, "feature_names").get<std::vector<std::string>>();
  for (const auto& p : require(j, "curve"))
    record.curve.push_back(
        {require(p, "k").get<std::size_t>(), require(p, "uar").get<double>()});
  const auto& best = require(j, "best");
  record.best_num_features = require(best, "num_features").get<std::size_t>();
  record.best_uar = require(best, "uar").get<double>();
  record.best_selected_indices =
      require(best, "selected_indices").get<std::vector<std::size_t>>();
  record.best_report = eval_report_from_json(require(best, "report"));
  if (j.contains("afs_table")) {
    for (const auto& row : j.at("afs_table"))
      record.afs_table.push_back({require(row, "n").get<std::size_t>(),
                                  require(row, "cluster").get<std::size_t>(),
                                  require(row, "member_count").get<std::size_t>(),
                                  require(row, "uar").get<double>()});
  }
  record.warnings = require(j, "warnings").get<std::vector<std::string>>();
  record.config = experiment_config_from_json(require(j, "config"));
  return record;
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  const auto wall_start = std::chrono::system_clock::now();
  const auto tick_start = std::chrono::steady_clock::now();

  // Canonical form: manifests normalized and every stage seeded from the
  // one experiment seed, so the hash names the computation actually run.
  ExperimentConfig canonical = config;
  for (auto& m : canonical.manifests) m.normalize();
  canonical.svm.rng_seed = canonical.rng_seed;
  canonical.relieff.rng_seed = canonical.rng_seed;
  canonical.afs.rng_seed = canonical.rng_seed;
  canonical.afs.svm = canonical.svm;
  canonical.validate();

  std::vector<LabeledDataset> loaded;
  for (const auto& m : canonical.manifests) loaded.push_back(load_dataset(m));
  LabeledDataset data =
      loaded.size() == 1 ? std::move(loaded.front()) : combine_datasets(loaded);
  loaded.clear();

  ResultRecord record;
  record.config_hash = experiment_config_hash(canonical);
  record.experiment_id =
      config.experiment_id.empty()
          ? canonical.selector + "-" + record.config_hash.substr(0, 12)
          : config.experiment_id;
  record.dataset_name = data.name;
  record.selector = canonical.selector;
  record.num_instances = data.num_instances();
  record.num_features = data.num_features();
  record.class_set = data.class_set;
  record.feature_names = data.feature_names;
  record.config = canonical;

  std::optional<FeatureRanking> ranking;
  std::optional<AfsResult> afs_result;
  const std::size_t n = data.num_features();

  if (canonical.selector == "baseline") {
    std::vector<std::size_t> all(n);
    for (std::size_t j = 0; j < n; ++j) all[j] = j;
    record.best_report = evaluate_feature_subset(data, all, canonical.svm);
    record.best_num_features = n;
    record.best_uar = record.best_report.uar;
    record.best_selected_indices = std::move(all);
    record.curve.push_back({n, record.best_uar});
  } else if (canonical.selector == "afs") {
    afs_result = afs_select(data, canonical.afs);
    record.best_report = afs_result->chosen_report;
    record.best_num_features = afs_result->selected_indices.size();
    record.best_uar = afs_result->chosen_uar;
    record.best_selected_indices = afs_result->selected_indices;
    record.curve.push_back({record.best_num_features, record.best_uar});
    record.afs_table = afs_result->table;
    record.warnings.insert(record.warnings.end(), afs_result->warnings.begin(),
                           afs_result->warnings.end());
  } else {
    if (canonical.selector == "fisher")
      ranking = fisher_scores(data);
    else if (canonical.selector == "relieff")
      ranking = relieff_scores(data, canonical.relieff);
    else
      ranking = ilfs_scores(data, canonical.ilfs);
    record.warnings.insert(record.warnings.end(), ranking->warnings.begin(),
                           ranking->warnings.end());

    const std::vector<std::size_t> grid =
        canonical.k_grid.empty() ? default_k_grid(n) : canonical.k_grid;
    SweepCurve sweep = sweep_topk(data, *ranking, grid, canonical.svm);
    record.warnings.insert(record.warnings.end(), sweep.warnings.begin(),
                           sweep.warnings.end());

    std::size_t best = 0;
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
      record.curve.push_back({sweep.points[i].k, sweep.points[i].report.uar});
      // Strict > keeps the smallest k among equal-UAR points.
      if (sweep.points[i].report.uar > sweep.points[best].report.uar) best = i;
    }
    const SweepPoint& top = sweep.points[best];
    record.best_report = top.report;
    record.best_num_features = top.k;
    record.best_uar = top.report.uar;
    record.best_selected_indices.assign(ranking->order.begin(),
                                        ranking->order.begin() + top.k);
    std::sort(record.best_selected_indices.begin(),
              record.best_selected_indices.end());
  }

  const std::filesystem::path dir =
      std::filesystem::path(config.output_dir) / record.experiment_id;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create directory: " + dir.string());

  write_text_file(dir / "record.json",
                  result_record_to_json(record).dump(2) + "\n");
  if (ranking)
    write_text_file(dir / "ranking.json",
                    ranking_to_json(*ranking, data.feature_names).dump(2) + "\n");
  if (afs_result)
    write_text_file(dir / "afs.json",
                    afs_result_to_json(*afs_result).dump(2) + "\n");

  // Timings live in a sidecar so record.json stays bit-identical across
  // reruns of the same configuration.
  const auto wall_end = std::chrono::system_clock::now();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    tick_start)
          .count();
  nlohmann::json meta = {{"started_at", utc_timestamp(wall_start)},
                         {"finished_at", utc_timestamp(wall_end)},
                         {"duration_seconds", seconds}};
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");

  return record;
}

void emit_reports(std::span<const ResultRecord> records,
                  const std::string& out_dir) {
  if (records.empty()) throw Error("value", "no records to report");
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create directory: " + dir.string());

  static const std::vector<std::string> method_order = {
      "baseline", "fisher", "relieff", "ilfs", "afs"};
  std::vector<std::string> datasets;
  std::map<std::pair<std::string, std::string>,
           std::pair<std::size_t, double>>
      cells;  // (selector, dataset) -> (num features, uar); last record wins
  for (const auto& r : records) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset_name) ==
        datasets.end())
      datasets.push_back(r.dataset_name);
    cells[{r.selector, r.dataset_name}] = {r.best_num_features, r.best_uar};
  }

  std::ostringstream best;
  best << "method";
  for (const auto& ds : datasets)
    best << ',' << ds << "_num_features," << ds << "_uar";
  best << ",average\n";
  for (const auto& method : method_order) {
    bool seen = false;
    for (const auto& r : records) seen = seen || r.selector == method;
    if (!seen) continue;
    best << method;
    double uar_sum = 0.0;
    std::size_t uar_count = 0;
    for (const auto& ds : datasets) {
      const auto it = cells.find({method, ds});
      if (it == cells.end()) {
        best << ",,";
      } else {
        best << ',' << it->second.first << ',' << format_double(it->second.second);
        uar_sum += it->second.second;
        ++uar_count;
      }
    }
    best << ',';
    if (uar_count > 0) best << format_double(uar_sum / uar_count);
    best << '\n';
  }
  write_text_file(dir / "best_results.csv", best.str());

  for (const auto& r : records) {
    std::ostringstream curve;
    curve << "k,uar\n";
    for (const auto& p : r.curve)
      curve << p.k << ',' << format_double(p.uar) << '\n';
    write_text_file(dir / (r.experiment_id + "_curve.csv"), curve.str());
    write_text_file(dir / (r.experiment_id + "_confusion.csv"),
                    confusion_to_csv(r.best_report.confusion));
  }
}

std::pair<MulticlassSvmModel, NormalizationStats> train_deployment_model(
    const ResultRecord& record, const LabeledDataset& data) {
  if (data.feature_names != record.feature_names)
    throw Error("config",
                "dataset feature space does not match the record's");
  const auto& sel = record.best_selected_indices;
  if (sel.empty()) throw Error("value", "record selects no features");
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (sel[i] >= data.num_features())
      throw Error("dimension", "selected index out of range");
    if (i > 0 && sel[i] <= sel[i - 1])
      throw Error("value", "selected indices must be strictly ascending");
  }

  const Matrix cols = select_columns(data.features, sel);
  NormalizationStats stats = fit_zscore(cols);

  LabeledDataset reduced;
  reduced.name = data.name;
  reduced.features = apply_zscore(stats, cols);
  reduced.subject_ids = data.subject_ids;
  reduced.labels = data.labels;
  reduced.class_set = data.class_set;
  for (const std::size_t j : sel)
    reduced.feature_names.push_back(data.feature_names[j]);

  std::vector<std::size_t> identity(sel.size());
  for (std::size_t j = 0; j < identity.size(); ++j) identity[j] = j;
  MulticlassSvmModel model =
      train_one_vs_one(reduced, identity, record.config.svm);
  return {std::move(model), std::move(stats)};
}

DeploymentBundle export_bundle(const ResultRecord& record,
                               const MulticlassSvmModel& model,
                               const NormalizationStats& stats) {
  const std::size_t k = record.best_selected_indices.size();
  if (model.num_features != k)
    throw Error("dimension", "model dimension does not match the selection");
  if (stats.dimension() != k)
    throw Error("dimension",
                "normalization dimension does not match the selection");
  if (model.class_set != record.class_set)
    throw Error("config", "model class set does not match the record's");
  for (const std::size_t j : record.best_selected_indices)
    if (j >= record.feature_names.size())
      throw Error("dimension", "selected index out of range");

  DeploymentBundle bundle;
  bundle.dataset_name = record.dataset_name;
  bundle.selector = record.selector;
  bundle.config_hash = record.config_hash;
  bundle.feature_names = record.feature_names;
  bundle.selected_indices = record.best_selected_indices;
  bundle.stats = stats;
  bundle.model = model;
  return bundle;
}

namespace {

nlohmann::json bundle_payload(const DeploymentBundle& bundle) {
  return {{"dataset_name", bundle.dataset_name},
          {"selector", bundle.selector},
          {"config_hash", bundle.config_hash},
          {"feature_names", bundle.feature_names},
          {"selected_indices", bundle.selected_indices},
          {"normalization",
           {{"means", bundle.stats.means}, {"stds", bundle.stats.stds}}},
          {"model", multiclass_model_to_json(bundle.model)}};
}

}  // namespace

void save_bundle(const DeploymentBundle& bundle, const std::string& path) {
  const nlohmann::json payload = bundle_payload(bundle);
  const nlohmann::json file = {{"format_version", 1},
                               {"checksum", to_hex(fnv1a64(payload.dump()))},
                               {"payload", payload}};
  write_text_file(path, file.dump(2) + "\n");
}

DeploymentBundle load_bundle(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("bundle is not valid JSON: ") + e.what());
  }
  if (require(j, "format_version").get<int>() != 1)
    throw Error("parse", "unsupported bundle format version");
  const auto& payload = require(j, "payload");
  // The checksum covers the compact payload serialization; any edit to the
  // stored numbers changes it.
  const std::string expected = require(j, "checksum").get<std::string>();
  const std::string actual = to_hex(fnv1a64(payload.dump()));
  if (expected != actual)
    throw Error("checksum", "bundle checksum mismatch: stored " + expected +
                                ", computed " + actual);

  DeploymentBundle bundle;
  bundle.dataset_name = require(payload, "dataset_name").get<std::string>();
  bundle.selector = require(payload, "selector").get<std::string>();
  bundle.config_hash = require(payload, "config_hash").get<std::string>();
  bundle.feature_names =
      require(payload, "feature_names").get<std::vector<std::string>>();
  bundle.selected_indices =
      require(payload, "selected_indices").get<std::vector<std::size_t>>();
  const auto& norm = require(payload, "normalization");
  bundle.stats.means = require(norm, "means").get<std::vector<double>>();
  bundle.stats.stds = require(norm, "stds").get<std::vector<double>>();
  bundle.model = multiclass_model_from_json(require(payload, "model"));

  const std::size_t k = bundle.selected_indices.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (bundle.selected_indices[i] >= bundle.feature_names.size())
      throw Error("dimension", "selected index out of range");
    if (i > 0 && bundle.selected_indices[i] <= bundle.selected_indices[i - 1])
      throw Error("parse", "selected indices must be strictly ascending");
  }
  if (bundle.stats.dimension() != k || bundle.stats.stds.size() != k)
    throw Error("dimension", "normalization stats do not match the selection");
  if (bundle.model.num_features != k)
    throw Error("dimension", "model dimension does not match the selection");
  return bundle;
}

ClassifyOutcome classify_csv(const DeploymentBundle& bundle,
                             const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error("io", "cannot open file: " + csv_path);

  std::string line;
  if (!std::getline(in, line))
    throw Error("parse", "empty CSV (missing header): " + csv_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');

  // Columns are matched by name, in any order and with extra columns
  // allowed; the full bundle feature space must be present so a truncated
  // schema fails loudly, but only selected cells are ever parsed.
  auto locate = [&](const std::string& name) {
    std::size_t found = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] != name) continue;
      if (found != header.size())
        throw Error("parse", "duplicate column in input: " + name);
      found = c;
    }
    if (found == header.size())
      throw Error("dimension", "input is missing feature: " + name);
    return found;
  };
  for (const auto& name : bundle.feature_names) locate(name);
  std::vector<std::size_t> column_of;  // per selected feature
  for (const std::size_t s : bundle.selected_indices)
    column_of.push_back(locate(bundle.feature_names[s]));

  ClassifyOutcome outcome;
  std::vector<double> x(bundle.selected_indices.size(), 0.0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size())
      throw Error("parse", "line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) +
                               " cells, expected " +
                               std::to_string(header.size()));
    for (std::size_t i = 0; i < column_of.size(); ++i) {
      double v;
      try {
        v = parse_double(cells[column_of[i]]);
      } catch (const Error& e) {
        throw Error("parse",
                    "line " + std::to_string(line_no) + ", column '" +
                        bundle.feature_names[bundle.selected_indices[i]] +
                        "': " + e.what());
      }
      ++outcome.values_read;
      const double sd = bundle.stats.stds[i];
      x[i] = sd < kDegenerateStd ? 0.0 : (v - bundle.stats.means[i]) / sd;
    }
    outcome.labels.push_back(bundle.model.predict(x));
  }
  return outcome;
}

}  // namespace emofs
