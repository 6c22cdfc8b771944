// Command-line front end: ingest, generate, run, report, export, classify,
// wavnorm. Errors leave as one JSON object on stderr and a nonzero exit.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emofs/dataset.hpp"
#include "emofs/harness.hpp"
#include "emofs/serialize.hpp"

namespace {

using nlohmann::json;

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

emofs::ResultRecord load_record(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw emofs::Error("io", "cannot open file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw emofs::Error("parse",
                       std::string("record is not valid JSON: ") + e.what());
  }
  return emofs::result_record_from_json(j);
}

// --seed is accepted on every subcommand so scripts can pass it uniformly;
// commands without any randomness note that in their help text.
void add_seed(CLI::App* cmd, std::uint64_t& seed, bool used) {
  cmd->add_option("--seed", seed,
                  used ? "random seed"
                       : "accepted for interface uniformity; this command is "
                         "deterministic");
}

void setup_ingest(CLI::App& app) {
  auto* cmd = app.add_subcommand("ingest", "validate a dataset manifest and "
                                           "load its CSV");
  struct Opts {
    std::string manifest;
    std::uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--manifest", opts->manifest, "manifest JSON path")
      ->required();
  add_seed(cmd, opts->seed, false);
  cmd->callback([opts] {
    const emofs::DatasetManifest manifest = emofs::load_manifest(opts->manifest);
    const emofs::LabeledDataset data = emofs::load_dataset(manifest);
    std::vector<std::string> subjects;
    for (const auto& s : data.subject_ids)
      if (std::find(subjects.begin(), subjects.end(), s) == subjects.end())
        subjects.push_back(s);
    print_json({{"name", data.name},
                {"csv_path", manifest.csv_path},
                {"feature_set_tag",
                 emofs::feature_set_tag_name(manifest.feature_set_tag)},
                {"num_instances", data.num_instances()},
                {"num_features", data.num_features()},
                {"class_set", data.class_set},
                {"num_subjects", subjects.size()}});
  });
}

void setup_generate(CLI::App& app) {
  auto* cmd = app.add_subcommand("generate", "write a synthetic dataset with "
                                             "known informative features");
  struct Opts {
    std::size_t instances = 200;
    std::size_t features = 100;
    std::size_t informative = 10;
    std::size_t classes = 4;
    std::uint64_t seed = 0;
    std::string out;
    std::string manifest_out;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--instances", opts->instances, "rows to generate")
      ->capture_default_str();
  cmd->add_option("--features", opts->features, "feature columns")
      ->capture_default_str();
  cmd->add_option("--informative", opts->informative,
                  "columns carrying class signal")
      ->capture_default_str();
  cmd->add_option("--classes", opts->classes, "number of classes")
      ->capture_default_str();
  add_seed(cmd, opts->seed, true);
  cmd->add_option("--out", opts->out, "output CSV path")->required();
  cmd->add_option("--manifest-out", opts->manifest_out,
                  "also write a manifest JSON pointing at the CSV");
  cmd->callback([opts] {
    const emofs::PlantedDataset planted = emofs::generate_planted_dataset(
        opts->instances, opts->features, opts->informative, opts->classes,
        opts->seed);
    emofs::save_dataset(planted.data, opts->out);
    json summary = {{"csv", opts->out},
                    {"num_instances", planted.data.num_instances()},
                    {"num_features", planted.data.num_features()},
                    {"class_set", planted.data.class_set},
                    {"informative_indices", planted.informative_indices},
                    {"manifest", nullptr}};
    if (!opts->manifest_out.empty()) {
      emofs::DatasetManifest manifest;
      manifest.csv_path = opts->out;
      manifest.feature_set_tag = emofs::FeatureSetTag::custom;
      manifest.expected_dimension = planted.data.num_features();
      manifest.name = planted.data.name;
      emofs::save_manifest(manifest, opts->manifest_out);
      summary["manifest"] = opts->manifest_out;
    }
    print_json(summary);
  });
}

void setup_run(CLI::App& app) {
  auto* cmd = app.add_subcommand("run", "run a feature-selection experiment "
                                        "and persist its record");
  auto cfg = std::make_shared<emofs::ExperimentConfig>();
  auto manifest_paths = std::make_shared<std::vector<std::string>>();
  cmd->add_option("--manifest", *manifest_paths,
                  "dataset manifest(s); several are combined")
      ->required();
  cmd->add_option("--selector", cfg->selector,
                  "feature selector to run")
      ->check(CLI::IsMember({"baseline", "fisher", "relieff", "ilfs", "afs"}))
      ->capture_default_str();
  cmd->add_option("--k-grid", cfg->k_grid,
                  "subset sizes for ranking sweeps (default: 1..n)")
      ->delimiter(',');
  cmd->add_option("--svm-c", cfg->svm.box_constraint, "SVM box constraint")
      ->capture_default_str();
  cmd->add_option("--svm-tol", cfg->svm.kkt_tolerance,
                  "SVM convergence tolerance")
      ->capture_default_str();
  cmd->add_option("--svm-max-iter", cfg->svm.max_iterations,
                  "SMO iteration budget")
      ->capture_default_str();
  cmd->add_option("--relieff-k", cfg->relieff.k_neighbors,
                  "neighbors per class group")
      ->capture_default_str();
  cmd->add_option("--relieff-samples", cfg->relieff.sample_count,
                  "instances to sample (0 = all)")
      ->capture_default_str();
  cmd->add_option("--ilfs-bins", cfg->ilfs.token_bins,
                  "quantile bins per descriptor")
      ->capture_default_str();
  cmd->add_option("--ilfs-em-iter", cfg->ilfs.em_iterations,
                  "EM iteration budget")
      ->capture_default_str();
  cmd->add_option("--ilfs-em-tol", cfg->ilfs.em_tolerance,
                  "EM log-likelihood tolerance")
      ->capture_default_str();
  cmd->add_option("--ilfs-alpha", cfg->ilfs.alpha_fraction,
                  "damping as a fraction of 1/spectral radius")
      ->capture_default_str();
  cmd->add_option("--afs-grid", cfg->afs.n_grid, "map sizes to try")
      ->delimiter(',');
  cmd->add_option("--afs-som-iter", cfg->afs.som_iterations,
                  "map training iterations")
      ->capture_default_str();
  add_seed(cmd, cfg->rng_seed, true);
  cmd->add_option("--experiment-id", cfg->experiment_id,
                  "directory name for outputs (default: derived from the "
                  "selector and config hash)");
  cmd->add_option("--output", cfg->output_dir, "output directory")
      ->capture_default_str();
  cmd->callback([cfg, manifest_paths] {
    for (const auto& p : *manifest_paths)
      cfg->manifests.push_back(emofs::load_manifest(p));
    const emofs::ResultRecord record = emofs::run_experiment(*cfg);
    const std::filesystem::path dir =
        std::filesystem::path(cfg->output_dir) / record.experiment_id;
    print_json({{"experiment_id", record.experiment_id},
                {"config_hash", record.config_hash},
                {"record", (dir / "record.json").string()},
                {"selector", record.selector},
                {"dataset", record.dataset_name},
                {"best",
                 {{"num_features", record.best_num_features},
                  {"uar", record.best_uar}}},
                {"curve_points", record.curve.size()},
                {"warnings", record.warnings}});
  });
}

void setup_report(CLI::App& app) {
  auto* cmd = app.add_subcommand("report", "emit result tables and curves "
                                           "from experiment records");
  struct Opts {
    std::vector<std::string> records;
    std::string out = "reports";
    std::uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--record", opts->records, "record.json path(s)")
      ->required();
  cmd->add_option("--out", opts->out, "report directory")
      ->capture_default_str();
  add_seed(cmd, opts->seed, false);
  cmd->callback([opts] {
    std::vector<emofs::ResultRecord> records;
    for (const auto& p : opts->records) records.push_back(load_record(p));
    emofs::emit_reports(records, opts->out);
    std::vector<std::string> files = {"best_results.csv"};
    for (const auto& r : records) {
      files.push_back(r.experiment_id + "_curve.csv");
      files.push_back(r.experiment_id + "_confusion.csv");
    }
    print_json({{"out", opts->out},
                {"records", records.size()},
                {"files", files}});
  });
}

void setup_export(CLI::App& app) {
  auto* cmd = app.add_subcommand("export", "retrain the best subset on the "
                                           "full data and write a deployment "
                                           "bundle");
  struct Opts {
    std::string record;
    std::vector<std::string> manifests;
    std::string out;
    std::uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--record", opts->record, "record.json path")->required();
  cmd->add_option("--manifest", opts->manifests,
                  "dataset manifest(s); defaults to the record's");
  cmd->add_option("--out", opts->out, "bundle JSON path")->required();
  add_seed(cmd, opts->seed, false);
  cmd->callback([opts] {
    const emofs::ResultRecord record = load_record(opts->record);
    std::vector<emofs::DatasetManifest> manifests;
    if (opts->manifests.empty()) {
      manifests = record.config.manifests;
    } else {
      for (const auto& p : opts->manifests)
        manifests.push_back(emofs::load_manifest(p));
    }
    std::vector<emofs::LabeledDataset> loaded;
    for (auto m : manifests) {
      m.normalize();
      loaded.push_back(emofs::load_dataset(m));
    }
    const emofs::LabeledDataset data = loaded.size() == 1
                                           ? std::move(loaded.front())
                                           : emofs::combine_datasets(loaded);
    const auto [model, stats] = emofs::train_deployment_model(record, data);
    const emofs::DeploymentBundle bundle =
        emofs::export_bundle(record, model, stats);
    emofs::save_bundle(bundle, opts->out);
    print_json({{"bundle", opts->out},
                {"dataset", bundle.dataset_name},
                {"selector", bundle.selector},
                {"config_hash", bundle.config_hash},
                {"num_selected", bundle.selected_indices.size()},
                {"class_set", bundle.model.class_set}});
  });
}

void setup_classify(CLI::App& app) {
  auto* cmd = app.add_subcommand("classify", "label a feature CSV with a "
                                             "deployment bundle");
  struct Opts {
    std::string bundle;
    std::string input;
    std::string out;
    std::uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--bundle", opts->bundle, "bundle JSON path")->required();
  cmd->add_option("--input", opts->input, "feature CSV to label")->required();
  cmd->add_option("--out", opts->out,
                  "write labels CSV here instead of stdout");
  add_seed(cmd, opts->seed, false);
  cmd->callback([opts] {
    const emofs::DeploymentBundle bundle = emofs::load_bundle(opts->bundle);
    const emofs::ClassifyOutcome outcome =
        emofs::classify_csv(bundle, opts->input);
    if (opts->out.empty()) {
      for (const auto& label : outcome.labels) std::cout << label << "\n";
    } else {
      std::ofstream out(opts->out, std::ios::binary);
      if (!out)
        throw emofs::Error("io", "cannot write file: " + opts->out);
      out << "label\n";
      for (const auto& label : outcome.labels) out << label << "\n";
      print_json({{"out", opts->out},
                  {"rows", outcome.labels.size()},
                  {"values_read", outcome.values_read}});
    }
  });
}

void setup_wavnorm(CLI::App& app) {
  auto* cmd = app.add_subcommand("wavnorm", "peak-normalize a sample file "
                                            "(preprocessing utility)");
  struct Opts {
    std::string in;
    std::string out;
    std::uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--in", opts->in, "input sample file")->required();
  cmd->add_option("--out", opts->out, "output sample file")->required();
  add_seed(cmd, opts->seed, false);
  cmd->callback([opts] {
    emofs::WavBuffer buffer = emofs::read_wav(opts->in);
    const std::size_t count = buffer.samples.size();
    buffer.samples = emofs::wav_peak_normalize(buffer.samples);
    emofs::write_wav(buffer, opts->out);
    print_json({{"out", opts->out},
                {"sample_rate", buffer.sample_rate},
                {"samples", count}});
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech-emotion feature selection toolkit"};
  app.require_subcommand(1);
  setup_ingest(app);
  setup_generate(app);
  setup_run(app);
  setup_report(app);
  setup_export(app);
  setup_classify(app);
  setup_wavnorm(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error",
                       {{"kind", "config"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  } catch (const emofs::Error& e) {
    std::cerr << json{{"error",
                       {{"kind", e.kind()}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error",
                       {{"kind", "internal"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}
