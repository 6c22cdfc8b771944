#include "emofs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace emofs {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot open file for writing: " + path);
  out << content;
  if (!out) throw Error("io", "write failed: " + path);
}

}  // namespace

std::vector<std::size_t> LabeledDataset::label_indices() const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_set.size(); ++i) index[class_set[i]] = i;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = index.find(labels[i]);
    if (it == index.end())
      throw Error("value", "label not in class_set: " + labels[i]);
    out[i] = it->second;
  }
  return out;
}

std::size_t LabeledDataset::class_index(const std::string& label) const {
  for (std::size_t i = 0; i < class_set.size(); ++i)
    if (class_set[i] == label) return i;
  throw Error("value", "label not in class_set: " + label);
}

void validate_dataset(const LabeledDataset& ds) {
  const std::size_t m = ds.features.rows();
  const std::size_t n = ds.features.cols();
  if (ds.subject_ids.size() != m)
    throw Error("dimension", "subject_ids count does not match instance count");
  if (ds.labels.size() != m)
    throw Error("dimension", "labels count does not match instance count");
  if (ds.feature_names.size() != n)
    throw Error("dimension", "feature_names count does not match feature count");
  std::unordered_set<std::string> seen;
  for (const auto& f : ds.feature_names) {
    if (f.empty()) throw Error("value", "empty feature name");
    if (!seen.insert(f).second)
      throw Error("value", "duplicate feature name: " + f);
  }
  std::unordered_set<std::string> classes(ds.class_set.begin(),
                                          ds.class_set.end());
  if (classes.size() != ds.class_set.size())
    throw Error("value", "class_set contains duplicates");
  for (std::size_t i = 0; i < m; ++i) {
    if (ds.subject_ids[i].empty())
      throw Error("value", "empty subject_id at row " + std::to_string(i));
    if (ds.labels[i].empty())
      throw Error("value", "empty label at row " + std::to_string(i));
    if (!classes.count(ds.labels[i]))
      throw Error("value", "label not in class_set: " + ds.labels[i]);
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(ds.features(i, j)))
        throw Error("value", "non-finite feature value at row " +
                                 std::to_string(i) + ", column " +
                                 std::to_string(j));
  }
}

std::string feature_set_tag_name(FeatureSetTag tag) {
  switch (tag) {
    case FeatureSetTag::egemaps: return "egemaps";
    case FeatureSetTag::emobase: return "emobase";
    case FeatureSetTag::custom: return "custom";
  }
  throw Error("value", "invalid feature set tag");
}

FeatureSetTag feature_set_tag_from_name(const std::string& name) {
  if (name == "egemaps") return FeatureSetTag::egemaps;
  if (name == "emobase") return FeatureSetTag::emobase;
  if (name == "custom") return FeatureSetTag::custom;
  throw Error("value", "unknown feature set tag: " + name);
}

void DatasetManifest::normalize() {
  switch (feature_set_tag) {
    case FeatureSetTag::egemaps: expected_dimension = 88; break;
    case FeatureSetTag::emobase: expected_dimension = 988; break;
    case FeatureSetTag::custom: break;
  }
  if (expected_dimension == 0)
    throw Error("config",
                "custom feature sets require an explicit expected_dimension");
  if (label_column.empty()) throw Error("config", "label_column is empty");
  if (subject_column.empty()) throw Error("config", "subject_column is empty");
  if (label_column == subject_column)
    throw Error("config", "label_column and subject_column must differ");
  if (name.empty()) name = std::filesystem::path(csv_path).stem().string();
}

DatasetManifest load_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("parse", "manifest must be a JSON object");
  DatasetManifest m;
  if (!j.contains("csv_path") || !j["csv_path"].is_string())
    throw Error("config", "manifest requires a csv_path string");
  m.csv_path = j["csv_path"].get<std::string>();
  if (j.contains("feature_set_tag"))
    m.feature_set_tag =
        feature_set_tag_from_name(j["feature_set_tag"].get<std::string>());
  if (j.contains("expected_dimension"))
    m.expected_dimension = j["expected_dimension"].get<std::size_t>();
  if (j.contains("label_column"))
    m.label_column = j["label_column"].get<std::string>();
  if (j.contains("subject_column"))
    m.subject_column = j["subject_column"].get<std::string>();
  if (j.contains("name")) m.name = j["name"].get<std::string>();
  // Relative csv paths resolve against the manifest's directory.
  std::filesystem::path csv(m.csv_path);
  if (csv.is_relative())
    m.csv_path = (std::filesystem::path(path).parent_path() / csv).string();
  m.normalize();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["csv_path"] = manifest.csv_path;
  j["feature_set_tag"] = feature_set_tag_name(manifest.feature_set_tag);
  j["expected_dimension"] = manifest.expected_dimension;
  j["label_column"] = manifest.label_column;
  j["subject_column"] = manifest.subject_column;
  j["name"] = manifest.name;
  write_file(path, j.dump(2) + "\n");
}

LabeledDataset load_dataset(const DatasetManifest& manifest) {
  DatasetManifest m = manifest;
  m.normalize();

  std::ifstream in(m.csv_path, std::ios::binary);
  if (!in) throw Error("io", "cannot open file: " + m.csv_path);

  std::string line;
  if (!std::getline(in, line))
    throw Error("parse", "empty CSV (missing header): " + m.csv_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split(line, ',');
  std::size_t subject_col = header.size();
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == m.subject_column) subject_col = i;
    if (header[i] == m.label_column) label_col = i;
  }
  if (subject_col == header.size())
    throw Error("parse", "subject column '" + m.subject_column +
                             "' not found in header");
  if (label_col == header.size())
    throw Error("parse",
                "label column '" + m.label_column + "' not found in header");

  LabeledDataset ds;
  ds.name = m.name;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == subject_col || i == label_col) continue;
    ds.feature_names.push_back(header[i]);
    feature_cols.push_back(i);
  }
  const std::size_t n = feature_cols.size();
  if (n != m.expected_dimension)
    throw Error("dimension",
                "feature count " + std::to_string(n) + " does not match " +
                    feature_set_tag_name(m.feature_set_tag) + " dimension " +
                    std::to_string(m.expected_dimension));

  std::vector<double> values;
  std::size_t rows = 0;
  std::unordered_set<std::string> seen_classes;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size())
      throw Error("parse", "row " + std::to_string(lineno) + " has " +
                               std::to_string(cells.size()) +
                               " cells, expected " +
                               std::to_string(header.size()));
    const std::string& subject = cells[subject_col];
    const std::string& label = cells[label_col];
    if (subject.empty())
      throw Error("value", "empty subject at line " + std::to_string(lineno));
    if (label.empty())
      throw Error("value", "empty label at line " + std::to_string(lineno));
    ds.subject_ids.push_back(subject);
    ds.labels.push_back(label);
    if (seen_classes.insert(label).second) ds.class_set.push_back(label);
    for (std::size_t c : feature_cols) {
      double v;
      try {
        v = parse_double(cells[c]);
      } catch (const Error&) {
        throw Error("parse", "non-numeric feature cell '" + cells[c] +
                                 "' at line " + std::to_string(lineno));
      }
      values.push_back(v);
    }
    ++rows;
  }

  ds.features = Matrix(rows, n);
  ds.features.data() = std::move(values);
  validate_dataset(ds);
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& path,
                  const std::string& subject_column,
                  const std::string& label_column) {
  std::ostringstream out;
  out << subject_column << ',' << label_column;
  for (const auto& f : ds.feature_names) out << ',' << f;
  out << '\n';
  for (std::size_t i = 0; i < ds.num_instances(); ++i) {
    out << ds.subject_ids[i] << ',' << ds.labels[i];
    for (std::size_t j = 0; j < ds.num_features(); ++j)
      out << ',' << format_double(ds.features(i, j));
    out << '\n';
  }
  write_file(path, out.str());
}

NormalizationStats fit_zscore(const Matrix& train) {
  const std::size_t m = train.rows();
  const std::size_t n = train.cols();
  if (m == 0) throw Error("value", "cannot fit normalization on empty matrix");
  NormalizationStats stats;
  stats.means.assign(n, 0.0);
  stats.stds.assign(n, 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += train(i, j);
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = train(i, j) - mean;
      ss += d * d;
    }
    stats.means[j] = mean;
    stats.stds[j] = std::sqrt(ss / static_cast<double>(m));
  }
  return stats;
}

Matrix apply_zscore(const NormalizationStats& stats, const Matrix& data) {
  const std::size_t n = data.cols();
  if (stats.dimension() != n)
    throw Error("dimension", "normalization stats fitted for " +
                                 std::to_string(stats.dimension()) +
                                 " columns, data has " + std::to_string(n));
  Matrix out(data.rows(), n);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t j = 0; j < n; ++j) {
    const double mean = stats.means[j];
    const double sd = stats.stds[j];
    if (sd < kDegenerateStd) {
      for (std::size_t i = 0; i < data.rows(); ++i) out(i, j) = 0.0;
    } else {
      for (std::size_t i = 0; i < data.rows(); ++i)
        out(i, j) = (data(i, j) - mean) / sd;
    }
  }
  return out;
}

std::pair<NormalizationStats, LabeledDataset> fit_apply_zscore(
    const LabeledDataset& train, const LabeledDataset& apply_to) {
  if (train.num_features() != apply_to.num_features())
    throw Error("dimension",
                "train and apply datasets have different feature counts");
  NormalizationStats stats = fit_zscore(train.features);
  LabeledDataset out = apply_to;
  out.features = apply_zscore(stats, apply_to.features);
  return {std::move(stats), std::move(out)};
}

LabeledDataset combine_datasets(std::span<const LabeledDataset> datasets) {
  if (datasets.empty())
    throw Error("value", "combine_datasets requires at least one dataset");
  const auto& schema = datasets.front().feature_names;
  std::size_t total = 0;
  for (const auto& ds : datasets) {
    if (ds.feature_names != schema)
      throw Error("value", "datasets use different feature schemas: '" +
                               datasets.front().name + "' vs '" + ds.name +
                               "'");
    total += ds.num_instances();
  }

  LabeledDataset out;
  out.name = "combined";
  out.feature_names = schema;
  out.features = Matrix(total, schema.size());
  out.subject_ids.reserve(total);
  out.labels.reserve(total);
  std::unordered_set<std::string> seen_classes;
  std::size_t row = 0;
  for (const auto& ds : datasets) {
    for (const auto& c : ds.class_set)
      if (seen_classes.insert(c).second) out.class_set.push_back(c);
    for (std::size_t i = 0; i < ds.num_instances(); ++i, ++row) {
      out.subject_ids.push_back(ds.name + ":" + ds.subject_ids[i]);
      out.labels.push_back(ds.labels[i]);
      std::copy(ds.features.row(i).begin(), ds.features.row(i).end(),
                out.features.row(row).begin());
    }
  }
  validate_dataset(out);
  return out;
}

std::vector<double> wav_peak_normalize(std::span<const double> samples) {
  if (samples.empty())
    throw Error("value", "cannot normalize an empty sample sequence");
  double peak = 0.0;
  for (double s : samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0)
    throw Error("value", "all-zero signal has no peak to normalize");
  std::vector<double> out(samples.begin(), samples.end());
  const double scale = 1.0 / peak;
  for (double& s : out) s *= scale;
  return out;
}

namespace {
constexpr char kWavMagic[8] = {'E', 'F', 'S', 'W', 'A', 'V', '0', '1'};
}

WavBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kWavMagic, 8) != 0)
    throw Error("parse", "not a recognized sample file: " + path);
  std::uint32_t rate = 0;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&rate), sizeof(rate));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw Error("parse", "truncated sample file header: " + path);
  if (rate == 0) throw Error("value", "sample rate must be positive");
  WavBuffer buf;
  buf.sample_rate = rate;
  buf.samples.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    float v = 0.0f;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw Error("parse", "truncated sample data: " + path);
    if (!std::isfinite(v))
      throw Error("value", "non-finite sample at index " + std::to_string(i));
    buf.samples[i] = static_cast<double>(v);
  }
  return buf;
}

void write_wav(const WavBuffer& buffer, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot open file for writing: " + path);
  out.write(kWavMagic, 8);
  const std::uint32_t rate = buffer.sample_rate;
  const std::uint64_t count = buffer.samples.size();
  out.write(reinterpret_cast<const char*>(&rate), sizeof(rate));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (double s : buffer.samples) {
    const float v = static_cast<float>(s);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  if (!out) throw Error("io", "write failed: " + path);
}

}  // namespace emofs
