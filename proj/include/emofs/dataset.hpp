#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "emofs/common.hpp"

namespace emofs {

/// A labeled feature matrix: one row per utterance, one column per acoustic
/// functional, plus per-row speaker id and emotion label. Immutable after
/// load; all selectors and evaluators consume this shape.
struct LabeledDataset {
  std::string name;
  Matrix features;  // m x n
  std::vector<std::string> subject_ids;     // m
  std::vector<std::string> labels;          // m
  std::vector<std::string> feature_names;   // n
  std::vector<std::string> class_set;       // distinct labels, first appearance

  std::size_t num_instances() const noexcept { return features.rows(); }
  std::size_t num_features() const noexcept { return features.cols(); }

  /// Label of each instance as an index into class_set.
  std::vector<std::size_t> label_indices() const;

  std::size_t class_index(const std::string& label) const;
};

/// Checks all LabeledDataset invariants, throwing Error on violation.
void validate_dataset(const LabeledDataset& ds);

enum class FeatureSetTag { egemaps, emobase, custom };

std::string feature_set_tag_name(FeatureSetTag tag);
FeatureSetTag feature_set_tag_from_name(const std::string& name);

struct DatasetManifest {
  std::string csv_path;
  FeatureSetTag feature_set_tag = FeatureSetTag::custom;
  std::size_t expected_dimension = 0;  // forced to 88/988 by egemaps/emobase
  std::string label_column = "label";
  std::string subject_column = "subject";
  std::string name;  // defaults to the csv file stem

  /// Applies tag-forced dimensions and checks expected_dimension > 0.
  void normalize();
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// Reads a header-first CSV (`subject,label,<feature...>`) into a dataset.
/// Row order is preserved. Throws on dimension mismatch, ragged rows,
/// non-numeric cells, NaN/Inf values, and empty labels or subjects.
LabeledDataset load_dataset(const DatasetManifest& manifest);

/// Writes the CSV form read back bit-exactly by load_dataset.
void save_dataset(const LabeledDataset& ds, const std::string& path,
                  const std::string& subject_column = "subject",
                  const std::string& label_column = "label");

/// Per-column standardization parameters fitted on a training subset.
struct NormalizationStats {
  std::vector<double> means;
  std::vector<double> stds;  // population (divide-by-n) standard deviations

  std::size_t dimension() const noexcept { return means.size(); }
};

/// Degenerate columns (std below this) standardize to all-zeros.
inline constexpr double kDegenerateStd = 1e-12;

NormalizationStats fit_zscore(const Matrix& train);

/// (x - mean) / std per column with the given stats; degenerate columns map
/// to zero.
Matrix apply_zscore(const NormalizationStats& stats, const Matrix& data);

/// Fits on `train` only, applies to `apply_to`; the training columns never
/// see the applied data.
std::pair<NormalizationStats, LabeledDataset> fit_apply_zscore(
    const LabeledDataset& train, const LabeledDataset& apply_to);

/// Concatenates corpora sharing a feature schema. Subject ids are prefixed
/// with the source dataset name ("<name>:<subject>") so speakers from
/// different corpora never collide; the combined class set is the union in
/// first-appearance order.
LabeledDataset combine_datasets(std::span<const LabeledDataset> datasets);

/// Scales a sample sequence so the peak magnitude is exactly 1.
/// Throws Error("value") for all-zero input.
std::vector<double> wav_peak_normalize(std::span<const double> samples);

/// Minimal mono float sample container for the peak-normalization utility.
struct WavBuffer {
  std::uint32_t sample_rate = 16000;
  std::vector<double> samples;
};

/// File format: magic "EFSWAV01", then little-endian u32 sample rate,
/// u64 sample count, and float32 samples.
WavBuffer read_wav(const std::string& path);
void write_wav(const WavBuffer& buffer, const std::string& path);

}  // namespace emofs
