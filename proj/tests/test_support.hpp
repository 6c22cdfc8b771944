#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "emofs/common.hpp"
#include "emofs/dataset.hpp"

namespace test_support {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(std::rand()) + "-" +
             std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

// Random labeled dataset with round-robin labels (every class populated)
// and subjects cycling over n_subjects ids.
inline emofs::LabeledDataset random_dataset(std::size_t m, std::size_t n,
                                            std::size_t n_classes,
                                            std::uint64_t seed,
                                            std::size_t n_subjects = 4) {
  emofs::LabeledDataset ds;
  ds.name = "random";
  ds.features = emofs::Matrix(m, n);
  emofs::Rng rng(seed);
  for (std::size_t c = 0; c < n_classes; ++c)
    ds.class_set.push_back("c" + std::to_string(c));
  for (std::size_t j = 0; j < n; ++j)
    ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < m; ++i) {
    ds.labels.push_back(ds.class_set[i % n_classes]);
    ds.subject_ids.push_back("s" + std::to_string(i % n_subjects));
    for (std::size_t j = 0; j < n; ++j) ds.features(i, j) = rng.normal();
  }
  return ds;
}

// Dataset from explicit columns; labels given per row.
inline emofs::LabeledDataset dataset_from_columns(
    const std::vector<std::vector<double>>& columns,
    const std::vector<std::string>& labels,
    const std::vector<std::string>& subjects = {}) {
  emofs::LabeledDataset ds;
  ds.name = "literal";
  const std::size_t m = labels.size();
  const std::size_t n = columns.size();
  ds.features = emofs::Matrix(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) ds.features(i, j) = columns[j][i];
  ds.labels = labels;
  for (const auto& l : labels)
    if (std::find(ds.class_set.begin(), ds.class_set.end(), l) ==
        ds.class_set.end())
      ds.class_set.push_back(l);
  for (std::size_t i = 0; i < m; ++i)
    ds.subject_ids.push_back(subjects.empty() ? "s" + std::to_string(i % 2)
                                              : subjects[i]);
  for (std::size_t j = 0; j < n; ++j)
    ds.feature_names.push_back("f" + std::to_string(j));
  return ds;
}

}  // namespace test_support
