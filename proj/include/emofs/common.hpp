#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emofs {

/// Error with a machine-readable kind tag ("io", "parse", "dimension",
/// "value", "config", "checksum") in addition to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Deterministic random source (xoshiro256** seeded via splitmix64).
/// All variates are derived with explicit transforms, so sequences are
/// identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// First k entries of a Fisher-Yates pass over 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Copies the named columns, in the given order, into a new matrix.
/// Throws Error("dimension") on an out-of-range index.
Matrix select_columns(const Matrix& x, std::span<const std::size_t> columns);

/// Copies the named rows, in the given order, into a new matrix.
Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes);

/// Mixes a base seed with a salt (splitmix64 finalizer), for deriving
/// independent substreams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Shortest decimal string that round-trips to exactly the same double.
std::string format_double(double v);

/// Strict full-string parse of a decimal double. Throws Error("parse") on
/// trailing garbage, empty input, or non-finite results.
double parse_double(std::string_view s);

std::string to_hex(std::uint64_t v);

/// Splits a line on a delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view line, char delim);

}  // namespace emofs
