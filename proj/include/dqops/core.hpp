#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dqops {

using Label = std::uint32_t;
using FeatureVector = std::vector<double>;

/// Strong type for the 64-bit seed every stochastic operation takes.
struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

// Error hierarchy. DataError covers anything wrong with user-supplied files or
// tables; ConfigError covers invalid parameters (k > n, delta outside (0,1), ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LabelError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(Label label) const;
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<Label> find(std::string_view name) const;
  /// Throws LabelError for names outside the space.
  Label index_of(std::string_view name) const;

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Label> index_;
};

struct LabeledDataset {
  LabelSpace classes;
  std::vector<FeatureVector> features;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dimension() const noexcept {
    return features.empty() ? 0 : features.front().size();
  }
  std::size_t class_count() const noexcept { return classes.size(); }

  /// Checks equal lengths, a fixed finite dimension and in-range labels.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Row-major matrix of label indices: one row per evaluation sample, one
/// column per model.
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  PredictionMatrix(std::size_t rows, std::size_t cols);
  PredictionMatrix(std::size_t rows, std::size_t cols, std::vector<Label> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Label at(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }
  Label& at(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
  std::span<const Label> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<Label> column(std::size_t col) const;
  void validate(std::size_t class_count) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Label> data_;
};

enum class DataFormat { csv, json };

/// csv for ".csv", json for ".json"; throws ConfigError otherwise.
DataFormat format_from_path(const std::filesystem::path& path);

/// Loads a labeled dataset. When `classes` is given, labels must belong to it;
/// otherwise CSV classes are the sorted distinct label strings.
LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const std::optional<LabelSpace>& classes = std::nullopt);
LabeledDataset parse_dataset_csv(std::string_view text,
                                 const std::optional<LabelSpace>& classes = std::nullopt);
LabeledDataset parse_dataset_json(std::string_view text,
                                  const std::optional<LabelSpace>& classes = std::nullopt);

std::string to_csv(const LabeledDataset& data);
std::string to_json_text(const LabeledDataset& data);
void save_dataset(const LabeledDataset& data, const std::filesystem::path& path,
                  DataFormat format);

/// Feature-only table (validation points, embeddings). A trailing "label"
/// column, when present, is ignored.
std::vector<FeatureVector> parse_feature_table(std::string_view text);
std::vector<FeatureVector> load_feature_table(const std::filesystem::path& path);

int zero_one_loss(Label predicted, Label truth) noexcept;
/// 1 - mean 0-1 loss.
double accuracy(std::span<const Label> predicted, std::span<const Label> truth);

// Shared text helpers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);
/// Shortest representation that parses back to the same double.
std::string format_double(double value);
/// Strict finite-number parse of a trimmed token.
std::optional<double> parse_double(std::string_view token);
std::string_view trim(std::string_view text) noexcept;
std::vector<std::string_view> split(std::string_view text, char sep);

}  // namespace dqops
