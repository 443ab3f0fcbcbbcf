#pragma once

#include <span>
#include <string>
#include <vector>

#include "dqops/core.hpp"

namespace dqops {

enum class Normalization { none, minmax };

std::string to_string(Normalization n);
Normalization normalization_from_string(std::string_view text);

struct KnnConfig {
  std::size_t k = 1;
  Normalization normalization = Normalization::minmax;

  /// k must be odd and no larger than the training set.
  void validate(std::size_t train_size) const;
  friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

/// Per-feature min-max scaling. Training rows map into [0,1] by construction;
/// query rows are clipped to [0,1]. A constant column maps to 0.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> lower, std::vector<double> upper);

  static MinMaxScaler fit(std::span<const FeatureVector> rows);

  bool empty() const noexcept { return lower_.empty(); }
  double scale(std::size_t column, double value) const noexcept;
  FeatureVector transform_train(const FeatureVector& row) const;
  FeatureVector transform_query(const FeatureVector& row) const;

  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Exact kNN with the training set normalized once at construction.
class KnnClassifier {
 public:
  KnnClassifier(const LabeledDataset& train, KnnConfig cfg);

  Label predict(const FeatureVector& query) const;
  std::vector<Label> predict_batch(const std::vector<FeatureVector>& queries) const;
  std::vector<Label> predict_batch_serial(const std::vector<FeatureVector>& queries) const;

  const KnnConfig& config() const noexcept { return cfg_; }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::vector<FeatureVector> prepare(const std::vector<FeatureVector>& queries) const;

  KnnConfig cfg_;
  std::size_t dimension_;
  std::size_t class_count_;
  MinMaxScaler scaler_;
  std::vector<FeatureVector> rows_;
  std::vector<Label> labels_;
};

/// Majority label of the k nearest training records. Distance ties go to the
/// lower record index, vote ties to the lower class index.
Label knn_predict(const LabeledDataset& train, const FeatureVector& query, const KnnConfig& cfg);

/// Mean 0-1 loss of kNN predictions over `eval`.
double holdout_error(const LabeledDataset& train, const LabeledDataset& eval, const KnnConfig& cfg);
double holdout_error_serial(const LabeledDataset& train, const LabeledDataset& eval,
                            const KnnConfig& cfg);

}  // namespace dqops
