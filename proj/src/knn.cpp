#include "dqops/knn.hpp"

#include <algorithm>

#include "dqops/kernels.hpp"

namespace dqops {

std::string to_string(Normalization n) { return n == Normalization::none ? "none" : "minmax"; }

Normalization normalization_from_string(std::string_view text) {
  if (text == "none") return Normalization::none;
  if (text == "minmax" || text == "minmax-per-feature") return Normalization::minmax;
  throw ConfigError("unknown normalization '" + std::string(text) + "'");
}

void KnnConfig::validate(std::size_t train_size) const {
  if (k == 0 || k % 2 == 0) throw ConfigError("k must be a positive odd integer");
  if (k > train_size) {
    throw ConfigError("k=" + std::to_string(k) + " exceeds training size " +
                      std::to_string(train_size));
  }
}

MinMaxScaler::MinMaxScaler(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw DimensionError("scaler bounds differ in size");
}

MinMaxScaler MinMaxScaler::fit(std::span<const FeatureVector> rows) {
  if (rows.empty()) throw DataError("cannot fit a scaler on zero rows");
  std::vector<double> lo = rows.front();
  std::vector<double> hi = rows.front();
  for (const auto& row : rows) {
    if (row.size() != lo.size()) throw DimensionError("rows differ in dimension");
    for (std::size_t j = 0; j < row.size(); ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

double MinMaxScaler::scale(std::size_t column, double value) const noexcept {
  const double span = upper_[column] - lower_[column];
  return span > 0.0 ? (value - lower_[column]) / span : 0.0;
}

FeatureVector MinMaxScaler::transform_train(const FeatureVector& row) const {
  if (empty()) return row;
  if (row.size() != lower_.size()) throw DimensionError("row dimension differs from scaler");
  FeatureVector out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = scale(j, row[j]);
  return out;
}

FeatureVector MinMaxScaler::transform_query(const FeatureVector& row) const {
  FeatureVector out = transform_train(row);
  if (!empty()) {
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

KnnClassifier::KnnClassifier(const LabeledDataset& train, KnnConfig cfg)
    : cfg_(cfg), dimension_(train.dimension()), class_count_(train.class_count()), labels_(train.labels) {
  if (train.size() == 0) throw DataError("empty training set");
  cfg_.validate(train.size());
  if (cfg_.normalization == Normalization::minmax) scaler_ = MinMaxScaler::fit(train.features);
  rows_.reserve(train.size());
  for (const auto& row : train.features) rows_.push_back(scaler_.transform_train(row));
}

std::vector<FeatureVector> KnnClassifier::prepare(const std::vector<FeatureVector>& queries) const {
  std::vector<FeatureVector> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    if (q.size() != dimension_) {
      throw DimensionError("query dimension " + std::to_string(q.size()) +
                           " differs from training dimension " + std::to_string(dimension_));
    }
    out.push_back(scaler_.transform_query(q));
  }
  return out;
}

Label KnnClassifier::predict(const FeatureVector& query) const {
  return predict_batch_serial({query}).front();
}

std::vector<Label> KnnClassifier::predict_batch(const std::vector<FeatureVector>& queries) const {
  return kernels::predict_batch(rows_, labels_, prepare(queries), cfg_.k, class_count_);
}

std::vector<Label> KnnClassifier::predict_batch_serial(const std::vector<FeatureVector>& queries) const {
  return kernels::predict_batch_serial(rows_, labels_, prepare(queries), cfg_.k, class_count_);
}

Label knn_predict(const LabeledDataset& train, const FeatureVector& query, const KnnConfig& cfg) {
  return KnnClassifier(train, cfg).predict(query);
}

namespace {

void check_compatible(const LabeledDataset& train, const LabeledDataset& eval) {
  if (eval.size() == 0) throw DataError("empty evaluation set");
  if (train.class_count() != eval.class_count()) {
    throw LabelError("training and evaluation label spaces differ in size");
  }
}

double error_rate(std::span<const Label> predicted, std::span<const Label> truth) {
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) errors += zero_one_loss(predicted[i], truth[i]);
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

}  // namespace

double holdout_error(const LabeledDataset& train, const LabeledDataset& eval, const KnnConfig& cfg) {
  check_compatible(train, eval);
  const KnnClassifier model(train, cfg);
  return error_rate(model.predict_batch(eval.features), eval.labels);
}

double holdout_error_serial(const LabeledDataset& train, const LabeledDataset& eval,
                            const KnnConfig& cfg) {
  check_compatible(train, eval);
  const KnnClassifier model(train, cfg);
  return error_rate(model.predict_batch_serial(eval.features), eval.labels);
}

}  // namespace dqops
