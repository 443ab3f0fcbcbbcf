#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dqops/core.hpp"
#include "dqops/knn.hpp"

namespace dqops {

/// A named feature transformation given as precomputed tables, one row per
/// sample and index-aligned with the train and validation splits. The name
/// "identity" is reserved for the raw features and carries no tables.
struct Embedding {
  std::string name;
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> validation;

  static Embedding identity() { return {"identity", {}, {}}; }
  bool is_identity() const noexcept { return name == "identity"; }
};

/// Parses "identity" or "NAME:TRAIN_CSV:VALIDATION_CSV" and loads the tables.
Embedding load_embedding(std::string_view spec);

struct BerEstimate {
  std::string embedding;
  double knn_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t class_count = 0;

  double max_accuracy() const noexcept { return 1.0 - lower; }
};

/// Inverts the asymptotic 1-NN error relation: upper = err,
/// lower = (C-1)/C * (1 - sqrt(max(0, 1 - C/(C-1) * err))), both clamped to [0,1].
std::pair<double, double> ber_bounds_from_knn_error(double err, std::size_t class_count);

struct FeasibilityReport {
  std::vector<BerEstimate> estimates;  // sorted by embedding name
  BerEstimate overall;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

/// 1-NN holdout error under every embedding, converted to BER bounds. The
/// overall estimate has the smallest lower bound (then upper bound, then name).
FeasibilityReport feasibility(const LabeledDataset& train, const LabeledDataset& validation,
                              const std::vector<Embedding>& embeddings, const KnnConfig& cfg);

/// Applies an embedding to a split; identity returns the split unchanged.
LabeledDataset apply_embedding(const LabeledDataset& split, const Embedding& embedding, bool is_train);

struct NoiseConfig {
  double rho = 0.0;
  Seed seed;
};

/// Each label flips with probability rho to a uniformly drawn other class.
LabeledDataset inject_label_noise(const LabeledDataset& data, const NoiseConfig& cfg);

struct NoisePoint {
  double rho = 0.0;
  BerEstimate estimate;
};

/// Injects noise into both splits for every rho and re-runs feasibility on the
/// single embedding. rhos must ascend and stay below (C-1)/C.
std::vector<NoisePoint> noise_sweep(const LabeledDataset& train, const LabeledDataset& validation,
                                    const Embedding& embedding, const std::vector<double>& rhos,
                                    const KnnConfig& cfg, Seed seed);

}  // namespace dqops
