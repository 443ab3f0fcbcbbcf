#include "dqops/snoopy.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "dqops/rng.hpp"

namespace dqops {

Embedding load_embedding(std::string_view spec) {
  spec = trim(spec);
  if (spec == "identity") return Embedding::identity();
  const auto parts = split(spec, ':');
  if (parts.size() != 3 || trim(parts[0]).empty()) {
    throw ConfigError("embedding spec must be 'identity' or NAME:TRAIN_CSV:VALIDATION_CSV, got '" +
                      std::string(spec) + "'");
  }
  Embedding e;
  e.name = std::string(trim(parts[0]));
  if (e.is_identity()) throw ConfigError("'identity' is reserved and takes no tables");
  e.train = load_feature_table(std::string(trim(parts[1])));
  e.validation = load_feature_table(std::string(trim(parts[2])));
  return e;
}

std::pair<double, double> ber_bounds_from_knn_error(double err, std::size_t class_count) {
  if (!(err >= 0.0 && err <= 1.0)) throw ConfigError("kNN error must lie in [0,1]");
  if (class_count < 2) throw ConfigError("class count must be at least 2");
  const double c = static_cast<double>(class_count);
  const double upper = std::clamp(err, 0.0, 1.0);
  const double inner = std::max(0.0, 1.0 - (c / (c - 1.0)) * err);
  const double lower = std::clamp(((c - 1.0) / c) * (1.0 - std::sqrt(inner)), 0.0, 1.0);
  return {std::min(lower, upper), upper};
}

LabeledDataset apply_embedding(const LabeledDataset& split, const Embedding& embedding, bool is_train) {
  if (embedding.is_identity()) return split;
  const auto& table = is_train ? embedding.train : embedding.validation;
  if (table.size() != split.size()) {
    throw DimensionError("embedding '" + embedding.name + "' has " + std::to_string(table.size()) +
                         " rows for a split of " + std::to_string(split.size()) + " samples");
  }
  LabeledDataset out{split.classes, table, split.labels};
  out.validate();
  return out;
}

FeasibilityReport feasibility(const LabeledDataset& train, const LabeledDataset& validation,
                              const std::vector<Embedding>& embeddings, const KnnConfig& cfg) {
  if (train.size() == 0 || validation.size() == 0) throw DataError("feasibility needs nonempty splits");
  if (embeddings.empty()) throw ConfigError("at least one embedding is required");
  KnnConfig one_nn = cfg;
  one_nn.k = 1;

  FeasibilityReport report;
  report.train_size = train.size();
  report.validation_size = validation.size();
  for (const auto& e : embeddings) {
    const auto tr = apply_embedding(train, e, true);
    const auto va = apply_embedding(validation, e, false);
    BerEstimate est;
    est.embedding = e.name;
    est.class_count = train.class_count();
    est.knn_error = holdout_error(tr, va, one_nn);
    std::tie(est.lower, est.upper) = ber_bounds_from_knn_error(est.knn_error, est.class_count);
    report.estimates.push_back(std::move(est));
  }
  std::sort(report.estimates.begin(), report.estimates.end(),
            [](const BerEstimate& a, const BerEstimate& b) { return a.embedding < b.embedding; });
  report.overall = *std::min_element(
      report.estimates.begin(), report.estimates.end(), [](const BerEstimate& a, const BerEstimate& b) {
        return std::tie(a.lower, a.upper, a.embedding) < std::tie(b.lower, b.upper, b.embedding);
      });
  return report;
}

LabeledDataset inject_label_noise(const LabeledDataset& data, const NoiseConfig& cfg) {
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw ConfigError("noise rate must lie in [0, 1)");
  LabeledDataset out = data;
  Rng rng(cfg.seed);
  const auto others = static_cast<std::uint64_t>(data.class_count() - 1);
  for (auto& y : out.labels) {
    // Always draw both values so the stream position does not depend on rho.
    const double u = rng.uniform();
    const auto r = static_cast<Label>(rng.below(others));
    if (u < cfg.rho) y = r < y ? r : r + 1;
  }
  return out;
}

std::vector<NoisePoint> noise_sweep(const LabeledDataset& train, const LabeledDataset& validation,
                                    const Embedding& embedding, const std::vector<double>& rhos,
                                    const KnnConfig& cfg, Seed seed) {
  const double c = static_cast<double>(train.class_count());
  const double limit = (c - 1.0) / c;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    if (!(rhos[i] >= 0.0 && rhos[i] < limit)) {
      throw ConfigError("noise rate " + format_double(rhos[i]) + " outside [0, (C-1)/C)");
    }
    if (i > 0 && rhos[i] < rhos[i - 1]) throw ConfigError("noise rates must be sorted ascending");
  }
  std::vector<NoisePoint> out;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const auto tr = inject_label_noise(train, {rhos[i], derive_seed(seed, 2 * i)});
    const auto va = inject_label_noise(validation, {rhos[i], derive_seed(seed, 2 * i + 1)});
    const auto report = feasibility(tr, va, {embedding}, cfg);
    out.push_back({rhos[i], report.overall});
  }
  return out;
}

}  // namespace dqops
