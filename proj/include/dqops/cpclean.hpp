#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dqops/incomplete.hpp"
#include "dqops/kernels.hpp"
#include "dqops/knn.hpp"

namespace dqops {

enum class CountingMethod {
  enumerate,   // visit every world; reference semantics, capped
  sort_count,  // polynomial counting over the per-record product structure
};

std::string to_string(CountingMethod m);
CountingMethod counting_method_from_string(std::string_view text);

struct CleaningConfig {
  KnnConfig knn;
  std::uint64_t world_cap = 1'000'000;
  CountingMethod method = CountingMethod::enumerate;
};

class WorldCapExceeded : public Error {
 public:
  WorldCapExceeded(std::uint64_t worlds, std::uint64_t cap);
  std::uint64_t worlds() const noexcept { return worlds_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t worlds_;
  std::uint64_t cap_;
};

/// Per-label count of possible worlds predicting that label for one point.
struct LabelTally {
  std::vector<std::uint64_t> counts;
  std::uint64_t world_total = 0;

  /// The label every world agrees on, if any.
  std::optional<Label> certain_label() const;
  /// Shannon entropy (bits) of counts / world_total.
  double entropy_bits() const;

  friend bool operator==(const LabelTally&, const LabelTally&) = default;
};

/// One scaler for every world: bounds over observed values and all candidates.
/// Refitting per world would make one repair move every distance.
MinMaxScaler fit_world_scaler(const IncompleteDataset& data);

/// Distances from `query` to every record version under `scaler`.
kernels::VersionTable build_version_table(const IncompleteDataset& data, const FeatureVector& query,
                                          const MinMaxScaler& scaler);

LabelTally counting_query(const IncompleteDataset& data, const FeatureVector& query,
                          const CleaningConfig& cfg, const MinMaxScaler& scaler);
LabelTally counting_query(const IncompleteDataset& data, const FeatureVector& query,
                          const CleaningConfig& cfg);

/// Materializes each world and runs plain kNN on it. Slow; kept as the
/// semantic reference for the counting paths.
LabelTally counting_query_reference(const IncompleteDataset& data, const FeatureVector& query,
                                    const CleaningConfig& cfg, const MinMaxScaler& scaler);

/// Certain(label) or Uncertain (nullopt).
std::optional<Label> checking_query(const IncompleteDataset& data, const FeatureVector& query,
                                    const CleaningConfig& cfg);

struct RepairRecord {
  CellId cell;
  double value = 0.0;
  friend bool operator==(const RepairRecord&, const RepairRecord&) = default;
};

class NoDirtyCells : public Error {
 public:
  NoDirtyCells() : Error("no dirty cells left") {}
};

class CellNotDirty : public Error {
 public:
  explicit CellNotDirty(CellId cell) : Error("cell " + to_string(cell) + " is not dirty") {}
};

/// Interactive cleaning over an unlabeled validation set. Dirty cells are the
/// missing cells not yet repaired. Single writer.
class CleaningSession {
 public:
  CleaningSession(IncompleteDataset data, std::vector<FeatureVector> validation, CleaningConfig cfg);

  /// Rebuilds a persisted session; `data` already carries the repairs.
  static CleaningSession restore(IncompleteDataset data, std::vector<FeatureVector> validation,
                                 CleaningConfig cfg, MinMaxScaler scaler,
                                 std::vector<RepairRecord> log, std::vector<double> entropy_trace);

  const IncompleteDataset& data() const noexcept { return data_; }
  const std::vector<FeatureVector>& validation() const noexcept { return validation_; }
  const CleaningConfig& config() const noexcept { return cfg_; }
  const MinMaxScaler& scaler() const noexcept { return scaler_; }
  const std::vector<RepairRecord>& log() const noexcept { return log_; }
  /// Entry 0 is the initial entropy; one entry per repair after that.
  const std::vector<double>& entropy_trace() const noexcept { return trace_; }
  const std::vector<LabelTally>& tallies() const noexcept { return tallies_; }

  std::uint64_t world_count() const { return data_.world_count(); }
  std::vector<CellId> dirty_cells() const;
  bool is_dirty(CellId cell) const;
  std::size_t certain_count() const;

  /// Mean per-point prediction entropy over the validation set (bits).
  double prediction_entropy() const;
  /// Uniform average over the cell's candidates of the entropy with the cell
  /// fixed to that candidate.
  double conditional_entropy(CellId cell) const;
  /// Dirty cell of minimum conditional entropy, ties to the smallest (row, col).
  CellId suggest_next() const;

  void apply_repair(CellId cell, double value);

 private:
  CleaningSession(IncompleteDataset data, std::vector<FeatureVector> validation, CleaningConfig cfg,
                  MinMaxScaler scaler);
  std::vector<LabelTally> compute_tallies(const IncompleteDataset& data) const;
  double mean_entropy(const std::vector<LabelTally>& tallies) const;

  IncompleteDataset data_;
  std::vector<FeatureVector> validation_;
  CleaningConfig cfg_;
  MinMaxScaler scaler_;
  std::vector<RepairRecord> log_;
  std::vector<double> trace_;
  std::vector<LabelTally> tallies_;
};

enum class CleaningPolicy { cpclean, random };
enum class StopCondition { all_certain, all_clean };

CleaningPolicy cleaning_policy_from_string(std::string_view text);
StopCondition stop_condition_from_string(std::string_view text);

struct CleaningStep {
  std::size_t step = 0;  // 1-based
  CellId cell;
  double value = 0.0;
  double entropy_bits = 0.0;
  std::size_t certain = 0;
  friend bool operator==(const CleaningStep&, const CleaningStep&) = default;
};

/// Repairs cells from `ground_truth` in policy order until `stop` holds.
std::vector<CleaningStep> simulate_cleaning(CleaningSession session,
                                            const std::map<CellId, double>& ground_truth,
                                            CleaningPolicy policy, Seed seed, StopCondition stop);

}  // namespace dqops
