#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dqops/core.hpp"

namespace dqops {

struct StreamItem {
  std::string id;
  std::vector<Label> predictions;  // one per model
};

/// Stream CSV: `item_id,pred_model_0,...,pred_model_{m-1}` with integer labels.
std::vector<StreamItem> parse_stream_csv(std::string_view text);
/// Truth CSV: `item_id,label`, aligned with the stream.
std::vector<Label> parse_truth_csv(std::string_view text, const std::vector<StreamItem>& stream);

struct PickerConfig {
  std::size_t model_count = 2;
  std::uint64_t budget = 0;
  double eta = 1.0;
  Seed seed;
  /// Lower bound on the query probability when the models disagree; 1 forces
  /// a query on every disagreement.
  double q_min = 0.0;
};

/// sqrt(8 ln m / expected_queries), the usual exponential-weights step size.
double default_eta(std::size_t model_count, std::uint64_t expected_queries);

enum class PickerDecision { skip, query };

struct QueryRecord {
  std::uint64_t round = 0;
  bool queried = false;
  std::optional<Label> label;
  double probability = 0.0;
  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Online model selection over an unlabeled stream. Each item is observed
/// once; a query must be answered with feed_label before the next observe.
class PickerState {
 public:
  explicit PickerState(const PickerConfig& cfg);

  PickerDecision observe(const StreamItem& item);
  void feed_label(const StreamItem& item, Label truth);

  /// argmax of the weights, ties to the lowest index.
  std::size_t current_pick() const;
  /// Normalized weights.
  std::vector<double> weights() const;
  /// Weighted disagreement 1 - max_y (weight of models predicting y).
  double disagreement(const StreamItem& item) const;
  /// Query probability for an item under the current weights.
  double query_probability(const StreamItem& item) const;

  std::size_t model_count() const noexcept { return log_weights_.size(); }
  std::uint64_t budget_remaining() const noexcept { return budget_; }
  std::uint64_t round() const noexcept { return log_.size(); }
  double eta() const noexcept { return eta_; }
  double q_min() const noexcept { return q_min_; }
  Seed seed() const noexcept { return seed_; }
  const std::vector<QueryRecord>& query_log() const noexcept { return log_; }
  const std::optional<std::string>& pending_item() const noexcept { return pending_; }
  const std::vector<double>& log_weights() const noexcept { return log_weights_; }

  /// Rebuilds a persisted state.
  static PickerState restore(const PickerConfig& cfg, std::vector<double> log_weights, std::uint64_t budget,
                             std::vector<QueryRecord> log, std::optional<std::string> pending);

 private:
  void check_arity(const StreamItem& item) const;

  // Unnormalized log weights; only differences matter.
  std::vector<double> log_weights_;
  std::uint64_t budget_;
  double eta_;
  double q_min_;
  Seed seed_;
  std::vector<QueryRecord> log_;
  std::optional<std::string> pending_;
};

struct PickerTraceRow {
  std::uint64_t round = 0;  // 1-based
  bool queried = false;
  std::size_t pick = 0;     // model in use for this round
  double regret = 0.0;      // cumulative
};

struct PickerSimulation {
  std::size_t final_pick = 0;
  std::uint64_t queries = 0;
  std::vector<PickerTraceRow> trace;
};

/// Streams matrix rows through observe/feed_label. Regret at round t is the
/// picker's errors over rounds 1..t (using the pick held when each round
/// arrived) minus the fewest errors any single model made over 1..t.
PickerSimulation simulate_picker(const PredictionMatrix& predictions, const std::vector<Label>& truths,
                                 const PickerConfig& cfg);

}  // namespace dqops
