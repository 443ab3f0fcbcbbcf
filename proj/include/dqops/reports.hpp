#pragma once

// JSON renderings and batch jobs shared by the CLI and the HTTP service, so
// both entry points emit byte-identical results for identical inputs.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dqops/ci.hpp"
#include "dqops/cpclean.hpp"
#include "dqops/modelpicker.hpp"
#include "dqops/snoopy.hpp"
#include "json.hpp"

namespace dqops {

using Json = nlohmann::json;

/// CSV or JSON dataset, told apart by the first non-blank character.
LabeledDataset parse_dataset_auto(std::string_view text, const std::optional<LabelSpace>& classes = std::nullopt);

/// One label name per non-blank line.
std::vector<Label> parse_prediction_column(std::string_view text, const LabelSpace& classes);

/// Ground truth for dirty cells: `{"values": {"r,c": v}}`, or a complete CSV
/// of the same shape whose values at the missing cells are taken.
std::map<CellId, double> parse_cell_truth(std::string_view text, const IncompleteDataset& data);

Json estimate_json(const BerEstimate& e);
/// Feasibility over all embeddings, plus a noise sweep on the overall best
/// embedding when `sweep` is nonempty.
Json feasibility_job(const LabeledDataset& train, const LabeledDataset& validation,
                     const std::vector<Embedding>& embeddings, const std::vector<double>& sweep, Seed seed,
                     Normalization normalization = Normalization::minmax);

Json ci_plan_job(const TestCondition& cond, double delta, ReuseMode mode, std::uint64_t test_size);

struct CiCommitOutcome {
  Json result;
  /// Updated ledger to persist; empty when the budget was already spent.
  std::optional<CiLedger> ledger;
};

/// Runs one commit; a spent budget yields status "refresh_required" instead of
/// throwing. A fingerprint mismatch still throws StaleLedger.
CiCommitOutcome ci_commit_job(const CiLedger& ledger, const LabeledDataset& test_set,
                              const std::vector<Label>& old_preds, const std::vector<Label>& new_preds,
                              const TestCondition& cond);

Json cleaning_step_json(const CleaningStep& step);
Json picker_trace_json(const PickerTraceRow& row);

}  // namespace dqops
