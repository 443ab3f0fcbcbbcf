#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dqops/core.hpp"

namespace dqops {

/// A (record, feature) coordinate. Orders by record, then feature.
struct CellId {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const CellId&) const = default;
};

/// "row,col", the sidecar key format.
std::string to_string(CellId cell);
CellId parse_cell_key(std::string_view key);

class WorldCountOverflow : public DataError {
 public:
  WorldCountOverflow() : DataError("possible-world count overflows 64 bits") {}
};

/// Training data whose missing cells each carry a finite set of candidate
/// repairs. The possible worlds are the product of the candidate sets.
class IncompleteDataset {
 public:
  using CandidateMap = std::map<CellId, std::vector<double>>;

  IncompleteDataset() = default;
  /// Missing cells are NaN in `rows` and must each have a candidate list.
  IncompleteDataset(LabelSpace classes, std::vector<FeatureVector> rows, std::vector<Label> labels,
                    CandidateMap candidates);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dimension() const noexcept { return rows_.empty() ? 0 : rows_.front().size(); }
  const LabelSpace& classes() const noexcept { return classes_; }
  const std::vector<FeatureVector>& rows() const noexcept { return rows_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  const CandidateMap& candidates() const noexcept { return candidates_; }
  const std::vector<double>& candidates(CellId cell) const;

  bool is_missing(CellId cell) const;
  std::vector<CellId> missing_cells() const;
  /// Cells with no candidate list yet (only during ingestion).
  std::vector<CellId> uncovered_cells() const;

  /// Replaces the candidate list of a missing cell.
  void set_candidates(CellId cell, std::vector<double> values);

  /// Product of candidate-set sizes; 1 without missing cells.
  std::uint64_t world_count() const;

  /// The world picking candidates[cell][choice[i]] for the i-th missing cell
  /// (map order).
  LabeledDataset materialize(std::span<const std::size_t> choice) const;

  void validate() const;

 private:
  LabelSpace classes_;
  std::vector<FeatureVector> rows_;
  std::vector<Label> labels_;
  CandidateMap candidates_;
};

/// CSV with `?` for missing cells. Candidates are left empty.
IncompleteDataset parse_incomplete_csv(std::string_view text,
                                       const std::optional<LabelSpace>& classes = std::nullopt);
/// Sidecar `{"candidates": {"<row>,<col>": [v1, ...]}}`.
IncompleteDataset::CandidateMap parse_candidates_json(std::string_view text);
std::string candidates_to_json(const IncompleteDataset::CandidateMap& candidates);

enum class RepairGenerator { mean, median, class_mean, observed_top_k };

RepairGenerator repair_generator_from_string(std::string_view text);

/// Candidate values for one missing cell from the observed (non-missing)
/// values of its column, deduplicated in generator order. `top_k` bounds the
/// observed_top_k generator (most frequent values, smaller value first on ties).
std::vector<double> generate_candidates(const IncompleteDataset& data, CellId cell,
                                        std::span<const RepairGenerator> generators,
                                        std::size_t top_k = 2);

/// Builds a dataset from the CSV, applying the sidecar and filling every cell
/// the sidecar does not cover with the given generators.
IncompleteDataset load_incomplete(std::string_view csv_text, std::string_view candidates_json,
                                  std::span<const RepairGenerator> generators);

}  // namespace dqops
