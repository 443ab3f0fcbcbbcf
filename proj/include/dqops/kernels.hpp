#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a `_serial` twin with the
// same contract; the twins are the reference the parallel versions are tested
// and benchmarked against. Results never depend on the thread schedule.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dqops/core.hpp"

namespace dqops::kernels {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Majority label among the k smallest (sq_dist[i], i) pairs. Vote ties go to
/// the lowest class index. `scratch` is reused across calls.
Label nearest_vote(std::span<const double> sq_dist, std::span<const Label> labels,
                   std::size_t k, std::size_t class_count, std::vector<std::size_t>& scratch);

/// Brute-force kNN over already-normalized rows.
std::vector<Label> predict_batch(const std::vector<FeatureVector>& train,
                                 std::span<const Label> labels,
                                 const std::vector<FeatureVector>& queries, std::size_t k,
                                 std::size_t class_count);
std::vector<Label> predict_batch_serial(const std::vector<FeatureVector>& train,
                                        std::span<const Label> labels,
                                        const std::vector<FeatureVector>& queries,
                                        std::size_t k, std::size_t class_count);

/// Distances from one query to every version of every training record. A
/// version is one joint choice of repair values for the record's missing
/// cells; a possible world picks one version per record.
struct VersionTable {
  std::vector<double> sq_dist;       // versions of record r live in [offset[r], offset[r+1])
  std::vector<std::size_t> offset;   // size records + 1
  std::vector<Label> labels;         // per record
  std::size_t class_count = 0;

  std::size_t records() const noexcept { return labels.size(); }
  std::size_t versions(std::size_t record) const noexcept {
    return offset[record + 1] - offset[record];
  }
};

/// Per-label world counts by visiting every world. World count must fit in
/// 64 bits (callers guard this).
std::vector<std::uint64_t> tally_worlds(const VersionTable& table, std::size_t k);
std::vector<std::uint64_t> tally_worlds_serial(const VersionTable& table, std::size_t k);

/// Same counts without enumeration: for each (record, version) taken as the
/// k-th nearest neighbour, count the worlds in which exactly k-1 other records
/// sort before it, grouped by label through per-label generating polynomials.
std::vector<std::uint64_t> tally_sort_count(const VersionTable& table, std::size_t k);

}  // namespace dqops::kernels
