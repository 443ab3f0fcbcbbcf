#include "dqops/cpclean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dqops/rng.hpp"

namespace dqops {

std::string to_string(CountingMethod m) {
  return m == CountingMethod::enumerate ? "enumerate" : "sort_count";
}

CountingMethod counting_method_from_string(std::string_view text) {
  if (text == "enumerate") return CountingMethod::enumerate;
  if (text == "sort_count" || text == "sort-count") return CountingMethod::sort_count;
  throw ConfigError("unknown counting method '" + std::string(text) + "'");
}

WorldCapExceeded::WorldCapExceeded(std::uint64_t worlds, std::uint64_t cap)
    : Error(std::to_string(worlds) + " possible worlds exceed the enumeration cap of " +
            std::to_string(cap)),
      worlds_(worlds),
      cap_(cap) {}

std::optional<Label> LabelTally::certain_label() const {
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == world_total) return static_cast<Label>(c);
  }
  return std::nullopt;
}

double LabelTally::entropy_bits() const {
  double h = 0.0;
  for (auto count : counts) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(world_total);
    h -= p * std::log2(p);
  }
  return h;
}

MinMaxScaler fit_world_scaler(const IncompleteDataset& data) {
  const std::size_t d = data.dimension();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  auto widen = [&](std::size_t col, double v) {
    lo[col] = std::min(lo[col], v);
    hi[col] = std::max(hi[col], v);
  };
  for (const auto& row : data.rows()) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isnan(row[j])) widen(j, row[j]);
    }
  }
  for (const auto& [cell, values] : data.candidates()) {
    for (double v : values) widen(cell.col, v);
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (lo[j] > hi[j]) lo[j] = hi[j] = 0.0;  // column with no values at all
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

kernels::VersionTable build_version_table(const IncompleteDataset& data, const FeatureVector& query,
                                          const MinMaxScaler& scaler) {
  if (query.size() != data.dimension()) {
    throw DimensionError("query dimension " + std::to_string(query.size()) +
                         " differs from dataset dimension " + std::to_string(data.dimension()));
  }
  const FeatureVector q = scaler.transform_query(query);
  kernels::VersionTable table;
  table.class_count = data.classes().size();
  table.labels = data.labels();
  table.offset.push_back(0);

  auto next_cell = data.candidates().begin();
  const auto end = data.candidates().end();
  for (std::size_t r = 0; r < data.size(); ++r) {
    std::vector<std::pair<std::size_t, const std::vector<double>*>> missing;
    while (next_cell != end && next_cell->first.row == r) {
      missing.emplace_back(next_cell->first.col, &next_cell->second);
      ++next_cell;
    }
    FeatureVector row = data.rows()[r];
    std::size_t versions = 1;
    for (const auto& m : missing) versions *= m.second->size();
    for (std::size_t v = 0; v < versions; ++v) {
      std::size_t rest = v;
      for (const auto& [col, values] : missing) {
        row[col] = (*values)[rest % values->size()];
        rest /= values->size();
      }
      table.sq_dist.push_back(kernels::squared_distance(scaler.transform_train(row), q));
    }
    table.offset.push_back(table.sq_dist.size());
  }
  return table;
}

namespace {

MinMaxScaler scaler_for(const IncompleteDataset& data, const CleaningConfig& cfg) {
  return cfg.knn.normalization == Normalization::minmax ? fit_world_scaler(data) : MinMaxScaler{};
}

}  // namespace

LabelTally counting_query(const IncompleteDataset& data, const FeatureVector& query,
                          const CleaningConfig& cfg, const MinMaxScaler& scaler) {
  cfg.knn.validate(data.size());
  LabelTally tally;
  tally.world_total = data.world_count();
  const auto table = build_version_table(data, query, scaler);
  if (cfg.method == CountingMethod::enumerate) {
    if (tally.world_total > cfg.world_cap) throw WorldCapExceeded(tally.world_total, cfg.world_cap);
    tally.counts = kernels::tally_worlds(table, cfg.knn.k);
  } else {
    tally.counts = kernels::tally_sort_count(table, cfg.knn.k);
  }
  return tally;
}

LabelTally counting_query(const IncompleteDataset& data, const FeatureVector& query,
                          const CleaningConfig& cfg) {
  return counting_query(data, query, cfg, scaler_for(data, cfg));
}

LabelTally counting_query_reference(const IncompleteDataset& data, const FeatureVector& query,
                                    const CleaningConfig& cfg, const MinMaxScaler& scaler) {
  cfg.knn.validate(data.size());
  if (query.size() != data.dimension()) throw DimensionError("query dimension mismatch");
  LabelTally tally;
  tally.world_total = data.world_count();
  if (tally.world_total > cfg.world_cap) throw WorldCapExceeded(tally.world_total, cfg.world_cap);
  tally.counts.assign(data.classes().size(), 0);

  std::vector<std::size_t> sizes;
  for (const auto& [cell, values] : data.candidates()) sizes.push_back(values.size());
  std::vector<std::size_t> choice(sizes.size(), 0);
  const std::vector<FeatureVector> queries{scaler.transform_query(query)};
  for (std::uint64_t w = 0; w < tally.world_total; ++w) {
    const auto world = data.materialize(choice);
    std::vector<FeatureVector> rows;
    for (const auto& row : world.features) rows.push_back(scaler.transform_train(row));
    ++tally.counts[kernels::predict_batch_serial(rows, world.labels, queries, cfg.knn.k,
                                                 world.class_count())[0]];
    for (std::size_t i = 0; i < choice.size(); ++i) {
      if (++choice[i] < sizes[i]) break;
      choice[i] = 0;
    }
  }
  return tally;
}

std::optional<Label> checking_query(const IncompleteDataset& data, const FeatureVector& query,
                                    const CleaningConfig& cfg) {
  return counting_query(data, query, cfg).certain_label();
}

CleaningSession::CleaningSession(IncompleteDataset data, std::vector<FeatureVector> validation,
                                 CleaningConfig cfg)
    : CleaningSession(data, std::move(validation), cfg, scaler_for(data, cfg)) {}

CleaningSession::CleaningSession(IncompleteDataset data, std::vector<FeatureVector> validation,
                                 CleaningConfig cfg, MinMaxScaler scaler)
    : data_(std::move(data)), validation_(std::move(validation)), cfg_(cfg), scaler_(std::move(scaler)) {
  if (validation_.empty()) throw DataError("empty validation set");
  data_.validate();
  cfg_.knn.validate(data_.size());
  for (const auto& v : validation_) {
    if (v.size() != data_.dimension()) throw DimensionError("validation point dimension mismatch");
  }
  tallies_ = compute_tallies(data_);
  trace_.push_back(mean_entropy(tallies_));
}

CleaningSession CleaningSession::restore(IncompleteDataset data, std::vector<FeatureVector> validation,
                                         CleaningConfig cfg, MinMaxScaler scaler,
                                         std::vector<RepairRecord> log, std::vector<double> entropy_trace) {
  CleaningSession session(std::move(data), std::move(validation), cfg, std::move(scaler));
  if (entropy_trace.size() != log.size() + 1) throw DataError("entropy trace does not match the repair log");
  for (const auto& rec : log) {
    const auto& cands = session.data_.candidates(rec.cell);
    if (cands.size() != 1 || cands.front() != rec.value) {
      throw DataError("repair log disagrees with candidate sets at cell " + to_string(rec.cell));
    }
  }
  session.log_ = std::move(log);
  session.trace_ = std::move(entropy_trace);
  return session;
}

std::vector<LabelTally> CleaningSession::compute_tallies(const IncompleteDataset& data) const {
  std::vector<LabelTally> out;
  out.reserve(validation_.size());
  for (const auto& point : validation_) out.push_back(counting_query(data, point, cfg_, scaler_));
  return out;
}

double CleaningSession::mean_entropy(const std::vector<LabelTally>& tallies) const {
  double sum = 0.0;
  for (const auto& t : tallies) sum += t.entropy_bits();
  return sum / static_cast<double>(tallies.size());
}

bool CleaningSession::is_dirty(CellId cell) const {
  if (!data_.is_missing(cell)) return false;
  return std::none_of(log_.begin(), log_.end(), [&](const RepairRecord& r) { return r.cell == cell; });
}

std::vector<CellId> CleaningSession::dirty_cells() const {
  std::vector<CellId> out;
  for (const auto& [cell, values] : data_.candidates()) {
    if (is_dirty(cell)) out.push_back(cell);
  }
  return out;
}

std::size_t CleaningSession::certain_count() const {
  return static_cast<std::size_t>(std::count_if(tallies_.begin(), tallies_.end(),
                                                [](const LabelTally& t) { return t.certain_label().has_value(); }));
}

double CleaningSession::prediction_entropy() const { return mean_entropy(tallies_); }

double CleaningSession::conditional_entropy(CellId cell) const {
  if (!data_.is_missing(cell)) throw DataError("cell " + to_string(cell) + " is not a missing cell");
  if (!is_dirty(cell)) throw CellNotDirty(cell);
  const auto& values = data_.candidates(cell);
  double sum = 0.0;
  for (double v : values) {
    IncompleteDataset fixed = data_;
    fixed.set_candidates(cell, {v});
    sum += mean_entropy(compute_tallies(fixed));
  }
  return sum / static_cast<double>(values.size());
}

CellId CleaningSession::suggest_next() const {
  const auto dirty = dirty_cells();
  if (dirty.empty()) throw NoDirtyCells();
  CellId best = dirty.front();
  double best_h = conditional_entropy(best);
  for (std::size_t i = 1; i < dirty.size(); ++i) {
    const double h = conditional_entropy(dirty[i]);
    if (h < best_h) {
      best = dirty[i];
      best_h = h;
    }
  }
  return best;
}

void CleaningSession::apply_repair(CellId cell, double value) {
  if (!data_.is_missing(cell)) throw DataError("cell " + to_string(cell) + " is not a missing cell");
  if (!is_dirty(cell)) throw CellNotDirty(cell);
  if (!std::isfinite(value)) throw DataError("repair value must be finite");
  IncompleteDataset next = data_;
  next.set_candidates(cell, {value});
  auto tallies = compute_tallies(next);
  data_ = std::move(next);
  tallies_ = std::move(tallies);
  log_.push_back({cell, value});
  trace_.push_back(mean_entropy(tallies_));
}

CleaningPolicy cleaning_policy_from_string(std::string_view text) {
  if (text == "cpclean") return CleaningPolicy::cpclean;
  if (text == "random") return CleaningPolicy::random;
  throw ConfigError("unknown cleaning policy '" + std::string(text) + "'");
}

StopCondition stop_condition_from_string(std::string_view text) {
  if (text == "all_certain" || text == "all-certain") return StopCondition::all_certain;
  if (text == "all_clean" || text == "all-clean") return StopCondition::all_clean;
  throw ConfigError("unknown stop condition '" + std::string(text) + "'");
}

std::vector<CleaningStep> simulate_cleaning(CleaningSession session,
                                            const std::map<CellId, double>& ground_truth,
                                            CleaningPolicy policy, Seed seed, StopCondition stop) {
  for (auto cell : session.dirty_cells()) {
    if (!ground_truth.contains(cell)) throw DataError("ground truth lacks dirty cell " + to_string(cell));
  }
  Rng rng(seed);
  std::vector<CleaningStep> trace;
  auto done = [&] {
    if (session.dirty_cells().empty()) return true;
    return stop == StopCondition::all_certain && session.certain_count() == session.validation().size();
  };
  while (!done()) {
    CellId cell;
    if (policy == CleaningPolicy::cpclean) {
      cell = session.suggest_next();
    } else {
      const auto dirty = session.dirty_cells();
      cell = dirty[rng.below(dirty.size())];
    }
    const double value = ground_truth.at(cell);
    session.apply_repair(cell, value);
    trace.push_back({trace.size() + 1, cell, value, session.prediction_entropy(), session.certain_count()});
  }
  return trace;
}

}  // namespace dqops
