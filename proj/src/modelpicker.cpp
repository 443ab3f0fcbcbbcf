#include "dqops/modelpicker.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dqops/rng.hpp"

namespace dqops {

std::vector<StreamItem> parse_stream_csv(std::string_view text) {
  std::vector<StreamItem> items;
  std::size_t number = 0;
  std::size_t columns = 0;
  bool header = true;
  for (auto raw : split(text, '\n')) {
    ++number;
    raw = trim(raw);
    if (raw.empty()) continue;
    auto cells = split(raw, ',');
    if (header) {
      header = false;
      if (cells.size() < 3) throw ParseError("stream needs an id column and at least 2 model columns", number);
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) throw ParseError("column count differs from header", number);
    StreamItem item;
    item.id = std::string(trim(cells[0]));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const auto v = parse_double(cells[j]);
      if (!v || *v < 0 || *v != std::floor(*v)) throw ParseError("prediction must be a label index", number);
      item.predictions.push_back(static_cast<Label>(*v));
    }
    items.push_back(std::move(item));
  }
  if (header) throw ParseError("empty file", 1);
  if (items.empty()) throw ParseError("no stream items", number);
  return items;
}

std::vector<Label> parse_truth_csv(std::string_view text, const std::vector<StreamItem>& stream) {
  std::vector<Label> truths;
  std::size_t number = 0;
  bool header = true;
  for (auto raw : split(text, '\n')) {
    ++number;
    raw = trim(raw);
    if (raw.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split(raw, ',');
    if (cells.size() != 2) throw ParseError("truth rows are item_id,label", number);
    const std::size_t i = truths.size();
    if (i >= stream.size() || trim(cells[0]) != stream[i].id) {
      throw ParseError("truth file is not aligned with the stream", number);
    }
    const auto v = parse_double(cells[1]);
    if (!v || *v < 0 || *v != std::floor(*v)) throw ParseError("label must be a label index", number);
    truths.push_back(static_cast<Label>(*v));
  }
  if (truths.size() != stream.size()) throw DataError("truth file has fewer rows than the stream");
  return truths;
}

double default_eta(std::size_t model_count, std::uint64_t expected_queries) {
  if (expected_queries == 0) return 1.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(model_count)) / static_cast<double>(expected_queries));
}

PickerState::PickerState(const PickerConfig& cfg)
    : log_weights_(cfg.model_count, 0.0), budget_(cfg.budget), eta_(cfg.eta), q_min_(cfg.q_min), seed_(cfg.seed) {
  if (cfg.model_count < 2) throw ConfigError("model picking needs at least 2 models");
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw ConfigError("eta must be positive");
  if (!(cfg.q_min >= 0.0 && cfg.q_min <= 1.0)) throw ConfigError("q_min must lie in [0, 1]");
}

PickerState PickerState::restore(const PickerConfig& cfg, std::vector<double> log_weights, std::uint64_t budget,
                                 std::vector<QueryRecord> log, std::optional<std::string> pending) {
  PickerState state(cfg);
  if (log_weights.size() != cfg.model_count) throw DataError("weight count differs from model count");
  state.log_weights_ = std::move(log_weights);
  state.budget_ = budget;
  state.log_ = std::move(log);
  state.pending_ = std::move(pending);
  return state;
}

void PickerState::check_arity(const StreamItem& item) const {
  if (item.predictions.size() != log_weights_.size()) {
    throw DimensionError("item '" + item.id + "' carries " + std::to_string(item.predictions.size()) +
                         " predictions for " + std::to_string(log_weights_.size()) + " models");
  }
}

std::vector<double> PickerState::weights() const {
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  std::vector<double> w(log_weights_.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] = std::exp(log_weights_[i] - top);
  for (double& x : w) x /= sum;
  return w;
}

std::size_t PickerState::current_pick() const {
  return static_cast<std::size_t>(std::max_element(log_weights_.begin(), log_weights_.end()) - log_weights_.begin());
}

double PickerState::disagreement(const StreamItem& item) const {
  check_arity(item);
  const auto w = weights();
  std::map<Label, double> mass;
  for (std::size_t i = 0; i < w.size(); ++i) mass[item.predictions[i]] += w[i];
  double top = 0.0;
  for (const auto& [label, m] : mass) top = std::max(top, m);
  if (mass.size() == 1) return 0.0;
  return std::max(0.0, 1.0 - top);
}

double PickerState::query_probability(const StreamItem& item) const {
  const double s = disagreement(item);
  if (s <= 0.0) return 0.0;
  const double m = static_cast<double>(model_count());
  const double s_max = 1.0 - 1.0 / m;
  return std::clamp(s / s_max, q_min_, 1.0);
}

PickerDecision PickerState::observe(const StreamItem& item) {
  check_arity(item);
  if (pending_) throw ProtocolError("item '" + *pending_ + "' awaits its label");
  const std::uint64_t round = log_.size();
  QueryRecord rec{round, false, std::nullopt, 0.0};
  if (budget_ > 0) {
    const double q = query_probability(item);
    if (q > 0.0 && uniform_at(seed_, round) < q) {
      rec.queried = true;
      rec.probability = q;
      --budget_;
      pending_ = item.id;
    }
  }
  log_.push_back(rec);
  return rec.queried ? PickerDecision::query : PickerDecision::skip;
}

void PickerState::feed_label(const StreamItem& item, Label truth) {
  check_arity(item);
  if (!pending_ || *pending_ != item.id) {
    throw ProtocolError("no pending query for item '" + item.id + "'");
  }
  auto& rec = log_.back();
  for (std::size_t i = 0; i < log_weights_.size(); ++i) {
    log_weights_[i] -= eta_ * zero_one_loss(item.predictions[i], truth) / rec.probability;
  }
  rec.label = truth;
  pending_.reset();
}

PickerSimulation simulate_picker(const PredictionMatrix& predictions, const std::vector<Label>& truths,
                                 const PickerConfig& cfg) {
  if (predictions.rows() != truths.size()) throw DimensionError("prediction rows differ from truth count");
  if (predictions.cols() != cfg.model_count) throw DimensionError("prediction columns differ from model count");
  PickerState state(cfg);
  PickerSimulation sim;
  std::vector<std::uint64_t> model_errors(cfg.model_count, 0);
  std::uint64_t picker_errors = 0;
  for (std::size_t t = 0; t < predictions.rows(); ++t) {
    const auto row = predictions.row(t);
    StreamItem item{std::to_string(t), std::vector<Label>(row.begin(), row.end())};
    const std::size_t pick = state.current_pick();
    picker_errors += zero_one_loss(item.predictions[pick], truths[t]);
    for (std::size_t i = 0; i < cfg.model_count; ++i) model_errors[i] += zero_one_loss(item.predictions[i], truths[t]);

    const bool queried = state.observe(item) == PickerDecision::query;
    if (queried) {
      state.feed_label(item, truths[t]);
      ++sim.queries;
    }
    const auto best = *std::min_element(model_errors.begin(), model_errors.end());
    sim.trace.push_back({t + 1, queried, pick, static_cast<double>(picker_errors) - static_cast<double>(best)});
  }
  sim.final_pick = state.current_pick();
  return sim;
}

}  // namespace dqops
