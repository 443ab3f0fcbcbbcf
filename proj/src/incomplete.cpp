#include "dqops/incomplete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

namespace dqops {

std::string to_string(CellId cell) {
  return std::to_string(cell.row) + "," + std::to_string(cell.col);
}

CellId parse_cell_key(std::string_view key) {
  const auto parts = split(key, ',');
  auto as_index = [&](std::string_view part) {
    part = trim(part);
    std::size_t value = 0;
    if (part.empty() || !std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw DataError("malformed cell key '" + std::string(key) + "'");
    }
    for (char c : part) value = value * 10 + static_cast<std::size_t>(c - '0');
    return value;
  };
  if (parts.size() != 2) throw DataError("malformed cell key '" + std::string(key) + "'");
  return {as_index(parts[0]), as_index(parts[1])};
}

IncompleteDataset::IncompleteDataset(LabelSpace classes, std::vector<FeatureVector> rows,
                                     std::vector<Label> labels, CandidateMap candidates)
    : classes_(std::move(classes)),
      rows_(std::move(rows)),
      labels_(std::move(labels)),
      candidates_(std::move(candidates)) {
  if (rows_.size() != labels_.size()) throw DimensionError("rows and labels differ in length");
  if (rows_.empty()) throw DataError("incomplete dataset has no records");
  const std::size_t d = rows_.front().size();
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != d) throw DimensionError("record " + std::to_string(i) + " has a different dimension");
    for (double v : rows_[i]) {
      if (std::isinf(v)) throw DataError("record " + std::to_string(i) + " has an infinite feature");
    }
    if (labels_[i] >= classes_.size()) throw LabelError("record " + std::to_string(i) + " label out of range");
  }
  for (const auto& [cell, values] : candidates_) {
    if (!is_missing(cell)) {
      throw DataError("candidates given for cell " + to_string(cell) + " which is not missing");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw DataError("non-finite candidate for cell " + to_string(cell));
    }
  }
}

const std::vector<double>& IncompleteDataset::candidates(CellId cell) const {
  auto it = candidates_.find(cell);
  if (it == candidates_.end()) throw DataError("cell " + to_string(cell) + " is not a missing cell");
  return it->second;
}

bool IncompleteDataset::is_missing(CellId cell) const {
  return cell.row < rows_.size() && cell.col < dimension() && std::isnan(rows_[cell.row][cell.col]);
}

std::vector<CellId> IncompleteDataset::missing_cells() const {
  std::vector<CellId> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t c = 0; c < rows_[r].size(); ++c) {
      if (std::isnan(rows_[r][c])) out.push_back({r, c});
    }
  }
  return out;
}

std::vector<CellId> IncompleteDataset::uncovered_cells() const {
  std::vector<CellId> out;
  for (auto cell : missing_cells()) {
    auto it = candidates_.find(cell);
    if (it == candidates_.end() || it->second.empty()) out.push_back(cell);
  }
  return out;
}

void IncompleteDataset::set_candidates(CellId cell, std::vector<double> values) {
  if (!is_missing(cell)) throw DataError("cell " + to_string(cell) + " is not a missing cell");
  if (values.empty()) throw DataError("empty candidate list for cell " + to_string(cell));
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("non-finite candidate for cell " + to_string(cell));
  }
  candidates_[cell] = std::move(values);
}

void IncompleteDataset::validate() const {
  const auto uncovered = uncovered_cells();
  if (!uncovered.empty()) {
    throw DataError("missing cell " + to_string(uncovered.front()) + " has no candidate repairs");
  }
}

std::uint64_t IncompleteDataset::world_count() const {
  validate();
  std::uint64_t total = 1;
  for (const auto& [cell, values] : candidates_) {
    const auto size = static_cast<std::uint64_t>(values.size());
    if (total > std::numeric_limits<std::uint64_t>::max() / size) throw WorldCountOverflow();
    total *= size;
  }
  return total;
}

LabeledDataset IncompleteDataset::materialize(std::span<const std::size_t> choice) const {
  if (choice.size() != candidates_.size()) throw DimensionError("one choice per missing cell required");
  LabeledDataset world{classes_, rows_, labels_};
  std::size_t i = 0;
  for (const auto& [cell, values] : candidates_) {
    world.features[cell.row][cell.col] = values.at(choice[i++]);
  }
  return world;
}

IncompleteDataset parse_incomplete_csv(std::string_view text, const std::optional<LabelSpace>& classes) {
  std::vector<std::string_view> lines;
  std::vector<std::size_t> numbers;
  std::size_t number = 0;
  for (auto raw : split(text, '\n')) {
    ++number;
    raw = trim(raw);
    if (raw.empty()) continue;
    lines.push_back(raw);
    numbers.push_back(number);
  }
  if (lines.empty()) throw ParseError("empty file", 1);
  auto header = split(lines.front(), ',');
  if (header.size() < 2 || trim(header.back()) != "label") {
    throw ParseError("header must list feature columns followed by 'label'", numbers.front());
  }
  const std::size_t d = header.size() - 1;
  if (lines.size() == 1) throw ParseError("no data rows", numbers.front());

  std::vector<FeatureVector> rows;
  std::vector<std::string> raw_labels;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split(lines[i], ',');
    if (cells.size() != d + 1) {
      throw ParseError("expected " + std::to_string(d + 1) + " columns, got " + std::to_string(cells.size()),
                       numbers[i]);
    }
    FeatureVector row(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto cell = trim(cells[j]);
      if (cell == "?") {
        row[j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const auto value = parse_double(cell);
      if (!value) {
        throw ParseError("feature " + std::to_string(j) + " is neither a finite number nor '?'", numbers[i]);
      }
      row[j] = *value;
    }
    const auto label = trim(cells[d]);
    if (label.empty() || label == "?") throw ParseError("labels may not be missing", numbers[i]);
    rows.push_back(std::move(row));
    raw_labels.emplace_back(label);
  }

  LabelSpace space;
  if (classes) {
    space = *classes;
  } else {
    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    space = LabelSpace(std::vector<std::string>(distinct.begin(), distinct.end()));
  }
  std::vector<Label> labels;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    auto y = space.find(raw_labels[i]);
    if (!y) throw LabelError("line " + std::to_string(numbers[i + 1]) + ": unknown label '" + raw_labels[i] + "'");
    labels.push_back(*y);
  }
  return IncompleteDataset(std::move(space), std::move(rows), std::move(labels), {});
}

IncompleteDataset::CandidateMap parse_candidates_json(std::string_view text) {
  IncompleteDataset::CandidateMap out;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& [key, values] : doc.at("candidates").items()) {
      std::vector<double> list;
      for (const auto& v : values) {
        if (!v.is_number()) throw DataError("candidate for cell " + key + " is not a number");
        list.push_back(v.get<double>());
      }
      if (list.empty()) throw DataError("empty candidate list for cell " + key);
      out[parse_cell_key(key)] = std::move(list);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("candidates sidecar: ") + e.what());
  }
  return out;
}

std::string candidates_to_json(const IncompleteDataset::CandidateMap& candidates) {
  nlohmann::json doc;
  auto& map = doc["candidates"] = nlohmann::json::object();
  for (const auto& [cell, values] : candidates) map[to_string(cell)] = values;
  return doc.dump();
}

RepairGenerator repair_generator_from_string(std::string_view text) {
  if (text == "mean") return RepairGenerator::mean;
  if (text == "median") return RepairGenerator::median;
  if (text == "class_mean" || text == "class-mean") return RepairGenerator::class_mean;
  if (text == "observed" || text == "observed_top_k" || text == "k-hot") return RepairGenerator::observed_top_k;
  throw ConfigError("unknown repair generator '" + std::string(text) + "'");
}

namespace {

std::vector<double> observed_column(const IncompleteDataset& data, std::size_t col,
                                    std::optional<Label> only_label = std::nullopt) {
  std::vector<double> values;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double v = data.rows()[r][col];
    if (std::isnan(v)) continue;
    if (only_label && data.labels()[r] != *only_label) continue;
    values.push_back(v);
  }
  return values;
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::vector<double> generate_candidates(const IncompleteDataset& data, CellId cell,
                                        std::span<const RepairGenerator> generators, std::size_t top_k) {
  if (!data.is_missing(cell)) throw DataError("cell " + to_string(cell) + " is not a missing cell");
  const auto column = observed_column(data, cell.col);
  if (column.empty()) {
    throw DataError("column " + std::to_string(cell.col) + " has no observed values to derive repairs from");
  }
  std::vector<double> out;
  auto add = [&](double v) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  for (auto gen : generators) {
    switch (gen) {
      case RepairGenerator::mean:
        add(mean_of(column));
        break;
      case RepairGenerator::median: {
        auto sorted = column;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t mid = sorted.size() / 2;
        add(sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]));
        break;
      }
      case RepairGenerator::class_mean: {
        const auto same = observed_column(data, cell.col, data.labels()[cell.row]);
        add(same.empty() ? mean_of(column) : mean_of(same));
        break;
      }
      case RepairGenerator::observed_top_k: {
        std::map<double, std::size_t> freq;
        for (double v : column) ++freq[v];
        std::vector<std::pair<double, std::size_t>> ranked(freq.begin(), freq.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) add(ranked[i].first);
        break;
      }
    }
  }
  if (out.empty()) throw ConfigError("no repair generators configured");
  return out;
}

IncompleteDataset load_incomplete(std::string_view csv_text, std::string_view candidates_json,
                                  std::span<const RepairGenerator> generators) {
  auto base = parse_incomplete_csv(csv_text);
  auto sidecar = candidates_json.empty() ? IncompleteDataset::CandidateMap{}
                                         : parse_candidates_json(candidates_json);
  IncompleteDataset data(base.classes(), base.rows(), base.labels(), std::move(sidecar));
  for (auto cell : data.uncovered_cells()) {
    if (generators.empty()) {
      throw DataError("missing cell " + to_string(cell) + " has no candidates and no generators are enabled");
    }
    data.set_candidates(cell, generate_candidates(data, cell, generators));
  }
  data.validate();
  return data;
}

}  // namespace dqops
