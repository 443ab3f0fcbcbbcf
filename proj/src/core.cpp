#include "dqops/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dqops {

ParseError::ParseError(const std::string& what, std::size_t line)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw LabelError("a label space needs at least 2 classes, got " +
                     std::to_string(names_.size()));
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<Label>(i)).second) {
      throw LabelError("duplicate class name '" + names_[i] + "'");
    }
  }
}

const std::string& LabelSpace::name(Label label) const {
  if (label >= names_.size()) {
    throw LabelError("label index " + std::to_string(label) + " out of range");
  }
  return names_[label];
}

std::optional<Label> LabelSpace::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Label LabelSpace::index_of(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw LabelError("unknown label '" + std::string(name) + "'");
}

void LabeledDataset::validate() const {
  if (features.size() != labels.size()) {
    throw DimensionError("dataset has " + std::to_string(features.size()) +
                         " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t d = dimension();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) {
      throw DimensionError("row " + std::to_string(i) + " has dimension " +
                           std::to_string(features[i].size()) + ", expected " +
                           std::to_string(d));
    }
    for (double v : features[i]) {
      if (!std::isfinite(v)) {
        throw DataError("row " + std::to_string(i) + " has a non-finite feature");
      }
    }
    if (labels[i] >= classes.size()) {
      throw LabelError("row " + std::to_string(i) + " label index out of range");
    }
  }
}

PredictionMatrix::PredictionMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

PredictionMatrix::PredictionMatrix(std::size_t rows, std::size_t cols, std::vector<Label> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("prediction matrix is not rectangular");
  }
}

std::vector<Label> PredictionMatrix::column(std::size_t col) const {
  std::vector<Label> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, col);
  return out;
}

void PredictionMatrix::validate(std::size_t class_count) const {
  for (Label v : data_) {
    if (v >= class_count) throw LabelError("prediction label index out of range");
  }
}

DataFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DataFormat::csv;
  if (ext == ".json") return DataFormat::json;
  throw ConfigError("cannot infer data format from '" + path.string() + "'");
}

std::string_view trim(std::string_view text) noexcept {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<double> parse_double(std::string_view token) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

namespace {

struct CsvLine {
  std::size_t number;
  std::vector<std::string_view> cells;
};

std::vector<CsvLine> csv_lines(std::string_view text) {
  std::vector<CsvLine> lines;
  std::size_t number = 0;
  for (auto raw : split(text, '\n')) {
    ++number;
    raw = trim(raw);
    if (raw.empty()) continue;
    auto cells = split(raw, ',');
    for (auto& c : cells) c = trim(c);
    lines.push_back({number, std::move(cells)});
  }
  return lines;
}

}  // namespace

LabeledDataset parse_dataset_csv(std::string_view text, const std::optional<LabelSpace>& classes) {
  const auto lines = csv_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1);
  const auto& header = lines.front();
  if (header.cells.size() < 2 || header.cells.back() != "label") {
    throw ParseError("header must list feature columns followed by 'label'", header.number);
  }
  const std::size_t d = header.cells.size() - 1;
  if (lines.size() == 1) throw ParseError("no data rows", header.number);

  LabeledDataset out;
  std::vector<std::string> raw_labels;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.cells.size() != d + 1) {
      throw ParseError("expected " + std::to_string(d + 1) + " columns, got " +
                           std::to_string(line.cells.size()),
                       line.number);
    }
    FeatureVector row(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto value = parse_double(line.cells[j]);
      if (!value) {
        throw ParseError("feature " + std::to_string(j) + " is not a finite number: '" +
                             std::string(line.cells[j]) + "'",
                         line.number);
      }
      row[j] = *value;
    }
    if (line.cells[d].empty()) throw ParseError("empty label", line.number);
    out.features.push_back(std::move(row));
    raw_labels.emplace_back(line.cells[d]);
  }

  if (classes) {
    out.classes = *classes;
  } else {
    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    out.classes = LabelSpace(std::vector<std::string>(distinct.begin(), distinct.end()));
  }
  out.labels.reserve(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    auto label = out.classes.find(raw_labels[i]);
    if (!label) {
      throw LabelError("line " + std::to_string(lines[i + 1].number) + ": unknown label '" +
                       raw_labels[i] + "'");
    }
    out.labels.push_back(*label);
  }
  out.validate();
  return out;
}

LabeledDataset parse_dataset_json(std::string_view text, const std::optional<LabelSpace>& classes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ParseError(e.what(), static_cast<std::size_t>(line));
  }
  try {
    if (!doc.is_object()) throw ParseError("expected a JSON object", 1);
    LabeledDataset out;
    out.classes = LabelSpace(doc.at("classes").get<std::vector<std::string>>());
    if (classes && !(*classes == out.classes)) {
      throw LabelError("dataset classes differ from the expected label space");
    }
    for (const auto& row : doc.at("features")) {
      FeatureVector v;
      for (const auto& x : row) {
        if (!x.is_number()) throw ParseError("non-numeric feature", 1);
        v.push_back(x.get<double>());
      }
      out.features.push_back(std::move(v));
    }
    for (const auto& name : doc.at("labels")) {
      out.labels.push_back(out.classes.index_of(name.get<std::string>()));
    }
    if (out.features.empty()) throw ParseError("no data rows", 1);
    out.validate();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 1);
  }
}

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const std::optional<LabelSpace>& classes) {
  const auto text = read_file(path);
  return format == DataFormat::csv ? parse_dataset_csv(text, classes)
                                   : parse_dataset_json(text, classes);
}

std::string to_csv(const LabeledDataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.dimension(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features[i]) out += format_double(v) + ",";
    out += data.classes.name(data.labels[i]) + "\n";
  }
  return out;
}

std::string to_json_text(const LabeledDataset& data) {
  nlohmann::json doc;
  doc["classes"] = data.classes.names();
  doc["features"] = data.features;
  auto& labels = doc["labels"] = nlohmann::json::array();
  for (Label y : data.labels) labels.push_back(data.classes.name(y));
  return doc.dump();
}

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path,
                  DataFormat format) {
  write_file(path, format == DataFormat::csv ? to_csv(data) : to_json_text(data));
}

std::vector<FeatureVector> parse_feature_table(std::string_view text) {
  const auto lines = csv_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1);
  std::size_t d = lines.front().cells.size();
  if (lines.front().cells.back() == "label") --d;
  if (d == 0) throw ParseError("header declares no feature columns", lines.front().number);
  if (lines.size() == 1) throw ParseError("no data rows", lines.front().number);
  std::vector<FeatureVector> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.cells.size() != lines.front().cells.size()) {
      throw ParseError("column count differs from header", line.number);
    }
    FeatureVector row(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto value = parse_double(line.cells[j]);
      if (!value) throw ParseError("feature " + std::to_string(j) + " is not a finite number", line.number);
      row[j] = *value;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<FeatureVector> load_feature_table(const std::filesystem::path& path) {
  return parse_feature_table(read_file(path));
}

int zero_one_loss(Label predicted, Label truth) noexcept { return predicted == truth ? 0 : 1; }

double accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("prediction and truth lengths differ");
  }
  if (truth.empty()) throw DataError("accuracy of an empty prediction column");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) errors += zero_one_loss(predicted[i], truth[i]);
  return 1.0 - static_cast<double>(errors) / static_cast<double>(truth.size());
}

}  // namespace dqops
