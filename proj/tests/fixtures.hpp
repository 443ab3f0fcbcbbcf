#pragma once

// On-disk fixtures for the CLI and service tests.

#include <sstream>

#include "dqops/cli.hpp"
#include "dqops/reports.hpp"
#include "test_util.hpp"

namespace testutil {

inline std::string incomplete_csv(const IncompleteDataset& d) {
  std::string out;
  for (std::size_t j = 0; j < d.dimension(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.rows()[i]) out += (std::isnan(v) ? std::string("?") : format_double(v)) + ",";
    out += d.classes().name(d.labels()[i]) + "\n";
  }
  return out;
}

inline std::string feature_csv(const std::vector<FeatureVector>& rows) {
  std::string out;
  for (std::size_t j = 0; j < rows.front().size(); ++j) out += (j ? ",e" : "e") + std::to_string(j);
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out += (j ? "," : "") + format_double(r[j]);
    out += "\n";
  }
  return out;
}

inline std::string truth_json(const std::map<CellId, double>& truth) {
  Json doc;
  for (const auto& [cell, v] : truth) doc["values"][to_string(cell)] = v;
  return doc.dump();
}

inline std::string label_lines(const std::vector<Label>& labels, const LabelSpace& space) {
  std::string out;
  for (auto y : labels) out += space.name(y) + "\n";
  return out;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

inline CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Test set of 200 samples plus old/new prediction files whose n - o is
/// gained/200.
struct CiFiles {
  std::string truth, old_preds, new_preds;
};

inline CiFiles ci_texts(int gained) {
  LabeledDataset ts{LabelSpace({"a", "b", "c"}), {}, {}};
  for (std::size_t i = 0; i < 200; ++i) {
    ts.features.push_back({static_cast<double>(i)});
    ts.labels.push_back(static_cast<Label>(i % 3));
  }
  auto old_p = ts.labels, new_p = ts.labels;
  for (std::size_t i = 0; i < 20; ++i) old_p[i] = (ts.labels[i] + 1) % 3;
  for (std::size_t i = 0; i + static_cast<std::size_t>(gained) < 20; ++i) new_p[i] = old_p[i];
  return {to_csv(ts), label_lines(old_p, ts.classes), label_lines(new_p, ts.classes)};
}

/// Stream where model 2 is right 85% of the time and the rest 70%, with four
/// classes.
inline std::pair<std::string, std::string> picker_stream(std::size_t n, std::uint64_t seed, std::size_t m = 5,
                                                         std::size_t best = 2) {
  Rng rng(Seed{seed});
  std::string stream = "item_id";
  for (std::size_t i = 0; i < m; ++i) stream += ",m" + std::to_string(i);
  stream += "\n";
  std::string truth = "item_id,label\n";
  for (std::size_t t = 0; t < n; ++t) {
    const auto y = static_cast<Label>(rng.below(4));
    stream += "x" + std::to_string(t);
    for (std::size_t i = 0; i < m; ++i) {
      const double acc = i == best ? 0.85 : 0.70;
      const auto p = rng.uniform() < acc ? y : static_cast<Label>((y + 1 + rng.below(3)) % 4);
      stream += "," + std::to_string(p);
    }
    stream += "\n";
    truth += "x" + std::to_string(t) + "," + std::to_string(y) + "\n";
  }
  return {stream, truth};
}

}  // namespace testutil
