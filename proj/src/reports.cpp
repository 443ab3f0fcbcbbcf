#include "dqops/reports.hpp"

#include <cmath>

namespace dqops {

LabeledDataset parse_dataset_auto(std::string_view text, const std::optional<LabelSpace>& classes) {
  const auto body = trim(text);
  if (!body.empty() && body.front() == '{') return parse_dataset_json(text, classes);
  return parse_dataset_csv(text, classes);
}

std::vector<Label> parse_prediction_column(std::string_view text, const LabelSpace& classes) {
  std::vector<Label> out;
  std::size_t number = 0;
  for (auto line : split(text, '\n')) {
    ++number;
    line = trim(line);
    if (line.empty()) continue;
    auto label = classes.find(line);
    if (!label) throw LabelError("line " + std::to_string(number) + ": unknown label '" + std::string(line) + "'");
    out.push_back(*label);
  }
  if (out.empty()) throw ParseError("empty prediction file", 1);
  return out;
}

std::map<CellId, double> parse_cell_truth(std::string_view text, const IncompleteDataset& data) {
  std::map<CellId, double> out;
  const auto body = trim(text);
  if (!body.empty() && body.front() == '{') {
    try {
      const auto doc = Json::parse(body);
      for (const auto& [key, value] : doc.at("values").items()) {
        if (!value.is_number()) throw DataError("truth for cell " + key + " is not a number");
        out[parse_cell_key(key)] = value.get<double>();
      }
    } catch (const Json::exception& e) {
      throw DataError(std::string("cell truth file: ") + e.what());
    }
    return out;
  }
  const auto clean = parse_dataset_csv(text, data.classes());
  if (clean.size() != data.size() || clean.dimension() != data.dimension()) {
    throw DimensionError("clean dataset shape differs from the incomplete dataset");
  }
  for (auto cell : data.missing_cells()) out[cell] = clean.features[cell.row][cell.col];
  return out;
}

Json estimate_json(const BerEstimate& e) {
  return Json{{"embedding", e.embedding},
              {"knn_error", e.knn_error},
              {"ber_lower", e.lower},
              {"ber_upper", e.upper},
              {"max_accuracy", e.max_accuracy()}};
}

Json feasibility_job(const LabeledDataset& train, const LabeledDataset& validation,
                     const std::vector<Embedding>& embeddings, const std::vector<double>& sweep, Seed seed,
                     Normalization normalization) {
  const KnnConfig cfg{1, normalization};
  const auto report = feasibility(train, validation, embeddings, cfg);
  Json doc;
  doc["estimates"] = Json::array();
  for (const auto& e : report.estimates) doc["estimates"].push_back(estimate_json(e));
  doc["overall"] = estimate_json(report.overall);
  doc["max_accuracy"] = report.overall.max_accuracy();
  doc["class_count"] = train.class_count();
  doc["train_size"] = report.train_size;
  doc["validation_size"] = report.validation_size;
  doc["method"] = "1nn-error-inversion";
  if (!sweep.empty()) {
    const auto best = std::find_if(embeddings.begin(), embeddings.end(),
                                   [&](const Embedding& e) { return e.name == report.overall.embedding; });
    const auto points = noise_sweep(train, validation, *best, sweep, cfg, seed);
    auto& rows = doc["noise_sweep"] = Json::array();
    for (const auto& p : points) {
      auto row = estimate_json(p.estimate);
      row["rho"] = p.rho;
      rows.push_back(std::move(row));
    }
    doc["noise_target"] = "train+validation";
    doc["seed"] = seed.value;
  }
  return doc;
}

Json ci_plan_job(const TestCondition& cond, double delta, ReuseMode mode, std::uint64_t test_size) {
  const ReusePolicy single{1, delta, mode, IllDefinedPolicy::force_reject};
  return Json{{"condition", cond.to_string()},
              {"delta", delta},
              {"mode", to_string(mode)},
              {"test_size", test_size},
              {"single_use_requirement", required_sample_size(cond, per_test_delta(single))},
              {"max_reuses", max_reuses(test_size, cond, delta, mode)}};
}

CiCommitOutcome ci_commit_job(const CiLedger& ledger, const LabeledDataset& test_set,
                              const std::vector<Label>& old_preds, const std::vector<Label>& new_preds,
                              const TestCondition& cond) {
  CiCommitOutcome outcome;
  try {
    const auto r = evaluate_commit(ledger, test_set, old_preds, new_preds, cond);
    outcome.result = Json{{"status", r.decision == Decision::pass ? "pass" : "fail"},
                          {"condition", cond.to_string()},
                          {"score", r.score},
                          {"scores", {{"n", r.scores.n}, {"o", r.scores.o}, {"d", r.scores.d}}},
                          {"ill_defined", r.ill_defined},
                          {"used", r.ledger.used},
                          {"reuses", r.ledger.policy.reuses}};
    outcome.ledger = r.ledger;
  } catch (const RefreshRequired& e) {
    outcome.result = Json{{"status", "refresh_required"},
                          {"message", e.what()},
                          {"used", ledger.used},
                          {"reuses", ledger.policy.reuses}};
  }
  return outcome;
}

Json cleaning_step_json(const CleaningStep& step) {
  return Json{{"step", step.step},
              {"cell", {step.cell.row, step.cell.col}},
              {"value", step.value},
              {"entropy_bits", step.entropy_bits},
              {"certain", step.certain}};
}

Json picker_trace_json(const PickerTraceRow& row) {
  return Json{{"round", row.round}, {"queried", row.queried}, {"pick", row.pick}, {"regret", row.regret}};
}

}  // namespace dqops
