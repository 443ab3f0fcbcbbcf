#include "dqops/ci.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "dqops/rng.hpp"
#include "json.hpp"

namespace dqops {

std::string to_string(ReuseMode m) { return m == ReuseMode::non_adaptive ? "non_adaptive" : "adaptive_binary"; }

std::string to_string(IllDefinedPolicy p) {
  return p == IllDefinedPolicy::force_accept ? "force_accept" : "force_reject";
}

ReuseMode reuse_mode_from_string(std::string_view text) {
  if (text == "non_adaptive" || text == "non-adaptive") return ReuseMode::non_adaptive;
  if (text == "adaptive_binary" || text == "adaptive-binary" || text == "adaptive") return ReuseMode::adaptive_binary;
  throw ConfigError("unknown reuse mode '" + std::string(text) + "'");
}

IllDefinedPolicy ill_defined_from_string(std::string_view text) {
  if (text == "force_accept" || text == "force-accept" || text == "fp") return IllDefinedPolicy::force_accept;
  if (text == "force_reject" || text == "force-reject" || text == "fn") return IllDefinedPolicy::force_reject;
  throw ConfigError("unknown ill-defined policy '" + std::string(text) + "'");
}

void ReusePolicy::validate() const {
  if (reuses < 1) throw ConfigError("reuse budget H must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

std::uint64_t required_sample_size_log(const TestCondition& cond, double log_delta_single) {
  if (!(cond.epsilon > 0.0)) throw ConfigError("epsilon must be positive for a finite sample size");
  if (!(log_delta_single < 0.0)) throw ConfigError("per-test delta must lie in (0, 1)");
  const double range = cond.range();
  if (!(range > 0.0)) throw ConfigError("condition expression has zero range");
  const double scale = 2.0 * cond.epsilon * cond.epsilon / (range * range);
  const double log2 = std::numbers::ln2;
  auto satisfies = [&](std::uint64_t n) { return log2 - static_cast<double>(n) * scale <= log_delta_single; };

  const double estimate = (log2 - log_delta_single) / scale;
  if (!(estimate < 0x1.0p62)) throw ConfigError("required sample size exceeds 2^62");
  auto n = static_cast<std::uint64_t>(std::max(1.0, std::ceil(estimate)));
  while (!satisfies(n)) ++n;
  while (n > 1 && satisfies(n - 1)) --n;
  return n;
}

std::uint64_t required_sample_size(const TestCondition& cond, double delta_single) {
  if (!(delta_single > 0.0 && delta_single < 1.0)) throw ConfigError("per-test delta must lie in (0, 1)");
  return required_sample_size_log(cond, std::log(delta_single));
}

double per_test_delta(const ReusePolicy& policy) {
  policy.validate();
  if (policy.mode == ReuseMode::non_adaptive) return policy.delta / static_cast<double>(policy.reuses);
  if (policy.reuses > 4096) return std::exp(per_test_log_delta(policy));
  return std::ldexp(policy.delta, -static_cast<int>(policy.reuses));
}

double per_test_log_delta(const ReusePolicy& policy) {
  policy.validate();
  const double h = static_cast<double>(policy.reuses);
  if (policy.mode == ReuseMode::non_adaptive) return std::log(policy.delta) - std::log(h);
  return std::log(policy.delta) - h * std::numbers::ln2;
}

std::uint64_t max_reuses(std::uint64_t test_size, const TestCondition& cond, double delta, ReuseMode mode) {
  constexpr std::uint64_t cap = std::uint64_t{1} << 62;
  auto fits = [&](std::uint64_t h) {
    const ReusePolicy policy{h, delta, mode, IllDefinedPolicy::force_reject};
    const double log_delta = per_test_log_delta(policy);
    const double range = cond.range();
    const double scale = 2.0 * cond.epsilon * cond.epsilon / (range * range);
    // Skip the exact search when the estimate alone is far out of reach.
    if ((std::numbers::ln2 - log_delta) / scale > 2.0 * static_cast<double>(test_size) + 2.0) return false;
    return required_sample_size_log(cond, log_delta) <= test_size;
  };
  if (!fits(1)) return 0;
  std::uint64_t lo = 1;  // fits
  std::uint64_t hi = 2;
  while (hi < cap && fits(hi)) {
    lo = hi;
    hi *= 2;
  }
  if (hi >= cap && fits(cap)) return cap;
  while (hi - lo > 1) {  // fits(lo) && !fits(hi)
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string test_set_fingerprint(const LabeledDataset& test_set) { return sha256_hex(to_json_text(test_set)); }

CiLedger make_ledger(const ReusePolicy& policy, const LabeledDataset& test_set) {
  policy.validate();
  return CiLedger{policy, 0, {}, test_set_fingerprint(test_set)};
}

std::string ledger_to_json(const CiLedger& ledger) {
  nlohmann::json doc;
  doc["policy"] = {{"reuses", ledger.policy.reuses},
                   {"delta", ledger.policy.delta},
                   {"mode", to_string(ledger.policy.mode)},
                   {"ill_defined", to_string(ledger.policy.ill_defined)}};
  doc["used"] = ledger.used;
  doc["history"] = ledger.history;
  doc["fingerprint"] = ledger.fingerprint;
  return doc.dump();
}

CiLedger ledger_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    CiLedger ledger;
    const auto& p = doc.at("policy");
    ledger.policy.reuses = p.at("reuses").get<std::uint64_t>();
    ledger.policy.delta = p.at("delta").get<double>();
    ledger.policy.mode = reuse_mode_from_string(p.at("mode").get<std::string>());
    ledger.policy.ill_defined = ill_defined_from_string(p.at("ill_defined").get<std::string>());
    ledger.policy.validate();
    ledger.used = doc.at("used").get<std::uint64_t>();
    ledger.history = doc.at("history").get<std::vector<bool>>();
    ledger.fingerprint = doc.at("fingerprint").get<std::string>();
    if (ledger.history.size() != ledger.used) throw DataError("ledger history length differs from used count");
    if (ledger.used > ledger.policy.reuses) throw DataError("ledger used count exceeds its budget");
    return ledger;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ledger: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed ledger: ") + e.what());
  }
}

Scores compute_scores(std::span<const Label> old_preds, std::span<const Label> new_preds,
                      std::span<const Label> truths) {
  if (old_preds.size() != truths.size() || new_preds.size() != truths.size()) {
    throw DimensionError("prediction columns and truths differ in length");
  }
  if (truths.empty()) throw DataError("empty test set");
  std::size_t new_correct = 0;
  std::size_t old_correct = 0;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    new_correct += new_preds[i] == truths[i];
    old_correct += old_preds[i] == truths[i];
    differ += new_preds[i] != old_preds[i];
  }
  const double n = static_cast<double>(truths.size());
  return {static_cast<double>(new_correct) / n, static_cast<double>(old_correct) / n,
          static_cast<double>(differ) / n};
}

Verdict decide(const TestCondition& cond, double score, IllDefinedPolicy policy) {
  const double t = cond.threshold;
  const double eps = cond.epsilon;
  const bool upper = cond.comparison == Comparison::greater || cond.comparison == Comparison::greater_equal;
  if (eps == 0.0) {
    bool pass = false;
    switch (cond.comparison) {
      case Comparison::greater: pass = score > t; break;
      case Comparison::greater_equal: pass = score >= t; break;
      case Comparison::less: pass = score < t; break;
      case Comparison::less_equal: pass = score <= t; break;
    }
    return {pass ? Decision::pass : Decision::fail, false};
  }
  const double hi = t + eps;
  const double lo = t - eps;
  if (upper) {
    if (score >= hi) return {Decision::pass, false};
    if (score <= lo) return {Decision::fail, false};
  } else {
    if (score <= lo) return {Decision::pass, false};
    if (score >= hi) return {Decision::fail, false};
  }
  return {policy == IllDefinedPolicy::force_accept ? Decision::pass : Decision::fail, true};
}

CommitResult evaluate_commit(const CiLedger& ledger, const std::string& fingerprint,
                             std::span<const Label> old_preds, std::span<const Label> new_preds,
                             std::span<const Label> truths, const TestCondition& cond) {
  if (fingerprint != ledger.fingerprint) throw StaleLedger();
  if (ledger.used >= ledger.policy.reuses) throw RefreshRequired();
  CommitResult result;
  result.scores = compute_scores(old_preds, new_preds, truths);
  result.score = cond.evaluate(result.scores);
  const auto verdict = decide(cond, result.score, ledger.policy.ill_defined);
  result.decision = verdict.decision;
  result.ill_defined = verdict.ill_defined;
  result.ledger = ledger;
  result.ledger.used += 1;
  result.ledger.history.push_back(verdict.decision == Decision::pass);
  return result;
}

CommitResult evaluate_commit(const CiLedger& ledger, const LabeledDataset& test_set,
                             std::span<const Label> old_preds, std::span<const Label> new_preds,
                             const TestCondition& cond) {
  return evaluate_commit(ledger, test_set_fingerprint(test_set), old_preds, new_preds, test_set.labels, cond);
}

namespace {

// Per-sample (n, o, d) outcomes that some prediction triple can produce with a
// truth of 0 and three classes, with the (new, old) predictions realizing them.
struct Outcome {
  Scores indicator;
  Label new_pred;
  Label old_pred;
};

constexpr std::array<Outcome, 5> kOutcomes{{
    {{1, 1, 0}, 0, 0},
    {{1, 0, 1}, 0, 1},
    {{0, 1, 1}, 1, 0},
    {{0, 0, 0}, 1, 1},
    {{0, 0, 1}, 1, 2},
}};

}  // namespace

Type1Report simulate_type1(const TestCondition& cond, const ReusePolicy& policy, double true_score,
                           std::uint64_t trials, Seed seed) {
  if (trials < 1) throw ConfigError("at least one trial is required");
  policy.validate();

  std::size_t hi = 0;
  std::size_t lo = 0;
  for (std::size_t i = 1; i < kOutcomes.size(); ++i) {
    if (cond.evaluate(kOutcomes[i].indicator) > cond.evaluate(kOutcomes[hi].indicator)) hi = i;
    if (cond.evaluate(kOutcomes[i].indicator) < cond.evaluate(kOutcomes[lo].indicator)) lo = i;
  }
  const double v_hi = cond.evaluate(kOutcomes[hi].indicator);
  const double v_lo = cond.evaluate(kOutcomes[lo].indicator);
  if (!(v_hi > v_lo)) throw ConfigError("condition is constant over all per-sample outcomes");
  if (true_score < v_lo || true_score > v_hi) {
    throw ConfigError("true score " + format_double(true_score) + " is not achievable by the expression");
  }
  const double p_hi = (true_score - v_lo) / (v_hi - v_lo);

  Type1Report report;
  report.trials = trials;
  report.sample_size = required_sample_size_log(cond, per_test_log_delta(policy));

  const bool upper = cond.comparison == Comparison::greater || cond.comparison == Comparison::greater_equal;
  std::optional<Decision> expected;
  if (true_score >= cond.threshold + 2.0 * cond.epsilon) expected = upper ? Decision::pass : Decision::fail;
  if (true_score <= cond.threshold - 2.0 * cond.epsilon) expected = upper ? Decision::fail : Decision::pass;
  report.has_true_side = expected.has_value();

  const std::string fingerprint = "synthetic";
  const CiLedger fresh{ReusePolicy{1, policy.delta, policy.mode, policy.ill_defined}, 0, {}, fingerprint};
  const auto n = static_cast<std::size_t>(report.sample_size);
  const std::vector<Label> truths(n, 0);
  std::vector<Label> old_preds(n);
  std::vector<Label> new_preds(n);
  Rng rng(seed);
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = kOutcomes[rng.uniform() < p_hi ? hi : lo];
      new_preds[i] = o.new_pred;
      old_preds[i] = o.old_pred;
    }
    const auto result = evaluate_commit(fresh, fingerprint, old_preds, new_preds, truths, cond);
    report.passes += result.decision == Decision::pass;
    report.ill_defined += result.ill_defined;
    if (expected && result.decision != *expected) ++report.wrong;
  }
  return report;
}

}  // namespace dqops
