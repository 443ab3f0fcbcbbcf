#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dqops/condition.hpp"
#include "dqops/core.hpp"

namespace dqops {

enum class ReuseMode { non_adaptive, adaptive_binary };
/// Resolution of estimates inside the +/- epsilon band: force_accept allows
/// false positives, force_reject allows false negatives.
enum class IllDefinedPolicy { force_accept, force_reject };

std::string to_string(ReuseMode m);
std::string to_string(IllDefinedPolicy p);
ReuseMode reuse_mode_from_string(std::string_view text);
IllDefinedPolicy ill_defined_from_string(std::string_view text);

struct ReusePolicy {
  std::uint64_t reuses = 1;  // H
  double delta = 0.05;
  ReuseMode mode = ReuseMode::adaptive_binary;
  IllDefinedPolicy ill_defined = IllDefinedPolicy::force_reject;

  void validate() const;
  friend bool operator==(const ReusePolicy&, const ReusePolicy&) = default;
};

/// Smallest N with 2 exp(-2 N eps^2 / range^2) <= delta_single.
std::uint64_t required_sample_size(const TestCondition& cond, double delta_single);
/// Same, with the error probability given as ln(delta_single).
std::uint64_t required_sample_size_log(const TestCondition& cond, double log_delta_single);

/// delta/H (non_adaptive) or delta/2^H (adaptive_binary).
double per_test_delta(const ReusePolicy& policy);
/// ln of per_test_delta, finite for any H.
double per_test_log_delta(const ReusePolicy& policy);

/// Largest H whose per-test requirement fits in `test_size` samples; 0 when
/// even one use does not fit. Saturates at 2^62 in the non-adaptive regime.
std::uint64_t max_reuses(std::uint64_t test_size, const TestCondition& cond, double delta, ReuseMode mode);

std::string sha256_hex(std::string_view bytes);
/// SHA-256 (hex) of a canonical serialization of features and labels.
std::string test_set_fingerprint(const LabeledDataset& test_set);

struct CiLedger {
  ReusePolicy policy;
  std::uint64_t used = 0;
  std::vector<bool> history;
  std::string fingerprint;

  friend bool operator==(const CiLedger&, const CiLedger&) = default;
};

CiLedger make_ledger(const ReusePolicy& policy, const LabeledDataset& test_set);
std::string ledger_to_json(const CiLedger& ledger);
CiLedger ledger_from_json(std::string_view text);

class RefreshRequired : public Error {
 public:
  RefreshRequired() : Error("test set refresh required") {}
};

class StaleLedger : public Error {
 public:
  StaleLedger() : Error("ledger fingerprint does not match the supplied test set") {}
};

enum class Decision { fail, pass };

Scores compute_scores(std::span<const Label> old_preds, std::span<const Label> new_preds,
                      std::span<const Label> truths);

struct Verdict {
  Decision decision = Decision::fail;
  bool ill_defined = false;  // resolved by the ledger policy
};

/// pass when the score clears threshold+epsilon on the condition's side, fail
/// when it is at least epsilon on the other side, policy otherwise.
Verdict decide(const TestCondition& cond, double score, IllDefinedPolicy policy);

struct CommitResult {
  Decision decision = Decision::fail;
  bool ill_defined = false;
  Scores scores;
  double score = 0.0;
  CiLedger ledger;  // after the commit
};

CommitResult evaluate_commit(const CiLedger& ledger, const std::string& fingerprint,
                             std::span<const Label> old_preds, std::span<const Label> new_preds,
                             std::span<const Label> truths, const TestCondition& cond);
CommitResult evaluate_commit(const CiLedger& ledger, const LabeledDataset& test_set,
                             std::span<const Label> old_preds, std::span<const Label> new_preds,
                             const TestCondition& cond);

struct Type1Report {
  std::uint64_t trials = 0;
  std::uint64_t sample_size = 0;
  std::uint64_t passes = 0;
  std::uint64_t ill_defined = 0;
  /// Decisions against the true side; only meaningful when `has_true_side`.
  std::uint64_t wrong = 0;
  bool has_true_side = false;

  double error_rate() const noexcept { return trials ? double(wrong) / double(trials) : 0.0; }
  double pass_rate() const noexcept { return trials ? double(passes) / double(trials) : 0.0; }
  double ill_defined_rate() const noexcept { return trials ? double(ill_defined) / double(trials) : 0.0; }
};

/// Monte-Carlo check of the (eps, delta) guarantee: each trial draws
/// N = required_sample_size(cond, per_test_delta(policy)) synthetic samples
/// whose expected expression value is `true_score`, then runs one commit on a
/// fresh single-use ledger. The true side exists when |true_score - threshold|
/// >= 2 eps.
Type1Report simulate_type1(const TestCondition& cond, const ReusePolicy& policy, double true_score,
                           std::uint64_t trials, Seed seed);

}  // namespace dqops
