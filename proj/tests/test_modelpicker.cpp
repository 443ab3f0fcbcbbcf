#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dqops/modelpicker.hpp"

using namespace dqops;

namespace {

PickerConfig config(std::size_t m, std::uint64_t budget, double eta = 1.0, std::uint64_t seed = 0, double q_min = 0.0) {
  return PickerConfig{m, budget, eta, Seed{seed}, q_min};
}

std::size_t oracle_best(const PredictionMatrix& p, const std::vector<Label>& truth) {
  std::size_t best = 0;
  std::size_t best_errors = SIZE_MAX;
  for (std::size_t i = 0; i < p.cols(); ++i) {
    std::size_t errors = 0;
    for (std::size_t t = 0; t < p.rows(); ++t) errors += p.at(t, i) != truth[t];
    if (errors < best_errors) {
      best = i;
      best_errors = errors;
    }
  }
  return best;
}

}  // namespace

TEST(Picker, StartsUniformAtIndexZero) {
  PickerState s(config(4, 10));
  EXPECT_EQ(s.current_pick(), 0u);
  for (double w : s.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_THROW(PickerState(config(1, 1)), ConfigError);
  EXPECT_THROW(PickerState(config(2, 1, 0.0)), ConfigError);
}

TEST(Picker, UpdateExample) {
  // Two disagreeing models under uniform weights: q = 1, so eta = ln 2 halves
  // the loser's weight.
  PickerState s(config(2, 5, std::log(2.0)));
  const StreamItem item{"x", {0, 1}};
  EXPECT_DOUBLE_EQ(s.query_probability(item), 1.0);
  ASSERT_EQ(s.observe(item), PickerDecision::query);
  s.feed_label(item, 1);
  const auto w = s.weights();
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-12);
  EXPECT_EQ(s.current_pick(), 1u);
  EXPECT_EQ(s.budget_remaining(), 4u);
}

TEST(Picker, AgreementNeverQueries) {
  PickerState s(config(3, 100));
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(s.observe({std::to_string(i), {2, 2, 2}}), PickerDecision::skip);
  }
  EXPECT_EQ(s.budget_remaining(), 100u);
  EXPECT_EQ(s.current_pick(), 0u);
}

TEST(Picker, ProtocolErrors) {
  PickerState s(config(2, 3));
  const StreamItem a{"a", {0, 1}}, b{"b", {0, 1}};
  ASSERT_EQ(s.observe(a), PickerDecision::query);
  EXPECT_THROW(s.observe(b), ProtocolError);
  EXPECT_THROW(s.feed_label(b, 0), ProtocolError);
  s.feed_label(a, 0);
  EXPECT_THROW(s.feed_label(a, 0), ProtocolError);
  EXPECT_THROW(s.observe({"c", {0, 1, 2}}), DimensionError);
}

TEST(Picker, ZeroBudgetSkipsEverything) {
  PickerState s(config(2, 0));
  EXPECT_EQ(s.observe({"a", {0, 1}}), PickerDecision::skip);
  EXPECT_EQ(s.current_pick(), 0u);
}

TEST(Picker, QueryProbabilityFloor) {
  PickerState s(config(3, 10, 1.0, 0, 0.6));
  // Weights uniform, one of three models dissents: s = 1/3, s_max = 2/3.
  EXPECT_DOUBLE_EQ(s.query_probability({"a", {0, 0, 1}}), 0.6);
  EXPECT_DOUBLE_EQ(s.query_probability({"a", {0, 1, 2}}), 1.0);
  EXPECT_DOUBLE_EQ(s.query_probability({"a", {1, 1, 1}}), 0.0);
}

TEST(Picker, RestoreContinuesIdentically) {
  std::mt19937_64 gen(1);
  std::vector<StreamItem> items;
  for (int i = 0; i < 60; ++i) items.push_back({std::to_string(i), {Label(gen() % 2), Label(gen() % 2), Label(gen() % 2)}});
  const auto cfg = config(3, 20, 0.5, 9);
  PickerState a(cfg);
  std::optional<PickerState> b;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i == 30) {
      b = PickerState::restore(cfg, a.log_weights(), a.budget_remaining(), a.query_log(), a.pending_item());
    }
    auto step = [&](PickerState& s) {
      if (s.observe(items[i]) == PickerDecision::query) s.feed_label(items[i], Label(i % 2));
    };
    step(a);
    if (b) step(*b);
  }
  EXPECT_EQ(a.log_weights(), b->log_weights());
  EXPECT_EQ(a.query_log(), b->query_log());
}

TEST(Simulate, FullBudgetForcedQueriesFindArgmax) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + gen() % 4, n = 50 + gen() % 100;
    std::vector<double> acc(m);
    for (auto& a : acc) a = 0.4 + 0.5 * static_cast<double>(gen() % 1000) / 1000.0;
    PredictionMatrix p(n, m);
    std::vector<Label> truth(n);
    for (std::size_t t = 0; t < n; ++t) {
      truth[t] = static_cast<Label>(gen() % 3);
      for (std::size_t i = 0; i < m; ++i) {
        const bool right = static_cast<double>(gen() % 1000) / 1000.0 < acc[i];
        p.at(t, i) = right ? truth[t] : static_cast<Label>((truth[t] + 1 + gen() % 2) % 3);
      }
    }
    const auto sim = simulate_picker(p, truth, config(m, n, 0.1, trial, 1.0));
    EXPECT_EQ(sim.final_pick, oracle_best(p, truth)) << trial;
  }
}

TEST(Simulate, TraceShapeAndDeterminism) {
  PredictionMatrix p(4, 2, {0, 1, 1, 1, 0, 0, 1, 0});
  const std::vector<Label> truth{0, 1, 0, 0};
  const auto cfg = config(2, 4, 0.7, 3);
  const auto a = simulate_picker(p, truth, cfg);
  const auto b = simulate_picker(p, truth, cfg);
  ASSERT_EQ(a.trace.size(), 4u);
  EXPECT_EQ(a.trace[0].round, 1u);
  EXPECT_EQ(a.trace[0].pick, 0u);
  EXPECT_LE(a.queries, 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.trace[i].pick, b.trace[i].pick);
    EXPECT_EQ(a.trace[i].queried, b.trace[i].queried);
    EXPECT_EQ(a.trace[i].regret, b.trace[i].regret);
  }
  EXPECT_THROW(simulate_picker(p, {0}, cfg), DimensionError);
}

TEST(Streams, ParseAndAlign) {
  const auto items = parse_stream_csv("item_id,m0,m1\na,0,1\nb,2,2\n");
  ASSERT_EQ(items.size(), 2u);
  EXPECT_EQ(items[1].predictions, (std::vector<Label>{2, 2}));
  EXPECT_EQ(parse_truth_csv("item_id,label\na,1\nb,0\n", items), (std::vector<Label>{1, 0}));
  EXPECT_THROW(parse_truth_csv("item_id,label\nb,1\na,0\n", items), ParseError);
  EXPECT_THROW(parse_stream_csv("item_id,m0,m1\na,0,x\n"), ParseError);
  EXPECT_THROW(parse_stream_csv("item_id,m0\na,0\n"), ParseError);
}

TEST(Eta, DefaultTuning) {
  EXPECT_DOUBLE_EQ(default_eta(5, 300), std::sqrt(8 * std::log(5.0) / 300));
}
