#include <gtest/gtest.h>

#include <random>

#include "dqops/cpclean.hpp"
#include "test_util.hpp"

using namespace dqops;

namespace {

IncompleteDataset tiny() {
  // x: record 0 at 0 (a), record 1 at ? in {1, 3} (b), record 2 at 2 (a).
  const double nan = std::nan("");
  return IncompleteDataset(LabelSpace({"a", "b"}), {{0.0}, {nan}, {2.0}}, {0, 1, 0}, {{{1, 0}, {1.0, 3.0}}});
}

}  // namespace

TEST(Incomplete, ParsesMissingCellsAndSidecar) {
  const auto data = load_incomplete("x,y,label\n1,?,a\n?,2,b\n3,4,a\n", R"({"candidates":{"0,1":[2,4]}})",
                                    std::vector<RepairGenerator>{RepairGenerator::mean});
  EXPECT_EQ(data.missing_cells(), (std::vector<CellId>{{0, 1}, {1, 0}}));
  EXPECT_EQ(data.candidates({0, 1}), (std::vector<double>{2, 4}));
  EXPECT_EQ(data.candidates({1, 0}), (std::vector<double>{2}));  // mean of 1 and 3
  EXPECT_EQ(data.world_count(), 2u);
}

TEST(Incomplete, UncoveredCellWithoutGeneratorsIsAnError) {
  EXPECT_THROW(load_incomplete("x,label\n?,a\n1,b\n", "", {}), DataError);
  EXPECT_THROW(load_incomplete("x,label\n1,a\n1,b\n", R"({"candidates":{"0,0":[2]}})", {}), DataError);
  EXPECT_THROW(parse_candidates_json(R"({"candidates":{"0;0":[2]}})"), DataError);
  EXPECT_THROW(parse_candidates_json(R"({"candidates":{"0,0":[]}})"), DataError);
}

TEST(Incomplete, Generators) {
  const auto base = parse_incomplete_csv("x,label\n1,a\n2,a\n2,b\n9,b\n?,a\n");
  IncompleteDataset data(base.classes(), base.rows(), base.labels(), {});
  const CellId cell{4, 0};
  auto gen = [&](RepairGenerator g) { return generate_candidates(data, cell, std::vector<RepairGenerator>{g}); };
  EXPECT_EQ(gen(RepairGenerator::mean), std::vector<double>{3.5});
  EXPECT_EQ(gen(RepairGenerator::median), std::vector<double>{2.0});
  EXPECT_EQ(gen(RepairGenerator::class_mean), std::vector<double>{1.5});
  EXPECT_EQ(gen(RepairGenerator::observed_top_k), (std::vector<double>{2.0, 1.0}));
  const std::vector<RepairGenerator> all{RepairGenerator::mean, RepairGenerator::median, RepairGenerator::class_mean,
                                         RepairGenerator::observed_top_k};
  EXPECT_EQ(generate_candidates(data, cell, all), (std::vector<double>{3.5, 2.0, 1.5, 1.0}));
}

TEST(Incomplete, CandidateJsonRoundTrip) {
  const auto data = tiny();
  EXPECT_EQ(parse_candidates_json(candidates_to_json(data.candidates())), data.candidates());
  EXPECT_EQ(to_string(parse_cell_key("12,3")), "12,3");
}

TEST(Counting, TinyInstanceByHand) {
  const CleaningConfig cfg{{1, Normalization::none}};
  // Query 1.4: record 1 at 1 is nearest (b); at 3, record 0 or 2 wins (a).
  const auto t = counting_query(tiny(), {1.4}, cfg);
  EXPECT_EQ(t.world_total, 2u);
  EXPECT_EQ(t.counts, (std::vector<std::uint64_t>{1, 1}));
  EXPECT_DOUBLE_EQ(t.entropy_bits(), 1.0);
  EXPECT_FALSE(checking_query(tiny(), {1.4}, cfg));
  EXPECT_EQ(checking_query(tiny(), {-5.0}, cfg), Label{0});
}

TEST(Counting, MatchesEnumerationOracle) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 120; ++trial) {
    const auto inst = testutil::random_instance(gen);
    for (auto norm : {Normalization::none, Normalization::minmax}) {
      for (auto method : {CountingMethod::enumerate, CountingMethod::sort_count}) {
        const CleaningConfig cfg{{inst.k, norm}, 1'000'000, method};
        for (const auto& q : inst.validation) {
          const auto tally = counting_query(inst.data, q, cfg);
          ASSERT_EQ(tally.counts, testutil::oracle_tally(inst.data, q, inst.k, norm == Normalization::minmax))
              << "trial " << trial;
          const auto scaler = norm == Normalization::minmax ? fit_world_scaler(inst.data) : MinMaxScaler{};
          ASSERT_EQ(counting_query_reference(inst.data, q, cfg, scaler), tally);
        }
      }
    }
  }
}

TEST(Counting, WorldCapAndOverflow) {
  const CleaningConfig capped{{1, Normalization::none}, 1};
  EXPECT_THROW(counting_query(tiny(), {0.0}, capped), WorldCapExceeded);
  const CleaningConfig fast{{1, Normalization::none}, 1, CountingMethod::sort_count};
  EXPECT_EQ(counting_query(tiny(), {0.0}, fast).world_total, 2u);
  try {
    CleaningSession s(tiny(), {{0.0}}, capped);
    FAIL();
  } catch (const WorldCapExceeded& e) {
    EXPECT_EQ(e.cap(), 1u);
    EXPECT_EQ(e.worlds(), 2u);
  }
}

TEST(Counting, SortCountHandlesManyWorlds) {
  // 40 dirty cells with 3 candidates: 3^40 worlds, far past enumeration.
  std::vector<FeatureVector> rows;
  std::vector<Label> labels;
  IncompleteDataset::CandidateMap cands;
  for (std::size_t i = 0; i < 40; ++i) {
    rows.push_back({std::nan("")});
    labels.push_back(static_cast<Label>(i % 2));
    cands[{i, 0}] = {0.0, 1.0, 2.0};
  }
  IncompleteDataset data(LabelSpace({"a", "b"}), rows, labels, cands);
  const CleaningConfig cfg{{3, Normalization::none}, 1000, CountingMethod::sort_count};
  const auto t = counting_query(data, {0.0}, cfg);
  std::uint64_t sum = 0;
  for (auto c : t.counts) sum += c;
  EXPECT_EQ(sum, t.world_total);
}

TEST(Session, DecisiveCellFirstAndConditioning) {
  auto f = testutil::decisive_fixture();
  const CleaningSession s(f.data, f.validation, {});
  EXPECT_EQ(s.world_count(), 1024u);
  EXPECT_NEAR(s.prediction_entropy(), 1.0, 1e-12);
  EXPECT_EQ(s.suggest_next(), (CellId{0, 1}));
  EXPECT_NEAR(s.conditional_entropy({0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(s.conditional_entropy({5, 1}), 1.0, 1e-12);
  EXPECT_EQ(s.dirty_cells().size(), 10u);
  EXPECT_EQ(s.certain_count(), 0u);
}

TEST(Session, RepairFlowAndErrors) {
  auto f = testutil::decisive_fixture();
  CleaningSession s(f.data, f.validation, {});
  EXPECT_THROW(s.apply_repair({1, 1}, 0.0), DataError);  // observed cell
  s.apply_repair({0, 1}, 0.0);
  EXPECT_EQ(s.certain_count(), 1u);
  EXPECT_EQ(s.prediction_entropy(), 0.0);
  EXPECT_THROW(s.apply_repair({0, 1}, 0.0), CellNotDirty);
  EXPECT_EQ(s.entropy_trace().size(), 2u);
  EXPECT_FALSE(s.is_dirty({0, 1}));
  EXPECT_EQ(s.dirty_cells().size(), 9u);
  // A value outside the candidate set is accepted (human knows best).
  s.apply_repair({2, 1}, 7.5);
  EXPECT_EQ(s.log().back(), (RepairRecord{{2, 1}, 7.5}));
}

TEST(Session, RestoreReproducesState) {
  auto f = testutil::decisive_fixture();
  CleaningSession s(f.data, f.validation, {});
  s.apply_repair({3, 1}, 100.0);
  const auto r = CleaningSession::restore(s.data(), s.validation(), s.config(), s.scaler(), s.log(), s.entropy_trace());
  EXPECT_EQ(r.tallies(), s.tallies());
  EXPECT_EQ(r.suggest_next(), s.suggest_next());
  EXPECT_THROW(CleaningSession::restore(s.data(), s.validation(), s.config(), s.scaler(), {}, s.entropy_trace()),
               DataError);
}

TEST(Session, ScalerStaysFixedAcrossRepairs) {
  auto f = testutil::decisive_fixture();
  CleaningSession s(f.data, f.validation, {});
  const auto before = s.scaler().upper();
  s.apply_repair({0, 1}, 0.0);  // drops the candidate 50 from the data
  EXPECT_EQ(s.scaler().upper(), before);
}

TEST(Simulate, CpcleanStopsAfterOneStep) {
  auto f = testutil::decisive_fixture();
  const CleaningSession s(f.data, f.validation, {});
  const auto steps = simulate_cleaning(s, f.truth, CleaningPolicy::cpclean, Seed{1}, StopCondition::all_certain);
  ASSERT_EQ(steps.size(), 1u);
  EXPECT_EQ(steps[0].cell, (CellId{0, 1}));
  EXPECT_EQ(steps[0].certain, 1u);
  const auto all = simulate_cleaning(s, f.truth, CleaningPolicy::cpclean, Seed{1}, StopCondition::all_clean);
  EXPECT_EQ(all.size(), 10u);
}

TEST(Simulate, RandomIsSeededAndStopsWhenCertain) {
  auto f = testutil::decisive_fixture();
  const CleaningSession s(f.data, f.validation, {});
  const auto a = simulate_cleaning(s, f.truth, CleaningPolicy::random, Seed{5}, StopCondition::all_certain);
  EXPECT_EQ(a, simulate_cleaning(s, f.truth, CleaningPolicy::random, Seed{5}, StopCondition::all_certain));
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a.back().cell, (CellId{0, 1}));
  EXPECT_THROW(simulate_cleaning(s, {}, CleaningPolicy::random, Seed{5}, StopCondition::all_certain), DataError);
}

TEST(Simulate, NothingToClean) {
  IncompleteDataset clean(LabelSpace({"a", "b"}), {{0.0}, {1.0}}, {0, 1}, {});
  const CleaningSession s(clean, {{0.2}}, {});
  EXPECT_EQ(s.prediction_entropy(), 0.0);
  EXPECT_THROW(s.suggest_next(), NoDirtyCells);
  EXPECT_TRUE(simulate_cleaning(s, {}, CleaningPolicy::cpclean, Seed{}, StopCondition::all_clean).empty());
}
