#include <gtest/gtest.h>

#include <random>

#include "ade/error.hpp"
#include "ade/metrics.hpp"
#include "support/oracles.hpp"

using namespace ade;
using ade::testing::oracle_counts;

namespace {

EntitySpan ade_span(std::size_t s, std::size_t e) { return {s, e, EntityLabel::kAde}; }
EntitySpan drug_span(std::size_t s, std::size_t e) { return {s, e, EntityLabel::kDrug}; }

Counts of(const EntityMatchCounts& m, EntityLabel l) { return m.per_label.at(l); }

}  // namespace

TEST(MatchEntities, ExactMatch) {
  std::vector<EntitySpan> g{ade_span(0, 2)}, p{ade_span(0, 2)};
  EXPECT_EQ(of(match_entities(g, p, MatchMode::kStrict), EntityLabel::kAde), (Counts{1, 0, 0}));
  EXPECT_EQ(of(match_entities(g, p, MatchMode::kRelax), EntityLabel::kAde), (Counts{1, 0, 0}));
}

TEST(MatchEntities, PartialOverlap) {
  std::vector<EntitySpan> g{ade_span(0, 2)}, p{ade_span(0, 1)};
  EXPECT_EQ(of(match_entities(g, p, MatchMode::kStrict), EntityLabel::kAde), (Counts{0, 1, 1}));
  EXPECT_EQ(of(match_entities(g, p, MatchMode::kRelax), EntityLabel::kAde), (Counts{1, 0, 0}));
}

TEST(MatchEntities, LabelMismatch) {
  std::vector<EntitySpan> g{ade_span(0, 2)}, p{drug_span(0, 2)};
  for (auto mode : {MatchMode::kStrict, MatchMode::kRelax}) {
    auto m = match_entities(g, p, mode);
    EXPECT_EQ(of(m, EntityLabel::kAde), (Counts{0, 0, 1}));
    EXPECT_EQ(of(m, EntityLabel::kDrug), (Counts{0, 1, 0}));
  }
}

TEST(MatchEntities, MalformedSpanThrows) {
  std::vector<EntitySpan> g{ade_span(2, 2)}, p;
  EXPECT_THROW(match_entities(g, p, MatchMode::kStrict), SpanError);
}

TEST(MatchEntities, RelaxIsOneToOneOverlapAnyIsNot) {
  std::vector<EntitySpan> g{ade_span(0, 4)}, p{ade_span(0, 1), ade_span(2, 3)};
  EXPECT_EQ(of(match_entities(g, p, MatchMode::kRelax), EntityLabel::kAde), (Counts{1, 1, 0}));
  EXPECT_EQ(of(match_entities(g, p, MatchMode::kOverlapAny), EntityLabel::kAde),
            (Counts{1, 0, 0}));
}

TEST(MatchEntities, RelaxGreedyDivergenceIsReported) {
  // Pred (0,3) comes first and takes gold (0,2), leaving pred (1,2) with no partner,
  // although pairing (0,3)-(2,3) and (1,2)-(0,2) would match both.
  std::vector<EntitySpan> g{ade_span(0, 2), ade_span(2, 3)};
  std::vector<EntitySpan> p{ade_span(0, 3), ade_span(1, 2)};
  auto m = match_entities(g, p, MatchMode::kRelax);
  EXPECT_EQ(m.total_tp(), 1u);
  EXPECT_EQ(m.optimal_tp, 2u);
  std::vector<std::vector<EntitySpan>> gs{g}, ps{p};
  EXPECT_EQ(evaluate_spans(gs, ps, MatchMode::kRelax).to_json()["matching_divergence"], 1);
}

TEST(MatchEntities, StrictEqualsExhaustiveOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    auto g = ade::testing::random_spans(rng, 4, n);
    auto p = ade::testing::random_spans(rng, 4, n);
    auto m = match_entities(g, p, MatchMode::kStrict);
    auto o = oracle_counts(g, p, true);
    for (auto l : {EntityLabel::kAde, EntityLabel::kDrug}) ASSERT_EQ(of(m, l), o[l]);
  }
}

TEST(MatchEntities, RelaxOptimalFieldEqualsExhaustiveOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    auto g = ade::testing::random_spans(rng, 4, n);
    auto p = ade::testing::random_spans(rng, 4, n);
    auto m = match_entities(g, p, MatchMode::kRelax);
    auto o = oracle_counts(g, p, false);
    ASSERT_EQ(m.optimal_tp, o[EntityLabel::kAde].tp + o[EntityLabel::kDrug].tp);
    ASSERT_LE(m.total_tp(), m.optimal_tp);
  }
}

TEST(MatchEntities, Invariants) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    auto g = ade::testing::random_spans(rng, 5, n);
    auto p = ade::testing::random_spans(rng, 5, n);
    auto strict = match_entities(g, p, MatchMode::kStrict);
    auto relax = match_entities(g, p, MatchMode::kRelax);
    ASSERT_GE(relax.total_tp(), strict.total_tp());
    for (auto l : {EntityLabel::kAde, EntityLabel::kDrug}) {
      const auto gold_n = static_cast<std::size_t>(
          std::count_if(g.begin(), g.end(), [&](const EntitySpan& s) { return s.label == l; }));
      ASSERT_EQ(of(strict, l).tp + of(strict, l).fn, gold_n);
      ASSERT_EQ(of(relax, l).tp + of(relax, l).fn, gold_n);
    }
  }
}

TEST(Prf, HandCases) {
  auto a = prf(1, 0, 0);
  EXPECT_DOUBLE_EQ(a.precision, 1.0);
  EXPECT_DOUBLE_EQ(a.recall, 1.0);
  EXPECT_DOUBLE_EQ(a.f1, 1.0);
  auto z = prf(0, 0, 0);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  auto b = prf(3, 1, 2);
  EXPECT_NEAR(b.precision, 0.75, 1e-12);
  EXPECT_NEAR(b.recall, 0.6, 1e-12);
  EXPECT_NEAR(b.f1, 2.0 / 3.0, 1e-9);
}

TEST(Aggregate, HandCases) {
  std::vector<Counts> one{{3, 1, 2}};
  auto ma = aggregate(one, Averaging::kMacro), mi = aggregate(one, Averaging::kMicro);
  EXPECT_DOUBLE_EQ(ma.f1, mi.f1);
  EXPECT_DOUBLE_EQ(mi.f1, prf(3, 1, 2).f1);

  std::vector<Counts> two{{1, 0, 0}, {0, 1, 1}};
  EXPECT_NEAR(aggregate(two, Averaging::kMacro).f1, 0.5, 1e-12);
  EXPECT_NEAR(aggregate(two, Averaging::kMicro).f1, 0.5, 1e-12);

  std::vector<Counts> with_empty{{1, 0, 0}, {0, 0, 0}};
  EXPECT_NEAR(aggregate(with_empty, Averaging::kMacro).f1, 0.5, 1e-12);
  EXPECT_THROW(aggregate(std::vector<Counts>{}, Averaging::kMacro), EvaluationError);
}

TEST(ScoreClassification, SixDocConfusionCase) {
  // gold: NEG NEG NEG ADE ADE ADE, pred: NEG ADE NEG ADE ADE NEG
  std::vector<std::size_t> gold{0, 0, 0, 1, 1, 1}, pred{0, 1, 0, 1, 1, 0};
  const std::array<std::string_view, 2> names{"NEG", "ADE"};
  auto s = score_classification(gold, pred, names);
  // By hand: NEG tp=2 fp=1 fn=1; ADE tp=2 fp=1 fn=1.
  EXPECT_EQ(s.counts.at("NEG"), (Counts{2, 1, 1}));
  EXPECT_EQ(s.counts.at("ADE"), (Counts{2, 1, 1}));
  EXPECT_NEAR(s.macro.f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.micro.f1, 4.0 / 6.0, 1e-12);
}

TEST(ScoreClassification, AllOneClassOnBalancedSet) {
  std::vector<std::size_t> gold{0, 1, 0, 1}, pred{1, 1, 1, 1};
  const std::array<std::string_view, 2> names{"NEG", "ADE"};
  auto s = score_classification(gold, pred, names);
  EXPECT_NEAR(s.micro.f1, 0.5, 1e-12);
  EXPECT_NEAR(s.micro.precision, 0.5, 1e-12);
}

TEST(EvaluateSpans, ReportJsonHasModeAndDivergence) {
  std::vector<std::vector<EntitySpan>> g{{ade_span(0, 2)}}, p{{ade_span(1, 2)}};
  auto r = evaluate_spans(g, p, MatchMode::kRelax);
  auto j = r.to_json();
  EXPECT_EQ(j["mode"], "relax");
  EXPECT_EQ(j["matching_divergence"], 0);
  EXPECT_DOUBLE_EQ(j["per_label"]["ADE"]["f1"].get<double>(), 1.0);
  EXPECT_FALSE(j["per_label"].contains("O"));
}
