#include "ppdl/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "metrics_oracle.hpp"
#include "ppdl/error.hpp"

namespace {

namespace mt = ppdl::metrics;
using ppdl::Errc;
using Labels = std::vector<std::uint32_t>;

template <typename F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const ppdl::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a ppdl::Error";
  return Errc::BadArgument;
}

std::vector<std::string> names(std::uint32_t k) {
  std::vector<std::string> out;
  for (std::uint32_t i = 0; i < k; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

mt::ConfusionMatrix matrix(std::vector<std::vector<std::uint64_t>> counts) {
  mt::ConfusionMatrix cm;
  cm.classes = names(static_cast<std::uint32_t>(counts.size()));
  cm.counts = std::move(counts);
  return cm;
}

TEST(ConfusionTest, Examples) {
  const auto cm = mt::confusion(Labels{0, 0, 1, 1}, Labels{0, 1, 1, 1}, names(2));
  EXPECT_EQ(cm.counts, (std::vector<std::vector<std::uint64_t>>{{1, 1}, {0, 2}}));
  EXPECT_EQ(cm.total(), 4u);
  EXPECT_EQ(cm.row_sum(0), 2u);
  EXPECT_EQ(cm.col_sum(1), 3u);

  const Labels same{2, 0, 1, 2, 2};
  const auto diag = mt::confusion(same, same, names(3));
  EXPECT_EQ(diag.counts, (std::vector<std::vector<std::uint64_t>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 3}}));
  EXPECT_EQ(mt::report(diag).accuracy, 1.0);
}

TEST(ConfusionTest, EmptyAndErrors) {
  const auto empty = mt::confusion(Labels{}, Labels{}, names(3));
  EXPECT_EQ(empty.total(), 0u);
  EXPECT_EQ(empty.counts.size(), 3u);
  EXPECT_EQ(error_code_of([&] { mt::report(empty); }), Errc::EmptyEvaluation);
  EXPECT_EQ(error_code_of([] { mt::confusion(Labels{0, 1}, Labels{0}, names(2)); }), Errc::LabelMismatch);
  EXPECT_EQ(error_code_of([] { mt::confusion(Labels{0, 2}, Labels{0, 1}, names(2)); }), Errc::LabelMismatch);
}

TEST(ReportTest, TwoClassExample) {
  const auto r = mt::report(matrix({{2, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].f1, 0.8);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].recall, 0.5);
  EXPECT_EQ(r.per_class[1].support, 2u);
  EXPECT_EQ(r.total, 4u);
}

TEST(ReportTest, SingleClass) {
  const auto r = mt::report(matrix({{5}}));
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_avg.f1, 1.0);
  EXPECT_EQ(r.weighted_avg.f1, 1.0);
}

TEST(ReportTest, ZeroDivisionGivesZero) {
  // class 1 never predicted and never present
  const auto r = mt::report(matrix({{3, 0}, {0, 0}}));
  EXPECT_EQ(r.per_class[1].precision, 0.0);
  EXPECT_EQ(r.per_class[1].recall, 0.0);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
  EXPECT_EQ(r.macro_avg.f1, 0.5);
  EXPECT_EQ(r.weighted_avg.f1, 1.0);
}

TEST(ReportTest, MatchesBruteForceOnThousandRandomCases) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto c = oracle::random_label_case(seed);
    const auto r = mt::report(mt::confusion(c.truth, c.pred, names(c.k)));
    ASSERT_TRUE(oracle::report_matches(r, oracle::brute_force_metrics(c.truth, c.pred, c.k))) << "seed " << seed;
    ASSERT_NEAR(r.accuracy, r.weighted_avg.recall, 1e-12) << "seed " << seed;
    std::uint64_t support = 0;
    for (const auto& s : r.per_class) support += s.support;
    ASSERT_EQ(support, c.truth.size());
  }
}

TEST(ReportTest, ClassPermutationLeavesAggregatesUnchanged) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto c = oracle::random_label_case(seed + 5000);
    std::vector<std::uint32_t> perm(c.k);
    std::iota(perm.begin(), perm.end(), 0u);
    ppdl::Rng rng(seed);
    rng.shuffle(std::span<std::uint32_t>(perm));
    Labels t2, p2;
    for (auto v : c.truth) t2.push_back(perm[v]);
    for (auto v : c.pred) p2.push_back(perm[v]);
    std::vector<std::string> n2(c.k);
    const auto n1 = names(c.k);
    for (std::uint32_t i = 0; i < c.k; ++i) n2[perm[i]] = n1[i];

    const auto cm1 = mt::confusion(c.truth, c.pred, n1);
    const auto cm2 = mt::confusion(t2, p2, n2);
    for (std::uint32_t i = 0; i < c.k; ++i) {
      for (std::uint32_t j = 0; j < c.k; ++j) ASSERT_EQ(cm1.counts[i][j], cm2.counts[perm[i]][perm[j]]);
    }
    const auto r1 = mt::report(cm1);
    const auto r2 = mt::report(cm2);
    EXPECT_EQ(r1.accuracy, r2.accuracy);
    EXPECT_NEAR(r1.macro_avg.f1, r2.macro_avg.f1, 1e-12);
    EXPECT_NEAR(r1.macro_avg.precision, r2.macro_avg.precision, 1e-12);
    EXPECT_NEAR(r1.weighted_avg.f1, r2.weighted_avg.f1, 1e-12);
    EXPECT_NEAR(r1.weighted_avg.recall, r2.weighted_avg.recall, 1e-12);
  }
}

// Per-class rows of the published plain and encrypted result tables.
const std::vector<std::string> kRadiographyClasses{"Covid", "Lung_Opacity", "Normal", "Viral_Pneumonia"};

mt::ClassificationReport published_plain() {
  return mt::aggregate(kRadiographyClasses, {{0.994, 0.949, 0.971, 350},
                                       {0.953, 0.903, 0.927, 601},
                                       {0.902, 0.967, 0.934, 676},
                                       {0.992, 0.975, 0.983, 121}});
}

mt::ClassificationReport published_encrypted() {
  return mt::aggregate(kRadiographyClasses, {{0.986, 0.980, 0.983, 350},
                                       {0.921, 0.912, 0.916, 601},
                                       {0.908, 0.953, 0.930, 676},
                                       {0.990, 0.785, 0.876, 121}});
}

TEST(AggregateTest, ReproducesPublishedSummaryRows) {
  // inputs and published summaries are both rounded to 3 decimals
  constexpr double tol = 1e-3;
  const auto p = published_plain();
  EXPECT_EQ(p.total, 1748u);
  EXPECT_NEAR(p.accuracy, 0.942, tol);
  EXPECT_NEAR(p.weighted_avg.f1, 0.942, tol);
  EXPECT_NEAR(p.weighted_avg.precision, 0.944, tol);
  EXPECT_NEAR(p.macro_avg.precision, 0.960, tol);
  EXPECT_NEAR(p.macro_avg.recall, 0.949, tol);
  EXPECT_NEAR(p.macro_avg.f1, 0.954, tol);
  const auto e = published_encrypted();
  EXPECT_NEAR(e.accuracy, 0.932, tol);
  EXPECT_NEAR(e.weighted_avg.f1, 0.932, tol);
  EXPECT_NEAR(e.weighted_avg.precision, 0.934, tol);
  EXPECT_NEAR(e.macro_avg.precision, 0.951, tol);
  EXPECT_NEAR(e.macro_avg.recall, 0.907, tol);
  EXPECT_NEAR(e.macro_avg.f1, 0.926, tol);
}

TEST(CompareTest, PublishedGap) {
  auto p = published_plain();
  auto e = published_encrypted();
  p.accuracy = 0.942;
  e.accuracy = 0.932;
  const auto c = mt::compare(p, e, 0.05);
  EXPECT_NEAR(c.accuracy_gap, 0.010, 1e-12);
  EXPECT_TRUE(c.passed);
  EXPECT_NEAR(c.f1_deltas[3], -0.107, 1e-12);
  const auto worst = std::min_element(c.f1_deltas.begin(), c.f1_deltas.end()) - c.f1_deltas.begin();
  EXPECT_EQ(worst, 3);
  EXPECT_NE(mt::format_comparison(c).find("0.010"), std::string::npos);
  EXPECT_FALSE(mt::compare(p, e, 0.005).passed);
}

TEST(CompareTest, IdenticalAndIncomparable) {
  const auto p = published_plain();
  const auto c = mt::compare(p, p, 0.0);
  EXPECT_EQ(c.accuracy_gap, 0.0);
  EXPECT_TRUE(c.passed);
  for (double d : c.f1_deltas) EXPECT_EQ(d, 0.0);
  auto other = p;
  other.classes[0] = "COVID-19";
  EXPECT_EQ(error_code_of([&] { mt::compare(p, other, 0.05); }), Errc::IncomparableReports);
}

TEST(FormatTest, TableLayout) {
  const auto t = mt::format_report_table(mt::report(matrix({{2, 0}, {1, 1}})));
  EXPECT_NE(t.find("precision"), std::string::npos);
  EXPECT_NE(t.find("f1-score"), std::string::npos);
  EXPECT_NE(t.find("0.667"), std::string::npos);
  EXPECT_NE(t.find("Accuracy"), std::string::npos);
  EXPECT_NE(t.find("0.750"), std::string::npos);
  EXPECT_NE(t.find("Macro avg"), std::string::npos);
  EXPECT_NE(t.find("Weighted avg"), std::string::npos);
}

TEST(JsonTest, EvaluationRoundTrip) {
  const auto c = oracle::random_label_case(17);
  const auto cm = mt::confusion(c.truth, c.pred, names(c.k));
  const auto r = mt::report(cm);
  const std::string j = mt::evaluation_to_json(r, cm);
  EXPECT_EQ(mt::report_from_json(j), r);
  EXPECT_EQ(mt::confusion_from_json(j), cm);
  EXPECT_EQ(error_code_of([] { mt::report_from_json("{\"format\":\"x\"}"); }), Errc::IncomparableReports);
  EXPECT_EQ(mt::confusion_to_csv(matrix({{1, 1}, {0, 2}})), "true\\pred,c0,c1\nc0,1,1\nc1,0,2\n");
}

}  // namespace
