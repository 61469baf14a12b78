#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lfgen/metrics.hpp"
#include "support/oracles.hpp"

using namespace lfgen;

namespace {

using Opt = std::optional<std::string>;

ScoreTable table(std::vector<std::string> intents, std::vector<std::vector<double>> rows) {
  return ScoreTable{std::move(intents), std::move(rows)};
}

}  // namespace

TEST(Report, HandComputedF1) {
  const std::vector<std::string> gold{"A", "A", "B"};
  const std::vector<Opt> pred{"A", "B", "B"};
  const auto r = classification_report(gold, pred);
  EXPECT_NEAR(r.per_intent.at("A").f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_intent.at("B").f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.weighted_f1, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.per_intent.at("A").precision, 1.0);
  EXPECT_DOUBLE_EQ(r.per_intent.at("A").recall, 0.5);
}

TEST(Report, PerfectAndAbstaining) {
  const std::vector<std::string> gold{"A", "B", "C", "A"};
  const std::vector<Opt> perfect{"A", "B", "C", "A"};
  const auto s = indicator_scores(perfect, {"A", "B", "C"});
  const auto r = classification_report(gold, perfect, &s);
  for (const auto& [i, m] : r.per_intent) {
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.f1, 1.0);
  }
  EXPECT_EQ(r.weighted_f1, 1.0);
  EXPECT_EQ(r.auc_ovr, 1.0);

  const std::vector<Opt> none(4);
  const auto a = classification_report(gold, none);
  EXPECT_EQ(a.weighted_f1, 0.0);
  EXPECT_EQ(a.abstained, 4u);
  EXPECT_THROW(classification_report(std::vector<std::string>{}, std::vector<Opt>{}), ValidationError);
}

TEST(Report, SerializesJsonAndCsv) {
  const std::vector<std::string> gold{"A", "A", "B"};
  const std::vector<Opt> pred{"A", "B", "B"};
  const auto r = classification_report(gold, pred);
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["auc_ovr"].is_null());
  EXPECT_EQ(j["total"], 3);
  std::ostringstream csv;
  write_report_csv(csv, r);
  const std::string text = csv.str();
  EXPECT_NE(text.find("__summary__"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(Auc, Examples) {
  const std::vector<std::string> gold{"A", "A", "B", "B"};
  EXPECT_EQ(auc_ovr(gold, table({"A", "B"}, {{1, 0}, {0.9, 0.1}, {0.2, 0.8}, {0, 1}})), 1.0);
  EXPECT_EQ(auc_ovr(gold, table({"A", "B"}, {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}})), 0.5);
  // One inverted pair out of four for each class.
  const auto inverted = table({"A", "B"}, {{0.9, 0.1}, {0.3, 0.7}, {0.4, 0.6}, {0.1, 0.9}});
  EXPECT_DOUBLE_EQ(auc_ovr(gold, inverted), 0.75);
  const std::vector<bool> pos{true, true, false, false};
  const std::vector<double> a{0.9, 0.3, 0.4, 0.1};
  EXPECT_DOUBLE_EQ(binary_auc(pos, a), 0.75);
  EXPECT_THROW(auc_ovr(std::vector<std::string>{"A", "A"}, table({"A"}, {{1}, {0}})), ValidationError);
}

TEST(Auc, WeightedAveraging) {
  const std::vector<std::string> gold{"A", "A", "A", "B"};
  const auto t = table({"A", "B"}, {{1, 0}, {1, 0}, {0, 0}, {0, 1}});
  const double a = binary_auc({true, true, true, false}, std::vector<double>{1, 1, 0, 0});
  const double b = binary_auc({false, false, false, true}, std::vector<double>{0, 0, 0, 1});
  EXPECT_DOUBLE_EQ(auc_ovr(gold, t, AucAveraging::macro), (a + b) / 2);
  EXPECT_DOUBLE_EQ(auc_ovr(gold, t, AucAveraging::weighted), (3 * a + b) / 4);
}

TEST(Auc, MissingIntentColumnScoresZero) {
  const std::vector<std::string> gold{"A", "B", "C"};
  const auto t = table({"A", "B"}, {{1, 0}, {0, 1}, {0, 0}});
  // C is never scored: every query ties at 0 for C.
  EXPECT_DOUBLE_EQ(auc_ovr(gold, t), (1.0 + 1.0 + 0.5) / 3.0);
}

TEST(Auc, MatchesPairCountingOracle) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 500; ++trial) {
    const int classes = 2 + static_cast<int>(rng() % 4);
    const int n = 2 + static_cast<int>(rng() % 49);
    std::vector<int> g(n);
    for (auto& x : g) x = static_cast<int>(rng() % classes);
    g[0] = 0;
    g[1] = 1;
    std::vector<std::vector<double>> s(n, std::vector<double>(classes));
    for (auto& row : s)
      for (auto& x : row) x = static_cast<double>(rng() % 5) / 4.0;  // many ties
    std::vector<std::string> gold, intents;
    for (int c = 0; c < classes; ++c) intents.push_back("C" + std::to_string(c));
    for (int x : g) gold.push_back(intents[x]);
    ASSERT_NEAR(auc_ovr(gold, table(intents, s)), oracle::macro_auc(g, s, classes), 1e-9);
  }
}

TEST(Auc, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 30);
    std::vector<std::string> gold;
    std::vector<std::vector<double>> s, t;
    for (int i = 0; i < n; ++i) {
      gold.push_back(i < 2 ? (i ? "B" : "A") : (rng() % 2 ? "A" : "B"));
      const double a = std::round(u(rng) * 8) / 8, b = std::round(u(rng) * 8) / 8;
      s.push_back({a, b});
      t.push_back({std::exp(3 * a) - 7, std::pow(b, 3) + 2});
    }
    EXPECT_DOUBLE_EQ(auc_ovr(gold, table({"A", "B"}, s)), auc_ovr(gold, table({"A", "B"}, t)));
  }
}

TEST(WeightedF1, MatchesConfusionMatrixOracle) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    const int classes = 1 + static_cast<int>(rng() % 5);
    const int n = 1 + static_cast<int>(rng() % 50);
    std::vector<int> g(n), p(n);
    std::vector<std::string> gold;
    std::vector<Opt> pred;
    for (int i = 0; i < n; ++i) {
      g[i] = static_cast<int>(rng() % classes);
      p[i] = static_cast<int>(rng() % (classes + 1)) - 1;
      gold.push_back("C" + std::to_string(g[i]));
      pred.push_back(p[i] < 0 ? Opt{} : Opt{"C" + std::to_string(p[i])});
    }
    ASSERT_NEAR(classification_report(gold, pred).weighted_f1, oracle::weighted_f1(g, p, classes), 1e-9);
  }
}

TEST(Pearson, Examples) {
  const std::vector<double> x{1, 2, 3}, y{2, 4, 6}, z{-1, -2, -3};
  EXPECT_DOUBLE_EQ(pearson(x, y).r, 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, z).r, -1.0);
  EXPECT_EQ(pearson(x, y).p, 0.0);
  const std::vector<double> flat{5, 5, 5};
  EXPECT_THROW(pearson(x, flat), ValidationError);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
}

TEST(Pearson, PValueFromStudentT) {
  // r = 0.6, n = 10: t = 0.6 * sqrt(8 / 0.64) = 2.1213..., two-sided p = 0.066688...
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> y(10);
  // y = 0.6 * zx + 0.8 * e with e orthogonal to x and equal variance gives r = 0.6.
  const std::vector<double> e{1, -1, -1, 1, 1, -1, -1, 1, 0, 0};
  double mx = 5.5, sx = 0, se = 0, me = 0;
  for (double v : x) sx += (v - mx) * (v - mx);
  for (double v : e) me += v / 10;
  for (double v : e) se += (v - me) * (v - me);
  double exe = 0;
  for (int i = 0; i < 10; ++i) exe += (x[i] - mx) * (e[i] - me);
  ASSERT_NEAR(exe, 0.0, 1e-12);
  for (int i = 0; i < 10; ++i) y[i] = 0.6 * (x[i] - mx) / std::sqrt(sx) + 0.8 * (e[i] - me) / std::sqrt(se);
  const auto c = pearson(x, y);
  EXPECT_NEAR(c.r, 0.6, 1e-12);
  EXPECT_NEAR(c.p, 0.066688, 1e-5);
}

TEST(Pearson, MatchesClosedForm) {
  std::mt19937_64 rng(67);
  std::normal_distribution<double> nd(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 40;
    const double slope = nd(rng);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = nd(rng);
      y[i] = slope * x[i] + nd(rng);
    }
    const auto c = pearson(x, y);
    ASSERT_NEAR(c.r, oracle::pearson_r(x, y), 1e-9);
    EXPECT_GE(c.p, 0.0);
    EXPECT_LE(c.p, 1.0);
  }
}
