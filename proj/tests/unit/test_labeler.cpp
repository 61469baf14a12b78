#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "lfgen/labeler.hpp"
#include "support/oracles.hpp"

using namespace lfgen;

namespace {

LabelingFunction word_lf(const std::string& name, std::vector<std::string> words, const std::string& intent) {
  LabelingFunction lf;
  lf.name = name;
  lf.type = LfType::contains_word;
  lf.class_intent = intent;
  lf.unique_words = std::move(words);
  return lf;
}

Query q(const std::string& id, const std::string& text, std::optional<std::string> intent = std::nullopt) {
  return Query{id, text, std::move(intent), {}};
}

std::vector<std::optional<std::string>> mlv(std::vector<std::optional<std::string>> row) {
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < row.size(); ++i) cols.push_back("lf" + std::to_string(i));
  return majority_vote(LabelMatrix::from_votes({"r"}, cols, {row}));
}

}  // namespace

TEST(ApplyLfs, WordTrigger) {
  const auto lf = word_lf("created", {"created"}, "FileCreator");
  EXPECT_EQ(lf.vote(q("a", "who created x")), "FileCreator");
  EXPECT_EQ(lf.vote(q("b", "close issue 3")), std::nullopt);
  // A word LF with two trigger words, "created" and "author".
  const auto lf1 = word_lf("lf1", {"created", "author"}, "FileCreator");
  EXPECT_EQ(lf1.vote(q("c", "the author of the report")), "FileCreator");
}

TEST(ApplyLfs, MatrixShape) {
  const std::vector<LabelingFunction> lfs{word_lf("a", {"x"}, "A"), word_lf("b", {"y"}, "B")};
  const auto empty = apply_lfs(lfs, Dataset{});
  EXPECT_TRUE(empty.rows.empty());
  EXPECT_EQ(empty.cols.size(), 2u);
  const auto m = apply_lfs(lfs, Dataset({q("1", "x y"), q("2", "y"), q("3", "z")}));
  EXPECT_EQ(m.vote(0, 0), "A");
  EXPECT_EQ(m.vote(0, 1), "B");
  EXPECT_EQ(m.vote(1, 0), std::nullopt);
  EXPECT_EQ(m.at(2, 1), LabelMatrix::kAbstain);
  EXPECT_THROW(apply_lfs({}, Dataset{}), ValidationError);
}

TEST(MajorityVote, Examples) {
  EXPECT_EQ(mlv({"A", "A", "B"})[0], "A");
  EXPECT_EQ(mlv({"A", "B"})[0], std::nullopt);
  EXPECT_EQ(mlv({std::nullopt, std::nullopt, std::nullopt})[0], std::nullopt);
  EXPECT_EQ(mlv({std::nullopt, "B", std::nullopt})[0], "B");
}

TEST(MajorityVote, MatchesOracleAndIgnoresColumnOrder) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const int lfs = 1 + static_cast<int>(rng() % 10), classes = 1 + static_cast<int>(rng() % 6);
    const int rows = 1 + static_cast<int>(rng() % 12);
    std::vector<std::vector<int>> raw(rows, std::vector<int>(lfs));
    std::vector<std::vector<std::optional<std::string>>> votes(rows, std::vector<std::optional<std::string>>(lfs));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < lfs; ++c) {
        raw[r][c] = static_cast<int>(rng() % (classes + 1)) - 1;
        if (raw[r][c] >= 0) votes[r][c] = "C" + std::to_string(raw[r][c]);
      }
    std::vector<std::string> row_ids(rows), cols(lfs);
    for (int c = 0; c < lfs; ++c) cols[c] = "lf" + std::to_string(c);
    const auto got = majority_vote(LabelMatrix::from_votes(row_ids, cols, votes));
    const auto want = oracle::majority(raw, classes);
    for (int r = 0; r < rows; ++r) {
      const std::optional<std::string> expected =
          want[r] < 0 ? std::nullopt : std::optional<std::string>("C" + std::to_string(want[r]));
      ASSERT_EQ(got[r], expected);
    }
    std::vector<int> perm(lfs);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto permuted = votes;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < lfs; ++c) permuted[r][c] = votes[r][perm[c]];
    EXPECT_EQ(majority_vote(LabelMatrix::from_votes(row_ids, cols, permuted)), got);
  }
}

TEST(VoteFractions, SumToZeroOrOne) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t lfs = 1 + rng() % 8, rows = 1 + rng() % 10;
    std::vector<std::vector<std::optional<std::string>>> votes(rows, std::vector<std::optional<std::string>>(lfs));
    for (auto& r : votes)
      for (auto& v : r)
        if (rng() % 3) v = "C" + std::to_string(rng() % 4);
    std::vector<std::string> cols(lfs);
    for (std::size_t c = 0; c < lfs; ++c) cols[c] = "lf" + std::to_string(c);
    const auto m = LabelMatrix::from_votes(std::vector<std::string>(rows), cols, votes);
    const auto t = vote_fractions(m, {"C0", "C1", "C2", "C3"});
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0;
      for (double x : t.rows[r]) sum += x;
      const bool any = std::any_of(votes[r].begin(), votes[r].end(), [](const auto& v) { return v.has_value(); });
      EXPECT_NEAR(sum, any ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(ScoreLf, CoverageAndAccuracy) {
  std::vector<Query> qs;
  for (int i = 0; i < 10; ++i) qs.push_back(q(std::to_string(i), i < 6 ? "hit" : "miss", "A"));
  const Dataset holdout(qs);
  auto lf = word_lf("hit", {"hit"}, "A");
  lf.support = 3;
  const auto s = score_lf(lf, holdout);
  EXPECT_DOUBLE_EQ(s.coverage, 0.6);
  EXPECT_DOUBLE_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.lf_support, 3u);

  const auto none = score_lf(word_lf("never", {"nothing"}, "A"), holdout);
  EXPECT_EQ(none.coverage, 0.0);
  EXPECT_EQ(none.accuracy, 0.0);

  const Dataset four({q("1", "hit", "A"), q("2", "hit", "A"), q("3", "hit", "A"), q("4", "hit", "A"),
                      q("5", "other", "B")});
  EXPECT_DOUBLE_EQ(score_lf(lf, four).accuracy, 1.0);
  EXPECT_THROW(score_lf(lf, Dataset{}), ValidationError);
}

TEST(ScoreLf, AccuracyIsWeightedF1OverCoveredRows) {
  // Covered rows: gold A, A, B; the LF always says A. F1_A = 0.8, F1_B = 0.
  const Dataset holdout({q("1", "hit", "A"), q("2", "hit", "A"), q("3", "hit", "B"), q("4", "x", "B")});
  const auto s = score_lf(word_lf("hit", {"hit"}, "A"), holdout);
  EXPECT_DOUBLE_EQ(s.coverage, 0.75);
  EXPECT_NEAR(s.accuracy, 0.8 * 2.0 / 3.0, 1e-12);
}

TEST(Prune, Examples) {
  std::vector<LabelingFunction> lfs{word_lf("good", {"g"}, "A"), word_lf("best", {"b"}, "A"),
                                    word_lf("unused", {"u"}, "A"), word_lf("single", {"s"}, "A"),
                                    word_lf("only", {"o"}, "B")};
  std::vector<LFQuality> qs{{"good", LfType::contains_word, 0.6, 0.9, 3},
                            {"best", LfType::contains_word, 0.5, 1.0, 5},
                            {"unused", LfType::contains_word, 0.0, 1.0, 9},
                            {"single", LfType::contains_word, 0.4, 1.0, 1},
                            {"only", LfType::contains_word, 0.0, 0.0, 0}};
  std::set<std::string> kept;
  for (const auto& lf : prune(lfs, qs, 0.7)) kept.insert(lf.name);
  EXPECT_EQ(kept, (std::set<std::string>{"good", "best", "only"}));
  EXPECT_THROW(prune(lfs, qs, 0.0), ValidationError);
  EXPECT_THROW(prune(lfs, qs, 1.01), ValidationError);
}

TEST(Prune, BestTieBreaks) {
  std::vector<LabelingFunction> lfs{word_lf("b", {"x"}, "A"), word_lf("a", {"y"}, "A"), word_lf("c", {"z"}, "A")};
  std::vector<LFQuality> qs{{"b", LfType::contains_word, 0.2, 0.5, 0},
                            {"a", LfType::contains_word, 0.2, 0.5, 0},
                            {"c", LfType::contains_word, 0.1, 0.5, 0}};
  const auto kept = prune(lfs, qs, 0.7);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].name, "a");
}

TEST(Prune, MlLfsNeverTakeTheBestSlot) {
  LabelingFunction ml;
  ml.name = "ml:x";
  ml.type = LfType::ml;
  std::vector<LabelingFunction> lfs{ml, word_lf("w", {"w"}, "A")};
  std::vector<LFQuality> qs{{"ml:x", LfType::ml, 0.5, 0.6, 40}, {"w", LfType::contains_word, 0.1, 0.2, 1}};
  const auto kept = prune(lfs, qs, 0.7);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].name, "w");
  qs[0].accuracy = 0.75;
  EXPECT_EQ(prune(lfs, qs, 0.7).size(), 2u);
}

TEST(Prune, Properties) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<LabelingFunction> lfs;
    std::vector<LFQuality> qs;
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_ml = rng() % 10 == 0;
      LabelingFunction lf = is_ml ? LabelingFunction{} : word_lf("", {"w"}, "I" + std::to_string(rng() % 6));
      if (is_ml) lf.type = LfType::ml;
      lf.name = "lf" + std::to_string(i);
      const double grid[] = {0.0, 0.25, 0.5, 0.7, 0.75, 1.0};
      LFQuality q{lf.name, lf.type, grid[rng() % 6], grid[rng() % 6], rng() % 4};
      lfs.push_back(lf);
      qs.push_back(q);
    }
    const double threshold = 0.7;
    const auto kept = prune(lfs, qs, threshold);
    std::set<std::string> kept_names;
    for (const auto& lf : kept) kept_names.insert(lf.name);
    // Output keeps input order and is a subset.
    std::size_t pos = 0;
    for (const auto& lf : kept) {
      while (pos < lfs.size() && lfs[pos].name != lf.name) ++pos;
      ASSERT_LT(pos, lfs.size());
    }
    std::map<std::string, std::size_t> best;
    for (std::size_t i = 0; i < n; ++i) {
      if (lfs[i].type == LfType::ml) continue;
      auto it = best.find(*lfs[i].class_intent);
      auto key = [&](std::size_t k) { return std::make_tuple(qs[k].accuracy, qs[k].coverage); };
      if (it == best.end() || key(i) > key(it->second) ||
          (key(i) == key(it->second) && lfs[i].name < lfs[it->second].name))
        best[*lfs[i].class_intent] = i;
    }
    std::set<std::string> best_names;
    for (const auto& [intent, i] : best) {
      EXPECT_TRUE(kept_names.count(lfs[i].name)) << intent;
      best_names.insert(lfs[i].name);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!kept_names.count(lfs[i].name) || best_names.count(lfs[i].name)) continue;
      EXPECT_GT(qs[i].coverage, 0.0);
      EXPECT_GE(qs[i].lf_support, 2u);
      EXPECT_GE(qs[i].accuracy, threshold);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const bool eligible = qs[i].coverage > 0 && qs[i].lf_support >= 2 && qs[i].accuracy >= threshold;
      if (eligible) {
        EXPECT_TRUE(kept_names.count(lfs[i].name));
      }
    }
  }
}

TEST(Reports, QualityFieldOrder) {
  const auto j = qualities_to_json({{"lf_7", LfType::entity, 0.6, 0.9, 3}});
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0].dump(),
            R"({"lf_name":"lf_7","lf_type":"EntityLabeller","coverage":0.6,"accuracy":0.9,"lf_support":3})");
}

TEST(LabelQueries, VotesAndAbstentions) {
  const std::vector<LabelingFunction> lfs{word_lf("a", {"x"}, "A"), word_lf("b", {"y"}, "B"),
                                          word_lf("a2", {"z"}, "A")};
  const Dataset d({q("1", "x z y"), q("2", "x y"), q("3", "nothing")});
  const auto labels = label_queries(lfs, d);
  EXPECT_EQ(labels[0].query.intent, "A");
  EXPECT_NEAR(labels[0].votes.at("A"), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(labels[1].query.intent, std::nullopt);
  EXPECT_TRUE(labels[2].votes.empty());
  std::ostringstream out;
  write_labels_jsonl(out, labels);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["id"], "1");
  EXPECT_EQ(j["intent"], "A");
  std::getline(in, line);
  EXPECT_TRUE(nlohmann::json::parse(line)["intent"].is_null());
}
