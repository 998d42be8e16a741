#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "sufgram/eval.hpp"
#include "sufgram/index.hpp"
#include "sufgram/query_engine.hpp"
#include "support.hpp"

namespace sufgram {
namespace {

using namespace sufgram::testing;
using Q = std::vector<TokenId>;

InfgramResult estimate(std::uint64_t cont, std::uint64_t den, bool sparse) {
  InfgramResult r;
  r.cont_count = cont;
  r.suffix_count = den;
  r.sparse = sparse;
  r.effective_n = 2;
  return r;
}

TEST(Interpolate, Cases) {
  EXPECT_DOUBLE_EQ(interpolate(estimate(1, 2, false), 0.37, {0.0, 0.0}), 0.37);
  EXPECT_DOUBLE_EQ(interpolate(estimate(1, 1, true), 0.2, {1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(interpolate(estimate(1, 2, false), 0.1, {0.0, 0.5}), 0.3);
  // The sparse weight applies only to sparse estimates.
  EXPECT_DOUBLE_EQ(interpolate(estimate(1, 2, false), 0.1, {1.0, 0.0}), 0.1);
  EXPECT_THROW(interpolate(estimate(1, 2, false), 0.0, {0.5, 0.5}), Error);
  EXPECT_THROW(interpolate(estimate(1, 2, false), 0.5, {1.5, 0.5}), Error);
}

TEST(RelativeImprovement, PublishedRow) {
  EXPECT_NEAR(relative_improvement(13.71, 22.82), 42.0, 0.5);
  EXPECT_DOUBLE_EQ(relative_improvement(22.82, 22.82), 0.0);
  EXPECT_DOUBLE_EQ(relative_improvement(1.0, 5.0), 100.0);
}

TEST(SlidingWindows, EveryPositionOnce) {
  for (std::size_t len : {0, 1, 5, 512, 1023, 1024, 1025, 1536, 1537, 5000}) {
    auto ws = sliding_windows(len, 1024, 512);
    std::vector<int> seen(len, 0);
    for (const auto& w : ws) {
      EXPECT_LE(w.window_begin, w.score_begin);
      EXPECT_LE(w.score_end - w.window_begin, 1024u);
      for (std::size_t p = w.score_begin; p < w.score_end; ++p) ++seen[p];
    }
    for (std::size_t p = 0; p < len; ++p) ASSERT_EQ(seen[p], 1) << len << " " << p;
    if (len > 1024) {
      EXPECT_EQ(ws[1].window_begin, 512u);
      EXPECT_EQ(ws[1].score_begin, 1024u);
    }
  }
  EXPECT_THROW(sliding_windows(10, 4, 8), Error);
}

TEST(NeuralStream, RoundTrip) {
  TempDir tmp;
  std::vector<NeuralRecord> recs{{"a", {1, 2}, {0.5, 0.25}, "m", "t"}, {"b", {3}, {1.0}, "", ""}};
  write_neural_stream(tmp / "n.jsonl", recs);
  auto back = read_neural_stream(tmp / "n.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].doc_id, "a");
  EXPECT_EQ(back[0].tokens, (Q{1, 2}));
  EXPECT_EQ(back[0].probs, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(back[1].doc_id, "b");
}

class ToyEval : public ::testing::Test {
 protected:
  void SetUp() override {
    build_index(tmp_.path(), toy_corpus());
    index_ = std::make_unique<CorpusIndex>(CorpusIndex::open(tmp_.path()));
    engine_ = std::make_unique<QueryEngine>(*index_);
    model_ = std::make_unique<InfgramModel>(*engine_);
  }
  TempDir tmp_;
  std::unique_ptr<CorpusIndex> index_;
  std::unique_ptr<QueryEngine> engine_;
  std::unique_ptr<InfgramModel> model_;
};

TEST_F(ToyEval, ZeroWeightsReproduceBaseline) {
  std::vector<EvalDocument> docs{{"d", {1, 2, 3}}};
  std::vector<NeuralRecord> neural{{"d", {1, 2, 3}, {0.5, 0.25, 0.125}, "", ""}};
  PerplexityReport r = evaluate_ppl(*model_, docs, neural, {0.0, 0.0});
  EXPECT_EQ(r.tokens, 3u);
  EXPECT_DOUBLE_EQ(r.ppl, r.baseline_ppl);
  EXPECT_DOUBLE_EQ(r.relative_improvement, 0.0);
  EXPECT_NEAR(r.ppl, std::exp((std::log(2.0) + std::log(4.0) + std::log(8.0)) / 3), 1e-12);
}

TEST_F(ToyEval, AlignmentErrorsNamePosition) {
  std::vector<EvalDocument> docs{{"d", {1, 2, 3}}};
  std::vector<NeuralRecord> bad_token{{"d", {1, 4, 3}, {0.5, 0.5, 0.5}, "", ""}};
  try {
    score_corpus(*model_, docs, bad_token);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("position 1"), std::string::npos) << e.what();
  }
  std::vector<NeuralRecord> short_probs{{"d", {}, {0.5}, "", ""}};
  EXPECT_THROW(score_corpus(*model_, docs, short_probs), Error);
  EXPECT_THROW(score_corpus(*model_, docs, {}), Error);
}

TEST_F(ToyEval, TuneSingletonGrid) {
  std::vector<EvalDocument> docs{{"d", {1, 2, 3}}};
  std::vector<NeuralRecord> neural{{"d", {}, {0.5, 0.5, 0.5}, "", ""}};
  ScoredCorpus s = score_corpus(*model_, docs, neural);
  EXPECT_EQ(tune_lambdas(s, {{0.0, 0.0}}), (InterpolationConfig{0.0, 0.0}));
  EXPECT_THROW(tune_lambdas(s, {{0.5, 0.5}}), Error);
}

TEST(Tune, AllSparseCorpusPicksFullSparseWeight) {
  // One long document with distinct tokens: after the first token every
  // estimate is sparse with probability 1.
  TempDir tmp;
  Q doc;
  for (TokenId t = 1; t <= 200; ++t) doc.push_back(t);
  build_index(tmp.path(), {doc});
  CorpusIndex index = CorpusIndex::open(tmp.path());
  QueryEngine engine(index);
  InfgramModel model(engine);
  std::vector<EvalDocument> docs{{"x", Q(doc.begin() + 1, doc.end())}};
  std::vector<NeuralRecord> neural{{"x", {}, std::vector<double>(doc.size() - 1, 0.01), "", ""}};
  ScoredCorpus s = score_corpus(model, docs, neural);
  InterpolationConfig best = tune_lambdas(s, default_lambda_grid());
  EXPECT_DOUBLE_EQ(best.lambda_sparse, 1.0);
  PerplexityReport r = perplexity(s, best);
  EXPECT_LE(r.ppl, r.baseline_ppl);
}

TEST(Tune, GridShape) {
  auto grid = default_lambda_grid();
  EXPECT_EQ(grid.size(), 231u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  for (const auto& g : grid) EXPECT_GE(g.lambda_sparse, g.lambda_dense);
  EXPECT_EQ(grid.front(), (InterpolationConfig{0.0, 0.0}));
}

TEST(Agreement, ThresholdRule) {
  EXPECT_TRUE(agrees(estimate(51, 100, false)));
  EXPECT_FALSE(agrees(estimate(50, 100, false)));
  EXPECT_TRUE(agrees(estimate(1, 1, true)));
}

TEST_F(ToyEval, AgreementReportBuckets) {
  std::vector<EvalDocument> docs{{"a", {1, 2, 3, 1, 2}}};
  AgreementReport r = agreement_analysis(*model_, docs, 5);
  EXPECT_EQ(r.overall.tokens, 5u);
  std::uint64_t bucketed = 0;
  for (const auto& [n, b] : r.by_effective_n) bucketed += b.tokens;
  EXPECT_EQ(bucketed, 5u);
  ASSERT_TRUE(r.fixed_n);
  EXPECT_EQ(r.fixed_n->overall.tokens, 5u);
  auto j = to_json(r);
  EXPECT_EQ(j["overall"]["tokens"], 5);
  EXPECT_TRUE(j.contains("by_effective_n"));
  EXPECT_TRUE(j.contains("fixed_n"));
}

}  // namespace
}  // namespace sufgram
