#include <gtest/gtest.h>

#include "sufgram/index.hpp"
#include "sufgram/infgram.hpp"
#include "sufgram/query_engine.hpp"
#include "support.hpp"

namespace sufgram {
namespace {

using namespace sufgram::testing;
using Q = std::vector<TokenId>;

class ToyModel : public ::testing::Test {
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

TEST_F(ToyModel, FixedN) {
  auto p = model_->ngram_prob(Q{7, 2}, 3, 2);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->prob(), (Ratio{2, 3}));
  p = model_->ngram_prob(Q{7, 1, 2}, 3, 3);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->prob(), (Ratio{1, 2}));
  EXPECT_FALSE(model_->ngram_prob(Q{9}, 3, 2));
  p = model_->ngram_prob(Q{}, 2, 1);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->prob(), (Ratio{3, 10}));
  EXPECT_THROW(model_->ngram_prob(Q{1}, 2, 0), Error);
  EXPECT_THROW(model_->ngram_prob(Q{1}, 2, 3), Error);
}

TEST_F(ToyModel, FixedNDistribution) {
  auto d = model_->ngram_dist(Q{2}, 2);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->entries, (std::vector<DistEntry>{{3, 2}, {kSeparator, 1}}));
  EXPECT_EQ(d->total, 3u);
  d = model_->ngram_dist(Q{1, 2, 3}, 4);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->entries, (std::vector<DistEntry>{{1, 1}}));
  EXPECT_FALSE(model_->ngram_dist(Q{9}, 2));
}

TEST_F(ToyModel, LongestSuffix) {
  SuffixMatch m = model_->longest_suffix(Q{7, 1, 2});
  EXPECT_EQ(m.length, 2u);
  EXPECT_EQ(m.count, 2u);
  EXPECT_EQ(model_->longest_suffix(Q{9}).length, 0u);
  EXPECT_EQ(model_->longest_suffix(Q{2, 3, 4}).length, 3u);
}

TEST_F(ToyModel, BackoffProbability) {
  InfgramResult r = model_->infgram_prob(Q{7, 1, 2}, 3);
  EXPECT_EQ(r.prob(), (Ratio{1, 2}));
  EXPECT_EQ(r.effective_n, 3u);
  EXPECT_FALSE(r.sparse);
  r = model_->infgram_prob(Q{7, 1, 2, 3}, 1);
  EXPECT_EQ(r.prob(), (Ratio{1, 1}));
  EXPECT_EQ(r.effective_n, 4u);
  EXPECT_TRUE(r.sparse);
  r = model_->infgram_prob(Q{9}, 2);
  EXPECT_EQ(r.effective_n, 1u);
  EXPECT_EQ(r.prob(), (Ratio{3, 10}));
}

TEST_F(ToyModel, BackoffDistribution) {
  auto d = model_->infgram_dist(Q{7, 1, 2});
  EXPECT_EQ(d.entries, (std::vector<DistEntry>{{3, 1}, {kSeparator, 1}}));
  EXPECT_EQ(d.total, 2u);
  auto u = model_->infgram_dist(Q{});
  std::uint64_t sum = 0;
  for (const auto& e : u.entries) sum += e.count;
  EXPECT_EQ(sum, 10u);
  EXPECT_EQ(u.total, 10u);
  EXPECT_EQ(u.effective_n, 1u);
  auto s = model_->infgram_dist(Q{7, 1, 2, 3});
  EXPECT_EQ(s.entries, (std::vector<DistEntry>{{1, 1}}));
}

TEST_F(ToyModel, DenseScan) {
  auto rs = model_->dense_scan(Q{1, 2, 3, 1, 2});
  ASSERT_EQ(rs.size(), 5u);
  EXPECT_EQ(rs[4].effective_n, 5u);
  EXPECT_EQ(rs[4].suffix_count, 1u);
  auto one = model_->dense_scan(Q{4});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].effective_n, 1u);
  EXPECT_TRUE(model_->dense_scan(Q{}).empty());
}

TEST_F(ToyModel, MinCountThreshold) {
  InfgramModel strict(*engine_, LmOptions{1024, 2});
  // [1,2,3] occurs once, so with min_count 2 the match shrinks to [2,3] (count 2).
  InfgramResult r = strict.infgram_prob(Q{1, 2, 3}, 1);
  EXPECT_EQ(r.effective_n, 3u);
  EXPECT_EQ(r.prob(), (Ratio{1, 2}));
}

TEST_F(ToyModel, MaxContextCap) {
  InfgramModel capped(*engine_, LmOptions{1, 1});
  InfgramResult r = capped.infgram_prob(Q{1, 2}, 3);
  EXPECT_EQ(r.effective_n, 2u);
  EXPECT_EQ(r.prob(), (Ratio{2, 3}));
}

// Oracle for one (context, token) pair under the nonzero-count backoff rule.
void check_against_oracle(const InfgramModel& model, const std::vector<TokenId>& flat, const Q& context,
                          TokenId token) {
  std::size_t len = naive_longest_suffix(flat, context);
  Q suffix(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
  auto cont = naive_continuations(flat, suffix);
  std::uint64_t den = naive_count(flat, suffix);
  if (len == 0) den = flat.size();
  InfgramResult r = model.infgram_prob(context, token);
  ASSERT_EQ(r.effective_n, len + 1);
  ASSERT_EQ(r.suffix_count, den);
  ASSERT_EQ(r.cont_count, cont.count(token) ? cont[token] : 0);
  ASSERT_EQ(r.sparse, cont.size() == 1);
  auto dist = model.infgram_dist(context);
  std::uint64_t sum = 0;
  for (const auto& e : dist.entries) sum += e.count;
  ASSERT_EQ(sum, dist.total);
  ASSERT_EQ(dist.total, r.suffix_count);
  ASSERT_EQ(dist.entries.size(), cont.size());
}

TEST(Infgram, RandomPairsMatchOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    TempDir tmp;
    Corpus docs = repetitive_corpus(rng, 30, uniform(rng, 20, 120), uniform(rng, 3, 40), uniform(rng, 2, 12));
    build_index(tmp.path(), docs, trial % 2 ? 700 : 0);
    CorpusIndex index = CorpusIndex::open(tmp.path());
    QueryEngine engine(index);
    InfgramModel model(engine);
    auto flat = flatten(docs);
    for (int i = 0; i < 100; ++i) {
      Q context = random_query(rng, docs, 30, 40, i % 3 != 0);
      if (i % 5 == 0) context.insert(context.begin(), 999);
      TokenId token = static_cast<TokenId>(uniform(rng, 1, 40));
      check_against_oracle(model, flat, context, token);
    }
  }
}

TEST(Infgram, DenseScanEqualsPerPositionCalls) {
  std::mt19937_64 rng(9);
  TempDir tmp;
  Corpus docs = repetitive_corpus(rng, 40, 150, 30, 10);
  build_index(tmp.path(), docs, 2000);
  CorpusIndex index = CorpusIndex::open(tmp.path());
  QueryEngine engine(index);
  InfgramModel model(engine);
  for (int i = 0; i < 10; ++i) {
    Q doc = i % 2 ? docs[uniform(rng, 0, docs.size() - 1)] : random_query(rng, docs, 100, 30, false);
    SearchStats st;
    auto scan = model.dense_scan(doc, &st);
    ASSERT_EQ(scan.size(), doc.size());
    for (std::size_t p = 0; p < doc.size(); ++p) {
      Q context(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(p));
      ASSERT_EQ(scan[p], model.infgram_prob(context, doc[p])) << "position " << p;
    }
    EXPECT_LE(st.segment_searches, 4 * doc.size());
  }
}

TEST(Infgram, EffectiveNIndependentOfToken) {
  std::mt19937_64 rng(12);
  TempDir tmp;
  Corpus docs = repetitive_corpus(rng, 20, 60, 10, 5);
  build_index(tmp.path(), docs);
  CorpusIndex index = CorpusIndex::open(tmp.path());
  QueryEngine engine(index);
  InfgramModel model(engine);
  for (int i = 0; i < 30; ++i) {
    Q context = random_query(rng, docs, 15, 10, true);
    std::uint32_t eff = model.infgram_prob(context, 1).effective_n;
    for (TokenId t = 2; t <= 10; ++t) EXPECT_EQ(model.infgram_prob(context, t).effective_n, eff);
  }
}

}  // namespace
}  // namespace sufgram
