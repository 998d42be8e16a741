#include <gtest/gtest.h>

#include <fstream>

#include "sufgram/index.hpp"
#include "sufgram/ingest.hpp"
#include "sufgram/manifest.hpp"
#include "sufgram/sa_builder.hpp"
#include "sufgram/suffix_sort.hpp"
#include "support.hpp"

namespace sufgram {
namespace {

using namespace sufgram::testing;
namespace fs = std::filesystem;

std::vector<std::uint8_t> encode_le(const std::vector<std::uint64_t>& entries, int width) {
  std::vector<std::uint8_t> out;
  for (auto v : entries) {
    for (int b = 0; b < width; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  return out;
}

TEST(SuffixSort, ToyByteString) {
  std::string s = "aabaca";
  std::vector<std::uint8_t> bytes(s.begin(), s.end());
  auto sa = suffix_sort<std::uint8_t>(bytes, 255);
  EXPECT_EQ(sa, (std::vector<std::int32_t>{5, 0, 1, 3, 2, 4}));
}

TEST(SuffixSort, TokenSuffixesMatchNaiveSort) {
  auto bytes = to_bytes(flatten({{1, 2, 3, 1, 2}}));
  auto sa = sort_token_suffixes(bytes);
  EXPECT_EQ(sa, naive_suffix_sort(bytes));
  EXPECT_EQ(sa, (std::vector<std::uint64_t>{0, 6, 2, 8, 4, 10}));
}

TEST(SuffixSort, SmallCases) {
  EXPECT_TRUE(sort_token_suffixes({}).empty());
  EXPECT_EQ(sort_token_suffixes(to_bytes({7})), (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(sort_token_suffixes(to_bytes({2, 1})), (std::vector<std::uint64_t>{2, 0}));
  EXPECT_EQ(sort_token_suffixes(to_bytes({1, 1, 1, 1})), (std::vector<std::uint64_t>{6, 4, 2, 0}));
}

TEST(SuffixSort, RandomInputsMatchNaiveSort) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t vocab = std::vector<std::size_t>{1, 2, 4, 300, 65534}[trial % 5];
    CorpusShape shape{uniform(rng, 1, 3000), vocab, 1, 100, 0.0};
    auto bytes = to_bytes(flatten(random_corpus(rng, shape)));
    ASSERT_EQ(sort_token_suffixes(bytes), naive_suffix_sort(bytes)) << "trial " << trial;
  }
}

TEST(SuffixSort, RandomByteStrings) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> bytes(uniform(rng, 1, 2000));
    std::uint32_t alpha = static_cast<std::uint32_t>(uniform(rng, 1, 255));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(uniform(rng, 0, alpha));
    auto sa = suffix_sort<std::uint8_t>(bytes, 255);
    std::vector<std::uint64_t> got(sa.begin(), sa.end());
    ASSERT_EQ(got, naive_suffix_sort(bytes, 1));
  }
}

TEST(PointerWidth, SmallestSufficientWidth) {
  EXPECT_EQ(pointer_width(0), 1);
  EXPECT_EQ(pointer_width(1), 1);
  EXPECT_EQ(pointer_width(128), 1);
  EXPECT_EQ(pointer_width(129), 2);
  EXPECT_EQ(pointer_width(32768), 2);
  EXPECT_EQ(pointer_width(32769), 3);
  EXPECT_EQ(pointer_width(2'000'000'000ull), 4);
  EXPECT_EQ(pointer_width(3'000'000'000ull), 5);
  EXPECT_EQ(pointer_width(500'000'000'000ull), 5);
  EXPECT_EQ(pointer_width(~0ull), 8);
}

TEST(Sharding, DocumentAligned) {
  std::vector<std::uint64_t> offsets{0, 12, 20};
  EXPECT_EQ(plan_shards(offsets, 0).boundaries, (std::vector<std::uint64_t>{0, 20}));
  EXPECT_EQ(plan_shards(offsets, 6).boundaries, (std::vector<std::uint64_t>{0, 12, 20}));
  EXPECT_EQ(plan_shards(offsets, 2).boundaries, (std::vector<std::uint64_t>{0, 12, 20}));
  EXPECT_EQ(plan_shards(offsets, 10).boundaries, (std::vector<std::uint64_t>{0, 20}));
  EXPECT_THROW(plan_shards(std::vector<std::uint64_t>{0}, 0), Error);
}

TEST(Sharding, NeverSplitsDocuments) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint64_t> offsets{0};
    std::size_t docs = uniform(rng, 1, 40);
    for (std::size_t d = 0; d < docs; ++d) offsets.push_back(offsets.back() + 2 * uniform(rng, 2, 50));
    std::uint64_t max_tokens = uniform(rng, 1, 200);
    auto plan = plan_shards(offsets, max_tokens);
    EXPECT_EQ(plan.boundaries.front(), 0u);
    EXPECT_EQ(plan.boundaries.back(), offsets.back());
    for (std::size_t k = 0; k + 1 < plan.boundaries.size(); ++k) {
      EXPECT_TRUE(std::binary_search(offsets.begin(), offsets.end(), plan.boundaries[k]));
      std::uint64_t tokens = (plan.boundaries[k + 1] - plan.boundaries[k]) / 2;
      bool single_doc = std::upper_bound(offsets.begin(), offsets.end(), plan.boundaries[k])[0] ==
                        plan.boundaries[k + 1];
      EXPECT_TRUE(tokens <= max_tokens || single_doc);
    }
  }
}

TEST(Verify, AcceptsValidAndReportsViolations) {
  auto bytes = to_bytes(flatten(toy_corpus()));
  auto sa = sort_token_suffixes(bytes);
  EXPECT_TRUE(verify_suffix_array(encode_le(sa, 1), 1, bytes).ok);

  auto swapped = sa;
  std::swap(swapped[3], swapped[4]);
  VerifyReport r = verify_suffix_array(encode_le(swapped, 1), 1, bytes);
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.violation.find("unsorted adjacent pair at ranks 3,4"), std::string::npos) << r.violation;

  auto dup = sa;
  dup[4] = dup[3];
  r = verify_suffix_array(encode_le(dup, 1), 1, bytes);
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.violation.find("permutation violation"), std::string::npos) << r.violation;

  auto odd = sa;
  odd[0] = 1;
  EXPECT_FALSE(verify_suffix_array(encode_le(odd, 1), 1, bytes).ok);
  EXPECT_FALSE(verify_suffix_array(encode_le(sa, 1), 2, bytes).ok);
}

TEST(Build, WritesShardsAndManifest) {
  TempDir tmp;
  write_token_array(tmp.path(), toy_corpus());
  auto shards = build_suffix_arrays(tmp.path(), 6);
  ASSERT_EQ(shards.size(), 2u);
  EXPECT_EQ(shards[0], (ShardDescriptor{"table.0.bin", 6, 1, 0, 12}));
  EXPECT_EQ(shards[1], (ShardDescriptor{"table.1.bin", 4, 1, 12, 20}));
  Manifest m = Manifest::load(tmp / kManifestFile);
  EXPECT_EQ(m.shards, shards);
  EXPECT_EQ(fs::file_size(tmp / "table.0.bin"), 6u);
  EXPECT_TRUE(verify_index(tmp.path()).ok);

  // Rebuilding with one shard removes the stale second table.
  shards = build_suffix_arrays(tmp.path(), 0);
  ASSERT_EQ(shards.size(), 1u);
  EXPECT_FALSE(fs::exists(tmp / "table.1.bin"));
  EXPECT_TRUE(verify_index(tmp.path()).ok);
}

TEST(Build, ShardEntriesAreShardRelative) {
  TempDir tmp;
  write_token_array(tmp.path(), toy_corpus());
  build_suffix_arrays(tmp.path(), 6);
  auto dir = IndexDir::open(tmp.path());
  const ShardView& s = dir->shards()[1];
  auto expect = naive_suffix_sort(to_bytes(flatten({{2, 3, 4}})));
  for (std::uint64_t r = 0; r < s.entries; ++r) EXPECT_EQ(s.suffix(r), expect[r]);
}

TEST(Build, CorruptedTableFailsVerification) {
  TempDir tmp;
  build_index(tmp.path(), toy_corpus());
  {
    std::fstream f(tmp / "table.0.bin", std::ios::in | std::ios::out | std::ios::binary);
    char a, b;
    f.seekg(2);
    f.get(a);
    f.get(b);
    f.seekp(2);
    f.put(b);
    f.put(a);
  }
  VerifyReport r = verify_index(tmp.path());
  EXPECT_FALSE(r.ok);
}

TEST(Build, RandomShardedIndexesVerify) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    TempDir tmp;
    CorpusShape shape{uniform(rng, 100, 5000), uniform(rng, 2, 500), 1, 300, 0.0};
    build_index(tmp.path(), random_corpus(rng, shape), uniform(rng, 0, 2000));
    VerifyReport r = verify_index(tmp.path());
    EXPECT_TRUE(r.ok) << r.violation;
  }
}

}  // namespace
}  // namespace sufgram
