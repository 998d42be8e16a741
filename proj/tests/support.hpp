#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sufgram/common.hpp"

namespace sufgram::testing {

using Doc = std::vector<TokenId>;
using Corpus = std::vector<Doc>;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// A = [1,2,3,1,2], B = [2,3,4].
Corpus toy_corpus();

/// Ingests `docs` into `dir` and builds its suffix arrays.
void build_index(const std::filesystem::path& dir, const Corpus& docs, std::uint64_t max_shard_tokens = 0);

struct CorpusShape {
  std::size_t total_tokens = 1000;  // approximate, separators excluded
  std::size_t vocab = 256;          // ids 1..vocab
  std::size_t min_doc = 1;
  std::size_t max_doc = 200;
  double zipf = 0.0;                // 0: uniform ids
};

Corpus random_corpus(std::mt19937_64& rng, const CorpusShape& shape);

/// Repeats random phrases so long n-grams recur.
Corpus repetitive_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t doc_len, std::size_t vocab,
                         std::size_t phrase_len);

/// Flattened token array with separators after each document.
std::vector<TokenId> flatten(const Corpus& docs);

/// Big-endian byte encoding of a token array.
std::vector<std::uint8_t> to_bytes(const std::vector<TokenId>& tokens);

/// Naive full-scan occurrence count of q (q without separators, may be empty).
std::uint64_t naive_count(const std::vector<TokenId>& flat, const std::vector<TokenId>& q);

/// Naive next-token counts after every occurrence of q.
std::map<TokenId, std::uint64_t> naive_continuations(const std::vector<TokenId>& flat, const std::vector<TokenId>& q);

/// Longest suffix of `context` with a nonzero count, by trying every length.
std::size_t naive_longest_suffix(const std::vector<TokenId>& flat, const std::vector<TokenId>& context,
                                 std::uint64_t min_count = 1);

struct BackoffOracle {
  std::size_t length = 0;         // longest context suffix with a nonzero count
  std::uint64_t suffix_count = 0;  // its count (N for the empty suffix)
  std::map<TokenId, std::uint64_t> continuations;
};

/// One pass over the token array: for every position, how far the context
/// matches backwards from there.
BackoffOracle naive_backoff(const std::vector<TokenId>& flat, const std::vector<TokenId>& context);

/// Sorts even byte offsets of `bytes` by comparing whole byte suffixes.
std::vector<std::uint64_t> naive_suffix_sort(const std::vector<std::uint8_t>& bytes, std::size_t step = 2);

/// A random n-gram: a slice of some document when `from_corpus`, else random ids.
std::vector<TokenId> random_query(std::mt19937_64& rng, const Corpus& docs, std::size_t max_len, std::size_t vocab,
                                  bool from_corpus);

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi);  // inclusive

/// FNV-1a over every regular file under `dir`, by sorted relative path.
std::uint64_t checksum_dir(const std::filesystem::path& dir);

}  // namespace sufgram::testing
