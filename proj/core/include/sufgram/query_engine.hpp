#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sufgram/index.hpp"

namespace sufgram {

using Ngram = std::span<const TokenId>;

/// Half-open run [lo, hi) of suffix-array ranks in one shard whose suffixes
/// all start with the searched n-gram.
struct SegmentRange {
  std::size_t dir = 0;
  std::size_t shard = 0;
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  std::uint64_t width() const noexcept { return hi - lo; }
  bool operator==(const SegmentRange&) const = default;
};

using Segments = std::vector<SegmentRange>;

/// Instrumentation for complexity checks. Not thread-safe; use one per call
/// chain.
struct SearchStats {
  std::uint64_t segment_searches = 0;   // find_segment calls ("count operations")
  std::uint64_t boundaries = 0;         // boundary binary searches
  std::uint64_t comparisons = 0;        // suffix comparisons, total
  std::uint64_t max_boundary_comparisons = 0;
  std::uint64_t max_boundary_budget_excess = 0;  // max(comparisons - (ceil(log2 N_s) + 2)), 0 if within
};

struct QueryOptions {
  /// madvise(WILLNEED) the suffix-array pages of the next probe candidates.
  bool prefetch = false;
  /// Terms occurring more often than this are not enumerated by search_docs.
  std::uint64_t term_ceiling = 500000;
};

struct Position {
  std::size_t dir = 0;
  std::uint64_t byte = 0;  // byte offset in that directory's tokens.bin

  bool operator==(const Position&) const = default;
  auto operator<=>(const Position&) const = default;
};

struct TermMatch {
  std::size_t clause = 0;
  std::size_t term = 0;
  std::vector<std::uint64_t> positions;  // token offsets within the document
};

struct DocRef {
  std::size_t dir = 0;
  std::uint64_t ordinal = 0;
  std::uint64_t begin = 0;  // byte span in tokens.bin, separator included
  std::uint64_t end = 0;
  std::string metadata;
  std::vector<TermMatch> matches;

  std::uint64_t token_count() const noexcept { return (end - begin) / 2 - 1; }
};

/// Conjunction of disjunctions of n-gram terms.
struct CnfQuery {
  std::vector<std::vector<std::vector<TokenId>>> clauses;
};

class QueryEngine {
 public:
  explicit QueryEngine(const CorpusIndex& index, QueryOptions options = {});

  const CorpusIndex& index() const noexcept { return *index_; }
  const QueryOptions& options() const noexcept { return options_; }

  /// One segment per (directory, shard), in directory then shard order.
  /// With a hint (the segments of a prefix of q) each search is confined to
  /// the hinted range. The empty n-gram matches every rank. The separator is
  /// accepted only as the final token.
  Segments find_segment(Ngram q, const Segments* hint = nullptr, SearchStats* stats = nullptr) const;

  /// Signed sum of segment widths. Throws kIntegrity if negative.
  std::uint64_t total(const Segments& segments) const;

  /// Occurrences of q in the signed corpus; cnt of the empty n-gram is N.
  /// q must not contain the separator.
  std::uint64_t count(Ngram q, SearchStats* stats = nullptr) const;

  /// Every occurrence when there are at most `limit`, else a seeded uniform
  /// sample of `limit`. Sorted by (dir, byte). Not defined for compositions
  /// with subtracted directories.
  std::vector<Position> positions(Ngram q, std::uint64_t limit, std::uint64_t seed) const;

  /// Enclosing document of a token. Throws kInvalidArgument for odd or
  /// out-of-range offsets and for separator positions.
  DocRef doc_of(std::size_t dir, std::uint64_t byte) const;

  /// Tokens of a document, separator excluded.
  std::vector<TokenId> document_tokens(const DocRef& doc) const;

  /// Exact CNF evaluation, sampled down to `maxnum` documents by `seed`.
  /// Clauses whose terms all stay under the ceiling are enumerated from the
  /// suffix array and intersected; the remaining clauses are checked by
  /// scanning candidate documents. Throws ClauseTooFrequent when no clause
  /// can be enumerated.
  /// `matching`, when given, receives the number of matching documents
  /// before sampling.
  std::vector<DocRef> search_docs(const CnfQuery& query, std::uint64_t maxnum, std::uint64_t seed,
                                  std::uint64_t* matching = nullptr) const;

 private:
  SegmentRange search_shard(std::size_t dir, std::size_t shard, Ngram q, std::uint64_t lo,
                            std::uint64_t hi, SearchStats* stats) const;

  const CorpusIndex* index_;
  QueryOptions options_;
};

/// Occurrence offsets of `term` in `doc` (naive scan).
std::vector<std::uint64_t> find_in_tokens(std::span<const TokenId> doc, Ngram term);

}  // namespace sufgram
