#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sufgram/query_engine.hpp"

namespace sufgram {

/// Exact count ratio. Converted to floating point only for display.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const noexcept { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
  bool operator==(const Ratio&) const = default;
};

/// Fixed-n estimate cnt(context + token) / cnt(context).
struct NgramEstimate {
  std::uint64_t cont_count = 0;
  std::uint64_t context_count = 0;

  Ratio prob() const noexcept { return {cont_count, context_count}; }
  bool operator==(const NgramEstimate&) const = default;
};

/// Backoff estimate for one (context, token) pair.
struct InfgramResult {
  std::uint64_t cont_count = 0;
  std::uint64_t suffix_count = 0;  // > 0
  std::uint32_t effective_n = 1;   // matched suffix length + 1
  bool sparse = false;             // exactly one possible next token

  Ratio prob() const noexcept { return {cont_count, suffix_count}; }
  bool operator==(const InfgramResult&) const = default;
};

struct DistEntry {
  TokenId token = 0;
  std::uint64_t count = 0;

  bool operator==(const DistEntry&) const = default;
};

/// Next-token counts over a context's continuation segment, sorted by token.
/// The separator (end of document) is a regular outcome.
struct NextTokenDistribution {
  std::vector<DistEntry> entries;
  std::uint64_t total = 0;  // == sum of entry counts
  std::uint32_t effective_n = 0;

  Ratio prob(const DistEntry& e) const noexcept { return {e.count, total}; }
  bool operator==(const NextTokenDistribution&) const = default;
};

struct SuffixMatch {
  std::size_t length = 0;  // tokens of the context suffix that matched
  std::uint64_t count = 0;
  Segments segments;
};

struct LmOptions {
  /// Only the last max_context tokens of a context are considered (0: no cap).
  std::size_t max_context = 1024;
  /// A suffix is usable when its count reaches this value.
  std::uint64_t min_count = 1;
};

class InfgramModel {
 public:
  explicit InfgramModel(const QueryEngine& engine, LmOptions options = {});

  const QueryEngine& engine() const noexcept { return *engine_; }
  const LmOptions& options() const noexcept { return options_; }

  /// n-gram estimate from the last n-1 context tokens; nullopt when the
  /// context count is 0. Throws if n == 0 or n > |context| + 1.
  std::optional<NgramEstimate> ngram_prob(Ngram context, TokenId token, std::size_t n,
                                          SearchStats* stats = nullptr) const;

  std::optional<NextTokenDistribution> ngram_dist(Ngram context, std::size_t n) const;

  /// Longest context suffix whose count reaches min_count, located with
  /// exponential then binary search over the suffix length.
  SuffixMatch longest_suffix(Ngram context, SearchStats* stats = nullptr) const;

  InfgramResult infgram_prob(Ngram context, TokenId token, SearchStats* stats = nullptr) const;

  NextTokenDistribution infgram_dist(Ngram context) const;

  /// infgram_prob for every position of a document, context restarting at
  /// the document start. Reuses the previous position's match: the matched
  /// suffix can grow by at most one token per step.
  std::vector<InfgramResult> dense_scan(Ngram doc, SearchStats* stats = nullptr) const;

 private:
  Ngram capped(Ngram context) const noexcept;
  Segments all_ranks() const;
  bool deterministic(const Segments& segments, std::size_t depth) const;
  NextTokenDistribution continuations(const Segments& segments, std::size_t depth) const;
  InfgramResult finish(Ngram context, std::size_t length, const Segments& suffix_segments,
                       TokenId token, SearchStats* stats, Segments* extended) const;

  const QueryEngine* engine_;
  LmOptions options_;
};

}  // namespace sufgram
