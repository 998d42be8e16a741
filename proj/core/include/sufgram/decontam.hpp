#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace sufgram {

struct ContaminationSpec {
  std::size_t n = 13;
  double threshold = 0.80;  // remove when present / total >= threshold
  bool lowercase = false;

  void validate() const;
};

/// Distinct whitespace-delimited word n-grams of `text`, words joined by a
/// single space. Empty when the text has fewer than n words.
std::vector<std::string> word_ngrams(std::string_view text, const ContaminationSpec& spec);

/// Bit-array Bloom filter with double hashing (h1 + i * h2).
class BloomFilter {
 public:
  BloomFilter(std::uint64_t expected_items, double false_positive_rate);

  void insert(std::string_view key);
  bool maybe_contains(std::string_view key) const;

  std::uint64_t bit_count() const noexcept { return bits_; }
  int hash_count() const noexcept { return hashes_; }

 private:
  std::uint64_t bits_;
  int hashes_;
  std::vector<std::uint64_t> words_;
};

enum class MembershipMode { kExact, kBloom };

/// All word n-grams of an evaluation set. Exact mode stores the n-grams;
/// Bloom mode may report false positives at the configured rate but never
/// false negatives.
class EvalNgramSet {
 public:
  static EvalNgramSet build(const std::vector<std::string>& eval_texts, const ContaminationSpec& spec,
                            MembershipMode mode = MembershipMode::kBloom, double false_positive_rate = 1e-4);

  bool contains(std::string_view ngram) const;
  std::size_t size() const noexcept { return count_; }
  MembershipMode mode() const noexcept { return mode_; }
  const ContaminationSpec& spec() const noexcept { return spec_; }

 private:
  ContaminationSpec spec_;
  MembershipMode mode_ = MembershipMode::kExact;
  std::size_t count_ = 0;
  std::unordered_set<std::string> exact_;
  std::unique_ptr<BloomFilter> bloom_;
};

struct DocDecision {
  std::uint64_t ngrams = 0;   // distinct n-grams in the document
  std::uint64_t present = 0;  // of which found in the eval set
  bool removed = false;
};

/// Documents with no n-grams are kept.
DocDecision judge(std::string_view text, const EvalNgramSet& eval);

struct SubsetStats {
  std::uint64_t total_docs = 0;
  std::uint64_t filtered_docs = 0;
  double ratio() const noexcept {
    return total_docs ? static_cast<double>(filtered_docs) / static_cast<double>(total_docs) : 0.0;
  }
};

struct DecontamStats {
  std::map<std::string, SubsetStats> subsets;
  SubsetStats total;
};

struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
  DecontamStats stats;
};

FilterResult filter_corpus(const std::vector<std::string>& docs, const EvalNgramSet& eval,
                           const std::vector<std::string>& subsets = {});

/// File-level driver: reads records, writes kept and removed records
/// (original lines, unchanged) and a JSON stats file.
DecontamStats decontaminate_files(const std::filesystem::path& corpus, const std::filesystem::path& eval,
                                  const ContaminationSpec& spec, MembershipMode mode,
                                  const std::filesystem::path& kept, const std::filesystem::path& removed,
                                  const std::filesystem::path& stats, double false_positive_rate = 1e-4);

nlohmann::json to_json(const DecontamStats& stats);

}  // namespace sufgram
