#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sufgram/manifest.hpp"

namespace sufgram {

/// Bytes per suffix-array entry for a shard of `tokens` tokens: the smallest
/// P with 256^P >= 2 * tokens, never below 1.
int pointer_width(std::uint64_t tokens) noexcept;

/// Document-aligned shard boundaries as byte offsets into tokens.bin. The
/// first boundary is 0 and the last is the token file size.
struct ShardingPlan {
  std::vector<std::uint64_t> boundaries;

  std::size_t shard_count() const noexcept {
    return boundaries.empty() ? 0 : boundaries.size() - 1;
  }
};

/// Packs whole documents greedily into shards of at most `max_tokens` tokens
/// (0 means a single shard). A document longer than `max_tokens` gets a shard
/// of its own. `doc_offsets` includes the trailing sentinel.
ShardingPlan plan_shards(std::span<const std::uint64_t> doc_offsets,
                         std::uint64_t max_tokens);

/// Sorts the token-aligned suffixes of a big-endian token byte span. Returns
/// byte offsets relative to the span start.
std::vector<std::uint64_t> sort_token_suffixes(std::span<const std::uint8_t> token_bytes);

/// Writes `entries` as `width`-byte little-endian integers.
void write_suffix_array(const std::filesystem::path& path,
                        std::span<const std::uint64_t> entries, int width);

inline std::uint64_t load_le(const std::uint8_t* p, int width) noexcept {
  std::uint64_t v = 0;
  for (int i = width - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

/// Builds `table.<k>.bin` for every shard of the index at `dir` and records
/// the shards in its manifest. Existing shard files are replaced.
std::vector<ShardDescriptor> build_suffix_arrays(const std::filesystem::path& dir,
                                                 std::uint64_t max_shard_tokens);

struct VerifyOptions {
  /// Shards with at most this many entries get every adjacent pair checked.
  std::uint64_t full_check_threshold = 1u << 22;
  /// Adjacent pairs sampled in larger shards.
  std::uint64_t sample_pairs = 100000;
  std::uint64_t seed = 0;
};

struct VerifyReport {
  bool ok = true;
  std::string violation;  // first failure, empty when ok
  std::uint64_t entries_checked = 0;
  std::uint64_t pairs_checked = 0;
};

/// Checks that `sa` (width-byte LE entries) is a permutation of the even
/// offsets of `token_bytes` and that adjacent entries are in ascending suffix
/// order.
VerifyReport verify_suffix_array(std::span<const std::uint8_t> sa, int width,
                                 std::span<const std::uint8_t> token_bytes,
                                 const VerifyOptions& options = {});

/// Verifies every shard of an index directory.
VerifyReport verify_index(const std::filesystem::path& dir, const VerifyOptions& options = {});

}  // namespace sufgram
