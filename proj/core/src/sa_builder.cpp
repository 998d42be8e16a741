#include "sufgram/sa_builder.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "sufgram/common.hpp"
#include "sufgram/mapped_file.hpp"
#include "sufgram/suffix_sort.hpp"

namespace sufgram {

namespace fs = std::filesystem;

int pointer_width(std::uint64_t tokens) noexcept {
  // Smallest P with 2^(8P) >= 2 * tokens.
  int p = 1;
  while (p < 8 && tokens > (std::uint64_t{1} << (8 * p - 1))) ++p;
  return p;
}

ShardingPlan plan_shards(std::span<const std::uint64_t> doc_offsets, std::uint64_t max_tokens) {
  if (doc_offsets.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "sharding needs at least one document");
  }
  ShardingPlan plan;
  plan.boundaries.push_back(doc_offsets.front());
  const std::uint64_t max_bytes =
      max_tokens == 0 ? std::numeric_limits<std::uint64_t>::max() : 2 * max_tokens;
  std::uint64_t shard_start = doc_offsets.front();
  for (std::size_t d = 1; d + 1 < doc_offsets.size(); ++d) {
    // Close the shard before document d if including d would overflow.
    if (doc_offsets[d + 1] - shard_start > max_bytes && doc_offsets[d] > shard_start) {
      plan.boundaries.push_back(doc_offsets[d]);
      shard_start = doc_offsets[d];
    }
  }
  plan.boundaries.push_back(doc_offsets.back());
  return plan;
}

namespace {

constexpr std::uint64_t kMaxShardTokens = std::numeric_limits<std::int32_t>::max();

std::vector<std::int32_t> sort_positions(std::span<const std::uint8_t> token_bytes) {
  if (token_bytes.size() % 2 != 0) {
    throw Error(ErrorCode::kFormat, "token span has odd byte length");
  }
  const std::uint64_t n = token_bytes.size() / 2;
  if (n > kMaxShardTokens) {
    throw Error(ErrorCode::kInvalidArgument,
                "shard of " + std::to_string(n) + " tokens exceeds the 2^31-1 builder limit; "
                "lower --max-shard-tokens");
  }
  std::vector<std::uint16_t> symbols(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    symbols[i] = static_cast<std::uint16_t>((token_bytes[2 * i] << 8) | token_bytes[2 * i + 1]);
  }
  return suffix_sort<std::uint16_t>(symbols, 0xFFFF);
}

void write_positions(const fs::path& path, const std::vector<std::int32_t>& positions, int width) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  std::vector<char> buf;
  buf.reserve(std::size_t{1} << 20);
  for (std::int32_t pos : positions) {
    std::uint64_t v = static_cast<std::uint64_t>(pos) * 2;
    for (int b = 0; b < width; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
    if (buf.size() >= (std::size_t{1} << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<std::uint64_t> read_offsets(const fs::path& path) {
  MappedFile f(path);
  if (f.size() % 8 != 0) throw Error(ErrorCode::kFormat, path.string() + ": size not a multiple of 8");
  std::vector<std::uint64_t> out(f.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_le(f.data() + 8 * i, 8);
  return out;
}

// Negative when the suffix at byte a sorts before the one at byte b.
int compare_suffixes(std::span<const std::uint8_t> bytes, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t len_a = bytes.size() - a;
  const std::uint64_t len_b = bytes.size() - b;
  int c = std::memcmp(bytes.data() + a, bytes.data() + b, std::min(len_a, len_b));
  if (c != 0) return c;
  return len_a < len_b ? -1 : (len_a > len_b ? 1 : 0);
}

}  // namespace

std::vector<std::uint64_t> sort_token_suffixes(std::span<const std::uint8_t> token_bytes) {
  auto positions = sort_positions(token_bytes);
  std::vector<std::uint64_t> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = static_cast<std::uint64_t>(positions[i]) * 2;
  return out;
}

void write_suffix_array(const fs::path& path, std::span<const std::uint64_t> entries, int width) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  for (std::uint64_t v : entries) {
    char b[8];
    for (int i = 0; i < width; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, width);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<ShardDescriptor> build_suffix_arrays(const fs::path& dir, std::uint64_t max_shard_tokens) {
  Manifest manifest = Manifest::load(dir / kManifestFile);
  MappedFile tokens(dir / kTokensFile);
  if (tokens.size() != 2 * manifest.tokens) {
    throw Error(ErrorCode::kIntegrity, "tokens.bin size does not match manifest N");
  }
  auto doc_offsets = read_offsets(dir / kDocOffsetsFile);
  if (doc_offsets.size() != manifest.documents + 1 || doc_offsets.back() != tokens.size()) {
    throw Error(ErrorCode::kIntegrity, "doc.offsets inconsistent with manifest");
  }

  const std::uint64_t limit = max_shard_tokens == 0 ? kMaxShardTokens
                                                    : std::min(max_shard_tokens, kMaxShardTokens);
  ShardingPlan plan = plan_shards(doc_offsets, limit);

  for (const auto& old : manifest.shards) {
    std::error_code ec;
    fs::remove(dir / old.path, ec);
  }
  manifest.shards.clear();

  for (std::size_t k = 0; k < plan.shard_count(); ++k) {
    ShardDescriptor shard;
    shard.start = plan.boundaries[k];
    shard.end = plan.boundaries[k + 1];
    shard.tokens = (shard.end - shard.start) / 2;
    shard.width = pointer_width(shard.tokens);
    shard.path = shard_file_name(k);

    auto span = tokens.bytes().subspan(shard.start, shard.end - shard.start);
    auto positions = sort_positions(span);
    write_positions(dir / shard.path, positions, shard.width);
    manifest.shards.push_back(shard);
  }
  manifest.params["max_shard_tokens"] = std::to_string(max_shard_tokens);
  manifest.save(dir / kManifestFile);
  return manifest.shards;
}

VerifyReport verify_suffix_array(std::span<const std::uint8_t> sa, int width,
                                 std::span<const std::uint8_t> token_bytes,
                                 const VerifyOptions& options) {
  VerifyReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.violation = std::move(msg);
    return report;
  };
  if (width < 1 || width > 8) return fail("pointer width " + std::to_string(width) + " out of range");
  if (token_bytes.size() % 2) return fail("token span has odd length");
  const std::uint64_t n = token_bytes.size() / 2;
  if (sa.size() != n * static_cast<std::uint64_t>(width)) {
    return fail("suffix array holds " + std::to_string(sa.size() / width) + " entries, expected " +
                std::to_string(n));
  }

  std::vector<bool> seen(n, false);
  for (std::uint64_t r = 0; r < n; ++r) {
    std::uint64_t v = load_le(sa.data() + r * width, width);
    if (v % 2) return fail("rank " + std::to_string(r) + ": odd offset " + std::to_string(v));
    if (v >= token_bytes.size()) return fail("rank " + std::to_string(r) + ": offset out of range");
    if (seen[v / 2]) {
      return fail("permutation violation: offset " + std::to_string(v) + " repeated at rank " +
                  std::to_string(r));
    }
    seen[v / 2] = true;
    ++report.entries_checked;
  }

  auto check_pair = [&](std::uint64_t r) -> bool {
    std::uint64_t a = load_le(sa.data() + r * width, width);
    std::uint64_t b = load_le(sa.data() + (r + 1) * width, width);
    ++report.pairs_checked;
    return compare_suffixes(token_bytes, a, b) < 0;
  };
  auto order_fail = [&](std::uint64_t r) {
    return fail("unsorted adjacent pair at ranks " + std::to_string(r) + "," + std::to_string(r + 1));
  };

  if (n < 2) return report;
  if (n <= options.full_check_threshold) {
    for (std::uint64_t r = 0; r + 1 < n; ++r) {
      if (!check_pair(r)) return order_fail(r);
    }
  } else {
    std::mt19937_64 rng(options.seed);
    for (std::uint64_t i = 0; i < options.sample_pairs; ++i) {
      std::uint64_t r = rng() % (n - 1);
      if (!check_pair(r)) return order_fail(r);
    }
  }
  return report;
}

VerifyReport verify_index(const fs::path& dir, const VerifyOptions& options) {
  Manifest manifest = Manifest::load(dir / kManifestFile);
  MappedFile tokens(dir / kTokensFile);
  VerifyReport total;
  if (manifest.shards.empty()) {
    total.ok = false;
    total.violation = "index has no suffix-array shards";
    return total;
  }
  for (std::size_t k = 0; k < manifest.shards.size(); ++k) {
    const auto& s = manifest.shards[k];
    if (s.end > tokens.size() || s.start > s.end) {
      total.ok = false;
      total.violation = "shard " + std::to_string(k) + ": token range outside tokens.bin";
      return total;
    }
    MappedFile table(dir / s.path);
    auto r = verify_suffix_array(table.bytes(), s.width, tokens.bytes().subspan(s.start, s.end - s.start),
                                 options);
    total.entries_checked += r.entries_checked;
    total.pairs_checked += r.pairs_checked;
    if (!r.ok) {
      total.ok = false;
      total.violation = "shard " + std::to_string(k) + ": " + r.violation;
      return total;
    }
  }
  return total;
}

}  // namespace sufgram
