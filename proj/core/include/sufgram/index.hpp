#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sufgram/common.hpp"
#include "sufgram/manifest.hpp"
#include "sufgram/mapped_file.hpp"
#include "sufgram/sa_builder.hpp"
#include "sufgram/tokenizer.hpp"

namespace sufgram {

/// Random-access view of one suffix-array shard. Offsets handed out by
/// suffix() are relative to the shard's first token byte.
struct ShardView {
  const std::uint8_t* tokens = nullptr;  // first byte of the shard's span
  std::uint64_t bytes = 0;               // span length in bytes
  std::uint64_t base = 0;                // span offset within tokens.bin
  const std::uint8_t* table = nullptr;
  std::uint64_t entries = 0;
  int width = 1;
  const MappedFile* token_file = nullptr;
  const MappedFile* table_file = nullptr;

  std::uint64_t suffix(std::uint64_t rank) const noexcept {
    return load_le(table + rank * static_cast<std::uint64_t>(width), width);
  }
  TokenId token(std::uint64_t rel_byte) const noexcept {
    return static_cast<TokenId>((tokens[rel_byte] << 8) | tokens[rel_byte + 1]);
  }
};

/// One opened index directory. Files are memory-mapped and never read in
/// full; the handle is immutable after open().
class IndexDir {
 public:
  /// Validates the manifest against on-disk sizes. Throws kFormat/kIntegrity
  /// on any mismatch and kNotFound when the directory has no manifest.
  static std::unique_ptr<IndexDir> open(const std::filesystem::path& dir);

  const std::filesystem::path& path() const noexcept { return path_; }
  const Manifest& manifest() const noexcept { return manifest_; }
  const Tokenizer& tokenizer() const noexcept { return tokenizer_; }

  std::uint64_t tokens() const noexcept { return manifest_.tokens; }
  std::uint64_t documents() const noexcept { return manifest_.documents; }
  std::span<const ShardView> shards() const noexcept { return views_; }

  /// Byte offset of document d's first token; d == documents() yields the
  /// file size sentinel.
  std::uint64_t doc_offset(std::uint64_t d) const noexcept {
    return load_le(doc_offsets_.data() + 8 * d, 8);
  }
  std::string metadata(std::uint64_t d) const;

  TokenId token_at(std::uint64_t byte) const noexcept {
    return static_cast<TokenId>((tokens_.data()[byte] << 8) | tokens_.data()[byte + 1]);
  }
  std::span<const std::uint8_t> token_bytes() const noexcept { return tokens_.bytes(); }
  const MappedFile& doc_offsets_file() const noexcept { return doc_offsets_; }

  /// tokens.bin plus all suffix-array tables.
  std::uint64_t index_bytes() const noexcept;
  /// Every file the index consists of, metadata included.
  std::uint64_t bytes_on_disk() const noexcept;

 private:
  IndexDir() = default;

  std::filesystem::path path_;
  Manifest manifest_;
  Tokenizer tokenizer_ = Tokenizer::pretokenized();
  MappedFile tokens_;
  MappedFile doc_offsets_;
  MappedFile meta_;
  MappedFile meta_offsets_;
  std::vector<MappedFile> tables_;
  std::vector<ShardView> views_;
  std::uint64_t other_bytes_ = 0;
};

struct IndexMember {
  std::filesystem::path path;
  int sign = +1;
};

/// Parses `dirA,dirB,-dirC`: a leading '-' subtracts that directory,
/// a leading '+' (or nothing) adds it.
std::vector<IndexMember> parse_index_list(const std::string& spec);

/// A signed composition of index directories. Counts are summed with signs
/// at query time; nothing is re-indexed.
class CorpusIndex {
 public:
  static CorpusIndex open(const std::vector<IndexMember>& members);
  static CorpusIndex open(const std::filesystem::path& dir) {
    return open(std::vector<IndexMember>{IndexMember{dir, +1}});
  }

  std::size_t size() const noexcept { return dirs_.size(); }
  const IndexDir& dir(std::size_t i) const { return *dirs_.at(i); }
  int sign(std::size_t i) const { return signs_.at(i); }
  bool has_subtraction() const noexcept;

  /// Signed total token count; cnt of the empty n-gram.
  std::uint64_t tokens() const;
  /// Signed total document count.
  std::uint64_t documents() const;

  const Tokenizer& tokenizer() const { return dirs_.front()->tokenizer(); }
  const std::string& tokenizer_id() const { return dirs_.front()->manifest().tokenizer; }

 private:
  std::vector<std::shared_ptr<const IndexDir>> dirs_;
  std::vector<int> signs_;
};

struct IndexStats {
  std::uint64_t tokens = 0;     // N
  std::uint64_t documents = 0;  // D
  std::uint64_t shards = 0;
  std::uint64_t index_bytes = 0;   // token array + suffix arrays
  std::uint64_t bytes_on_disk = 0;  // every file
  double bytes_per_token = 0.0;     // index_bytes / N
  double unique_ngram_lower_bound = 0.0;  // N^2 / (2D)
};

/// Within-document unique n-gram lower bound N^2 / (2D): a document of
/// length L has about L^2/2 distinct (start, end) spans, minimized when all
/// documents have equal length N/D.
double unique_ngram_lower_bound(double tokens, double documents) noexcept;

/// Size of a token array plus suffix arrays for the given shard token counts.
std::uint64_t projected_index_bytes(std::span<const std::uint64_t> shard_tokens) noexcept;

IndexStats stats(const CorpusIndex& index);

}  // namespace sufgram
