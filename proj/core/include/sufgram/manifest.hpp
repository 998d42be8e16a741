#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sufgram {

/// One suffix-array shard. Byte range [start, end) of tokens.bin; entries are
/// stored as offsets relative to `start`, `width` bytes each, little-endian.
struct ShardDescriptor {
  std::string path;  // relative to the index directory
  std::uint64_t tokens = 0;
  int width = 1;
  std::uint64_t start = 0;
  std::uint64_t end = 0;

  bool operator==(const ShardDescriptor&) const = default;
};

/// `key=value` text file at the root of each index directory.
struct Manifest {
  int version = 0;
  std::string tokenizer;
  std::uint64_t tokens = 0;     // N, separators included
  std::uint64_t documents = 0;  // D
  std::vector<ShardDescriptor> shards;
  std::map<std::string, std::string> params;  // creation parameters

  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const Manifest&) const = default;
};

inline constexpr const char* kManifestFile = "manifest";
inline constexpr const char* kTokensFile = "tokens.bin";
inline constexpr const char* kDocOffsetsFile = "doc.offsets";
inline constexpr const char* kDocMetaFile = "doc.meta";
inline constexpr const char* kMetaOffsetsFile = "meta.offsets";
inline constexpr const char* kVocabFile = "vocab.txt";

std::string shard_file_name(std::size_t k);

}  // namespace sufgram
