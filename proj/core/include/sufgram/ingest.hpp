#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sufgram/records.hpp"
#include "sufgram/tokenizer.hpp"

namespace sufgram {

/// Tokenizes one record. Pretokenized records may carry `token_ids`
/// directly; otherwise `text` goes through the tokenizer. Empty documents are
/// rejected.
std::vector<TokenId> tokenize(const Document& doc, const Tokenizer& tokenizer);

struct IngestResult {
  std::uint64_t tokens = 0;     // N, separators included
  std::uint64_t documents = 0;  // D
};

/// Streams documents into the token-array layout of an index directory:
///   tokens.bin    big-endian u16 words, each document followed by 0xFFFF
///   doc.offsets   u64 LE byte offset of each document, plus a final sentinel
///   doc.meta      one metadata line per document
///   meta.offsets  u64 LE byte offset of each metadata line, plus sentinel
/// If the writer is destroyed before finish() succeeds, every output it
/// created is removed.
class TokenArrayWriter {
 public:
  explicit TokenArrayWriter(std::filesystem::path dir);
  ~TokenArrayWriter();

  TokenArrayWriter(const TokenArrayWriter&) = delete;
  TokenArrayWriter& operator=(const TokenArrayWriter&) = delete;

  void add(std::span<const TokenId> tokens, std::string_view metadata);

  /// Flushes and closes all files. Throws on zero documents or I/O failure.
  IngestResult finish();

 private:
  void check(std::ofstream& out, const char* name);
  void remove_outputs() noexcept;

  std::filesystem::path dir_;
  std::ofstream tokens_;
  std::ofstream doc_offsets_;
  std::ofstream meta_;
  std::ofstream meta_offsets_;
  std::uint64_t token_bytes_ = 0;
  std::uint64_t meta_bytes_ = 0;
  std::uint64_t documents_ = 0;
  bool finished_ = false;
  std::vector<char> buffer_;
};

struct IngestOptions {
  std::filesystem::path input;
  TokenizerKind tokenizer = TokenizerKind::kPretokenized;
  std::filesystem::path out;
  /// Frozen vocabulary to reuse instead of building one from the input.
  /// Indexes meant to be composed must share a vocabulary.
  std::optional<std::filesystem::path> vocab;
};

/// Reads newline-delimited records, tokenizes them and writes the token
/// array, offsets, metadata, vocabulary (reference-word only) and an initial
/// manifest without shards.
IngestResult ingest_corpus(const IngestOptions& options);

/// Writes an index directory straight from in-memory token sequences. Test
/// and tooling helper; metadata defaults to `doc=<ordinal>`.
IngestResult write_token_array(const std::filesystem::path& dir,
                               const std::vector<std::vector<TokenId>>& docs,
                               const std::string& tokenizer_id = "pretokenized",
                               const std::vector<std::string>& metadata = {});

/// Loads the tokenizer recorded in an index directory's manifest.
Tokenizer load_tokenizer(const std::filesystem::path& dir,
                         const std::string& tokenizer_id);

}  // namespace sufgram
