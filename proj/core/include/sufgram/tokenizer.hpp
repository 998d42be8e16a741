#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sufgram/common.hpp"

namespace sufgram {

/// Word vocabulary for the reference tokenizer. ID 0 is reserved for unknown
/// words; real words get IDs 1.. in order of first insertion.
class Vocabulary {
 public:
  Vocabulary();

  std::optional<TokenId> find(std::string_view word) const;

  /// Returns the existing ID or assigns the next free one. Throws when the
  /// vocabulary would need the separator ID.
  TokenId add(std::string_view word);

  /// Number of IDs in use, including UNK.
  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(TokenId id) const { return words_.at(id); }

  /// Stable 64-bit fingerprint of the word list, used to tag tokenizer ids.
  std::uint64_t fingerprint() const noexcept;

  /// One word per line; line k holds the word for ID k.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Splits on whitespace; runs of alphanumerics (plus bytes >= 0x80) form one
/// word, every other printable character is its own word.
std::vector<std::string> split_words(std::string_view text);

enum class TokenizerKind { kReferenceWord, kPretokenized };

std::optional<TokenizerKind> parse_tokenizer_kind(std::string_view name);

class Tokenizer {
 public:
  static Tokenizer reference_word(Vocabulary vocab);
  static Tokenizer pretokenized();

  TokenizerKind kind() const noexcept { return kind_; }

  /// `reference-word/<fingerprint>` or `pretokenized`.
  std::string id() const;

  /// Throws kInvalidArgument on empty input or, for pretokenized text, on
  /// anything that is not a whitespace-separated list of IDs in [0, 65534].
  std::vector<TokenId> tokenize(std::string_view text) const;

  /// Renders tokens back to text for display. Pretokenized yields the IDs.
  std::string detokenize(const std::vector<TokenId>& tokens) const;

  const Vocabulary* vocabulary() const noexcept {
    return vocab_ ? &*vocab_ : nullptr;
  }

 private:
  explicit Tokenizer(TokenizerKind kind) : kind_(kind) {}

  TokenizerKind kind_;
  std::optional<Vocabulary> vocab_;
};

/// Parses whitespace-separated token IDs. Throws on malformed or out-of-range
/// values (the separator 65535 is rejected).
std::vector<TokenId> parse_token_ids(std::string_view text);

/// Stable FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

}  // namespace sufgram
