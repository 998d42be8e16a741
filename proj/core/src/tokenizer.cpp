#include "sufgram/tokenizer.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace sufgram {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kFormat: return "format_error";
    case ErrorCode::kIntegrity: return "integrity_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kClauseTooFrequent: return "clause_too_frequent";
    case ErrorCode::kUnsupported: return "unsupported";
  }
  return "unknown";
}

ClauseTooFrequent::ClauseTooFrequent(std::size_t clause, std::uint64_t ceiling)
    : Error(ErrorCode::kClauseTooFrequent,
            "clause " + std::to_string(clause) +
                " too frequent: no enumerable clause under the per-term "
                "ceiling of " +
                std::to_string(ceiling) + " occurrences"),
      clause_(clause),
      ceiling_(ceiling) {}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocabulary::Vocabulary() { words_.emplace_back("<unk>"); }

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::add(std::string_view word) {
  if (auto id = find(word)) return *id;
  if (words_.size() > kMaxTokenId) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocabulary overflow: more than " +
                    std::to_string(kMaxTokenId) +
                    " distinct word types (65535 is reserved)");
  }
  auto id = static_cast<TokenId>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(std::string(word), id);
  return id;
}

std::uint64_t Vocabulary::fingerprint() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : words_) {
    h = fnv1a64(w, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& w : words_) out << w << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  Vocabulary vocab;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;  // UNK slot
    }
    if (vocab.find(line)) {
      throw Error(ErrorCode::kFormat, "duplicate vocabulary entry '" + line +
                                          "' in " + path.string());
    }
    vocab.add(line);
  }
  return vocab;
}

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c) || std::iscntrl(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      words.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      words.emplace_back(1, text[i]);
      ++i;
    }
  }
  return words;
}

std::optional<TokenizerKind> parse_tokenizer_kind(std::string_view name) {
  if (name == "reference-word") return TokenizerKind::kReferenceWord;
  if (name == "pretokenized") return TokenizerKind::kPretokenized;
  return std::nullopt;
}

Tokenizer Tokenizer::reference_word(Vocabulary vocab) {
  Tokenizer t(TokenizerKind::kReferenceWord);
  t.vocab_ = std::move(vocab);
  return t;
}

Tokenizer Tokenizer::pretokenized() {
  return Tokenizer(TokenizerKind::kPretokenized);
}

std::string Tokenizer::id() const {
  if (kind_ == TokenizerKind::kPretokenized) return "pretokenized";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(vocab_->fingerprint()));
  return std::string("reference-word/") + buf;
}

std::vector<TokenId> parse_token_ids(std::string_view text) {
  std::vector<TokenId> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    unsigned long value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, value);
    if (ec != std::errc() || ptr != text.data() + j) {
      throw Error(ErrorCode::kInvalidArgument,
                  "not a token id: '" + std::string(text.substr(i, j - i)) + "'");
    }
    if (value > kMaxTokenId) {
      throw Error(ErrorCode::kInvalidArgument,
                  "token id out of range [0, 65534]: " + std::to_string(value));
    }
    ids.push_back(static_cast<TokenId>(value));
    i = j;
  }
  return ids;
}

std::vector<TokenId> Tokenizer::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  if (kind_ == TokenizerKind::kPretokenized) {
    out = parse_token_ids(text);
  } else {
    for (const auto& w : split_words(text)) {
      out.push_back(vocab_->find(w).value_or(kUnknownToken));
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty document rejected");
  }
  return out;
}

std::string Tokenizer::detokenize(const std::vector<TokenId>& tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    if (tokens[i] == kSeparator) {
      out += "<eod>";
    } else if (kind_ == TokenizerKind::kPretokenized ||
               tokens[i] >= vocab_->size()) {
      out += std::to_string(tokens[i]);
    } else {
      out += vocab_->word(tokens[i]);
    }
  }
  return out;
}

}  // namespace sufgram
