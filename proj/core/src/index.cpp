#include "sufgram/index.hpp"

#include <system_error>

#include "sufgram/ingest.hpp"

namespace sufgram {

namespace fs = std::filesystem;

namespace {

std::uint64_t file_size_or_zero(const fs::path& p) {
  std::error_code ec;
  auto s = fs::file_size(p, ec);
  return ec ? 0 : s;
}

[[noreturn]] void integrity(const fs::path& dir, const std::string& msg) {
  throw Error(ErrorCode::kIntegrity, dir.string() + ": " + msg);
}

}  // namespace

std::unique_ptr<IndexDir> IndexDir::open(const fs::path& dir) {
  if (!fs::exists(dir / kManifestFile)) {
    throw Error(ErrorCode::kNotFound, "no index at " + dir.string() + " (missing manifest)");
  }
  std::unique_ptr<IndexDir> idx(new IndexDir());
  idx->path_ = dir;
  idx->manifest_ = Manifest::load(dir / kManifestFile);
  const Manifest& m = idx->manifest_;

  if (m.tokens == 0) integrity(dir, "empty index (N = 0)");
  if (m.shards.empty()) integrity(dir, "no suffix-array shards; run build-sa first");

  idx->tokens_ = MappedFile(dir / kTokensFile);
  if (idx->tokens_.size() != 2 * m.tokens) {
    integrity(dir, "tokens.bin has " + std::to_string(idx->tokens_.size()) + " bytes, manifest N=" +
                       std::to_string(m.tokens) + " requires " + std::to_string(2 * m.tokens));
  }
  idx->doc_offsets_ = MappedFile(dir / kDocOffsetsFile);
  if (idx->doc_offsets_.size() != 8 * (m.documents + 1)) {
    integrity(dir, "doc.offsets size does not match D=" + std::to_string(m.documents));
  }
  idx->meta_offsets_ = MappedFile(dir / kMetaOffsetsFile);
  if (idx->meta_offsets_.size() != 8 * (m.documents + 1)) {
    integrity(dir, "meta.offsets size does not match D=" + std::to_string(m.documents));
  }
  idx->meta_ = MappedFile(dir / kDocMetaFile);
  if (idx->doc_offset(0) != 0 || idx->doc_offset(m.documents) != 2 * m.tokens) {
    integrity(dir, "doc.offsets does not span tokens.bin");
  }
  if (load_le(idx->meta_offsets_.data() + 8 * m.documents, 8) != idx->meta_.size()) {
    integrity(dir, "meta.offsets sentinel does not match doc.meta size");
  }
  if (idx->token_at(2 * m.tokens - 2) != kSeparator) {
    integrity(dir, "tokens.bin does not end with the separator");
  }

  std::uint64_t expected_start = 0;
  idx->tables_.reserve(m.shards.size());
  for (std::size_t k = 0; k < m.shards.size(); ++k) {
    const auto& s = m.shards[k];
    if (s.start != expected_start || s.end < s.start || s.end > 2 * m.tokens ||
        s.end - s.start != 2 * s.tokens) {
      integrity(dir, "shard " + std::to_string(k) + " token range is inconsistent");
    }
    if (s.width < 1 || s.width > 8 || pointer_width(s.tokens) > s.width) {
      integrity(dir, "shard " + std::to_string(k) + " pointer width " + std::to_string(s.width) +
                         " cannot address " + std::to_string(s.tokens) + " tokens");
    }
    expected_start = s.end;
    idx->tables_.emplace_back(dir / s.path);
    if (idx->tables_.back().size() != s.tokens * static_cast<std::uint64_t>(s.width)) {
      integrity(dir, "shard " + std::to_string(k) + " table size " +
                         std::to_string(idx->tables_.back().size()) + " != N_s*P");
    }
  }
  if (expected_start != 2 * m.tokens) integrity(dir, "shards do not cover tokens.bin");

  for (std::size_t k = 0; k < m.shards.size(); ++k) {
    const auto& s = m.shards[k];
    ShardView v;
    v.tokens = idx->tokens_.data() + s.start;
    v.bytes = s.end - s.start;
    v.base = s.start;
    v.table = idx->tables_[k].data();
    v.entries = s.tokens;
    v.width = s.width;
    v.token_file = &idx->tokens_;
    v.table_file = &idx->tables_[k];
    idx->views_.push_back(v);
  }

  idx->tokenizer_ = load_tokenizer(dir, m.tokenizer);
  idx->other_bytes_ = idx->doc_offsets_.size() + idx->meta_offsets_.size() + idx->meta_.size() +
                      file_size_or_zero(dir / kManifestFile) + file_size_or_zero(dir / kVocabFile);
  return idx;
}

std::string IndexDir::metadata(std::uint64_t d) const {
  if (d >= documents()) throw Error(ErrorCode::kInvalidArgument, "document ordinal out of range");
  std::uint64_t b = load_le(meta_offsets_.data() + 8 * d, 8);
  std::uint64_t e = load_le(meta_offsets_.data() + 8 * (d + 1), 8);
  if (e < b || e > meta_.size()) throw Error(ErrorCode::kIntegrity, "meta.offsets corrupt");
  std::string line(reinterpret_cast<const char*>(meta_.data()) + b, e - b);
  if (!line.empty() && line.back() == '\n') line.pop_back();
  return line;
}

std::uint64_t IndexDir::index_bytes() const noexcept {
  std::uint64_t total = tokens_.size();
  for (const auto& t : tables_) total += t.size();
  return total;
}

std::uint64_t IndexDir::bytes_on_disk() const noexcept { return index_bytes() + other_bytes_; }

std::vector<IndexMember> parse_index_list(const std::string& spec) {
  std::vector<IndexMember> out;
  std::size_t i = 0;
  while (i <= spec.size()) {
    std::size_t j = spec.find(',', i);
    if (j == std::string::npos) j = spec.size();
    std::string item = spec.substr(i, j - i);
    if (!item.empty()) {
      IndexMember m;
      if (item[0] == '-' || item[0] == '+') {
        m.sign = item[0] == '-' ? -1 : +1;
        item.erase(0, 1);
      }
      m.path = item;
      out.push_back(std::move(m));
    }
    i = j + 1;
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty index list");
  return out;
}

CorpusIndex CorpusIndex::open(const std::vector<IndexMember>& members) {
  if (members.empty()) throw Error(ErrorCode::kInvalidArgument, "no index directories given");
  CorpusIndex ci;
  for (const auto& m : members) {
    if (m.sign != 1 && m.sign != -1) throw Error(ErrorCode::kInvalidArgument, "sign must be +1 or -1");
    ci.dirs_.push_back(IndexDir::open(m.path));
    ci.signs_.push_back(m.sign);
  }
  const std::string& tok = ci.dirs_.front()->manifest().tokenizer;
  for (const auto& d : ci.dirs_) {
    if (d->manifest().tokenizer != tok) {
      throw Error(ErrorCode::kInvalidArgument, "mixed tokenizers: " + tok + " vs " +
                                                   d->manifest().tokenizer + " (" + d->path().string() + ")");
    }
  }
  if (ci.signs_.front() != +1 && ci.signs_.size() == 1) {
    throw Error(ErrorCode::kInvalidArgument, "a composition needs at least one added index");
  }
  std::int64_t n = 0;
  for (std::size_t i = 0; i < ci.dirs_.size(); ++i) n += ci.signs_[i] * static_cast<std::int64_t>(ci.dirs_[i]->tokens());
  if (n <= 0) throw Error(ErrorCode::kIntegrity, "composition has non-positive total token count");
  return ci;
}

bool CorpusIndex::has_subtraction() const noexcept {
  for (int s : signs_) {
    if (s < 0) return true;
  }
  return false;
}

std::uint64_t CorpusIndex::tokens() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < dirs_.size(); ++i) n += signs_[i] * static_cast<std::int64_t>(dirs_[i]->tokens());
  return static_cast<std::uint64_t>(n);
}

std::uint64_t CorpusIndex::documents() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < dirs_.size(); ++i) n += signs_[i] * static_cast<std::int64_t>(dirs_[i]->documents());
  if (n < 0) throw Error(ErrorCode::kIntegrity, "composition has negative document count");
  return static_cast<std::uint64_t>(n);
}

double unique_ngram_lower_bound(double tokens, double documents) noexcept {
  if (documents <= 0) return 0.0;
  return tokens * tokens / (2.0 * documents);
}

std::uint64_t projected_index_bytes(std::span<const std::uint64_t> shard_tokens) noexcept {
  std::uint64_t total = 0;
  for (std::uint64_t n : shard_tokens) total += 2 * n + n * static_cast<std::uint64_t>(pointer_width(n));
  return total;
}

IndexStats stats(const CorpusIndex& index) {
  IndexStats s;
  s.tokens = index.tokens();
  s.documents = index.documents();
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& d = index.dir(i);
    s.shards += d.shards().size();
    s.index_bytes += d.index_bytes();
    s.bytes_on_disk += d.bytes_on_disk();
  }
  std::uint64_t raw_tokens = 0;
  for (std::size_t i = 0; i < index.size(); ++i) raw_tokens += index.dir(i).tokens();
  s.bytes_per_token = static_cast<double>(s.index_bytes) / static_cast<double>(raw_tokens);
  s.unique_ngram_lower_bound =
      unique_ngram_lower_bound(static_cast<double>(s.tokens), static_cast<double>(s.documents));
  return s;
}

}  // namespace sufgram
