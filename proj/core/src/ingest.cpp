#include "sufgram/ingest.hpp"

#include "sufgram/manifest.hpp"

namespace sufgram {

namespace fs = std::filesystem;

namespace {

void put_u64_le(std::ofstream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void write_initial_manifest(const fs::path& dir, const std::string& tokenizer_id,
                            const IngestResult& r) {
  Manifest m;
  m.version = kFormatVersion;
  m.tokenizer = tokenizer_id;
  m.tokens = r.tokens;
  m.documents = r.documents;
  m.save(dir / kManifestFile);
}

}  // namespace

std::vector<TokenId> tokenize(const Document& doc, const Tokenizer& tokenizer) {
  if (doc.token_ids && tokenizer.kind() == TokenizerKind::kPretokenized) {
    if (doc.token_ids->empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty document rejected");
    }
    return *doc.token_ids;
  }
  return tokenizer.tokenize(doc.text);
}

TokenArrayWriter::TokenArrayWriter(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  auto open = [&](std::ofstream& s, const char* name) {
    s.open(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!s) {
      remove_outputs();
      throw Error(ErrorCode::kIo, "cannot create " + (dir_ / name).string());
    }
  };
  open(tokens_, kTokensFile);
  open(doc_offsets_, kDocOffsetsFile);
  open(meta_, kDocMetaFile);
  open(meta_offsets_, kMetaOffsetsFile);
}

TokenArrayWriter::~TokenArrayWriter() {
  if (!finished_) remove_outputs();
}

void TokenArrayWriter::remove_outputs() noexcept {
  for (auto* s : {&tokens_, &doc_offsets_, &meta_, &meta_offsets_}) {
    if (s->is_open()) s->close();
  }
  std::error_code ec;
  for (const char* name : {kTokensFile, kDocOffsetsFile, kDocMetaFile, kMetaOffsetsFile}) {
    fs::remove(dir_ / name, ec);
  }
}

void TokenArrayWriter::check(std::ofstream& out, const char* name) {
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + (dir_ / name).string());
}

void TokenArrayWriter::add(std::span<const TokenId> tokens, std::string_view metadata) {
  if (tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "empty document rejected");
  if (metadata.find_first_of("\r\n") != std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "metadata must be a single line");
  }

  buffer_.resize(2 * (tokens.size() + 1));
  std::size_t i = 0;
  for (TokenId t : tokens) {
    if (t == kSeparator) {
      throw Error(ErrorCode::kInvalidArgument, "document contains the separator token 65535");
    }
    buffer_[i++] = static_cast<char>(t >> 8);
    buffer_[i++] = static_cast<char>(t & 0xFF);
  }
  buffer_[i++] = static_cast<char>(0xFF);
  buffer_[i++] = static_cast<char>(0xFF);

  put_u64_le(doc_offsets_, token_bytes_);
  tokens_.write(buffer_.data(), static_cast<std::streamsize>(i));
  token_bytes_ += i;

  put_u64_le(meta_offsets_, meta_bytes_);
  meta_.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  meta_.put('\n');
  meta_bytes_ += metadata.size() + 1;
  ++documents_;

  check(tokens_, kTokensFile);
  check(doc_offsets_, kDocOffsetsFile);
  check(meta_, kDocMetaFile);
  check(meta_offsets_, kMetaOffsetsFile);
}

IngestResult TokenArrayWriter::finish() {
  if (documents_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no documents: an index needs at least one");
  }
  put_u64_le(doc_offsets_, token_bytes_);
  put_u64_le(meta_offsets_, meta_bytes_);
  for (auto* s : {&tokens_, &doc_offsets_, &meta_, &meta_offsets_}) {
    s->flush();
    if (!*s) throw Error(ErrorCode::kIo, "flush failed in " + dir_.string());
    s->close();
  }
  finished_ = true;
  return {token_bytes_ / 2, documents_};
}

Tokenizer load_tokenizer(const fs::path& dir, const std::string& tokenizer_id) {
  if (tokenizer_id == "pretokenized") return Tokenizer::pretokenized();
  if (tokenizer_id.rfind("reference-word/", 0) == 0) {
    auto t = Tokenizer::reference_word(Vocabulary::load(dir / kVocabFile));
    if (t.id() != tokenizer_id) {
      throw Error(ErrorCode::kFormat,
                  "vocabulary in " + dir.string() + " does not match tokenizer id " + tokenizer_id);
    }
    return t;
  }
  // Unknown external tokenizers behave as pretokenized for ID queries.
  return Tokenizer::pretokenized();
}

IngestResult ingest_corpus(const IngestOptions& options) {
  std::optional<Tokenizer> tokenizer;
  if (options.tokenizer == TokenizerKind::kPretokenized) {
    tokenizer = Tokenizer::pretokenized();
  } else if (options.vocab) {
    tokenizer = Tokenizer::reference_word(Vocabulary::load(*options.vocab));
  } else {
    Vocabulary vocab;
    for_each_record(options.input, [&](Document&& doc) {
      for (const auto& w : split_words(doc.text)) vocab.add(w);
    });
    tokenizer = Tokenizer::reference_word(std::move(vocab));
  }

  TokenArrayWriter writer(options.out);
  auto metadata_line = [](const Document& doc) {
    std::string line;
    auto append = [&](std::string_view part) {
      if (part.empty()) return;
      if (!line.empty()) line += ',';
      line += part;
    };
    if (!doc.id.empty()) append("id=" + doc.id);
    if (!doc.source.empty()) append("source=" + doc.source);
    append(doc.metadata);
    return line;
  };
  std::size_t ordinal = 0;
  for_each_record(options.input, [&](Document&& doc) {
    std::vector<TokenId> tokens;
    try {
      tokens = tokenize(doc, *tokenizer);
    } catch (const Error& e) {
      throw Error(e.code(), "document " + std::to_string(ordinal) + ": " + e.what());
    }
    writer.add(tokens, metadata_line(doc));
    ++ordinal;
  });
  IngestResult result = writer.finish();

  if (const auto* vocab = tokenizer->vocabulary()) vocab->save(options.out / kVocabFile);
  write_initial_manifest(options.out, tokenizer->id(), result);
  return result;
}

IngestResult write_token_array(const fs::path& dir,
                               const std::vector<std::vector<TokenId>>& docs,
                               const std::string& tokenizer_id,
                               const std::vector<std::string>& metadata) {
  TokenArrayWriter writer(dir);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string meta = i < metadata.size() ? metadata[i] : "doc=" + std::to_string(i);
    writer.add(docs[i], meta);
  }
  IngestResult result = writer.finish();
  write_initial_manifest(dir, tokenizer_id, result);
  return result;
}

}  // namespace sufgram
