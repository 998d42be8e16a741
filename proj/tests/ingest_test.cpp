#include <gtest/gtest.h>

#include <fstream>

#include "sufgram/ingest.hpp"
#include "sufgram/manifest.hpp"
#include "sufgram/records.hpp"
#include "sufgram/tokenizer.hpp"
#include "support.hpp"

namespace sufgram {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint64_t> read_u64(const fs::path& p) {
  auto bytes = read_file(p);
  std::vector<std::uint64_t> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | bytes[8 * i + b];
    out[i] = v;
  }
  return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

TEST(Tokenizer, VocabularyLookup) {
  Vocabulary v;
  EXPECT_EQ(v.add("a"), 1);
  EXPECT_EQ(v.add("b"), 2);
  Tokenizer t = Tokenizer::reference_word(v);
  EXPECT_EQ(t.tokenize("a b a"), (std::vector<TokenId>{1, 2, 1}));
}

TEST(Tokenizer, EmptyDocumentRejected) {
  Tokenizer t = Tokenizer::reference_word(Vocabulary{});
  EXPECT_THROW(t.tokenize(""), Error);
  Document doc;
  doc.text = "";
  EXPECT_THROW(tokenize(doc, Tokenizer::pretokenized()), Error);
}

TEST(Tokenizer, PretokenizedPassThrough) {
  Document doc;
  doc.token_ids = std::vector<TokenId>{1, 2, 3, 1, 2};
  EXPECT_EQ(tokenize(doc, Tokenizer::pretokenized()), (std::vector<TokenId>{1, 2, 3, 1, 2}));
}

TEST(Tokenizer, UnknownWordsMapToZero) {
  Vocabulary v;
  v.add("known");
  Tokenizer t = Tokenizer::reference_word(v);
  EXPECT_EQ(t.tokenize("known unknown"), (std::vector<TokenId>{1, 0}));
}

TEST(Tokenizer, SplitsPunctuation) {
  EXPECT_EQ(split_words("Hello, world!"), (std::vector<std::string>{"Hello", ",", "world", "!"}));
}

TEST(Tokenizer, VocabularyRoundTrip) {
  TempDir tmp;
  Vocabulary v;
  v.add("x");
  v.add("y");
  v.save(tmp / "vocab.txt");
  Vocabulary w = Vocabulary::load(tmp / "vocab.txt");
  EXPECT_EQ(w.size(), v.size());
  EXPECT_EQ(w.find("y"), v.find("y"));
  EXPECT_EQ(w.fingerprint(), v.fingerprint());
}

TEST(Tokenizer, ParseTokenIdsRejectsSeparator) {
  EXPECT_EQ(parse_token_ids("1 2 65534"), (std::vector<TokenId>{1, 2, 65534}));
  EXPECT_THROW(parse_token_ids("65535"), Error);
  EXPECT_THROW(parse_token_ids("1 x"), Error);
}

TEST(Records, ParsesTextAndIds) {
  Document d = parse_record(R"({"id":"d1","text":"hi there","source":"web","metadata":{"url":"u"}})");
  EXPECT_EQ(d.id, "d1");
  EXPECT_EQ(d.text, "hi there");
  EXPECT_EQ(d.source, "web");
  EXPECT_EQ(d.metadata, "url=u");
  Document p = parse_record(R"({"doc_id":"x","token_ids":[5,6]})");
  EXPECT_EQ(p.id, "x");
  ASSERT_TRUE(p.token_ids);
  EXPECT_EQ(*p.token_ids, (std::vector<TokenId>{5, 6}));
  EXPECT_THROW(parse_record("not json"), Error);
}

TEST(TokenArray, SingleDocumentBytes) {
  TempDir tmp;
  IngestResult r = write_token_array(tmp.path(), {{1, 2, 3, 1, 2}});
  EXPECT_EQ(r.tokens, 6u);
  EXPECT_EQ(read_file(tmp / kTokensFile),
            (std::vector<std::uint8_t>{0x00, 0x01, 0x00, 0x02, 0x00, 0x03, 0x00, 0x01, 0x00, 0x02, 0xFF, 0xFF}));
}

TEST(TokenArray, OffsetsAndSentinel) {
  TempDir tmp;
  IngestResult r = write_token_array(tmp.path(), testing::toy_corpus(), "pretokenized", {"name=A", "name=B"});
  EXPECT_EQ(r.tokens, 10u);
  EXPECT_EQ(r.documents, 2u);
  EXPECT_EQ(read_u64(tmp / kDocOffsetsFile), (std::vector<std::uint64_t>{0, 12, 20}));
  auto meta = read_file(tmp / kDocMetaFile);
  EXPECT_EQ(std::string(meta.begin(), meta.end()), "name=A\nname=B\n");
  EXPECT_EQ(read_u64(tmp / kMetaOffsetsFile), (std::vector<std::uint64_t>{0, 7, 14}));
}

TEST(TokenArray, ZeroDocumentsIsAnError) {
  TempDir tmp;
  EXPECT_THROW(write_token_array(tmp.path(), {}), Error);
  EXPECT_FALSE(fs::exists(tmp / kTokensFile));
}

TEST(TokenArray, RejectsSeparatorInsideDocument) {
  TempDir tmp;
  EXPECT_THROW(write_token_array(tmp.path(), {{1, kSeparator, 2}}), Error);
}

TEST(Manifest, RoundTrip) {
  TempDir tmp;
  Manifest m;
  m.version = kFormatVersion;
  m.tokenizer = "pretokenized";
  m.tokens = 10;
  m.documents = 2;
  m.shards.push_back({"table.0.bin", 10, 1, 0, 20});
  m.params["max_shard_tokens"] = "0";
  m.save(tmp / kManifestFile);
  EXPECT_EQ(Manifest::load(tmp / kManifestFile), m);
}

TEST(Ingest, ReferenceWordCorpus) {
  TempDir tmp;
  write_lines(tmp / "in.jsonl", {R"({"id":"a","text":"the cat sat"})", R"({"id":"b","text":"the dog"})"});
  IngestOptions o;
  o.input = tmp / "in.jsonl";
  o.tokenizer = TokenizerKind::kReferenceWord;
  o.out = tmp / "idx";
  IngestResult r = ingest_corpus(o);
  EXPECT_EQ(r.tokens, 7u);
  EXPECT_EQ(r.documents, 2u);
  Manifest m = Manifest::load(o.out / kManifestFile);
  EXPECT_EQ(m.tokens, 7u);
  EXPECT_TRUE(m.shards.empty());
  EXPECT_NE(m.tokenizer.find("reference-word/"), std::string::npos);
  Tokenizer t = load_tokenizer(o.out, m.tokenizer);
  EXPECT_EQ(t.tokenize("the cat"), (std::vector<TokenId>{1, 2}));
  auto meta = read_file(o.out / kDocMetaFile);
  EXPECT_EQ(std::string(meta.begin(), meta.end()), "id=a\nid=b\n");
}

TEST(Ingest, ReusedVocabularyKeepsIds) {
  TempDir tmp;
  write_lines(tmp / "a.jsonl", {R"({"text":"x y z"})"});
  write_lines(tmp / "b.jsonl", {R"({"text":"z y"})"});
  IngestOptions a{tmp / "a.jsonl", TokenizerKind::kReferenceWord, tmp / "A", std::nullopt};
  ingest_corpus(a);
  IngestOptions b{tmp / "b.jsonl", TokenizerKind::kReferenceWord, tmp / "B", tmp / "A" / kVocabFile};
  ingest_corpus(b);
  EXPECT_EQ(Manifest::load(tmp / "A" / kManifestFile).tokenizer, Manifest::load(tmp / "B" / kManifestFile).tokenizer);
  EXPECT_EQ(read_file(tmp / "B" / kTokensFile), (std::vector<std::uint8_t>{0, 3, 0, 2, 0xFF, 0xFF}));
}

TEST(Ingest, EmptyDocumentNamesOrdinal) {
  TempDir tmp;
  write_lines(tmp / "in.jsonl", {R"({"text":"ok"})", R"({"text":""})"});
  IngestOptions o{tmp / "in.jsonl", TokenizerKind::kReferenceWord, tmp / "idx", std::nullopt};
  try {
    ingest_corpus(o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("document 1"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(tmp / "idx" / kTokensFile));
}

}  // namespace
}  // namespace sufgram
