#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>

#include <unistd.h>

#include "sufgram/ingest.hpp"
#include "sufgram/sa_builder.hpp"
#include "sufgram/tokenizer.hpp"

namespace sufgram::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("sufgram-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Corpus toy_corpus() { return {{1, 2, 3, 1, 2}, {2, 3, 4}}; }

void build_index(const fs::path& dir, const Corpus& docs, std::uint64_t max_shard_tokens) {
  write_token_array(dir, docs);
  build_suffix_arrays(dir, max_shard_tokens);
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Corpus random_corpus(std::mt19937_64& rng, const CorpusShape& shape) {
  std::vector<double> weights(shape.vocab);
  for (std::size_t i = 0; i < shape.vocab; ++i) {
    weights[i] = shape.zipf > 0 ? 1.0 / std::pow(static_cast<double>(i + 1), shape.zipf) : 1.0;
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  Corpus docs;
  std::size_t total = 0;
  while (total < shape.total_tokens) {
    std::size_t len = uniform(rng, shape.min_doc, shape.max_doc);
    len = std::min(len, std::max<std::size_t>(shape.min_doc, shape.total_tokens - total));
    Doc d(len);
    for (auto& t : d) t = static_cast<TokenId>(pick(rng) + 1);
    total += len;
    docs.push_back(std::move(d));
  }
  return docs;
}

Corpus repetitive_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t doc_len, std::size_t vocab,
                         std::size_t phrase_len) {
  std::vector<Doc> phrases(8);
  for (auto& p : phrases) {
    p.resize(phrase_len);
    for (auto& t : p) t = static_cast<TokenId>(uniform(rng, 1, vocab));
  }
  Corpus out;
  for (std::size_t d = 0; d < docs; ++d) {
    Doc doc;
    while (doc.size() < doc_len) {
      if (uniform(rng, 0, 3) == 0) {
        doc.push_back(static_cast<TokenId>(uniform(rng, 1, vocab)));
      } else {
        const Doc& p = phrases[uniform(rng, 0, phrases.size() - 1)];
        doc.insert(doc.end(), p.begin(), p.end());
      }
    }
    doc.resize(doc_len);
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<TokenId> flatten(const Corpus& docs) {
  std::vector<TokenId> flat;
  for (const auto& d : docs) {
    flat.insert(flat.end(), d.begin(), d.end());
    flat.push_back(kSeparator);
  }
  return flat;
}

std::vector<std::uint8_t> to_bytes(const std::vector<TokenId>& tokens) {
  std::vector<std::uint8_t> out;
  out.reserve(tokens.size() * 2);
  for (TokenId t : tokens) {
    out.push_back(static_cast<std::uint8_t>(t >> 8));
    out.push_back(static_cast<std::uint8_t>(t & 0xFF));
  }
  return out;
}

namespace {

bool match_at(const std::vector<TokenId>& flat, std::size_t i, const std::vector<TokenId>& q) {
  if (i + q.size() > flat.size()) return false;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (flat[i + k] != q[k]) return false;
  }
  return true;
}

}  // namespace

std::uint64_t naive_count(const std::vector<TokenId>& flat, const std::vector<TokenId>& q) {
  if (q.empty()) return flat.size();
  std::uint64_t c = 0;
  for (std::size_t i = 0; i + q.size() <= flat.size(); ++i) {
    if (flat[i] == q[0] && match_at(flat, i, q)) ++c;
  }
  return c;
}

std::map<TokenId, std::uint64_t> naive_continuations(const std::vector<TokenId>& flat, const std::vector<TokenId>& q) {
  std::map<TokenId, std::uint64_t> out;
  for (std::size_t i = 0; i + q.size() < flat.size(); ++i) {
    if (match_at(flat, i, q)) ++out[flat[i + q.size()]];
  }
  return out;
}

std::size_t naive_longest_suffix(const std::vector<TokenId>& flat, const std::vector<TokenId>& context,
                                 std::uint64_t min_count) {
  for (std::size_t len = context.size(); len > 0; --len) {
    std::vector<TokenId> suffix(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
    if (naive_count(flat, suffix) >= min_count) return len;
  }
  return 0;
}

BackoffOracle naive_backoff(const std::vector<TokenId>& flat, const std::vector<TokenId>& context) {
  const std::size_t L = context.size();
  std::vector<std::size_t> reach(flat.size() + 1, 0);  // reach[e]: match length ending just before e
  std::size_t best = 0;
  for (std::size_t e = 1; e <= flat.size(); ++e) {
    std::size_t k = 0;
    while (k < L && k < e && flat[e - 1 - k] == context[L - 1 - k]) ++k;
    reach[e] = k;
    best = std::max(best, k);
  }
  BackoffOracle o;
  o.length = best;
  for (std::size_t e = 0; e < flat.size(); ++e) {
    if (reach[e] >= best) {
      ++o.suffix_count;
      ++o.continuations[flat[e]];
    }
  }
  return o;
}

std::vector<std::uint64_t> naive_suffix_sort(const std::vector<std::uint8_t>& bytes, std::size_t step) {
  std::vector<std::uint64_t> offsets;
  for (std::size_t i = 0; i < bytes.size(); i += step) offsets.push_back(i);
  std::sort(offsets.begin(), offsets.end(), [&](std::uint64_t a, std::uint64_t b) {
    return std::lexicographical_compare(bytes.begin() + static_cast<std::ptrdiff_t>(a), bytes.end(),
                                        bytes.begin() + static_cast<std::ptrdiff_t>(b), bytes.end());
  });
  return offsets;
}

std::vector<TokenId> random_query(std::mt19937_64& rng, const Corpus& docs, std::size_t max_len, std::size_t vocab,
                                  bool from_corpus) {
  std::size_t len = uniform(rng, 1, max_len);
  if (from_corpus) {
    const Doc& d = docs[uniform(rng, 0, docs.size() - 1)];
    len = std::min(len, d.size());
    std::size_t start = uniform(rng, 0, d.size() - len);
    return {d.begin() + static_cast<std::ptrdiff_t>(start), d.begin() + static_cast<std::ptrdiff_t>(start + len)};
  }
  std::vector<TokenId> q(len);
  for (auto& t : q) t = static_cast<TokenId>(uniform(rng, 1, vocab));
  return q;
}

std::uint64_t checksum_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& f : files) {
    mix(fs::relative(f, dir).string());
    std::ifstream in(f, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    mix(content);
  }
  return h;
}

}  // namespace sufgram::testing
