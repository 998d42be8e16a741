#include "sufgram/decontam.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "sufgram/common.hpp"
#include "sufgram/records.hpp"
#include "sufgram/tokenizer.hpp"

namespace sufgram {

using nlohmann::json;

void ContaminationSpec::validate() const {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram length must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be in (0, 1]");
}

std::vector<std::string> word_ngrams(std::string_view text, const ContaminationSpec& spec) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::string w(text.substr(i, j - i));
      if (spec.lowercase) {
        for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      words.push_back(std::move(w));
    }
    i = j;
  }
  std::vector<std::string> grams;
  if (words.size() < spec.n) return grams;
  grams.reserve(words.size() - spec.n + 1);
  for (std::size_t s = 0; s + spec.n <= words.size(); ++s) {
    std::string g = words[s];
    for (std::size_t k = 1; k < spec.n; ++k) {
      g += ' ';
      g += words[s + k];
    }
    grams.push_back(std::move(g));
  }
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

namespace {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

BloomFilter::BloomFilter(std::uint64_t expected_items, double false_positive_rate) {
  if (!(false_positive_rate > 0.0 && false_positive_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "false-positive rate must be in (0, 1)");
  }
  const double n = static_cast<double>(std::max<std::uint64_t>(expected_items, 1));
  const double ln2 = std::log(2.0);
  bits_ = std::max<std::uint64_t>(64, static_cast<std::uint64_t>(std::ceil(-n * std::log(false_positive_rate) / (ln2 * ln2))));
  hashes_ = std::max(1, static_cast<int>(std::lround(static_cast<double>(bits_) / n * ln2)));
  words_.assign((bits_ + 63) / 64, 0);
}

void BloomFilter::insert(std::string_view key) {
  const std::uint64_t h1 = mix64(fnv1a64(key));
  const std::uint64_t h2 = mix64(fnv1a64(key, 0x84222325cbf29ce4ULL)) | 1;
  for (int i = 0; i < hashes_; ++i) {
    std::uint64_t bit = (h1 + static_cast<std::uint64_t>(i) * h2) % bits_;
    words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
  }
}

bool BloomFilter::maybe_contains(std::string_view key) const {
  const std::uint64_t h1 = mix64(fnv1a64(key));
  const std::uint64_t h2 = mix64(fnv1a64(key, 0x84222325cbf29ce4ULL)) | 1;
  for (int i = 0; i < hashes_; ++i) {
    std::uint64_t bit = (h1 + static_cast<std::uint64_t>(i) * h2) % bits_;
    if (!(words_[bit / 64] >> (bit % 64) & 1)) return false;
  }
  return true;
}

EvalNgramSet EvalNgramSet::build(const std::vector<std::string>& eval_texts, const ContaminationSpec& spec,
                                 MembershipMode mode, double false_positive_rate) {
  spec.validate();
  if (eval_texts.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation set is empty");
  EvalNgramSet set;
  set.spec_ = spec;
  set.mode_ = mode;
  std::unordered_set<std::string> grams;
  for (const auto& t : eval_texts) {
    for (auto& g : word_ngrams(t, spec)) grams.insert(std::move(g));
  }
  set.count_ = grams.size();
  if (mode == MembershipMode::kExact) {
    set.exact_ = std::move(grams);
  } else {
    set.bloom_ = std::make_unique<BloomFilter>(grams.size(), false_positive_rate);
    for (const auto& g : grams) set.bloom_->insert(g);
  }
  return set;
}

bool EvalNgramSet::contains(std::string_view ngram) const {
  if (mode_ == MembershipMode::kExact) return exact_.count(std::string(ngram)) > 0;
  return bloom_->maybe_contains(ngram);
}

DocDecision judge(std::string_view text, const EvalNgramSet& eval) {
  DocDecision d;
  auto grams = word_ngrams(text, eval.spec());
  d.ngrams = grams.size();
  for (const auto& g : grams) d.present += eval.contains(g) ? 1 : 0;
  // present / ngrams >= threshold, boundary inclusive.
  d.removed = d.ngrams > 0 && static_cast<double>(d.present) + 1e-9 >=
                                  eval.spec().threshold * static_cast<double>(d.ngrams);
  return d;
}

FilterResult filter_corpus(const std::vector<std::string>& docs, const EvalNgramSet& eval,
                           const std::vector<std::string>& subsets) {
  FilterResult r;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    bool removed = judge(docs[i], eval).removed;
    (removed ? r.removed : r.kept).push_back(i);
    auto& sub = r.stats.subsets[i < subsets.size() && !subsets[i].empty() ? subsets[i] : "all"];
    ++sub.total_docs;
    ++r.stats.total.total_docs;
    if (removed) {
      ++sub.filtered_docs;
      ++r.stats.total.filtered_docs;
    }
  }
  return r;
}

DecontamStats decontaminate_files(const std::filesystem::path& corpus, const std::filesystem::path& eval,
                                  const ContaminationSpec& spec, MembershipMode mode,
                                  const std::filesystem::path& kept, const std::filesystem::path& removed,
                                  const std::filesystem::path& stats_path, double false_positive_rate) {
  std::vector<std::string> eval_texts;
  for_each_record(eval, [&](Document&& d) { eval_texts.push_back(std::move(d.text)); });
  EvalNgramSet set = EvalNgramSet::build(eval_texts, spec, mode, false_positive_rate);

  std::ifstream in(corpus, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + corpus.string());
  std::ofstream kept_out(kept, std::ios::trunc), removed_out(removed, std::ios::trunc);
  if (!kept_out || !removed_out) throw Error(ErrorCode::kIo, "cannot write kept/removed outputs");

  DecontamStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc;
    try {
      doc = parse_record(line);
    } catch (const Error& e) {
      throw Error(e.code(), corpus.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    bool drop = judge(doc.text, set).removed;
    (drop ? removed_out : kept_out) << line << '\n';
    auto& sub = stats.subsets[doc.source.empty() ? "all" : doc.source];
    ++sub.total_docs;
    ++stats.total.total_docs;
    if (drop) {
      ++sub.filtered_docs;
      ++stats.total.filtered_docs;
    }
  }
  if (!kept_out || !removed_out) throw Error(ErrorCode::kIo, "write failed for kept/removed outputs");

  std::ofstream s(stats_path, std::ios::trunc);
  if (!s) throw Error(ErrorCode::kIo, "cannot write " + stats_path.string());
  s << to_json(stats).dump(2) << '\n';
  return stats;
}

json to_json(const DecontamStats& stats) {
  auto row = [](const std::string& name, const SubsetStats& s) {
    return json{{"subset", name},
                {"total_docs", s.total_docs},
                {"filtered_docs", s.filtered_docs},
                {"ratio_filtered", s.ratio()}};
  };
  json rows = json::array();
  for (const auto& [name, s] : stats.subsets) rows.push_back(row(name, s));
  return {{"subsets", rows}, {"total", row("Total", stats.total)}};
}

}  // namespace sufgram
