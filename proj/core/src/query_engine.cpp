#include "sufgram/query_engine.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "sufgram/sampling.hpp"

namespace sufgram {

namespace {

// Compares the suffix starting at `rel` with q over the first |q| tokens.
// A suffix that ends first sorts before q.
int compare_prefix(const ShardView& s, std::uint64_t rel, Ngram q) noexcept {
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::uint64_t at = rel + 2 * i;
    if (at >= s.bytes) return -1;
    TokenId t = s.token(at);
    if (t != q[i]) return t < q[i] ? -1 : 1;
  }
  return 0;
}

std::uint64_t ceil_log2(std::uint64_t n) noexcept {
  return n <= 1 ? 0 : static_cast<std::uint64_t>(std::bit_width(n - 1));
}

// The separator may only close a query (continuation counts for end of
// document); anywhere else the n-gram would cross documents.
void validate(Ngram q) {
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    if (q[i] == kSeparator) {
      throw Error(ErrorCode::kInvalidArgument, "query contains the separator token 65535");
    }
  }
}

void validate_strict(Ngram q) {
  for (TokenId t : q) {
    if (t == kSeparator) {
      throw Error(ErrorCode::kInvalidArgument, "query contains the separator token 65535");
    }
  }
}

}  // namespace

QueryEngine::QueryEngine(const CorpusIndex& index, QueryOptions options)
    : index_(&index), options_(options) {
  if (options_.prefetch) {
    for (std::size_t d = 0; d < index.size(); ++d) {
      for (const auto& s : index.dir(d).shards()) s.table_file->advise_random();
    }
  }
}

SegmentRange QueryEngine::search_shard(std::size_t dir, std::size_t shard, Ngram q, std::uint64_t lo,
                                       std::uint64_t hi, SearchStats* stats) const {
  const ShardView& s = index_->dir(dir).shards()[shard];
  SegmentRange out{dir, shard, lo, lo};
  if (q.empty()) {
    out.hi = hi;
    return out;
  }

  const std::uint64_t budget = ceil_log2(s.entries) + 2;
  auto record = [&](std::uint64_t comparisons) {
    if (!stats) return;
    ++stats->boundaries;
    stats->comparisons += comparisons;
    stats->max_boundary_comparisons = std::max(stats->max_boundary_comparisons, comparisons);
    if (comparisons > budget) {
      stats->max_boundary_budget_excess = std::max(stats->max_boundary_budget_excess, comparisons - budget);
    }
  };
  auto prefetch = [&](std::uint64_t first, std::uint64_t count) {
    if (!options_.prefetch || count == 0) return;
    std::uint64_t half = count / 2;
    std::uint64_t w = static_cast<std::uint64_t>(s.width);
    s.table_file->will_need(static_cast<std::size_t>((first + half / 2) * w), w);
    s.table_file->will_need(static_cast<std::size_t>((first + half + 1 + (count - half - 1) / 2) * w), w);
  };

  // First rank whose suffix is >= q.
  std::uint64_t first = lo, count = hi - lo, comparisons = 0;
  while (count > 0) {
    std::uint64_t step = count / 2;
    std::uint64_t mid = first + step;
    prefetch(first, count);
    ++comparisons;
    if (compare_prefix(s, s.suffix(mid), q) < 0) {
      first = mid + 1;
      count -= step + 1;
    } else {
      count = step;
    }
  }
  record(comparisons);
  out.lo = first;

  // First rank whose suffix is > q (does not start with q).
  count = hi - first;
  comparisons = 0;
  while (count > 0) {
    std::uint64_t step = count / 2;
    std::uint64_t mid = first + step;
    prefetch(first, count);
    ++comparisons;
    if (compare_prefix(s, s.suffix(mid), q) <= 0) {
      first = mid + 1;
      count -= step + 1;
    } else {
      count = step;
    }
  }
  record(comparisons);
  out.hi = first;
  return out;
}

Segments QueryEngine::find_segment(Ngram q, const Segments* hint, SearchStats* stats) const {
  validate(q);
  if (stats) ++stats->segment_searches;
  Segments out;
  std::size_t h = 0;
  for (std::size_t d = 0; d < index_->size(); ++d) {
    const auto& shards = index_->dir(d).shards();
    for (std::size_t k = 0; k < shards.size(); ++k, ++h) {
      std::uint64_t lo = 0, hi = shards[k].entries;
      if (hint) {
        if (h >= hint->size() || (*hint)[h].dir != d || (*hint)[h].shard != k) {
          throw Error(ErrorCode::kInvalidArgument, "hint does not match the index's shard layout");
        }
        lo = (*hint)[h].lo;
        hi = (*hint)[h].hi;
      }
      out.push_back(search_shard(d, k, q, lo, hi, stats));
    }
  }
  return out;
}

std::uint64_t QueryEngine::total(const Segments& segments) const {
  std::int64_t sum = 0;
  for (const auto& s : segments) sum += index_->sign(s.dir) * static_cast<std::int64_t>(s.width());
  if (sum < 0) {
    throw Error(ErrorCode::kIntegrity,
                "negative count " + std::to_string(sum) + ": a subtracted index is not a subset");
  }
  return static_cast<std::uint64_t>(sum);
}

std::uint64_t QueryEngine::count(Ngram q, SearchStats* stats) const {
  validate_strict(q);
  return total(find_segment(q, nullptr, stats));
}

std::vector<Position> QueryEngine::positions(Ngram q, std::uint64_t limit, std::uint64_t seed) const {
  validate_strict(q);
  if (limit == 0) throw Error(ErrorCode::kInvalidArgument, "limit must be >= 1");
  if (index_->has_subtraction()) {
    throw Error(ErrorCode::kUnsupported, "positions are undefined on a composition with subtracted indexes");
  }
  Segments segs = find_segment(q);
  std::uint64_t n = total(segs);
  std::vector<Position> out;
  std::size_t seg = 0;
  std::uint64_t seg_base = 0;  // global index of segs[seg].lo
  for (std::uint64_t g : sample_indices(n, limit, seed)) {
    while (g >= seg_base + segs[seg].width()) {
      seg_base += segs[seg].width();
      ++seg;
    }
    const auto& r = segs[seg];
    const ShardView& s = index_->dir(r.dir).shards()[r.shard];
    out.push_back({r.dir, s.base + s.suffix(r.lo + (g - seg_base))});
  }
  std::sort(out.begin(), out.end());
  return out;
}

DocRef QueryEngine::doc_of(std::size_t dir, std::uint64_t byte) const {
  const IndexDir& d = index_->dir(dir);
  if (byte % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "odd byte offset " + std::to_string(byte));
  if (byte >= 2 * d.tokens()) {
    throw Error(ErrorCode::kInvalidArgument, "byte offset " + std::to_string(byte) + " out of range");
  }
  // Largest document whose start is <= byte.
  std::uint64_t lo = 0, hi = d.documents();
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (d.doc_offset(mid) <= byte) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  DocRef ref;
  ref.dir = dir;
  ref.ordinal = lo;
  ref.begin = d.doc_offset(lo);
  ref.end = d.doc_offset(lo + 1);
  if (byte == ref.end - 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "byte offset " + std::to_string(byte) + " is a document separator");
  }
  ref.metadata = d.metadata(lo);
  return ref;
}

std::vector<TokenId> QueryEngine::document_tokens(const DocRef& doc) const {
  const IndexDir& d = index_->dir(doc.dir);
  std::vector<TokenId> out;
  out.reserve(doc.token_count());
  for (std::uint64_t b = doc.begin; b + 2 < doc.end; b += 2) out.push_back(d.token_at(b));
  return out;
}

std::vector<std::uint64_t> find_in_tokens(std::span<const TokenId> doc, Ngram term) {
  std::vector<std::uint64_t> out;
  if (term.empty() || term.size() > doc.size()) return out;
  auto it = doc.begin();
  while (true) {
    it = std::search(it, doc.end(), term.begin(), term.end());
    if (it == doc.end()) break;
    out.push_back(static_cast<std::uint64_t>(it - doc.begin()));
    ++it;
  }
  return out;
}

std::vector<DocRef> QueryEngine::search_docs(const CnfQuery& query, std::uint64_t maxnum, std::uint64_t seed,
                                             std::uint64_t* matching) const {
  if (maxnum == 0) throw Error(ErrorCode::kInvalidArgument, "maxnum must be >= 1");
  if (query.clauses.empty()) throw Error(ErrorCode::kInvalidArgument, "CNF query has no clauses");
  for (const auto& clause : query.clauses) {
    if (clause.empty()) throw Error(ErrorCode::kInvalidArgument, "CNF clause has no terms");
    for (const auto& term : clause) {
      if (term.empty()) throw Error(ErrorCode::kInvalidArgument, "CNF term is empty");
      validate_strict(term);
    }
  }
  if (index_->has_subtraction()) {
    throw Error(ErrorCode::kUnsupported, "document search is undefined on a composition with subtracted indexes");
  }

  using DocKey = std::pair<std::size_t, std::uint64_t>;  // (dir, ordinal)
  std::vector<Segments> term_segments;
  std::vector<std::vector<std::size_t>> clause_terms(query.clauses.size());
  std::vector<bool> enumerable(query.clauses.size(), true);
  for (std::size_t c = 0; c < query.clauses.size(); ++c) {
    for (const auto& term : query.clauses[c]) {
      Segments segs = find_segment(term);
      if (total(segs) > options_.term_ceiling) enumerable[c] = false;
      clause_terms[c].push_back(term_segments.size());
      term_segments.push_back(std::move(segs));
    }
  }

  // Document sets of enumerable clauses, smallest first.
  std::vector<std::pair<std::uint64_t, std::size_t>> order;
  for (std::size_t c = 0; c < query.clauses.size(); ++c) {
    if (!enumerable[c]) continue;
    std::uint64_t occ = 0;
    for (std::size_t t : clause_terms[c]) occ += total(term_segments[t]);
    order.emplace_back(occ, c);
  }
  if (order.empty()) throw ClauseTooFrequent(0, options_.term_ceiling);
  std::sort(order.begin(), order.end());

  auto clause_docs = [&](std::size_t c) {
    std::vector<DocKey> docs;
    for (std::size_t t : clause_terms[c]) {
      for (const auto& r : term_segments[t]) {
        const ShardView& s = index_->dir(r.dir).shards()[r.shard];
        for (std::uint64_t rank = r.lo; rank < r.hi; ++rank) {
          DocRef ref = doc_of(r.dir, s.base + s.suffix(rank));
          docs.emplace_back(ref.dir, ref.ordinal);
        }
      }
    }
    std::sort(docs.begin(), docs.end());
    docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    return docs;
  };

  std::vector<DocKey> candidates = clause_docs(order.front().second);
  for (std::size_t i = 1; i < order.size() && !candidates.empty(); ++i) {
    auto other = clause_docs(order[i].second);
    std::vector<DocKey> merged;
    std::set_intersection(candidates.begin(), candidates.end(), other.begin(), other.end(),
                          std::back_inserter(merged));
    candidates = std::move(merged);
  }

  auto load = [&](const DocKey& key) {
    const IndexDir& d = index_->dir(key.first);
    DocRef ref;
    ref.dir = key.first;
    ref.ordinal = key.second;
    ref.begin = d.doc_offset(key.second);
    ref.end = d.doc_offset(key.second + 1);
    return ref;
  };

  // Clauses with a too-frequent term: check candidates directly.
  bool need_scan = false;
  for (bool e : enumerable) need_scan |= !e;
  if (need_scan) {
    std::vector<DocKey> kept;
    for (const auto& key : candidates) {
      auto tokens = document_tokens(load(key));
      bool ok = true;
      for (std::size_t c = 0; c < query.clauses.size() && ok; ++c) {
        if (enumerable[c]) continue;
        bool any = false;
        for (const auto& term : query.clauses[c]) {
          if (std::search(tokens.begin(), tokens.end(), term.begin(), term.end()) != tokens.end()) {
            any = true;
            break;
          }
        }
        ok = any;
      }
      if (ok) kept.push_back(key);
    }
    candidates = std::move(kept);
  }

  if (matching) *matching = candidates.size();
  std::vector<DocRef> out;
  for (std::uint64_t i : sample_indices(candidates.size(), maxnum, seed)) {
    DocRef ref = load(candidates[i]);
    ref.metadata = index_->dir(ref.dir).metadata(ref.ordinal);
    auto tokens = document_tokens(ref);
    for (std::size_t c = 0; c < query.clauses.size(); ++c) {
      for (std::size_t t = 0; t < query.clauses[c].size(); ++t) {
        auto hits = find_in_tokens(tokens, query.clauses[c][t]);
        if (!hits.empty()) ref.matches.push_back({c, t, std::move(hits)});
      }
    }
    out.push_back(std::move(ref));
  }
  return out;
}

}  // namespace sufgram
