#include "sufgram/infgram.hpp"

#include <map>

namespace sufgram {

InfgramModel::InfgramModel(const QueryEngine& engine, LmOptions options)
    : engine_(&engine), options_(options) {
  if (options_.min_count == 0) options_.min_count = 1;
}

Ngram InfgramModel::capped(Ngram context) const noexcept {
  if (options_.max_context && context.size() > options_.max_context) {
    return context.subspan(context.size() - options_.max_context);
  }
  return context;
}

Segments InfgramModel::all_ranks() const { return engine_->find_segment({}); }

namespace {

std::vector<TokenId> extend(Ngram base, TokenId token) {
  std::vector<TokenId> q(base.begin(), base.end());
  q.push_back(token);
  return q;
}

void check_context(Ngram context) {
  for (TokenId t : context) {
    if (t == kSeparator) throw Error(ErrorCode::kInvalidArgument, "context contains the separator token");
  }
}

}  // namespace

bool InfgramModel::deterministic(const Segments& segments, std::size_t depth) const {
  const CorpusIndex& index = engine_->index();
  if (index.has_subtraction()) return continuations(segments, depth).entries.size() == 1;
  std::optional<TokenId> seen;
  for (const auto& r : segments) {
    if (r.width() == 0) continue;
    const ShardView& s = index.dir(r.dir).shards()[r.shard];
    // Ranks are sorted by the token at `depth`, so the segment is single-valued
    // iff its first and last continuation agree.
    TokenId first = s.token(s.suffix(r.lo) + 2 * depth);
    TokenId last = s.token(s.suffix(r.hi - 1) + 2 * depth);
    if (first != last) return false;
    if (seen && *seen != first) return false;
    seen = first;
  }
  return seen.has_value();
}

NextTokenDistribution InfgramModel::continuations(const Segments& segments, std::size_t depth) const {
  const CorpusIndex& index = engine_->index();
  std::map<TokenId, std::int64_t> counts;
  for (const auto& r : segments) {
    const ShardView& s = index.dir(r.dir).shards()[r.shard];
    const int sign = index.sign(r.dir);
    std::uint64_t rank = r.lo;
    while (rank < r.hi) {
      TokenId t = s.token(s.suffix(rank) + 2 * depth);
      // First rank in (rank, hi) whose continuation token exceeds t.
      std::uint64_t first = rank + 1, count = r.hi - rank - 1;
      while (count > 0) {
        std::uint64_t step = count / 2;
        std::uint64_t mid = first + step;
        if (s.token(s.suffix(mid) + 2 * depth) <= t) {
          first = mid + 1;
          count -= step + 1;
        } else {
          count = step;
        }
      }
      counts[t] += sign * static_cast<std::int64_t>(first - rank);
      rank = first;
    }
  }
  NextTokenDistribution dist;
  for (const auto& [token, c] : counts) {
    if (c < 0) {
      throw Error(ErrorCode::kIntegrity, "negative continuation count: a subtracted index is not a subset");
    }
    if (c == 0) continue;
    dist.entries.push_back({token, static_cast<std::uint64_t>(c)});
    dist.total += static_cast<std::uint64_t>(c);
  }
  return dist;
}

std::optional<NgramEstimate> InfgramModel::ngram_prob(Ngram context, TokenId token, std::size_t n,
                                                      SearchStats* stats) const {
  check_context(context);
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  if (n > context.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument, "n = " + std::to_string(n) + " needs " + std::to_string(n - 1) +
                                                 " context tokens, got " + std::to_string(context.size()));
  }
  Ngram ctx = context.subspan(context.size() - (n - 1));
  Segments base = ctx.empty() ? all_ranks() : engine_->find_segment(ctx, nullptr, stats);
  std::uint64_t den = engine_->total(base);
  if (den == 0) return std::nullopt;
  auto q = extend(ctx, token);
  std::uint64_t num = engine_->total(engine_->find_segment(q, &base, stats));
  return NgramEstimate{num, den};
}

std::optional<NextTokenDistribution> InfgramModel::ngram_dist(Ngram context, std::size_t n) const {
  check_context(context);
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  if (n > context.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument, "n = " + std::to_string(n) + " needs " + std::to_string(n - 1) +
                                                 " context tokens, got " + std::to_string(context.size()));
  }
  Ngram ctx = context.subspan(context.size() - (n - 1));
  Segments base = ctx.empty() ? all_ranks() : engine_->find_segment(ctx);
  if (engine_->total(base) == 0) return std::nullopt;
  NextTokenDistribution dist = continuations(base, ctx.size());
  dist.effective_n = static_cast<std::uint32_t>(n);
  return dist;
}

SuffixMatch InfgramModel::longest_suffix(Ngram context, SearchStats* stats) const {
  check_context(context);
  Ngram ctx = capped(context);
  const std::size_t len = ctx.size();

  SuffixMatch best;
  best.segments = all_ranks();
  best.count = engine_->total(best.segments);

  auto probe = [&](std::size_t l, Segments& segs) {
    segs = engine_->find_segment(ctx.subspan(len - l), nullptr, stats);
    return engine_->total(segs);
  };

  // Exponential phase: 1, 2, 4, ... until a length fails or the whole
  // context matches.
  std::size_t fail = len + 1;
  for (std::size_t step = 1; len > 0;) {
    std::size_t l = std::min(step, len);
    Segments segs;
    std::uint64_t c = probe(l, segs);
    if (c >= options_.min_count) {
      best = {l, c, std::move(segs)};
      if (l == len) break;
      step *= 2;
    } else {
      fail = l;
      break;
    }
  }
  // Binary phase on (best.length, fail).
  std::size_t ok = best.length;
  while (fail <= len && fail - ok > 1) {
    std::size_t mid = ok + (fail - ok) / 2;
    Segments segs;
    std::uint64_t c = probe(mid, segs);
    if (c >= options_.min_count) {
      ok = mid;
      best = {mid, c, std::move(segs)};
    } else {
      fail = mid;
    }
  }
  return best;
}

InfgramResult InfgramModel::finish(Ngram context, std::size_t length, const Segments& suffix_segments,
                                   TokenId token, SearchStats* stats, Segments* extended) const {
  Ngram suffix = context.subspan(context.size() - length);
  auto q = extend(suffix, token);
  Segments num = engine_->find_segment(q, &suffix_segments, stats);
  InfgramResult r;
  r.suffix_count = engine_->total(suffix_segments);
  r.cont_count = engine_->total(num);
  r.effective_n = static_cast<std::uint32_t>(length + 1);
  r.sparse = deterministic(suffix_segments, length);
  if (extended) *extended = std::move(num);
  return r;
}

InfgramResult InfgramModel::infgram_prob(Ngram context, TokenId token, SearchStats* stats) const {
  SuffixMatch m = longest_suffix(context, stats);
  return finish(capped(context), m.length, m.segments, token, stats, nullptr);
}

NextTokenDistribution InfgramModel::infgram_dist(Ngram context) const {
  SuffixMatch m = longest_suffix(context);
  NextTokenDistribution dist = continuations(m.segments, m.length);
  dist.effective_n = static_cast<std::uint32_t>(m.length + 1);
  return dist;
}

std::vector<InfgramResult> InfgramModel::dense_scan(Ngram doc, SearchStats* stats) const {
  check_context(doc);
  std::vector<InfgramResult> out;
  out.reserve(doc.size());
  const std::size_t cap = options_.max_context ? options_.max_context : doc.size();

  Segments cached;          // segments of doc[i-1-prev .. i], from the last step
  std::size_t prev = 0;     // matched suffix length at the previous position
  bool have_cached = false;

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::size_t avail = std::min(i, cap);
    Ngram ctx = doc.subspan(i - avail, avail);
    std::size_t len = i == 0 ? 0 : std::min(prev + 1, avail);

    Segments segs;
    for (;; --len) {
      if (len == 0) {
        segs = all_ranks();
        break;
      }
      if (have_cached && len == prev + 1) {
        segs = std::move(cached);
      } else {
        segs = engine_->find_segment(ctx.subspan(avail - len), nullptr, stats);
      }
      have_cached = false;
      if (engine_->total(segs) >= options_.min_count) break;
    }

    Segments extended;
    out.push_back(finish(ctx, len, segs, doc[i], stats, &extended));
    cached = std::move(extended);
    have_cached = true;
    prev = len;
  }
  return out;
}

}  // namespace sufgram
