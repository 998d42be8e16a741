#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace sufgram {

/// Suffix array by induced sorting (SA-IS), linear time. `text` holds symbols
/// in [0, alphabet_max]; a suffix that is a proper prefix of another sorts
/// first. Positions are returned as int32, so inputs are limited to 2^31 - 1
/// symbols.
///
/// Peak memory, n = text.size(): 4n (result) + 4n (LMS name map)
/// + up to 2n + 2n (LMS lists) + n/8 (type bits) + 8 * alphabet bytes of
/// bucket tables, i.e. below 13n bytes plus the input, with the recursive
/// call working on at most n/2 symbols.
template <class Symbol>
std::vector<std::int32_t> suffix_sort(std::span<const Symbol> text,
                                      std::uint32_t alphabet_max) {
  using Index = std::int32_t;
  const Index n = static_cast<Index>(text.size());
  if (n == 0) return {};
  if (n == 1) return {0};
  if (n == 2) {
    if (text[0] < text[1]) return {0, 1};
    return {1, 0};
  }
  const std::size_t upper = alphabet_max;

  std::vector<Index> sa(n);
  std::vector<bool> is_s(n);  // S-type suffix
  for (Index i = n - 2; i >= 0; --i) {
    is_s[i] = text[i] == text[i + 1] ? is_s[i + 1] : text[i] < text[i + 1];
  }

  // Bucket heads: sum_l[c] = start of bucket c (L part), sum_s[c] = start of
  // the S part of bucket c.
  std::vector<Index> sum_l(upper + 2, 0), sum_s(upper + 2, 0);
  for (Index i = 0; i < n; ++i) {
    if (!is_s[i]) {
      ++sum_s[text[i]];
    } else {
      ++sum_l[text[i] + 1];
    }
  }
  for (std::size_t c = 0; c <= upper; ++c) {
    sum_s[c] += sum_l[c];
    if (c < upper) sum_l[c + 1] += sum_s[c];
  }

  std::vector<Index> buf(upper + 2);
  auto induce = [&](const std::vector<Index>& lms) {
    std::fill(sa.begin(), sa.end(), -1);
    std::copy(sum_s.begin(), sum_s.end(), buf.begin());
    for (Index d : lms) {
      if (d == n) continue;
      sa[buf[text[d]]++] = d;
    }
    std::copy(sum_l.begin(), sum_l.end(), buf.begin());
    sa[buf[text[n - 1]]++] = n - 1;
    for (Index i = 0; i < n; ++i) {
      Index v = sa[i];
      if (v >= 1 && !is_s[v - 1]) sa[buf[text[v - 1]]++] = v - 1;
    }
    std::copy(sum_l.begin(), sum_l.end(), buf.begin());
    for (Index i = n - 1; i >= 0; --i) {
      Index v = sa[i];
      if (v >= 1 && is_s[v - 1]) sa[--buf[text[v - 1] + 1]] = v - 1;
    }
  };

  std::vector<Index> lms_map(n + 1, -1);
  Index m = 0;
  for (Index i = 1; i < n; ++i) {
    if (!is_s[i - 1] && is_s[i]) lms_map[i] = m++;
  }
  std::vector<Index> lms;
  lms.reserve(m);
  for (Index i = 1; i < n; ++i) {
    if (!is_s[i - 1] && is_s[i]) lms.push_back(i);
  }

  induce(lms);

  if (m) {
    std::vector<Index> sorted_lms;
    sorted_lms.reserve(m);
    for (Index v : sa) {
      if (lms_map[v] != -1) sorted_lms.push_back(v);
    }
    std::vector<Index> rec(m);
    Index rec_upper = 0;
    rec[lms_map[sorted_lms[0]]] = 0;
    for (Index i = 1; i < m; ++i) {
      Index l = sorted_lms[i - 1], r = sorted_lms[i];
      Index end_l = lms_map[l] + 1 < m ? lms[lms_map[l] + 1] : n;
      Index end_r = lms_map[r] + 1 < m ? lms[lms_map[r] + 1] : n;
      bool same = true;
      if (end_l - l != end_r - r) {
        same = false;
      } else {
        while (l < end_l) {
          if (text[l] != text[r]) break;
          ++l;
          ++r;
        }
        if (l == n || text[l] != text[r]) same = false;
      }
      if (!same) ++rec_upper;
      rec[lms_map[sorted_lms[i]]] = rec_upper;
    }
    lms_map = {};

    auto rec_sa = suffix_sort<Index>(std::span<const Index>(rec),
                                     static_cast<std::uint32_t>(rec_upper));
    rec = {};
    for (Index i = 0; i < m; ++i) sorted_lms[i] = lms[rec_sa[i]];
    induce(sorted_lms);
  }
  return sa;
}

}  // namespace sufgram
