#pragma once

#include <string_view>
#include <vector>

#include "sufgram/query_engine.hpp"
#include "sufgram/tokenizer.hpp"

namespace sufgram {

/// Parses an n-gram written as token IDs and/or "quoted text", e.g.
/// `12 7 "new york"`. Quoted text goes through `tokenizer`. When the input
/// contains anything else (bare words), the whole string is tokenized as
/// text. An empty or blank string yields the empty n-gram.
std::vector<TokenId> parse_ngram(std::string_view text, const Tokenizer& tokenizer);

/// Parses a CNF expression: `("deep learning" OR 12 7) AND (3)`.
/// OR binds tighter than AND; parentheses group. Terms are sequences of
/// token IDs and quoted strings. Expressions that are not in conjunctive
/// normal form (an AND nested under OR) are rejected.
CnfQuery parse_cnf(std::string_view text, const Tokenizer& tokenizer);

}  // namespace sufgram
