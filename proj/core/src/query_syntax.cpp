#include "sufgram/query_syntax.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>

namespace sufgram {

namespace {

enum class Kind { kId, kText, kBare, kAnd, kOr, kOpen, kClose, kEnd };

struct Lexeme {
  Kind kind;
  std::string text;
};

std::vector<Lexeme> lex(std::string_view s) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Kind::kOpen, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Kind::kClose, ")"});
      ++i;
    } else if (c == '"') {
      std::string body;
      ++i;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        body += s[i++];
      }
      if (i >= s.size()) throw Error(ErrorCode::kInvalidArgument, "unterminated quoted text in query");
      ++i;
      out.push_back({Kind::kText, std::move(body)});
    } else {
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(' &&
             s[j] != ')' && s[j] != '"') {
        ++j;
      }
      std::string word(s.substr(i, j - i));
      i = j;
      if (word == "AND") {
        out.push_back({Kind::kAnd, word});
      } else if (word == "OR") {
        out.push_back({Kind::kOr, word});
      } else if (!word.empty() && std::all_of(word.begin(), word.end(),
                                              [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        out.push_back({Kind::kId, word});
      } else {
        out.push_back({Kind::kBare, word});
      }
    }
  }
  out.push_back({Kind::kEnd, ""});
  return out;
}

void append_item(std::vector<TokenId>& term, const Lexeme& lx, const Tokenizer& tokenizer) {
  if (lx.kind == Kind::kId) {
    auto ids = parse_token_ids(lx.text);
    term.insert(term.end(), ids.begin(), ids.end());
  } else {
    auto ids = tokenizer.tokenize(lx.text);
    term.insert(term.end(), ids.begin(), ids.end());
  }
}

class CnfParser {
 public:
  CnfParser(std::vector<Lexeme> lexemes, const Tokenizer& tokenizer)
      : lx_(std::move(lexemes)), tokenizer_(tokenizer) {}

  CnfQuery parse() {
    CnfQuery q;
    q.clauses = parse_and();
    if (peek() != Kind::kEnd) fail("unexpected '" + lx_[pos_].text + "'");
    return q;
  }

 private:
  using Clause = std::vector<std::vector<TokenId>>;

  Kind peek() const { return lx_[pos_].kind; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kInvalidArgument, "CNF query: " + msg);
  }

  std::vector<Clause> parse_and() {
    std::vector<Clause> clauses = parse_or();
    while (peek() == Kind::kAnd) {
      ++pos_;
      auto more = parse_or();
      clauses.insert(clauses.end(), more.begin(), more.end());
    }
    return clauses;
  }

  std::vector<Clause> parse_or() {
    std::vector<Clause> first = parse_primary();
    while (peek() == Kind::kOr) {
      ++pos_;
      std::vector<Clause> next = parse_primary();
      if (first.size() != 1 || next.size() != 1) fail("AND nested inside OR is not CNF");
      first[0].insert(first[0].end(), next[0].begin(), next[0].end());
    }
    return first;
  }

  std::vector<Clause> parse_primary() {
    if (peek() == Kind::kOpen) {
      ++pos_;
      auto inner = parse_and();
      if (peek() != Kind::kClose) fail("missing ')'");
      ++pos_;
      return inner;
    }
    std::vector<TokenId> term;
    while (peek() == Kind::kId || peek() == Kind::kText) {
      append_item(term, lx_[pos_], tokenizer_);
      ++pos_;
    }
    if (peek() == Kind::kBare) fail("bare word '" + lx_[pos_].text + "'; quote text terms");
    if (term.empty()) fail("expected a term");
    return {Clause{std::move(term)}};
  }

  std::vector<Lexeme> lx_;
  std::size_t pos_ = 0;
  const Tokenizer& tokenizer_;
};

}  // namespace

std::vector<TokenId> parse_ngram(std::string_view text, const Tokenizer& tokenizer) {
  auto lexemes = lex(text);
  std::vector<TokenId> out;
  for (const auto& lx : lexemes) {
    if (lx.kind == Kind::kEnd) break;
    if (lx.kind != Kind::kId && lx.kind != Kind::kText) {
      if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
      return tokenizer.tokenize(text);
    }
    append_item(out, lx, tokenizer);
  }
  return out;
}

CnfQuery parse_cnf(std::string_view text, const Tokenizer& tokenizer) {
  return CnfParser(lex(text), tokenizer).parse();
}

}  // namespace sufgram
