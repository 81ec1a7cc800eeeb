#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"
#include "lpr/program.hpp"

namespace lpr {

class ParseError : public std::runtime_error {
 public:
  Span span;
  std::vector<std::string> expected;  // sorted
  std::string found;

  ParseError(Span s, std::vector<std::string> exp, std::string got)
      : std::runtime_error(message(exp, got)),
        span(s),
        expected(std::move(exp)),
        found(std::move(got)) {}

 private:
  static std::string message(const std::vector<std::string>& exp, const std::string& got) {
    std::string m = "expected ";
    for (std::size_t i = 0; i < exp.size(); ++i) {
      if (i) m += i + 1 == exp.size() ? " or " : ", ";
      m += exp[i];
    }
    return m + " but found " + got;
  }
};

inline std::string render_diagnostic(const ParseError& e, const std::string& file) {
  return "parse error: " + std::string(e.what()) + " at " + file + ":" +
         std::to_string(e.span.line) + ":" + std::to_string(e.span.col);
}

struct Token {
  enum class Kind { Ident, Num, Keyword, Symbol, End };
  Kind kind;
  std::string text;
  Span span;
};

inline std::string describe(const Token& t) {
  switch (t.kind) {
    case Token::Kind::End: return "end of input";
    case Token::Kind::Ident: return "identifier '" + t.text + "'";
    case Token::Kind::Num: return "number " + t.text;
    default: return "'" + t.text + "'";
  }
}

inline std::vector<Token> lex(std::string_view src) {
  static const std::set<std::string, std::less<>> keywords{"Unit", "Nat", "Ref", "unit",
                                                           "new",  "let", "in",  "region"};
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "--") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Span s{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) ||
                                src[j] == '_' || src[j] == '\''))
        ++j;
      std::string word(src.substr(i, j - i));
      auto kind = keywords.contains(word) ? Token::Kind::Keyword : Token::Kind::Ident;
      out.push_back({kind, std::move(word), s});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Token::Kind::Num, std::string(src.substr(i, j - i)), s});
      advance(j - i);
      continue;
    }
    for (std::string_view sym : {"->", ":=", "\\", ":", ".", "@", "(", ")", "!", ";", "+",
                                 "=", "^", "#"}) {
      if (src.substr(i, sym.size()) == sym) {
        out.push_back({Token::Kind::Symbol, std::string(sym), s});
        advance(sym.size());
        goto next;
      }
    }
    throw ParseError(s, {"a token"}, "character '" + std::string(1, c) + "'");
  next:;
  }
  out.push_back({Token::Kind::End, "", Span{line, col}});
  return out;
}

/// Recursive-descent parser. A token in column 1 starts a new top-level item
/// (region declaration, `name = expr` binding, or expression).
class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Program program() {
    Program p;
    std::vector<Binding> items;
    bool last_is_expr = false;
    while (raw().kind != Token::Kind::End) {
      start_ = pos_;
      const Token& t = raw();
      if (t.span.col != 1) fail({"a declaration at column 1"});
      if (t.kind == Token::Kind::Keyword && t.text == "region") {
        parse_region(p.constraints);
        last_is_expr = false;
      } else if (t.kind == Token::Kind::Ident && toks_[pos_ + 1].kind == Token::Kind::Symbol &&
                 toks_[pos_ + 1].text == "=" && !boundary(pos_ + 1)) {
        Span s = t.span;
        std::string name = t.text;
        pos_ += 2;
        items.push_back({std::move(name), seq(), s});
        last_is_expr = false;
      } else {
        Span s = t.span;
        items.push_back({kStatementBinder, seq(), s});
        if (is_sym(";")) ++pos_;  // trailing separator before the next item
        last_is_expr = true;
      }
      if (!at_boundary()) fail(expected_after_expr());
    }
    if (!last_is_expr) {
      start_ = pos_;
      fail({"an expression"});
    }
    p.body = items.back().expr;
    items.pop_back();
    p.bindings = std::move(items);
    return p;
  }

  Expr expression() {
    start_ = pos_;
    Expr e = seq();
    if (peek().kind != Token::Kind::End) fail(expected_after_expr());
    return e;
  }

  Type type_only() {
    start_ = pos_;
    Type t = type();
    if (peek().kind != Token::Kind::End) fail({"'->'", "end of input"});
    return t;
  }

 private:
  const Token& raw() const { return toks_[pos_]; }

  bool boundary(std::size_t i) const {
    return toks_[i].kind == Token::Kind::End || (i != start_ && toks_[i].span.col == 1);
  }
  bool at_boundary() const { return boundary(pos_); }

  // The current token, or end of input at an item boundary.
  Token peek() const {
    if (at_boundary()) return {Token::Kind::End, "", raw().span};
    return raw();
  }

  bool is_sym(std::string_view s) const {
    Token t = peek();
    return t.kind == Token::Kind::Symbol && t.text == s;
  }
  bool is_kw(std::string_view s) const {
    Token t = peek();
    return t.kind == Token::Kind::Keyword && t.text == s;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::sort(expected.begin(), expected.end());
    expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
    Token t = peek();
    throw ParseError(t.span, std::move(expected), describe(t));
  }

  static std::vector<std::string> expected_after_expr() {
    return {"';'", "':='", "'+'", "an argument", "a new line"};
  }

  void expect_sym(std::string_view s) {
    if (!is_sym(s)) fail({"'" + std::string(s) + "'"});
    ++pos_;
  }
  void expect_kw(std::string_view s) {
    if (!is_kw(s)) fail({"'" + std::string(s) + "'"});
    ++pos_;
  }
  std::string ident() {
    Token t = peek();
    if (t.kind != Token::Kind::Ident) fail({"an identifier"});
    ++pos_;
    return t.text;
  }

  static std::uint64_t to_u64(const Token& t) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) throw ParseError(t.span, {"a level below 2^64"}, describe(t));
    return v;
  }

  // NUM | IDENT | IDENT+NUM (no spaces around '+').
  Level level() {
    Token t = peek();
    if (t.kind == Token::Kind::Num) {
      ++pos_;
      return Level::concrete(to_u64(t));
    }
    if (t.kind != Token::Kind::Ident) fail({"a level"});
    ++pos_;
    Level l = Level::symbolic(t.text);
    const Token& plus = raw();
    const Token& n = toks_[pos_ + 1];
    if (!at_boundary() && plus.kind == Token::Kind::Symbol && plus.text == "+" &&
        plus.span.line == t.span.line && plus.span.col == t.span.col + int(t.text.size()) &&
        n.kind == Token::Kind::Num && n.span.line == plus.span.line &&
        n.span.col == plus.span.col + 1) {
      pos_ += 2;
      l = l.plus(to_u64(n));
    }
    return l;
  }

  void parse_region(std::vector<RegionConstraint>& out) {
    ++pos_;
    std::vector<Level> ls{level()};
    if (is_sym("=")) {
      ++pos_;
      ls.push_back(level());
      out.push_back(RegionConstraint::equal(ls[0], ls[1]));
      return;
    }
    if (!is_sym("#")) fail({"'#'", "'='"});
    while (is_sym("#")) {
      ++pos_;
      ls.push_back(level());
    }
    for (std::size_t i = 0; i < ls.size(); ++i)
      for (std::size_t j = i + 1; j < ls.size(); ++j)
        out.push_back(RegionConstraint::disjoint(ls[i], ls[j]));
  }

  // ---- types

  Type type() {
    Type lhs = prefix_type();
    if (!is_sym("->")) return lhs;
    ++pos_;
    Level k = level();
    Type rhs = type();
    return Type::fun(lhs, rhs, k);
  }

  Type prefix_type() {
    if (is_kw("Ref")) {
      ++pos_;
      return Type::ref(prefix_type());
    }
    if (is_sym("^")) {
      ++pos_;
      Level b = level();
      return Type::displace(b, prefix_type());
    }
    if (is_kw("Nat")) {
      ++pos_;
      return Type::nat();
    }
    if (is_kw("Unit")) {
      ++pos_;
      return Type::unit();
    }
    if (is_sym("(")) {
      ++pos_;
      Type t = type();
      expect_sym(")");
      return t;
    }
    fail({"'Nat'", "'Unit'", "'Ref'", "'^'", "'('"});
  }

  // ---- expressions

  Expr seq() {
    Span s = peek().span;
    Expr first = assign();
    // `e;` directly before the next item is a trailing separator, not a sequence.
    if (!is_sym(";") || boundary(pos_ + 1)) return first;
    ++pos_;
    return mk::seq(first, seq(), s);
  }

  Expr assign() {
    Span s = peek().span;
    Expr target = add();
    if (!is_sym(":=")) return target;
    ++pos_;
    return mk::assign(target, assign(), s);
  }

  Expr add() {
    Span s = peek().span;
    Expr e = app();
    while (is_sym("+")) {
      ++pos_;
      e = mk::add(e, app(), s);
    }
    return e;
  }

  bool starts_operand() const {
    Token t = peek();
    switch (t.kind) {
      case Token::Kind::Ident:
      case Token::Kind::Num:
        return true;
      case Token::Kind::Keyword:
        return t.text == "unit" || t.text == "new" || t.text == "let";
      case Token::Kind::Symbol:
        return t.text == "(" || t.text == "!" || t.text == "^" || t.text == "\\";
      case Token::Kind::End:
        return false;
    }
    return false;
  }

  Expr app() {
    Span s = peek().span;
    Expr e = prefix();
    while (starts_operand()) e = mk::app(e, prefix(), s);
    return e;
  }

  Expr prefix() {
    Span s = peek().span;
    if (is_sym("!")) {
      ++pos_;
      return mk::deref(prefix(), s);
    }
    if (is_kw("new")) {
      ++pos_;
      return mk::new_(prefix(), s);
    }
    if (is_sym("^")) {
      ++pos_;
      Level b = level();
      return mk::displace(b, prefix(), s);
    }
    return atom();
  }

  Expr atom() {
    Token t = peek();
    Span s = t.span;
    if (t.kind == Token::Kind::Ident) {
      ++pos_;
      return mk::var(t.text, s);
    }
    if (t.kind == Token::Kind::Num) {
      ++pos_;
      return mk::num(Natural(t.text), s);
    }
    if (is_kw("unit")) {
      ++pos_;
      return mk::unit(s);
    }
    if (is_sym("(")) {
      ++pos_;
      Expr e = seq();
      expect_sym(")");
      return e;
    }
    if (is_sym("\\")) {
      ++pos_;
      std::string x = ident();
      expect_sym(":");
      Type ty = type();
      std::optional<Level> ann;
      if (is_sym("@")) {
        ++pos_;
        ann = level();
      }
      expect_sym(".");
      return mk::lam(std::move(x), std::move(ty), seq(), ann, s);
    }
    if (is_kw("let")) {
      ++pos_;
      std::string x = ident();
      expect_sym("=");
      Expr bound = seq();
      expect_kw("in");
      return mk::let(std::move(x), bound, seq(), s);
    }
    fail({"an identifier", "a number", "'unit'", "'('", "'\\'", "'let'", "'!'", "'new'",
          "'^'"});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t start_ = 0;  // first token of the current top-level item
};

inline Program parse_program(std::string_view src) { return Parser(src).program(); }
inline Expr parse_expr(std::string_view src) { return Parser(src).expression(); }
inline Type parse_type(std::string_view src) { return Parser(src).type_only(); }

}  // namespace lpr
