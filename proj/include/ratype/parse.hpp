// Recursive descent parser for the fully parenthesized expression syntax.
#pragma once

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ratype/ast.hpp"

namespace ratype {

/// Input rejected; position is a byte offset into the source text.
struct ParseError : std::runtime_error {
  std::size_t position;
  ParseError(std::size_t pos, const std::string& msg)
      : std::runtime_error(msg + " (at byte " + std::to_string(pos) + ")"),
        position(pos) {}
};

namespace detail {

enum class Tok {
  End, LParen, RParen, LBracket, RBracket, Comma, Slash, Amp,
  Ident,   // lowercase-initial: relation variables and keywords
  Attr,    // uppercase-initial: attribute names
  Number, String, Cmp,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t pos = 0;
  std::size_t end = 0;
  CmpOp cmp = CmpOp::Eq;
};

class ExprLexer {
 public:
  explicit ExprLexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.end = i_;
      return;
    }
    char c = src_[i_];
    auto single = [&](Tok k) {
      tok_.kind = k;
      tok_.text = std::string(1, c);
      ++i_;
    };
    switch (c) {
      case '(': single(Tok::LParen); break;
      case ')': single(Tok::RParen); break;
      case '[': single(Tok::LBracket); break;
      case ']': single(Tok::RBracket); break;
      case ',': single(Tok::Comma); break;
      case '/': single(Tok::Slash); break;
      case '&': single(Tok::Amp); break;
      case '=': single(Tok::Cmp); tok_.cmp = CmpOp::Eq; break;
      case '!':
        if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') {
          tok_.kind = Tok::Cmp;
          tok_.cmp = CmpOp::Ne;
          tok_.text = "!=";
          i_ += 2;
        } else {
          throw ParseError(i_, "expected '=' after '!'");
        }
        break;
      case '<':
      case '>': {
        bool lt = c == '<';
        tok_.kind = Tok::Cmp;
        ++i_;
        if (i_ < src_.size() && src_[i_] == '=') {
          tok_.cmp = lt ? CmpOp::Le : CmpOp::Ge;
          ++i_;
        } else {
          tok_.cmp = lt ? CmpOp::Lt : CmpOp::Gt;
        }
        tok_.text = std::string(cmp_token(tok_.cmp));
        break;
      }
      case '"': {
        ++i_;
        std::string s;
        while (i_ < src_.size() && src_[i_] != '"') s += src_[i_++];
        if (i_ >= src_.size()) throw ParseError(tok_.pos, "unterminated string literal");
        ++i_;
        tok_.kind = Tok::String;
        tok_.text = std::move(s);
        break;
      }
      default:
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
          std::string s(1, c);
          ++i_;
          while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_])))
            s += src_[i_++];
          tok_.kind = Tok::Number;
          tok_.text = std::move(s);
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
          std::string s;
          while (i_ < src_.size() && ident_char(src_[i_])) s += src_[i_++];
          tok_.kind = std::isupper(static_cast<unsigned char>(c)) ? Tok::Attr : Tok::Ident;
          tok_.text = std::move(s);
        } else {
          throw ParseError(i_, std::string("unexpected character '") + c + "'");
        }
    }
    tok_.end = i_;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Token tok_;
};

class ExprParser {
 public:
  explicit ExprParser(std::string_view src) : lex_(src) {}

  ExprPtr parse() {
    ExprPtr e = expression();
    if (lex_.peek().kind != Tok::End)
      throw ParseError(lex_.peek().pos, "expected end of input, found '" + lex_.peek().text + "'");
    return e;
  }

 private:
  static bool is_binary_keyword(const std::string& s) {
    return s == "union" || s == "minus" || s == "join" || s == "times";
  }
  static bool is_unary_keyword(const std::string& s) {
    return s == "select" || s == "project" || s == "rename" || s == "projout";
  }

  Token expect(Tok kind, const char* what) {
    if (lex_.peek().kind != kind)
      throw ParseError(lex_.peek().pos,
                       std::string("expected ") + what + ", found '" +
                           (lex_.peek().kind == Tok::End ? "end of input" : lex_.peek().text) + "'");
    return lex_.take();
  }

  ExprPtr expression() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Ident: {
        Token name = lex_.take();
        if (is_unary_keyword(name.text)) return unary(name);
        if (is_binary_keyword(name.text))
          throw ParseError(name.pos, "operator '" + name.text +
                                         "' is only valid inside a parenthesized pair");
        return make_relvar(name.text, Span{name.pos, name.end});
      }
      case Tok::LParen: {
        Token open = lex_.take();
        ExprPtr left = expression();
        Token op = expect(Tok::Ident, "'union', 'minus', 'join' or 'times'");
        if (!is_binary_keyword(op.text))
          throw ParseError(op.pos, "expected 'union', 'minus', 'join' or 'times', found '" +
                                       op.text + "'");
        ExprPtr right = expression();
        Token close = expect(Tok::RParen, "')'");
        Span span{open.pos, close.end};
        if (op.text == "union") return make_union(std::move(left), std::move(right), span);
        if (op.text == "minus") return make_difference(std::move(left), std::move(right), span);
        if (op.text == "join") return make_join(std::move(left), std::move(right), span);
        return make_product(std::move(left), std::move(right), span);
      }
      default:
        throw ParseError(t.pos, "expected expression, found '" +
                                    (t.kind == Tok::End ? "end of input" : t.text) + "'");
    }
  }

  ExprPtr unary(const Token& kw) {
    expect(Tok::LBracket, "'['");
    if (kw.text == "select") {
      Token predStart = lex_.peek();
      Predicate pred = predicate();
      if (pred.attrs().empty())
        throw ParseError(predStart.pos, "selection predicate must name at least one attribute");
      expect(Tok::RBracket, "']'");
      ExprPtr input = parenthesized_input();
      return make_select(std::move(pred), std::move(input), Span{kw.pos, last_end_});
    }
    if (kw.text == "project") {
      std::vector<AttrName> attrs;
      if (lex_.peek().kind != Tok::RBracket) {
        for (;;) {
          Token a = expect(Tok::Attr, "attribute name");
          AttrName attr{a.text};
          for (const auto& seen : attrs)
            if (seen == attr)
              throw ParseError(a.pos, "duplicate attribute '" + a.text + "' in projection list");
          attrs.push_back(std::move(attr));
          if (lex_.peek().kind != Tok::Comma) break;
          lex_.take();
        }
      }
      expect(Tok::RBracket, "']'");
      ExprPtr input = parenthesized_input();
      return make_project(std::move(attrs), std::move(input), Span{kw.pos, last_end_});
    }
    if (kw.text == "rename") {
      Token from = expect(Tok::Attr, "attribute name");
      expect(Tok::Slash, "'/'");
      Token to = expect(Tok::Attr, "attribute name");
      if (from.text == to.text)
        throw ParseError(to.pos, "rename with identical attributes '" + to.text + "'");
      expect(Tok::RBracket, "']'");
      ExprPtr input = parenthesized_input();
      return make_rename(AttrName{from.text}, AttrName{to.text}, std::move(input),
                         Span{kw.pos, last_end_});
    }
    // projout
    Token attr = expect(Tok::Attr, "attribute name");
    expect(Tok::RBracket, "']'");
    ExprPtr input = parenthesized_input();
    return make_projectout(AttrName{attr.text}, std::move(input), Span{kw.pos, last_end_});
  }

  ExprPtr parenthesized_input() {
    expect(Tok::LParen, "'('");
    ExprPtr e = expression();
    Token close = expect(Tok::RParen, "')'");
    last_end_ = close.end;
    return e;
  }

  Predicate predicate() {
    Predicate pred;
    pred.conjuncts.push_back(comparison());
    while (lex_.peek().kind == Tok::Amp) {
      lex_.take();
      pred.conjuncts.push_back(comparison());
    }
    return pred;
  }

  Comparison comparison() {
    Comparison c;
    c.lhs = operand();
    Token op = expect(Tok::Cmp, "comparison operator");
    c.op = op.cmp;
    c.rhs = operand();
    return c;
  }

  Operand operand() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Attr: {
        Token a = lex_.take();
        return Operand{Operand::Kind::Attribute, a.text, false};
      }
      case Tok::Number: {
        Token n = lex_.take();
        return Operand{Operand::Kind::Literal, n.text, false};
      }
      case Tok::String: {
        Token s = lex_.take();
        return Operand{Operand::Kind::Literal, s.text, true};
      }
      default:
        throw ParseError(t.pos, "expected attribute or literal, found '" +
                                    (t.kind == Tok::End ? "end of input" : t.text) + "'");
    }
  }

  ExprLexer lex_;
  std::size_t last_end_ = 0;
};

}  // namespace detail

/// Parse the concrete expression syntax. Throws ParseError with the byte
/// position of the offending token.
inline ExprPtr parse_expr(std::string_view text) {
  return detail::ExprParser(text).parse();
}

}  // namespace ratype
