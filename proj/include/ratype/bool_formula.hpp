// Propositional formulas over relation variables. Satisfiability and
// equivalence are decided by exhaustive truth tables; the variable sets in
// play are the relation variables of one expression, which stay small.
#pragma once

#include <cctype>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ratype/ast.hpp"
#include "ratype/parse.hpp"

namespace ratype {

class BoolFormula {
 public:
  enum class Kind { True, False, Var, Not, And, Or, Implies, Iff };

  BoolFormula() : BoolFormula(literal(true)) {}

  static BoolFormula literal(bool v) {
    return BoolFormula(std::make_shared<const Node>(Node{v ? Kind::True : Kind::False, {}, nullptr, nullptr}));
  }
  static BoolFormula variable(RelVar v) {
    return BoolFormula(std::make_shared<const Node>(Node{Kind::Var, std::move(v), nullptr, nullptr}));
  }
  static BoolFormula variable(std::string name) { return variable(RelVar{std::move(name)}); }

  friend BoolFormula operator!(const BoolFormula& f) {
    return BoolFormula(std::make_shared<const Node>(Node{Kind::Not, {}, f.n_, nullptr}));
  }
  friend BoolFormula operator&(const BoolFormula& a, const BoolFormula& b) {
    return BoolFormula(std::make_shared<const Node>(Node{Kind::And, {}, a.n_, b.n_}));
  }
  friend BoolFormula operator|(const BoolFormula& a, const BoolFormula& b) {
    return BoolFormula(std::make_shared<const Node>(Node{Kind::Or, {}, a.n_, b.n_}));
  }
  static BoolFormula implies(const BoolFormula& a, const BoolFormula& b) {
    return BoolFormula(std::make_shared<const Node>(Node{Kind::Implies, {}, a.n_, b.n_}));
  }
  static BoolFormula iff(const BoolFormula& a, const BoolFormula& b) {
    return BoolFormula(std::make_shared<const Node>(Node{Kind::Iff, {}, a.n_, b.n_}));
  }

  Kind kind() const { return n_->kind; }
  const RelVar& var() const { return n_->var; }
  BoolFormula left() const { return BoolFormula(n_->a); }
  BoolFormula right() const { return BoolFormula(n_->b); }

  friend bool operator==(const BoolFormula& a, const BoolFormula& b) {
    if (a.n_ == b.n_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case Kind::True:
      case Kind::False: return true;
      case Kind::Var: return a.var() == b.var();
      case Kind::Not: return a.left() == b.left();
      default: return a.left() == b.left() && a.right() == b.right();
    }
  }

 private:
  struct Node {
    Kind kind;
    RelVar var;  // Var only
    std::shared_ptr<const Node> a, b;
  };
  explicit BoolFormula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

/// Standard semantics; variables outside `truthy` are false.
inline bool eval(const BoolFormula& f, const std::set<RelVar>& truthy) {
  using K = BoolFormula::Kind;
  switch (f.kind()) {
    case K::True: return true;
    case K::False: return false;
    case K::Var: return truthy.count(f.var()) > 0;
    case K::Not: return !eval(f.left(), truthy);
    case K::And: return eval(f.left(), truthy) && eval(f.right(), truthy);
    case K::Or: return eval(f.left(), truthy) || eval(f.right(), truthy);
    case K::Implies: return !eval(f.left(), truthy) || eval(f.right(), truthy);
    case K::Iff: return eval(f.left(), truthy) == eval(f.right(), truthy);
  }
  return false;
}

inline void collect_variables(const BoolFormula& f, std::set<RelVar>& out) {
  using K = BoolFormula::Kind;
  switch (f.kind()) {
    case K::True:
    case K::False: return;
    case K::Var: out.insert(f.var()); return;
    case K::Not: collect_variables(f.left(), out); return;
    default:
      collect_variables(f.left(), out);
      collect_variables(f.right(), out);
  }
}

inline std::set<RelVar> variables(const BoolFormula& f) {
  std::set<RelVar> out;
  collect_variables(f, out);
  return out;
}

namespace detail {
template <class Fn>
bool any_subset(const std::vector<RelVar>& vars, Fn&& pred) {
  if (vars.size() > 20)
    throw std::invalid_argument("truth-table enumeration limited to 20 variables");
  std::set<RelVar> truthy;
  const std::size_t n = vars.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    truthy.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) truthy.insert(vars[i]);
    if (pred(truthy)) return true;
  }
  return false;
}
}  // namespace detail

/// True iff some subset of `vars` satisfies f. Exhaustive over 2^|vars|.
inline bool satisfiable(const BoolFormula& f, const std::set<RelVar>& vars) {
  std::vector<RelVar> vs(vars.begin(), vars.end());
  return detail::any_subset(vs, [&](const std::set<RelVar>& truthy) { return eval(f, truthy); });
}

/// True iff f and g agree on every subset of `vars`.
inline bool equivalent(const BoolFormula& f, const BoolFormula& g, const std::set<RelVar>& vars) {
  std::vector<RelVar> vs(vars.begin(), vars.end());
  return !detail::any_subset(
      vs, [&](const std::set<RelVar>& truthy) { return eval(f, truthy) != eval(g, truthy); });
}

inline bool equivalent(const BoolFormula& f, const BoolFormula& g) {
  std::set<RelVar> vars = variables(f);
  collect_variables(g, vars);
  return equivalent(f, g, vars);
}

/// Best-effort display simplification: constant folding, double negation,
/// true/false absorption, x->x and x<->x collapse, idempotence. Not a
/// canonical form; comparisons must go through equivalent().
inline BoolFormula simplify(const BoolFormula& f) {
  using K = BoolFormula::Kind;
  auto t = BoolFormula::literal(true);
  auto ff = BoolFormula::literal(false);
  switch (f.kind()) {
    case K::True:
    case K::False:
    case K::Var: return f;
    case K::Not: {
      BoolFormula a = simplify(f.left());
      if (a.kind() == K::True) return ff;
      if (a.kind() == K::False) return t;
      if (a.kind() == K::Not) return a.left();
      return !a;
    }
    case K::And: {
      BoolFormula a = simplify(f.left()), b = simplify(f.right());
      if (a.kind() == K::False || b.kind() == K::False) return ff;
      if (a.kind() == K::True) return b;
      if (b.kind() == K::True) return a;
      if (a == b) return a;
      return a & b;
    }
    case K::Or: {
      BoolFormula a = simplify(f.left()), b = simplify(f.right());
      if (a.kind() == K::True || b.kind() == K::True) return t;
      if (a.kind() == K::False) return b;
      if (b.kind() == K::False) return a;
      if (a == b) return a;
      return a | b;
    }
    case K::Implies: {
      BoolFormula a = simplify(f.left()), b = simplify(f.right());
      if (a == b) return t;
      if (a.kind() == K::False || b.kind() == K::True) return t;
      if (a.kind() == K::True) return b;
      if (b.kind() == K::False) return simplify(!a);
      return BoolFormula::implies(a, b);
    }
    case K::Iff: {
      BoolFormula a = simplify(f.left()), b = simplify(f.right());
      if (a == b) return t;
      if (a.kind() == K::True) return b;
      if (b.kind() == K::True) return a;
      if (a.kind() == K::False) return simplify(!b);
      if (b.kind() == K::False) return simplify(!a);
      return BoolFormula::iff(a, b);
    }
  }
  return f;
}

// Text form. Precedence: ! > & > | > -> > <->; the arrows are
// right-associative, & and | left-associative.
namespace detail {
inline int formula_level(BoolFormula::Kind k) {
  using K = BoolFormula::Kind;
  switch (k) {
    case K::Iff: return 0;
    case K::Implies: return 1;
    case K::Or: return 2;
    case K::And: return 3;
    case K::Not: return 4;
    default: return 5;
  }
}

inline void render_formula_rec(const BoolFormula& f, int context_level, bool right_side,
                               std::string& out) {
  using K = BoolFormula::Kind;
  int level = formula_level(f.kind());
  bool parens = level < context_level ||
                (level == context_level && level <= 3 && right_side) ||   // & | left-assoc
                (level == context_level && level <= 1 && !right_side);   // arrows right-assoc
  if (parens) out += "(";
  switch (f.kind()) {
    case K::True: out += "true"; break;
    case K::False: out += "false"; break;
    case K::Var: out += f.var().name; break;
    case K::Not:
      out += "!";
      render_formula_rec(f.left(), 4, true, out);
      break;
    case K::And:
      render_formula_rec(f.left(), 3, false, out);
      out += " & ";
      render_formula_rec(f.right(), 3, true, out);
      break;
    case K::Or:
      render_formula_rec(f.left(), 2, false, out);
      out += " | ";
      render_formula_rec(f.right(), 2, true, out);
      break;
    case K::Implies:
      render_formula_rec(f.left(), 1, false, out);
      out += " -> ";
      render_formula_rec(f.right(), 1, true, out);
      break;
    case K::Iff:
      render_formula_rec(f.left(), 0, false, out);
      out += " <-> ";
      render_formula_rec(f.right(), 0, true, out);
      break;
  }
  if (parens) out += ")";
}
}  // namespace detail

inline std::string render_formula(const BoolFormula& f) {
  std::string out;
  detail::render_formula_rec(f, 0, false, out);
  return out;
}

namespace detail {

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view src) : src_(src) {}

  BoolFormula parse() {
    BoolFormula f = iff_level();
    skip_ws();
    if (i_ < src_.size())
      throw ParseError(i_, std::string("expected end of formula, found '") + src_[i_] + "'");
    return f;
  }

 private:
  void skip_ws() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
  }
  bool eat(std::string_view tok) {
    skip_ws();
    if (src_.substr(i_).starts_with(tok)) {
      i_ += tok.size();
      return true;
    }
    return false;
  }

  BoolFormula iff_level() {
    BoolFormula a = implies_level();
    if (eat("<->")) return BoolFormula::iff(a, iff_level());
    return a;
  }
  BoolFormula implies_level() {
    BoolFormula a = or_level();
    if (eat("->")) return BoolFormula::implies(a, implies_level());
    return a;
  }
  BoolFormula or_level() {
    BoolFormula a = and_level();
    while (true) {
      skip_ws();
      if (i_ < src_.size() && src_[i_] == '|') {
        ++i_;
        a = a | and_level();
      } else {
        return a;
      }
    }
  }
  BoolFormula and_level() {
    BoolFormula a = unary();
    while (true) {
      skip_ws();
      if (i_ < src_.size() && src_[i_] == '&') {
        ++i_;
        a = a & unary();
      } else {
        return a;
      }
    }
  }
  BoolFormula unary() {
    skip_ws();
    if (i_ < src_.size() && src_[i_] == '!') {
      ++i_;
      return !unary();
    }
    return atom();
  }
  BoolFormula atom() {
    skip_ws();
    if (i_ >= src_.size()) throw ParseError(i_, "expected formula, found end of input");
    if (src_[i_] == '(') {
      ++i_;
      BoolFormula f = iff_level();
      skip_ws();
      if (i_ >= src_.size() || src_[i_] != ')') throw ParseError(i_, "expected ')'");
      ++i_;
      return f;
    }
    if (std::isalpha(static_cast<unsigned char>(src_[i_]))) {
      std::size_t start = i_;
      while (i_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
        ++i_;
      std::string name(src_.substr(start, i_ - start));
      if (name == "true") return BoolFormula::literal(true);
      if (name == "false") return BoolFormula::literal(false);
      if (std::isupper(static_cast<unsigned char>(name[0])))
        throw ParseError(start, "formula variables are relation variables (lowercase-initial)");
      return BoolFormula::variable(std::move(name));
    }
    throw ParseError(i_, std::string("expected formula, found '") + src_[i_] + "'");
  }

  std::string_view src_;
  std::size_t i_ = 0;
};

}  // namespace detail

inline BoolFormula parse_formula(std::string_view text) {
  return detail::FormulaParser(text).parse();
}

}  // namespace ratype
