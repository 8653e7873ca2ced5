// Relational algebra expressions: AST, construction, rendering, and the
// syntactic queries relvars() and specattrs().
#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ratype {

/// Attribute name; uppercase-initial token, case-sensitive equality.
struct AttrName {
  std::string name;
  auto operator<=>(const AttrName&) const = default;
};

/// Relation variable; lowercase-initial token, case-sensitive equality.
struct RelVar {
  std::string name;
  auto operator<=>(const RelVar&) const = default;
};

/// Half-open byte range in the source text an AST node was parsed from.
/// Programmatically built nodes carry the empty default span.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  auto operator<=>(const Span&) const = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

inline std::string_view cmp_token(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

/// One side of a comparison: an attribute or a literal token.
struct Operand {
  enum class Kind { Attribute, Literal };
  Kind kind = Kind::Attribute;
  std::string text;     // attribute name, or literal token without quotes
  bool quoted = false;  // literals: true for string literals, false for numbers
  auto operator<=>(const Operand&) const = default;
};

struct Comparison {
  Operand lhs;
  CmpOp op = CmpOp::Eq;
  Operand rhs;
  auto operator<=>(const Comparison&) const = default;
};

/// Selection predicate: a conjunction of comparisons. The predicate's
/// attribute arguments are the attributes it mentions, in first-mention
/// order; a predicate mentioning no attribute is invalid.
struct Predicate {
  std::vector<Comparison> conjuncts;

  auto operator<=>(const Predicate&) const = default;

  std::vector<AttrName> attrs() const {
    std::vector<AttrName> out;
    auto add = [&](const Operand& o) {
      if (o.kind != Operand::Kind::Attribute) return;
      AttrName a{o.text};
      for (const auto& seen : out)
        if (seen == a) return;
      out.push_back(std::move(a));
    };
    for (const auto& c : conjuncts) {
      add(c.lhs);
      add(c.rhs);
    }
    return out;
  }
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct RelVarRef {
  RelVar var;
};
struct Union {
  ExprPtr left, right;
};
struct Difference {
  ExprPtr left, right;
};
struct Join {
  ExprPtr left, right;
};
struct Product {
  ExprPtr left, right;
};
struct Select {
  Predicate pred;
  ExprPtr input;
};
struct Project {
  std::vector<AttrName> attrs;  // duplicate-free, order as written
  ExprPtr input;
};
struct Rename {
  AttrName from, to;  // from != to
  ExprPtr input;
};
struct ProjectOut {
  AttrName attr;
  ExprPtr input;
};

using ExprNode = std::variant<RelVarRef, Union, Difference, Join, Product,
                              Select, Project, Rename, ProjectOut>;

struct Expr {
  ExprNode node;
  Span span{};
};

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

inline ExprPtr make_expr(ExprNode node, Span span = {}) {
  return std::make_shared<Expr>(Expr{std::move(node), span});
}

inline ExprPtr make_relvar(std::string name, Span span = {}) {
  return make_expr(RelVarRef{RelVar{std::move(name)}}, span);
}
inline ExprPtr make_union(ExprPtr l, ExprPtr r, Span span = {}) {
  return make_expr(Union{std::move(l), std::move(r)}, span);
}
inline ExprPtr make_difference(ExprPtr l, ExprPtr r, Span span = {}) {
  return make_expr(Difference{std::move(l), std::move(r)}, span);
}
inline ExprPtr make_join(ExprPtr l, ExprPtr r, Span span = {}) {
  return make_expr(Join{std::move(l), std::move(r)}, span);
}
inline ExprPtr make_product(ExprPtr l, ExprPtr r, Span span = {}) {
  return make_expr(Product{std::move(l), std::move(r)}, span);
}

inline ExprPtr make_select(Predicate pred, ExprPtr input, Span span = {}) {
  if (pred.attrs().empty())
    throw std::invalid_argument("selection predicate must name at least one attribute");
  return make_expr(Select{std::move(pred), std::move(input)}, span);
}

inline ExprPtr make_project(std::vector<AttrName> attrs, ExprPtr input, Span span = {}) {
  for (std::size_t i = 0; i < attrs.size(); ++i)
    for (std::size_t j = i + 1; j < attrs.size(); ++j)
      if (attrs[i] == attrs[j])
        throw std::invalid_argument("duplicate attribute '" + attrs[i].name +
                                    "' in projection list");
  return make_expr(Project{std::move(attrs), std::move(input)}, span);
}

inline ExprPtr make_rename(AttrName from, AttrName to, ExprPtr input, Span span = {}) {
  if (from == to)
    throw std::invalid_argument("rename with identical attributes '" + from.name + "'");
  return make_expr(Rename{std::move(from), std::move(to), std::move(input)}, span);
}

inline ExprPtr make_projectout(AttrName attr, ExprPtr input, Span span = {}) {
  return make_expr(ProjectOut{std::move(attr), std::move(input)}, span);
}

/// Structural equality; spans are presentation data and do not participate.
inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  auto eq = [](const ExprPtr& x, const ExprPtr& y) {
    return structurally_equal(*x, *y);
  };
  return std::visit(
      detail::overloaded{
          [&](const RelVarRef& x) { return x.var == std::get<RelVarRef>(b.node).var; },
          [&](const Union& x) {
            const auto& y = std::get<Union>(b.node);
            return eq(x.left, y.left) && eq(x.right, y.right);
          },
          [&](const Difference& x) {
            const auto& y = std::get<Difference>(b.node);
            return eq(x.left, y.left) && eq(x.right, y.right);
          },
          [&](const Join& x) {
            const auto& y = std::get<Join>(b.node);
            return eq(x.left, y.left) && eq(x.right, y.right);
          },
          [&](const Product& x) {
            const auto& y = std::get<Product>(b.node);
            return eq(x.left, y.left) && eq(x.right, y.right);
          },
          [&](const Select& x) {
            const auto& y = std::get<Select>(b.node);
            return x.pred == y.pred && eq(x.input, y.input);
          },
          [&](const Project& x) {
            const auto& y = std::get<Project>(b.node);
            return x.attrs == y.attrs && eq(x.input, y.input);
          },
          [&](const Rename& x) {
            const auto& y = std::get<Rename>(b.node);
            return x.from == y.from && x.to == y.to && eq(x.input, y.input);
          },
          [&](const ProjectOut& x) {
            const auto& y = std::get<ProjectOut>(b.node);
            return x.attr == y.attr && eq(x.input, y.input);
          },
      },
      a.node);
}

inline bool operator==(const Expr& a, const Expr& b) { return structurally_equal(a, b); }

inline std::string render_operand(const Operand& o) {
  if (o.kind == Operand::Kind::Attribute) return o.text;
  if (o.quoted) return "\"" + o.text + "\"";
  return o.text;
}

inline std::string render_predicate(const Predicate& p) {
  std::string out;
  for (std::size_t i = 0; i < p.conjuncts.size(); ++i) {
    if (i) out += " & ";
    const auto& c = p.conjuncts[i];
    out += render_operand(c.lhs);
    out += cmp_token(c.op);
    out += render_operand(c.rhs);
  }
  return out;
}

/// Deterministic fully parenthesized text; parse_expr inverts it.
inline std::string render_expr(const Expr& e) {
  return std::visit(
      detail::overloaded{
          [](const RelVarRef& x) { return x.var.name; },
          [](const Union& x) {
            return "(" + render_expr(*x.left) + " union " + render_expr(*x.right) + ")";
          },
          [](const Difference& x) {
            return "(" + render_expr(*x.left) + " minus " + render_expr(*x.right) + ")";
          },
          [](const Join& x) {
            return "(" + render_expr(*x.left) + " join " + render_expr(*x.right) + ")";
          },
          [](const Product& x) {
            return "(" + render_expr(*x.left) + " times " + render_expr(*x.right) + ")";
          },
          [](const Select& x) {
            return "select[" + render_predicate(x.pred) + "](" + render_expr(*x.input) + ")";
          },
          [](const Project& x) {
            std::string attrs;
            for (std::size_t i = 0; i < x.attrs.size(); ++i) {
              if (i) attrs += ",";
              attrs += x.attrs[i].name;
            }
            return "project[" + attrs + "](" + render_expr(*x.input) + ")";
          },
          [](const Rename& x) {
            return "rename[" + x.from.name + "/" + x.to.name + "](" +
                   render_expr(*x.input) + ")";
          },
          [](const ProjectOut& x) {
            return "projout[" + x.attr.name + "](" + render_expr(*x.input) + ")";
          },
      },
      e.node);
}

inline std::string render_expr(const ExprPtr& e) { return render_expr(*e); }

/// All relation variables occurring in e.
inline void collect_relvars(const Expr& e, std::set<RelVar>& out) {
  std::visit(detail::overloaded{
                 [&](const RelVarRef& x) { out.insert(x.var); },
                 [&](const Union& x) { collect_relvars(*x.left, out); collect_relvars(*x.right, out); },
                 [&](const Difference& x) { collect_relvars(*x.left, out); collect_relvars(*x.right, out); },
                 [&](const Join& x) { collect_relvars(*x.left, out); collect_relvars(*x.right, out); },
                 [&](const Product& x) { collect_relvars(*x.left, out); collect_relvars(*x.right, out); },
                 [&](const Select& x) { collect_relvars(*x.input, out); },
                 [&](const Project& x) { collect_relvars(*x.input, out); },
                 [&](const Rename& x) { collect_relvars(*x.input, out); },
                 [&](const ProjectOut& x) { collect_relvars(*x.input, out); },
             },
             e.node);
}

inline std::set<RelVar> relvars(const Expr& e) {
  std::set<RelVar> out;
  collect_relvars(e, out);
  return out;
}
inline std::set<RelVar> relvars(const ExprPtr& e) { return relvars(*e); }

/// All attribute names explicitly occurring in e (in select, project,
/// rename, projout nodes). Both attributes of a rename count.
inline void collect_specattrs(const Expr& e, std::set<AttrName>& out) {
  std::visit(detail::overloaded{
                 [&](const RelVarRef&) {},
                 [&](const Union& x) { collect_specattrs(*x.left, out); collect_specattrs(*x.right, out); },
                 [&](const Difference& x) { collect_specattrs(*x.left, out); collect_specattrs(*x.right, out); },
                 [&](const Join& x) { collect_specattrs(*x.left, out); collect_specattrs(*x.right, out); },
                 [&](const Product& x) { collect_specattrs(*x.left, out); collect_specattrs(*x.right, out); },
                 [&](const Select& x) {
                   for (auto& a : x.pred.attrs()) out.insert(a);
                   collect_specattrs(*x.input, out);
                 },
                 [&](const Project& x) {
                   out.insert(x.attrs.begin(), x.attrs.end());
                   collect_specattrs(*x.input, out);
                 },
                 [&](const Rename& x) {
                   out.insert(x.from);
                   out.insert(x.to);
                   collect_specattrs(*x.input, out);
                 },
                 [&](const ProjectOut& x) {
                   out.insert(x.attr);
                   collect_specattrs(*x.input, out);
                 },
             },
             e.node);
}

inline std::set<AttrName> specattrs(const Expr& e) {
  std::set<AttrName> out;
  collect_specattrs(e, out);
  return out;
}
inline std::set<AttrName> specattrs(const ExprPtr& e) { return specattrs(*e); }

}  // namespace ratype
