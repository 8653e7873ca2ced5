// The monomorphic typing judgment: checking an expression against one
// concrete type assignment, and the restriction operator on assignments.
#pragma once

#include <algorithm>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include "ratype/ast.hpp"
#include "ratype/parse.hpp"

namespace ratype {

/// A relation's type: a finite set of attribute names.
using RelationType = std::set<AttrName>;

/// Assigns a type to every relation variable of a schema.
using TypeAssignment = std::map<RelVar, RelationType>;

struct TypeError {
  enum class Rule {
    UnknownRelVar,
    UnionMismatch,
    DifferenceMismatch,
    ProductOverlap,
    SelectionMissingAttr,
    ProjectionMissingAttr,
    RenameSourceMissing,
    RenameTargetPresent,
    ProjectOutMissingAttr,
  };
  Rule rule;
  Span at;        // span of the offending subexpression
  std::string detail;

  std::string message() const {
    return detail + " (at bytes " + std::to_string(at.begin) + ".." + std::to_string(at.end) + ")";
  }
};

using TypecheckResult = std::variant<RelationType, TypeError>;

inline bool ok(const TypecheckResult& r) { return std::holds_alternative<RelationType>(r); }
inline const RelationType& type_of(const TypecheckResult& r) { return std::get<RelationType>(r); }
inline const TypeError& error_of(const TypecheckResult& r) { return std::get<TypeError>(r); }

inline std::string render_type(const RelationType& t) {
  std::string out;
  for (const auto& a : t) {
    if (!out.empty()) out += " ";
    out += a.name;
  }
  return out;
}

namespace detail {

inline RelationType type_union(const RelationType& a, const RelationType& b) {
  RelationType out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline RelationType type_intersect(const RelationType& a, const RelationType& b) {
  RelationType out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.end()));
  return out;
}

inline TypecheckResult typecheck_rec(const TypeAssignment& ta, const Expr& e) {
  auto fail = [&](TypeError::Rule rule, std::string detail) -> TypecheckResult {
    return TypeError{rule, e.span, std::move(detail)};
  };
  auto binary = [&](const ExprPtr& l, const ExprPtr& r, auto&& combine) -> TypecheckResult {
    TypecheckResult lt = typecheck_rec(ta, *l);
    if (!ok(lt)) return lt;
    TypecheckResult rt = typecheck_rec(ta, *r);
    if (!ok(rt)) return rt;
    return combine(type_of(lt), type_of(rt));
  };

  return std::visit(
      overloaded{
          [&](const RelVarRef& x) -> TypecheckResult {
            auto it = ta.find(x.var);
            if (it == ta.end())
              return fail(TypeError::Rule::UnknownRelVar,
                          "relation variable '" + x.var.name + "' is not in the schema");
            return it->second;
          },
          [&](const Union& x) -> TypecheckResult {
            return binary(x.left, x.right, [&](const RelationType& a, const RelationType& b) -> TypecheckResult {
              if (a != b)
                return fail(TypeError::Rule::UnionMismatch,
                            "union operands have different types {" + render_type(a) +
                                "} and {" + render_type(b) + "}");
              return a;
            });
          },
          [&](const Difference& x) -> TypecheckResult {
            return binary(x.left, x.right, [&](const RelationType& a, const RelationType& b) -> TypecheckResult {
              if (a != b)
                return fail(TypeError::Rule::DifferenceMismatch,
                            "difference operands have different types {" + render_type(a) +
                                "} and {" + render_type(b) + "}");
              return a;
            });
          },
          [&](const Join& x) -> TypecheckResult {
            return binary(x.left, x.right, [&](const RelationType& a, const RelationType& b) -> TypecheckResult {
              return type_union(a, b);
            });
          },
          [&](const Product& x) -> TypecheckResult {
            return binary(x.left, x.right, [&](const RelationType& a, const RelationType& b) -> TypecheckResult {
              RelationType shared = type_intersect(a, b);
              if (!shared.empty())
                return fail(TypeError::Rule::ProductOverlap,
                            "product operands overlap on {" + render_type(shared) + "}");
              return type_union(a, b);
            });
          },
          [&](const Select& x) -> TypecheckResult {
            TypecheckResult t = typecheck_rec(ta, *x.input);
            if (!ok(t)) return t;
            for (const auto& a : x.pred.attrs())
              if (!type_of(t).count(a))
                return fail(TypeError::Rule::SelectionMissingAttr,
                            "selection mentions '" + a.name + "' which is not in the input type {" +
                                render_type(type_of(t)) + "}");
            return t;
          },
          [&](const Project& x) -> TypecheckResult {
            TypecheckResult t = typecheck_rec(ta, *x.input);
            if (!ok(t)) return t;
            for (const auto& a : x.attrs)
              if (!type_of(t).count(a))
                return fail(TypeError::Rule::ProjectionMissingAttr,
                            "projection mentions '" + a.name + "' which is not in the input type {" +
                                render_type(type_of(t)) + "}");
            return RelationType(x.attrs.begin(), x.attrs.end());
          },
          [&](const Rename& x) -> TypecheckResult {
            TypecheckResult t = typecheck_rec(ta, *x.input);
            if (!ok(t)) return t;
            if (!type_of(t).count(x.from))
              return fail(TypeError::Rule::RenameSourceMissing,
                          "rename source '" + x.from.name + "' is not in the input type {" +
                              render_type(type_of(t)) + "}");
            if (type_of(t).count(x.to))
              return fail(TypeError::Rule::RenameTargetPresent,
                          "rename target '" + x.to.name + "' is already in the input type {" +
                              render_type(type_of(t)) + "}");
            RelationType out = type_of(t);
            out.erase(x.from);
            out.insert(x.to);
            return out;
          },
          [&](const ProjectOut& x) -> TypecheckResult {
            TypecheckResult t = typecheck_rec(ta, *x.input);
            if (!ok(t)) return t;
            if (!type_of(t).count(x.attr))
              return fail(TypeError::Rule::ProjectOutMissingAttr,
                          "projecting out '" + x.attr.name + "' which is not in the input type {" +
                              render_type(type_of(t)) + "}");
            RelationType out = type_of(t);
            out.erase(x.attr);
            return out;
          },
      },
      e.node);
}

}  // namespace detail

/// Derive the unique type of e under ta, or the first type error in
/// leftmost-innermost order. Relation variables of ta that do not occur
/// in e are ignored.
inline TypecheckResult typecheck(const TypeAssignment& ta, const Expr& e) {
  return detail::typecheck_rec(ta, e);
}
inline TypecheckResult typecheck(const TypeAssignment& ta, const ExprPtr& e) {
  return detail::typecheck_rec(ta, *e);
}

/// Pointwise intersection with `attrs`, same domain.
inline TypeAssignment restrict_to(const TypeAssignment& ta, const std::set<AttrName>& attrs) {
  TypeAssignment out;
  for (const auto& [r, t] : ta) out.emplace(r, detail::type_intersect(t, attrs));
  return out;
}

// Type-assignment text format: one line per relation, `r: A B C`;
// `r:` alone means the empty type. Blank lines are skipped.
inline TypeAssignment parse_type_assignment(std::string_view text) {
  TypeAssignment out;
  std::size_t line_start = 0;
  std::size_t offset = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    line_start = offset;
    offset += line.size() + 1;
    std::string trimmed = line;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
      trimmed.pop_back();
    std::size_t lead = 0;
    while (lead < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[lead]))) ++lead;
    trimmed = trimmed.substr(lead);
    if (trimmed.empty()) continue;
    std::size_t colon = trimmed.find(':');
    if (colon == std::string::npos)
      throw ParseError(line_start, "expected 'relvar: A B C' line");
    std::string name = trimmed.substr(0, colon);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
    if (name.empty() || !std::islower(static_cast<unsigned char>(name[0])))
      throw ParseError(line_start, "invalid relation variable '" + name + "'");
    RelVar rv{name};
    if (out.count(rv))
      throw ParseError(line_start, "duplicate relation '" + name + "'");
    RelationType t;
    std::istringstream rest{trimmed.substr(colon + 1)};
    std::string attr;
    while (rest >> attr) {
      if (!std::isupper(static_cast<unsigned char>(attr[0])))
        throw ParseError(line_start, "invalid attribute name '" + attr + "'");
      if (!t.insert(AttrName{attr}).second)
        throw ParseError(line_start, "duplicate attribute '" + attr + "' for relation '" + name + "'");
    }
    out.emplace(std::move(rv), std::move(t));
  }
  return out;
}

inline std::string render_type_assignment(const TypeAssignment& ta) {
  std::string out;
  for (const auto& [r, t] : ta) {
    out += r.name + ":";
    for (const auto& a : t) out += " " + a.name;
    out += "\n";
  }
  return out;
}

}  // namespace ratype
