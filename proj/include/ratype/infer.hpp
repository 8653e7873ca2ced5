// Principal type inference: structural induction over the expression,
// combining child formulas through symbolic set-equation solving. In
// Complete mode the result is always a formula (unsatisfiable when the
// expression is untypable); EarlyStop mode instead reports the first
// operator at which an attribute constraint becomes unsatisfiable.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ratype/ast.hpp"
#include "ratype/bool_formula.hpp"
#include "ratype/set_equations.hpp"
#include "ratype/type_formula.hpp"
#include "ratype/typecheck.hpp"

namespace ratype {

struct InferenceDiagnostic {
  AttrName attribute;
  Span at;  // operator node where the constraint first became unsatisfiable

  std::string message() const {
    return "unsatisfiable constraint on attribute '" + attribute.name + "' (at bytes " +
           std::to_string(at.begin) + ".." + std::to_string(at.end) + ")";
  }
};

enum class InferMode { Complete, EarlyStop };

using InferResult = std::variant<TypeFormula, InferenceDiagnostic>;

namespace detail {

class Inferencer {
 public:
  struct Unsat {
    InferenceDiagnostic diag;
  };

  explicit Inferencer(InferMode mode) : mode_(mode) {}

  TypeFormula run(const ExprPtr& e) {
    return std::visit(
        overloaded{
            [&](const RelVarRef& x) { return base(e, x.var); },
            [&](const Union& x) { return binary(e, x.left, x.right, Case::UnionLike); },
            [&](const Difference& x) { return binary(e, x.left, x.right, Case::UnionLike); },
            [&](const Join& x) { return binary(e, x.left, x.right, Case::Join); },
            [&](const Product& x) { return binary(e, x.left, x.right, Case::Product); },
            [&](const Select& x) { return selection(e, x.pred.attrs(), x.input); },
            [&](const Project& x) { return projection(e, x.attrs, x.input); },
            [&](const Rename& x) { return renaming(e, x.from, x.to, x.input); },
            [&](const ProjectOut& x) { return projecting_out(e, x.attr, x.input); },
        },
        e->node);
  }

 private:
  enum class Case { UnionLike, Join, Product };

  EqVar fresh() { return EqVar{"t" + std::to_string(next_++)}; }

  void check(const TypeFormula& phi, const AttrName& attr, const Span& at) {
    if (mode_ != InferMode::EarlyStop) return;
    if (!satisfiable(phi.context.constraint.at(attr), phi.context.relvars))
      throw Unsat{InferenceDiagnostic{attr, at}};
  }

  TypeFormula base(const ExprPtr& e, const RelVar& r) {
    EqVar a = fresh();
    TypeFormula phi;
    phi.context.relvars = {r};
    phi.context.typevars = {a};
    phi.context.decl.emplace(r, std::set<EqVar>{a});
    phi.expr = e;
    phi.outvars = {a};
    return phi;
  }

  // Extend each side with the attributes only the other side mentions, so
  // both formulas end up over the same special attributes.
  static void align_attributes(TypeFormula& f1, TypeFormula& f2) {
    std::set<AttrName> only1, only2;
    for (const auto& a : f1.context.specattrs)
      if (!f2.context.specattrs.count(a)) only1.insert(a);
    for (const auto& a : f2.context.specattrs)
      if (!f1.context.specattrs.count(a)) only2.insert(a);
    for (const auto& a : only2) f1 = extend_with_attribute(std::move(f1), a);
    for (const auto& a : only1) f2 = extend_with_attribute(std::move(f2), a);
  }

  TypeFormula binary(const ExprPtr& e, const ExprPtr& left, const ExprPtr& right, Case kind) {
    TypeFormula f1 = run(left);
    TypeFormula f2 = run(right);
    align_attributes(f1, f2);

    // Fresh variables are drawn from one counter, so the children's type
    // variables are already disjoint and can serve as the two pools.
    EquationSystem sys;
    sys.left_pool = f1.context.typevars;
    sys.right_pool = f2.context.typevars;
    for (const auto& [r, d1] : f1.context.decl) {
      auto it = f2.context.decl.find(r);
      if (it != f2.context.decl.end()) sys.equations.push_back(Equation{d1, it->second});
    }
    if (kind == Case::UnionLike) sys.equations.push_back(Equation{f1.outvars, f2.outvars});

    std::set<std::pair<EqVar, EqVar>> forced;
    if (kind == Case::Product)
      for (const auto& a : f1.outvars)
        for (const auto& b : f2.outvars) forced.emplace(a, b);

    SymbolicSolution sol = solve(sys, forced);

    std::map<SolutionVar, EqVar> names;
    std::set<EqVar> new_typevars;
    for (const auto& c : sol.fresh_vars) {
      EqVar v = fresh();
      new_typevars.insert(v);
      names.emplace(c, v);
    }
    auto subst = [&](const std::set<EqVar>& vars) {
      std::set<EqVar> out;
      for (const auto& c : apply_solution(sol, vars)) out.insert(names.at(c));
      return out;
    };

    auto rebuild = [&](const TypeFormula& f) {
      TypeContext ctx;
      ctx.relvars = f.context.relvars;
      ctx.typevars = new_typevars;
      for (const auto& [r, d] : f.context.decl) ctx.decl.emplace(r, subst(d));
      ctx.specattrs = f.context.specattrs;
      ctx.constraint = f.context.constraint;
      return ctx;
    };
    TypeContext ctx = conjoin(rebuild(f1), rebuild(f2));

    TypeFormula phi;
    phi.expr = e;
    if (kind == Case::UnionLike) {
      phi.outvars = subst(f1.outvars);  // equals subst(f2.outvars) by the added equation
    } else {
      phi.outvars = subst(f1.outvars);
      auto o2 = subst(f2.outvars);
      phi.outvars.insert(o2.begin(), o2.end());
    }
    for (const auto& attr : ctx.specattrs) {
      const BoolFormula& o1 = f1.outatt.at(attr);
      const BoolFormula& o2 = f2.outatt.at(attr);
      BoolFormula& c = ctx.constraint.at(attr);
      switch (kind) {
        case Case::UnionLike:
          c = c & BoolFormula::iff(o1, o2);
          phi.outatt.emplace(attr, o1);
          break;
        case Case::Join:
          phi.outatt.emplace(attr, o1 | o2);
          break;
        case Case::Product:
          c = c & !(o1 & o2);
          phi.outatt.emplace(attr, o1 | o2);
          break;
      }
    }
    phi.context = std::move(ctx);
    for (const auto& attr : phi.context.specattrs) check(phi, attr, e->span);
    return phi;
  }

  TypeFormula with_extended(TypeFormula phi, const AttrName& attr) {
    if (!phi.context.specattrs.count(attr)) phi = extend_with_attribute(std::move(phi), attr);
    return phi;
  }

  TypeFormula selection(const ExprPtr& e, const std::vector<AttrName>& attrs,
                        const ExprPtr& input) {
    TypeFormula phi = run(input);
    for (const auto& a : attrs) phi = with_extended(std::move(phi), a);
    for (const auto& a : attrs) {
      BoolFormula& c = phi.context.constraint.at(a);
      c = c & phi.outatt.at(a);
      check(phi, a, e->span);
    }
    for (const auto& a : attrs) phi.outatt.at(a) = BoolFormula::literal(true);
    phi.expr = e;
    return phi;
  }

  TypeFormula projection(const ExprPtr& e, const std::vector<AttrName>& attrs,
                         const ExprPtr& input) {
    TypeFormula phi = selection(e, attrs, input);
    std::set<AttrName> kept(attrs.begin(), attrs.end());
    for (const auto& a : phi.context.specattrs)
      if (!kept.count(a)) phi.outatt.at(a) = BoolFormula::literal(false);
    phi.outvars.clear();
    return phi;
  }

  TypeFormula renaming(const ExprPtr& e, const AttrName& from, const AttrName& to,
                       const ExprPtr& input) {
    TypeFormula phi = run(input);
    phi = with_extended(std::move(phi), from);
    phi = with_extended(std::move(phi), to);
    {
      BoolFormula& c = phi.context.constraint.at(from);
      c = c & phi.outatt.at(from);
      check(phi, from, e->span);
    }
    {
      BoolFormula& c = phi.context.constraint.at(to);
      c = c & !phi.outatt.at(to);
      check(phi, to, e->span);
    }
    phi.outatt.at(from) = BoolFormula::literal(false);
    phi.outatt.at(to) = BoolFormula::literal(true);
    phi.expr = e;
    return phi;
  }

  TypeFormula projecting_out(const ExprPtr& e, const AttrName& attr, const ExprPtr& input) {
    TypeFormula phi = run(input);
    phi = with_extended(std::move(phi), attr);
    BoolFormula& c = phi.context.constraint.at(attr);
    c = c & phi.outatt.at(attr);
    check(phi, attr, e->span);
    phi.outatt.at(attr) = BoolFormula::literal(false);
    phi.expr = e;
    return phi;
  }

  InferMode mode_;
  int next_ = 0;
};

}  // namespace detail

/// Infer the principal type formula of e. EarlyStop mode returns the first
/// unsatisfiability diagnostic instead of completing an unsatisfiable
/// formula; Complete mode always returns a formula.
inline InferResult infer(const ExprPtr& e, InferMode mode = InferMode::Complete) {
  detail::Inferencer inf(mode);
  try {
    return inf.run(e);
  } catch (const detail::Inferencer::Unsat& u) {
    return u.diag;
  }
}

inline TypeFormula infer_complete(const ExprPtr& e) {
  return std::get<TypeFormula>(infer(e, InferMode::Complete));
}

/// Typability via the principal formula: satisfiable context iff typable.
inline bool typable(const ExprPtr& e) {
  return context_satisfiable(infer_complete(e).context);
}

/// Independent typability oracle: enumerate every type assignment with
/// types drawn from the expression's special attributes and return the
/// first one that typechecks. Complete by the restriction lemma; guarded
/// because the enumeration is exponential.
inline std::optional<TypeAssignment> typable_bruteforce(const ExprPtr& e) {
  const std::set<RelVar> rvset = relvars(e);
  const std::set<AttrName> saset = specattrs(e);
  const std::vector<RelVar> rvs(rvset.begin(), rvset.end());
  const std::vector<AttrName> sas(saset.begin(), saset.end());
  if (rvs.size() * sas.size() > 16)
    throw std::invalid_argument("typable_bruteforce guard exceeded: |relvars|*|specattrs| > 16");

  const std::uint64_t per_rel = std::uint64_t{1} << sas.size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < rvs.size(); ++i) total *= per_rel;

  for (std::uint64_t counter = 0; counter < total; ++counter) {
    TypeAssignment ta;
    std::uint64_t c = counter;
    for (const auto& r : rvs) {
      std::uint64_t mask = c % per_rel;
      c /= per_rel;
      RelationType t;
      for (std::size_t i = 0; i < sas.size(); ++i)
        if (mask & (std::uint64_t{1} << i)) t.insert(sas[i]);
      ta.emplace(r, std::move(t));
    }
    if (ok(typecheck(ta, e))) return ta;
  }
  return std::nullopt;
}

}  // namespace ratype
