// Type contexts, instantiations, and type formulas: the polymorphic
// counterpart of a type assignment. A formula's instantiations generate
// concrete type assignments (images) together with output types.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ratype/ast.hpp"
#include "ratype/bool_formula.hpp"
#include "ratype/set_equations.hpp"
#include "ratype/typecheck.hpp"

namespace ratype {

struct TypeContext {
  std::set<RelVar> relvars;
  std::set<EqVar> typevars;
  std::map<RelVar, std::set<EqVar>> decl;       // total on relvars, images in typevars
  std::set<AttrName> specattrs;
  std::map<AttrName, BoolFormula> constraint;   // total on specattrs, over relvars
};

/// Chooses a concrete, pairwise-disjoint, special-attribute-free type for
/// every type variable and a constraint-satisfying set of relation
/// variables for every special attribute.
struct Instantiation {
  std::map<EqVar, RelationType> var_types;
  std::map<AttrName, std::set<RelVar>> attr_sets;
};

struct TypeFormula {
  TypeContext context;
  ExprPtr expr;
  std::set<EqVar> outvars;                   // subset of context.typevars
  std::map<AttrName, BoolFormula> outatt;    // total on context.specattrs
};

inline void validate_instantiation(const TypeContext& gamma, const Instantiation& inst) {
  auto bad = [](const std::string& why) {
    throw std::invalid_argument("invalid instantiation: " + why);
  };
  if (inst.var_types.size() != gamma.typevars.size()) bad("var_types is not total on the type variables");
  for (const auto& a : gamma.typevars)
    if (!inst.var_types.count(a)) bad("no type for type variable '" + a.name + "'");
  for (auto it = inst.var_types.begin(); it != inst.var_types.end(); ++it) {
    for (const auto& attr : it->second)
      if (gamma.specattrs.count(attr))
        bad("special attribute '" + attr.name + "' occurs in the type of '" + it->first.name + "'");
    for (auto jt = std::next(it); jt != inst.var_types.end(); ++jt)
      for (const auto& attr : it->second)
        if (jt->second.count(attr))
          bad("types of '" + it->first.name + "' and '" + jt->first.name +
              "' overlap on '" + attr.name + "'");
  }
  if (inst.attr_sets.size() != gamma.specattrs.size()) bad("attr_sets is not total on the special attributes");
  for (const auto& attr : gamma.specattrs) {
    auto it = inst.attr_sets.find(attr);
    if (it == inst.attr_sets.end()) bad("no relvar set for special attribute '" + attr.name + "'");
    for (const auto& r : it->second)
      if (!gamma.relvars.count(r))
        bad("attribute set of '" + attr.name + "' mentions unknown relation '" + r.name + "'");
    if (!eval(gamma.constraint.at(attr), it->second))
      bad("constraint on '" + attr.name + "' is violated");
  }
}

namespace detail {
inline TypeAssignment image_unchecked(const TypeContext& gamma, const Instantiation& inst) {
  TypeAssignment out;
  for (const auto& r : gamma.relvars) {
    RelationType t;
    for (const auto& a : gamma.decl.at(r)) {
      const RelationType& at = inst.var_types.at(a);
      t.insert(at.begin(), at.end());
    }
    for (const auto& attr : gamma.specattrs)
      if (inst.attr_sets.at(attr).count(r)) t.insert(attr);
    out.emplace(r, std::move(t));
  }
  return out;
}

inline RelationType output_type_unchecked(const TypeFormula& phi, const Instantiation& inst) {
  RelationType t;
  for (const auto& a : phi.outvars) {
    const RelationType& at = inst.var_types.at(a);
    t.insert(at.begin(), at.end());
  }
  for (const auto& attr : phi.context.specattrs)
    if (eval(phi.outatt.at(attr), inst.attr_sets.at(attr))) t.insert(attr);
  return t;
}
}  // namespace detail

/// The type assignment induced by an instantiation: each relation gets the
/// union of its declared type variables' types plus the special attributes
/// whose chosen relvar set contains it.
inline TypeAssignment image(const TypeContext& gamma, const Instantiation& inst) {
  validate_instantiation(gamma, inst);
  return detail::image_unchecked(gamma, inst);
}

/// The output type under an instantiation: the union over the output
/// variables plus the special attributes whose output condition holds.
inline RelationType output_type(const TypeFormula& phi, const Instantiation& inst) {
  validate_instantiation(phi.context, inst);
  return detail::output_type_unchecked(phi, inst);
}

/// Add a special attribute the formula does not mention yet. The new
/// constraint says: if any relation carries the attribute, the carriers
/// are exactly the relations declaring some one type variable. The new
/// output condition holds for the relations whose declaration lies inside
/// the output variables.
inline TypeFormula extend_with_attribute(TypeFormula phi, const AttrName& attr) {
  if (phi.context.specattrs.count(attr))
    throw std::invalid_argument("attribute '" + attr.name + "' is already special");

  const auto& gamma = phi.context;
  BoolFormula some_rel = BoolFormula::literal(false);
  {
    bool first = true;
    for (const auto& r : gamma.relvars) {
      BoolFormula v = BoolFormula::variable(r);
      some_rel = first ? v : (some_rel | v);
      first = false;
    }
  }
  BoolFormula carriers = BoolFormula::literal(false);
  bool first_var = true;
  for (const auto& a : gamma.typevars) {
    BoolFormula exact = BoolFormula::literal(true);
    bool first_rel = true;
    for (const auto& r : gamma.relvars) {
      BoolFormula lit = gamma.decl.at(r).count(a) ? BoolFormula::variable(r)
                                                  : !BoolFormula::variable(r);
      exact = first_rel ? lit : (exact & lit);
      first_rel = false;
    }
    carriers = first_var ? exact : (carriers | exact);
    first_var = false;
  }
  BoolFormula out_cond = BoolFormula::literal(false);
  {
    bool first = true;
    for (const auto& r : gamma.relvars) {
      if (!std::includes(phi.outvars.begin(), phi.outvars.end(),
                         gamma.decl.at(r).begin(), gamma.decl.at(r).end()))
        continue;
      BoolFormula v = BoolFormula::variable(r);
      out_cond = first ? v : (out_cond | v);
      first = false;
    }
  }

  phi.context.specattrs.insert(attr);
  phi.context.constraint.emplace(attr, BoolFormula::implies(some_rel, carriers));
  phi.outatt.emplace(attr, out_cond);
  return phi;
}

/// Conjunction of two compatible contexts: union of relvars and
/// declarations, per-attribute conjunction of constraints.
inline TypeContext conjoin(const TypeContext& g1, const TypeContext& g2) {
  if (g1.typevars != g2.typevars)
    throw std::invalid_argument("incompatible contexts: different type variables");
  if (g1.specattrs != g2.specattrs)
    throw std::invalid_argument("incompatible contexts: different special attributes");
  for (const auto& [r, d] : g1.decl) {
    auto it = g2.decl.find(r);
    if (it != g2.decl.end() && it->second != d)
      throw std::invalid_argument("incompatible contexts: declarations disagree on '" + r.name + "'");
  }

  TypeContext out;
  out.relvars = g1.relvars;
  out.relvars.insert(g2.relvars.begin(), g2.relvars.end());
  out.typevars = g1.typevars;
  out.specattrs = g1.specattrs;
  out.decl = g1.decl;
  out.decl.insert(g2.decl.begin(), g2.decl.end());
  for (const auto& attr : out.specattrs)
    out.constraint.emplace(attr, g1.constraint.at(attr) & g2.constraint.at(attr));
  return out;
}

/// A context has instantiations iff every attribute constraint is
/// satisfiable: attribute choices are independent of each other in the
/// instantiation definition, and the type variables can always be
/// instantiated (all-empty works).
inline bool context_satisfiable(const TypeContext& gamma) {
  for (const auto& [attr, f] : gamma.constraint)
    if (!satisfiable(f, gamma.relvars)) return false;
  return true;
}

/// Enumerate every instantiation of gamma whose variable types draw from
/// `universe` minus gamma's special attributes, and whose attribute sets
/// range over the constraint-satisfying subsets of the relvars. Pairwise
/// disjointness is enforced by giving each attribute at most one owner.
template <class Fn>
void for_each_instantiation(const TypeContext& gamma, const std::set<AttrName>& universe, Fn&& fn) {
  std::vector<AttrName> avail;
  for (const auto& a : universe)
    if (!gamma.specattrs.count(a)) avail.push_back(a);
  const std::vector<EqVar> tv(gamma.typevars.begin(), gamma.typevars.end());

  std::vector<AttrName> spec(gamma.specattrs.begin(), gamma.specattrs.end());
  std::vector<std::vector<std::set<RelVar>>> choices(spec.size());
  {
    const std::vector<RelVar> rv(gamma.relvars.begin(), gamma.relvars.end());
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const BoolFormula& f = gamma.constraint.at(spec[i]);
      for (std::size_t mask = 0; mask < (std::size_t{1} << rv.size()); ++mask) {
        std::set<RelVar> chosen;
        for (std::size_t j = 0; j < rv.size(); ++j)
          if (mask & (std::size_t{1} << j)) chosen.insert(rv[j]);
        if (eval(f, chosen)) choices[i].push_back(std::move(chosen));
      }
      if (choices[i].empty()) return;  // unsatisfiable context
    }
  }

  Instantiation inst;
  for (const auto& a : tv) inst.var_types.emplace(a, RelationType{});

  std::vector<int> owner(avail.size(), -1);      // avail attr -> typevar index or none
  std::vector<std::size_t> pick(spec.size(), 0); // specattr -> choice index

  auto emit = [&] {
    for (auto& [a, t] : inst.var_types) t.clear();
    for (std::size_t i = 0; i < avail.size(); ++i)
      if (owner[i] >= 0) inst.var_types[tv[static_cast<std::size_t>(owner[i])]].insert(avail[i]);
    inst.attr_sets.clear();
    for (std::size_t i = 0; i < spec.size(); ++i) inst.attr_sets.emplace(spec[i], choices[i][pick[i]]);
    fn(std::as_const(inst));
  };

  auto attr_loop = [&](auto&& self, std::size_t i) -> void {
    if (i == spec.size()) {
      emit();
      return;
    }
    for (pick[i] = 0; pick[i] < choices[i].size(); ++pick[i]) self(self, i + 1);
  };
  auto var_loop = [&](auto&& self, std::size_t i) -> void {
    if (i == avail.size()) {
      attr_loop(attr_loop, 0);
      return;
    }
    for (int o = -1; o < static_cast<int>(tv.size()); ++o) {
      owner[i] = o;
      self(self, i + 1);
    }
  };
  var_loop(var_loop, 0);
}

/// The (image, output type) behavior of a formula over a bounded attribute
/// universe.
inline std::set<std::pair<TypeAssignment, RelationType>> bounded_behavior(
    const TypeFormula& phi, const std::set<AttrName>& universe) {
  std::set<std::pair<TypeAssignment, RelationType>> out;
  for_each_instantiation(phi.context, universe, [&](const Instantiation& inst) {
    out.emplace(detail::image_unchecked(phi.context, inst),
                detail::output_type_unchecked(phi, inst));
  });
  return out;
}

/// Decide equivalence of two formulas for the same expression over a
/// bounded universe: the special attributes of both sides plus
/// `extra_attrs` fresh attribute names. True iff the induced sets of
/// (image, output type) pairs coincide.
inline bool formulas_equivalent_bounded(const TypeFormula& p1, const TypeFormula& p2,
                                        int extra_attrs) {
  if (extra_attrs < 0 || extra_attrs > 3)
    throw std::invalid_argument("extra_attrs must be between 0 and 3");
  if (p1.context.relvars != p2.context.relvars)
    throw std::invalid_argument("formulas range over different relation variables");
  if (!structurally_equal(*p1.expr, *p2.expr))
    throw std::invalid_argument("formulas describe different expressions");

  std::set<AttrName> universe = p1.context.specattrs;
  universe.insert(p2.context.specattrs.begin(), p2.context.specattrs.end());
  int added = 0;
  for (int i = 1; added < extra_attrs; ++i) {
    AttrName fresh{"X" + std::to_string(i)};
    if (universe.insert(fresh).second) ++added;
  }
  return bounded_behavior(p1, universe) == bounded_behavior(p2, universe);
}

/// Structural output-variable cover: every output variable is declared by
/// some relation whose whole declaration lies in the output variables.
/// Holds for every formula the inference algorithm produces.
inline bool has_outvar_cover(const TypeFormula& phi) {
  for (const auto& a : phi.outvars) {
    bool covered = false;
    for (const auto& [r, d] : phi.context.decl) {
      if (!d.count(a)) continue;
      if (std::includes(phi.outvars.begin(), phi.outvars.end(), d.begin(), d.end())) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

// Serialization. Type variables are renamed to c1, c2, ... in first-
// occurrence order over the sorted-relvar declarations and then the output
// variables; ties inside one declaration are broken by the variable's
// signature (the set of declaring relations), which makes the naming
// independent of internal variable names.
namespace detail {
inline std::map<EqVar, int> canonical_typevar_indices(const TypeFormula& phi) {
  using Signature = std::pair<std::vector<RelVar>, bool>;
  std::map<EqVar, Signature> sig;
  for (const auto& a : phi.context.typevars) sig[a] = {{}, phi.outvars.count(a) > 0};
  for (const auto& [r, d] : phi.context.decl)
    for (const auto& a : d) sig[a].first.push_back(r);

  auto ordered = [&](const std::set<EqVar>& vars) {
    std::vector<EqVar> vs(vars.begin(), vars.end());
    std::sort(vs.begin(), vs.end(), [&](const EqVar& x, const EqVar& y) {
      if (sig.at(x) != sig.at(y)) return sig.at(x) < sig.at(y);
      return x < y;
    });
    return vs;
  };

  std::map<EqVar, int> index;
  auto assign = [&](const std::set<EqVar>& vars) {
    for (const auto& a : ordered(vars))
      if (!index.count(a)) index.emplace(a, static_cast<int>(index.size()) + 1);
  };
  for (const auto& r : phi.context.relvars) assign(phi.context.decl.at(r));
  assign(phi.outvars);
  for (const auto& a : phi.context.typevars)
    if (!index.count(a)) index.emplace(a, static_cast<int>(index.size()) + 1);
  return index;
}

inline std::string canonical_var_list(const std::set<EqVar>& vars,
                                      const std::map<EqVar, int>& index) {
  std::vector<int> ids;
  for (const auto& a : vars) ids.push_back(index.at(a));
  std::sort(ids.begin(), ids.end());
  std::string out;
  for (int id : ids) out += " c" + std::to_string(id);
  return out;
}
}  // namespace detail

inline std::string render_type_formula(const TypeFormula& phi, bool simplify_formulas = false) {
  auto index = detail::canonical_typevar_indices(phi);
  std::string out;
  for (const auto& r : phi.context.relvars)
    out += "decl " + r.name + ":" + detail::canonical_var_list(phi.context.decl.at(r), index) + "\n";
  out += "out:" + detail::canonical_var_list(phi.outvars, index) + "\n";
  for (const auto& attr : phi.context.specattrs) {
    BoolFormula c = phi.context.constraint.at(attr);
    BoolFormula o = phi.outatt.at(attr);
    if (simplify_formulas) {
      c = simplify(c);
      o = simplify(o);
    }
    out += "attr " + attr.name + ": " + render_formula(c) + " || " + attr.name + ": " +
           render_formula(o) + "\n";
  }
  return out;
}

}  // namespace ratype
