// Systems of set equations over two disjoint variable pools, and their
// symbolic solutions. A symbolic solution is a finite representation of
// every proper (pairwise-disjoint) valuation satisfying the equations.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ratype/parse.hpp"

namespace ratype {

/// A set-equation variable (a type variable, in the intended use).
struct EqVar {
  std::string name;
  auto operator<=>(const EqVar&) const = default;
};

struct Equation {
  std::set<EqVar> lhs;  // subset of the left pool
  std::set<EqVar> rhs;  // subset of the right pool
};

struct EquationSystem {
  std::set<EqVar> left_pool;
  std::set<EqVar> right_pool;
  std::vector<Equation> equations;

  void validate() const {
    for (const auto& v : left_pool)
      if (right_pool.count(v))
        throw std::invalid_argument("variable '" + v.name + "' occurs in both pools");
    for (const auto& eq : equations) {
      for (const auto& v : eq.lhs)
        if (!left_pool.count(v))
          throw std::invalid_argument("left-hand variable '" + v.name + "' is not in the left pool");
      for (const auto& v : eq.rhs)
        if (!right_pool.count(v))
          throw std::invalid_argument("right-hand variable '" + v.name + "' is not in the right pool");
    }
  }
};

/// A fresh variable of a symbolic valuation: either the bar of one pool
/// variable, or the pair of a left and a right pool variable. Distinct
/// fresh variables always stand for disjoint sets.
struct SolutionVar {
  bool is_pair = false;
  EqVar a;  // bar: the pool variable; pair: the left component
  EqVar b;  // pair only: the right component
  auto operator<=>(const SolutionVar&) const = default;

  static SolutionVar bar(EqVar v) { return SolutionVar{false, std::move(v), {}}; }
  static SolutionVar pair(EqVar l, EqVar r) { return SolutionVar{true, std::move(l), std::move(r)}; }
};

struct SymbolicSolution {
  std::set<SolutionVar> fresh_vars;                     // V'
  std::map<EqVar, std::set<SolutionVar>> assignment;    // g' on L ∪ R
};

/// Compute a symbolic solution of `sys`. Every pair in
/// `forced_empty_pairs` is discarded from the fresh variables up front,
/// which forces the images of the two variables of the pair apart; the
/// product case of type inference uses this to make output types disjoint.
inline SymbolicSolution solve(const EquationSystem& sys,
                              const std::set<std::pair<EqVar, EqVar>>& forced_empty_pairs = {}) {
  sys.validate();
  for (const auto& [a, b] : forced_empty_pairs)
    if (!sys.left_pool.count(a) || !sys.right_pool.count(b))
      throw std::invalid_argument("forced pair (" + a.name + ", " + b.name +
                                  ") is not in left-pool x right-pool");

  // The initial symbolic valuation: g(a) = {bar a} ∪ {(a,b) | b ∈ R},
  // g(b) = {bar b} ∪ {(a,b) | a ∈ L}.
  std::map<EqVar, std::set<SolutionVar>> g;
  for (const auto& a : sys.left_pool) {
    auto& img = g[a];
    img.insert(SolutionVar::bar(a));
    for (const auto& b : sys.right_pool) img.insert(SolutionVar::pair(a, b));
  }
  for (const auto& b : sys.right_pool) {
    auto& img = g[b];
    img.insert(SolutionVar::bar(b));
    for (const auto& a : sys.left_pool) img.insert(SolutionVar::pair(a, b));
  }

  // V0: fresh variables that occur on exactly one side of some equation,
  // plus the forced pairs. Removing them rebalances every equation.
  std::set<SolutionVar> v0;
  for (const auto& [a, b] : forced_empty_pairs) v0.insert(SolutionVar::pair(a, b));
  for (const auto& eq : sys.equations) {
    std::set<SolutionVar> lhs_union, rhs_union;
    for (const auto& a : eq.lhs) lhs_union.insert(g[a].begin(), g[a].end());
    for (const auto& b : eq.rhs) rhs_union.insert(g[b].begin(), g[b].end());
    for (const auto& c : lhs_union)
      if (!rhs_union.count(c)) v0.insert(c);
    for (const auto& c : rhs_union)
      if (!lhs_union.count(c)) v0.insert(c);
  }

  SymbolicSolution sol;
  for (auto& [x, img] : g) {
    std::set<SolutionVar> pruned;
    for (const auto& c : img)
      if (!v0.count(c)) pruned.insert(c);
    sol.fresh_vars.insert(pruned.begin(), pruned.end());
    sol.assignment.emplace(x, std::move(pruned));
  }
  return sol;
}

/// Union of the solution images over `vars`.
inline std::set<SolutionVar> apply_solution(const SymbolicSolution& sol,
                                            const std::set<EqVar>& vars) {
  std::set<SolutionVar> out;
  for (const auto& v : vars) {
    auto it = sol.assignment.find(v);
    if (it == sol.assignment.end())
      throw std::invalid_argument("variable '" + v.name + "' is not covered by the solution");
    out.insert(it->second.begin(), it->second.end());
  }
  return out;
}

// Exhaustive check that `sol` represents exactly the solutions of `sys`
// over a universe of `universe_size` elements: (i) every proper
// substitution of the fresh variables induces a solution, and (ii) every
// proper-valuation solution is induced by some substitution. Enumerations
// assign each universe element to at most one variable, which covers all
// proper substitutions.
inline bool verify_solution(const EquationSystem& sys, const SymbolicSolution& sol,
                            int universe_size) {
  if (universe_size < 1 || universe_size > 4)
    throw std::invalid_argument("verify_solution is exhaustive; universe_size must be 1..4");
  sys.validate();

  const std::vector<EqVar> left(sys.left_pool.begin(), sys.left_pool.end());
  const std::vector<EqVar> right(sys.right_pool.begin(), sys.right_pool.end());
  const std::vector<SolutionVar> fresh(sol.fresh_vars.begin(), sol.fresh_vars.end());
  const int k = universe_size;

  using Mask = std::uint32_t;
  using Valuation = std::pair<std::vector<Mask>, std::vector<Mask>>;  // f_L, f_R

  auto satisfies = [&](const Valuation& val) {
    std::map<EqVar, Mask> lmask, rmask;
    for (std::size_t i = 0; i < left.size(); ++i) lmask[left[i]] = val.first[i];
    for (std::size_t i = 0; i < right.size(); ++i) rmask[right[i]] = val.second[i];
    for (const auto& eq : sys.equations) {
      Mask l = 0, r = 0;
      for (const auto& a : eq.lhs) l |= lmask[a];
      for (const auto& b : eq.rhs) r |= rmask[b];
      if (l != r) return false;
    }
    return true;
  };

  // Every map: universe element -> (variable index or none).
  auto enumerate_owners = [&](std::size_t nvars, auto&& fn) {
    std::vector<int> owner(static_cast<std::size_t>(k), -1);
    auto rec = [&](auto&& self, int elem) -> void {
      if (elem == k) {
        fn(owner);
        return;
      }
      for (int o = -1; o < static_cast<int>(nvars); ++o) {
        owner[static_cast<std::size_t>(elem)] = o;
        self(self, elem + 1);
      }
    };
    rec(rec, 0);
  };

  std::set<Valuation> induced;
  enumerate_owners(fresh.size(), [&](const std::vector<int>& owner) {
    std::vector<Mask> h(fresh.size(), 0);
    for (int elem = 0; elem < k; ++elem)
      if (owner[static_cast<std::size_t>(elem)] >= 0)
        h[static_cast<std::size_t>(owner[static_cast<std::size_t>(elem)])] |= Mask{1} << elem;
    std::map<SolutionVar, Mask> hmap;
    for (std::size_t i = 0; i < fresh.size(); ++i) hmap[fresh[i]] = h[i];
    Valuation val{std::vector<Mask>(left.size(), 0), std::vector<Mask>(right.size(), 0)};
    auto flatten = [&](const std::vector<EqVar>& pool, std::vector<Mask>& out) {
      for (std::size_t i = 0; i < pool.size(); ++i) {
        auto it = sol.assignment.find(pool[i]);
        if (it == sol.assignment.end()) continue;
        for (const auto& c : it->second) out[i] |= hmap.count(c) ? hmap[c] : 0;
      }
    };
    flatten(left, val.first);
    flatten(right, val.second);
    induced.insert(std::move(val));
  });

  std::set<Valuation> solutions;
  enumerate_owners(left.size(), [&](const std::vector<int>& lowner) {
    std::vector<Mask> lmasks(left.size(), 0);
    for (int elem = 0; elem < k; ++elem)
      if (lowner[static_cast<std::size_t>(elem)] >= 0)
        lmasks[static_cast<std::size_t>(lowner[static_cast<std::size_t>(elem)])] |= Mask{1} << elem;
    enumerate_owners(right.size(), [&](const std::vector<int>& rowner) {
      std::vector<Mask> rmasks(right.size(), 0);
      for (int elem = 0; elem < k; ++elem)
        if (rowner[static_cast<std::size_t>(elem)] >= 0)
          rmasks[static_cast<std::size_t>(rowner[static_cast<std::size_t>(elem)])] |= Mask{1} << elem;
      Valuation val{lmasks, rmasks};
      if (satisfies(val)) solutions.insert(std::move(val));
    });
  });

  return induced == solutions;
}

// Line format for systems: statements separated by ';' or newlines.
// `L: a1 a2` and `R: b1 b2` declare the pools; every other statement is
// an equation `a1 a2 = b1`, either side possibly empty.
inline EquationSystem parse_equation_system(std::string_view text) {
  EquationSystem sys;
  bool saw_left = false, saw_right = false;
  std::vector<std::pair<std::string, std::size_t>> statements;
  std::string current;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ';' || text[i] == '\n') {
      statements.emplace_back(current, start);
      current.clear();
      start = i + 1;
    } else {
      current += text[i];
    }
  }

  auto tokens_of = [](const std::string& s, std::size_t pos) {
    std::vector<std::string> out;
    std::istringstream in{s};
    std::string tok;
    while (in >> tok) {
      for (char c : tok)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
          throw ParseError(pos, "invalid variable token '" + tok + "'");
      out.push_back(tok);
    }
    return out;
  };

  for (const auto& [stmt, pos] : statements) {
    std::string s = stmt;
    std::size_t lead = 0;
    while (lead < s.size() && std::isspace(static_cast<unsigned char>(s[lead]))) ++lead;
    s = s.substr(lead);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty()) continue;
    if (s.rfind("L:", 0) == 0 || s.rfind("R:", 0) == 0) {
      bool is_left = s[0] == 'L';
      if ((is_left && saw_left) || (!is_left && saw_right))
        throw ParseError(pos, std::string("duplicate pool declaration '") + s[0] + ":'");
      (is_left ? saw_left : saw_right) = true;
      auto& pool = is_left ? sys.left_pool : sys.right_pool;
      for (auto& tok : tokens_of(s.substr(2), pos))
        if (!pool.insert(EqVar{tok}).second)
          throw ParseError(pos, "duplicate variable '" + tok + "' in pool");
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(pos, "expected 'L:', 'R:' or an equation, got '" + s + "'");
    Equation equation;
    for (auto& tok : tokens_of(s.substr(0, eq), pos)) equation.lhs.insert(EqVar{tok});
    for (auto& tok : tokens_of(s.substr(eq + 1), pos)) equation.rhs.insert(EqVar{tok});
    sys.equations.push_back(std::move(equation));
  }
  if (!saw_left || !saw_right)
    throw ParseError(0, "system must declare both pools with 'L:' and 'R:'");
  sys.validate();
  return sys;
}

/// Serialize a solution with the fresh variables renamed to c1, c2, ... in
/// first-occurrence order over the sorted left pool then the sorted right
/// pool; bars come before pairs within one image. Each line lists one pool
/// variable's image with the c-names in index order.
inline std::string render_solution(const EquationSystem& sys, const SymbolicSolution& sol) {
  std::map<SolutionVar, int> index;
  auto visit_pool = [&](const std::set<EqVar>& pool) {
    for (const auto& v : pool) {
      auto it = sol.assignment.find(v);
      if (it == sol.assignment.end()) continue;
      for (const auto& c : it->second)
        if (!index.count(c)) index.emplace(c, static_cast<int>(index.size()) + 1);
    }
  };
  visit_pool(sys.left_pool);
  visit_pool(sys.right_pool);

  std::string out;
  auto print_pool = [&](const std::set<EqVar>& pool) {
    for (const auto& v : pool) {
      out += v.name + " =";
      auto it = sol.assignment.find(v);
      if (it != sol.assignment.end()) {
        std::vector<int> ids;
        for (const auto& c : it->second) ids.push_back(index.at(c));
        std::sort(ids.begin(), ids.end());
        for (int id : ids) out += " c" + std::to_string(id);
      }
      out += "\n";
    }
  };
  print_pool(sys.left_pool);
  print_pool(sys.right_pool);
  return out;
}

}  // namespace ratype
