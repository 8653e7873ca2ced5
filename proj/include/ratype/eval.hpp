// Concrete semantics of well-typed expressions over finite databases, the
// database text format, and the bounded polymorphic-equivalence checker.
#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "ratype/ast.hpp"
#include "ratype/parse.hpp"
#include "ratype/typecheck.hpp"

namespace ratype {

/// A data element; an opaque token compared as a string.
struct Value {
  std::string token;
  auto operator<=>(const Value&) const = default;
};

/// A tuple over some type: attribute/value pairs sorted by attribute,
/// total on exactly the relation's type.
using TupleRow = std::vector<std::pair<AttrName, Value>>;

/// A finite set of tuples of one type. Rows are kept sorted and
/// duplicate-free.
struct Relation {
  RelationType rel_type;
  std::vector<TupleRow> rows;
  friend bool operator==(const Relation&, const Relation&) = default;
};

struct Database {
  TypeAssignment schema;
  std::map<RelVar, Relation> contents;  // contents(r).rel_type == schema(r)
};

/// Evaluation was attempted on a database the expression is ill-typed for.
struct EvaluationTypeError : std::runtime_error {
  TypeError error;
  explicit EvaluationTypeError(TypeError e)
      : std::runtime_error("expression is ill-typed for the database: " + e.message()),
        error(std::move(e)) {}
};

namespace detail {

inline void normalize_rows(std::vector<TupleRow>& rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

inline const Value* row_value(const TupleRow& row, const AttrName& attr) {
  auto it = std::lower_bound(row.begin(), row.end(), attr,
                             [](const auto& p, const AttrName& a) { return p.first < a; });
  if (it == row.end() || it->first != attr) return nullptr;
  return &it->second;
}

// Merge rows with disjoint or agreeing attributes; nullopt when a shared
// attribute disagrees.
inline std::optional<TupleRow> merge_rows(const TupleRow& a, const TupleRow& b) {
  TupleRow out;
  out.reserve(a.size() + b.size());
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      out.push_back(*i++);
    } else if (j->first < i->first) {
      out.push_back(*j++);
    } else {
      if (i->second != j->second) return std::nullopt;
      out.push_back(*i++);
      ++j;
    }
  }
  out.insert(out.end(), i, a.end());
  out.insert(out.end(), j, b.end());
  return out;
}

inline bool parse_integer(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (std::size_t k = i; k < s.size(); ++k)
    if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
  try {
    out = std::stoll(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// Equality comparisons are raw string comparisons; ordered comparisons go
// numeric when both tokens parse as integers, else lexicographic.
inline bool compare_values(CmpOp op, const Value& a, const Value& b) {
  if (op == CmpOp::Eq) return a.token == b.token;
  if (op == CmpOp::Ne) return a.token != b.token;
  long long x = 0, y = 0;
  int cmp;
  if (parse_integer(a.token, x) && parse_integer(b.token, y))
    cmp = x < y ? -1 : (x > y ? 1 : 0);
  else
    cmp = a.token < b.token ? -1 : (a.token > b.token ? 1 : 0);
  switch (op) {
    case CmpOp::Lt: return cmp < 0;
    case CmpOp::Le: return cmp <= 0;
    case CmpOp::Gt: return cmp > 0;
    case CmpOp::Ge: return cmp >= 0;
    default: return false;
  }
}

inline bool predicate_holds(const Predicate& pred, const TupleRow& row) {
  for (const auto& c : pred.conjuncts) {
    auto value = [&](const Operand& o) -> Value {
      if (o.kind == Operand::Kind::Literal) return Value{o.text};
      const Value* v = row_value(row, AttrName{o.text});
      if (!v) throw std::logic_error("predicate attribute missing from row");
      return *v;
    };
    if (!compare_values(c.op, value(c.lhs), value(c.rhs))) return false;
  }
  return true;
}

// Assumes the expression typechecks against the database schema.
inline Relation evaluate_unchecked(const Database& db, const Expr& e) {
  return std::visit(
      overloaded{
          [&](const RelVarRef& x) -> Relation { return db.contents.at(x.var); },
          [&](const Union& x) -> Relation {
            Relation l = evaluate_unchecked(db, *x.left);
            Relation r = evaluate_unchecked(db, *x.right);
            std::vector<TupleRow> merged;
            merged.reserve(l.rows.size() + r.rows.size());
            std::set_union(l.rows.begin(), l.rows.end(), r.rows.begin(), r.rows.end(),
                           std::back_inserter(merged));
            l.rows = std::move(merged);
            return l;
          },
          [&](const Difference& x) -> Relation {
            Relation l = evaluate_unchecked(db, *x.left);
            Relation r = evaluate_unchecked(db, *x.right);
            std::vector<TupleRow> remaining;
            remaining.reserve(l.rows.size());
            std::set_difference(l.rows.begin(), l.rows.end(), r.rows.begin(), r.rows.end(),
                                std::back_inserter(remaining));
            l.rows = std::move(remaining);
            return l;
          },
          [&](const Join& x) -> Relation {
            Relation l = evaluate_unchecked(db, *x.left);
            Relation r = evaluate_unchecked(db, *x.right);
            Relation out;
            out.rel_type = detail::type_union(l.rel_type, r.rel_type);
            for (const auto& a : l.rows)
              for (const auto& b : r.rows)
                if (auto merged = merge_rows(a, b)) out.rows.push_back(std::move(*merged));
            normalize_rows(out.rows);
            return out;
          },
          [&](const Product& x) -> Relation {
            Relation l = evaluate_unchecked(db, *x.left);
            Relation r = evaluate_unchecked(db, *x.right);
            Relation out;
            out.rel_type = detail::type_union(l.rel_type, r.rel_type);
            for (const auto& a : l.rows)
              for (const auto& b : r.rows) out.rows.push_back(*merge_rows(a, b));
            normalize_rows(out.rows);
            return out;
          },
          [&](const Select& x) -> Relation {
            Relation in = evaluate_unchecked(db, *x.input);
            Relation out;
            out.rel_type = in.rel_type;
            for (auto& row : in.rows)
              if (predicate_holds(x.pred, row)) out.rows.push_back(std::move(row));
            return out;  // filtering a sorted sequence needs no re-sort
          },
          [&](const Project& x) -> Relation {
            Relation in = evaluate_unchecked(db, *x.input);
            Relation out;
            out.rel_type = RelationType(x.attrs.begin(), x.attrs.end());
            for (const auto& row : in.rows) {
              TupleRow projected;
              projected.reserve(x.attrs.size());
              for (const auto& [attr, value] : row)
                if (out.rel_type.count(attr)) projected.emplace_back(attr, value);
              out.rows.push_back(std::move(projected));
            }
            normalize_rows(out.rows);
            return out;
          },
          [&](const Rename& x) -> Relation {
            Relation in = evaluate_unchecked(db, *x.input);
            Relation out;
            out.rel_type = in.rel_type;
            out.rel_type.erase(x.from);
            out.rel_type.insert(x.to);
            for (const auto& row : in.rows) {
              TupleRow renamed;
              renamed.reserve(row.size());
              const Value* v = row_value(row, x.from);
              for (const auto& [attr, value] : row)
                if (attr != x.from) renamed.emplace_back(attr, value);
              renamed.insert(std::upper_bound(renamed.begin(), renamed.end(),
                                              std::make_pair(x.to, *v)),
                             std::make_pair(x.to, *v));
              out.rows.push_back(std::move(renamed));
            }
            normalize_rows(out.rows);
            return out;
          },
          [&](const ProjectOut& x) -> Relation {
            Relation in = evaluate_unchecked(db, *x.input);
            Relation out;
            out.rel_type = in.rel_type;
            out.rel_type.erase(x.attr);
            for (const auto& row : in.rows) {
              TupleRow dropped;
              dropped.reserve(row.size() - 1);
              for (const auto& [attr, value] : row)
                if (attr != x.attr) dropped.emplace_back(attr, value);
              out.rows.push_back(std::move(dropped));
            }
            normalize_rows(out.rows);
            return out;
          },
      },
      e.node);
}

}  // namespace detail

/// Standard relational semantics. The expression must typecheck against
/// the database's schema; otherwise EvaluationTypeError is thrown.
inline Relation evaluate(const Database& db, const Expr& e) {
  TypecheckResult tc = typecheck(db.schema, e);
  if (!ok(tc)) throw EvaluationTypeError(error_of(tc));
  return detail::evaluate_unchecked(db, e);
}
inline Relation evaluate(const Database& db, const ExprPtr& e) { return evaluate(db, *e); }

// Database text format:
//
//   relation r (A, B)
//   x, y
//   u, v
//
// Blank lines may separate blocks. A nullary relation is declared with
// `relation t ()`; its only possible row, the empty tuple, is written `()`.
inline Database load_database(std::string_view text) {
  Database db;
  RelVar current;
  bool in_block = false;
  std::vector<AttrName> header;  // attribute order as written

  std::size_t pos = 0;
  std::size_t line_start = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= text.size()) return false;
    line_start = pos;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      line = std::string(text.substr(pos));
      pos = text.size();
    } else {
      line = std::string(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
    return true;
  };
  auto trim = [](std::string s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  };

  std::string raw;
  while (next_line(raw)) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("relation", 0) == 0 &&
        (line.size() == 8 || std::isspace(static_cast<unsigned char>(line[8])))) {
      std::size_t open = line.find('(');
      std::size_t close = line.rfind(')');
      if (open == std::string::npos || close == std::string::npos || close < open)
        throw ParseError(line_start, "expected 'relation name (A, B)' header");
      std::string name = trim(line.substr(8, open - 8));
      if (name.empty() || !std::islower(static_cast<unsigned char>(name[0])))
        throw ParseError(line_start, "invalid relation name '" + name + "'");
      if (trim(line.substr(close + 1)) != "")
        throw ParseError(line_start, "unexpected text after header");
      current = RelVar{name};
      if (db.contents.count(current))
        throw ParseError(line_start, "duplicate relation block '" + name + "'");
      header.clear();
      std::string attrs = line.substr(open + 1, close - open - 1);
      if (!trim(attrs).empty()) {
        std::size_t start = 0;
        while (true) {
          std::size_t comma = attrs.find(',', start);
          std::string tok = trim(attrs.substr(start, comma == std::string::npos
                                                          ? std::string::npos
                                                          : comma - start));
          if (tok.empty() || !std::isupper(static_cast<unsigned char>(tok[0])))
            throw ParseError(line_start, "invalid attribute name '" + tok + "' in header");
          AttrName attr{tok};
          for (const auto& seen : header)
            if (seen == attr)
              throw ParseError(line_start, "duplicate attribute '" + tok + "' in header");
          header.push_back(std::move(attr));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      Relation rel;
      rel.rel_type = RelationType(header.begin(), header.end());
      db.schema.emplace(current, rel.rel_type);
      db.contents.emplace(current, std::move(rel));
      in_block = true;
      continue;
    }
    if (!in_block) throw ParseError(line_start, "row before any 'relation' header");
    Relation& rel = db.contents.at(current);
    if (header.empty()) {
      if (line != "()")
        throw ParseError(line_start, "rows of a nullary relation must be written '()'");
      rel.rows.push_back(TupleRow{});
      continue;
    }
    std::vector<std::string> values;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      values.push_back(trim(line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (values.size() != header.size())
      throw ParseError(line_start, "row has " + std::to_string(values.size()) +
                                       " values, expected " + std::to_string(header.size()));
    TupleRow row;
    row.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].empty()) throw ParseError(line_start, "empty value in row");
      row.emplace_back(header[i], Value{values[i]});
    }
    std::sort(row.begin(), row.end());
    rel.rows.push_back(std::move(row));
  }
  for (auto& [r, rel] : db.contents) detail::normalize_rows(rel.rows);
  return db;
}

/// One relation block; attributes sorted, rows in sorted order.
inline std::string render_relation(const std::string& name, const Relation& rel) {
  std::string out = "relation " + name + " (";
  bool first = true;
  for (const auto& a : rel.rel_type) {
    if (!first) out += ", ";
    out += a.name;
    first = false;
  }
  out += ")\n";
  for (const auto& row : rel.rows) {
    if (row.empty()) {
      out += "()\n";
      continue;
    }
    bool first_value = true;
    for (const auto& [attr, value] : row) {
      if (!first_value) out += ", ";
      out += value.token;
      first_value = false;
    }
    out += "\n";
  }
  return out;
}

inline std::string render_database(const Database& db) {
  std::string out;
  bool first = true;
  for (const auto& [r, rel] : db.contents) {
    if (!first) out += "\n";
    out += render_relation(r.name, rel);
    first = false;
  }
  return out;
}

struct PolyEquivResult {
  enum class Outcome {
    Equivalent,        // no counterexample within the budgets
    LeftIllTyped,      // e1 ill-typed, e2 well-typed under the witness schema
    RightIllTyped,     // e2 ill-typed, e1 well-typed
    OutputTypesDiffer, // both well-typed with different output types
    ResultsDiffer,     // same output type, different result on the database
  };
  Outcome outcome = Outcome::Equivalent;
  std::optional<Database> counterexample;
  std::optional<Relation> left_result, right_result;  // ResultsDiffer only

  bool equivalent() const { return outcome == Outcome::Equivalent; }
};

/// Exhaustively search for a schema or database separating e1 and e2,
/// over the expressions' special attributes plus `attr_budget` fresh
/// attributes, databases of at most `max_rows` rows per relation drawn
/// from `value_budget` distinct values. Search order: ascending schema
/// size, then ascending total row count — smallest witnesses first. The
/// per-schema searches are independent and run on multiple threads; the
/// earliest witness in search order is returned regardless.
inline PolyEquivResult poly_equiv_bounded(const ExprPtr& e1, const ExprPtr& e2,
                                          int attr_budget, int value_budget, int max_rows) {
  if (relvars(e1) != relvars(e2))
    throw std::invalid_argument("expressions range over different relation variables");
  if (attr_budget < 0 || attr_budget > 4 || value_budget < 1 || value_budget > 3 ||
      max_rows < 0 || max_rows > 2)
    throw std::invalid_argument("budget exceeded: limits are attrs <= 4, values <= 3, rows <= 2");

  std::set<AttrName> universe_set = specattrs(e1);
  {
    auto s2 = specattrs(e2);
    universe_set.insert(s2.begin(), s2.end());
  }
  int added = 0;
  for (int i = 1; added < attr_budget; ++i) {
    AttrName fresh{"X" + std::to_string(i)};
    if (universe_set.insert(fresh).second) ++added;
  }
  const std::vector<AttrName> universe(universe_set.begin(), universe_set.end());
  const std::set<RelVar> rvset = relvars(e1);
  const std::vector<RelVar> rvs(rvset.begin(), rvset.end());

  using Mask = std::uint32_t;
  std::vector<std::vector<Mask>> schemas;
  {
    std::vector<Mask> masks(rvs.size(), 0);
    const Mask limit = Mask{1} << universe.size();
    auto rec = [&](auto&& self, std::size_t i) -> void {
      if (i == rvs.size()) {
        schemas.push_back(masks);
        return;
      }
      for (Mask m = 0; m < limit; ++m) {
        masks[i] = m;
        self(self, i + 1);
      }
    };
    rec(rec, 0);
    std::stable_sort(schemas.begin(), schemas.end(),
                     [](const std::vector<Mask>& a, const std::vector<Mask>& b) {
                       int sa = 0, sb = 0;
                       for (Mask m : a) sa += __builtin_popcount(m);
                       for (Mask m : b) sb += __builtin_popcount(m);
                       if (sa != sb) return sa < sb;
                       return a < b;
                     });
  }

  auto to_assignment = [&](const std::vector<Mask>& masks) {
    TypeAssignment ta;
    for (std::size_t i = 0; i < rvs.size(); ++i) {
      RelationType t;
      for (std::size_t j = 0; j < universe.size(); ++j)
        if (masks[i] & (Mask{1} << j)) t.insert(universe[j]);
      ta.emplace(rvs[i], std::move(t));
    }
    return ta;
  };
  auto empty_db = [&](TypeAssignment ta) {
    Database db;
    for (const auto& [r, t] : ta) db.contents.emplace(r, Relation{t, {}});
    db.schema = std::move(ta);
    return db;
  };

  // Domain agreement over the whole bounded family, smallest schemas first.
  std::vector<TypeAssignment> shared;
  for (const auto& masks : schemas) {
    TypeAssignment ta = to_assignment(masks);
    TypecheckResult t1 = typecheck(ta, e1);
    TypecheckResult t2 = typecheck(ta, e2);
    if (ok(t1) != ok(t2)) {
      PolyEquivResult res;
      res.outcome = ok(t2) ? PolyEquivResult::Outcome::LeftIllTyped
                           : PolyEquivResult::Outcome::RightIllTyped;
      res.counterexample = empty_db(std::move(ta));
      return res;
    }
    if (!ok(t1)) continue;
    if (type_of(t1) != type_of(t2)) {
      PolyEquivResult res;
      res.outcome = PolyEquivResult::Outcome::OutputTypesDiffer;
      res.counterexample = empty_db(std::move(ta));
      return res;
    }
    shared.push_back(std::move(ta));
  }

  std::vector<Value> values;
  for (int i = 0; i < value_budget; ++i) values.push_back(Value{std::to_string(i)});

  // Value-level search within one shared schema, smallest databases first.
  auto search_schema = [&](const TypeAssignment& ta) -> std::optional<PolyEquivResult> {
    std::vector<std::vector<TupleRow>> candidates(rvs.size());
    for (std::size_t i = 0; i < rvs.size(); ++i) {
      const RelationType& t = ta.at(rvs[i]);
      const std::vector<AttrName> attrs(t.begin(), t.end());
      std::vector<std::size_t> odo(attrs.size(), 0);
      while (true) {
        TupleRow row;
        row.reserve(attrs.size());
        for (std::size_t j = 0; j < attrs.size(); ++j)
          row.emplace_back(attrs[j], values[odo[j]]);
        candidates[i].push_back(std::move(row));
        std::size_t j = 0;
        for (; j < odo.size(); ++j) {
          if (++odo[j] < values.size()) break;
          odo[j] = 0;
        }
        if (j == odo.size()) break;
      }
      std::sort(candidates[i].begin(), candidates[i].end());
    }
    // All row sets of size <= max_rows per relation, grouped by size and
    // flattened; index tuples ascend, so chosen rows stay sorted.
    std::vector<std::vector<std::vector<std::size_t>>> sets_by_size(rvs.size());
    for (std::size_t i = 0; i < rvs.size(); ++i) {
      auto& by_size = sets_by_size[i];
      by_size.assign(static_cast<std::size_t>(max_rows) + 1, {});
      std::vector<std::size_t> pickbuf;
      auto rec = [&](auto&& self, std::size_t next, int remaining) -> void {
        if (remaining == 0) {
          for (std::size_t idx : pickbuf) by_size[pickbuf.size()].push_back(idx);
          return;
        }
        for (std::size_t c = next; c < candidates[i].size(); ++c) {
          pickbuf.push_back(c);
          self(self, c + 1, remaining - 1);
          pickbuf.pop_back();
        }
      };
      for (int s = 0; s <= max_rows; ++s) rec(rec, 0, s);
    }

    Database db = empty_db(ta);
    std::vector<int> sizes(rvs.size(), 0);
    std::optional<PolyEquivResult> found;
    auto try_db = [&]() {
      Relation r1 = detail::evaluate_unchecked(db, *e1);
      Relation r2 = detail::evaluate_unchecked(db, *e2);
      if (r1.rows == r2.rows) return;
      PolyEquivResult res;
      res.outcome = PolyEquivResult::Outcome::ResultsDiffer;
      res.counterexample = db;
      res.left_result = std::move(r1);
      res.right_result = std::move(r2);
      found = std::move(res);
    };
    auto fill_rec = [&](auto&& self, std::size_t i) -> void {
      if (found) return;
      if (i == rvs.size()) {
        try_db();
        return;
      }
      const auto& options = sets_by_size[i][static_cast<std::size_t>(sizes[i])];
      const std::size_t group = static_cast<std::size_t>(sizes[i]);
      const std::size_t count = group == 0 ? 1 : options.size() / group;
      for (std::size_t o = 0; o < count && !found; ++o) {
        auto& rows = db.contents.at(rvs[i]).rows;
        rows.clear();
        for (std::size_t j = 0; j < group; ++j)
          rows.push_back(candidates[i][options[o * group + j]]);
        self(self, i + 1);
      }
    };
    auto sizes_rec = [&](auto&& self, std::size_t i, int remaining) -> void {
      if (found) return;
      if (i == rvs.size()) {
        if (remaining == 0) fill_rec(fill_rec, 0);
        return;
      }
      int cap = std::min(remaining, max_rows);
      int avail = static_cast<int>(candidates[i].size());
      for (int s = 0; s <= std::min(cap, avail); ++s) {
        sizes[i] = s;
        self(self, i + 1, remaining - s);
      }
    };
    for (int total = 0; total <= max_rows * static_cast<int>(rvs.size()) && !found; ++total)
      sizes_rec(sizes_rec, 0, total);
    return found;
  };

  // Workers claim schemas in descending estimated cost so one expensive
  // schema cannot serialize the tail; the reported witness is still the
  // first one in search order.
  std::vector<std::size_t> claim_order(shared.size());
  {
    auto db_count = [&](const TypeAssignment& ta) {
      double total = 1;
      for (const auto& [r, t] : ta) {
        double tuples = 1;
        for (std::size_t i = 0; i < t.size(); ++i) tuples *= static_cast<double>(values.size());
        double sets = 1 + tuples;
        if (max_rows >= 2) sets += tuples * (tuples - 1) / 2;
        total *= sets;
      }
      return total;
    };
    for (std::size_t i = 0; i < claim_order.size(); ++i) claim_order[i] = i;
    std::stable_sort(claim_order.begin(), claim_order.end(), [&](std::size_t a, std::size_t b) {
      return db_count(shared[a]) > db_count(shared[b]);
    });
  }

  std::vector<std::optional<PolyEquivResult>> results(shared.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> best{shared.size()};
  auto worker = [&] {
    while (true) {
      std::size_t slot = next.fetch_add(1);
      if (slot >= claim_order.size()) break;
      std::size_t i = claim_order[slot];
      if (i > best.load()) continue;
      if (auto r = search_schema(shared[i])) {
        results[i] = std::move(r);
        std::size_t cur = best.load();
        while (i < cur && !best.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t nthreads = std::min<std::size_t>(std::max(1u, hw), std::max<std::size_t>(shared.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t winner = best.load();
  if (winner < shared.size() && results[winner]) return *results[winner];
  return PolyEquivResult{};
}

}  // namespace ratype
