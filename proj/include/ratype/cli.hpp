// Command-line front end. Exit codes: 0 success or affirmative answer,
// 1 negative result (untypable, type error, not equivalent), 2 usage or
// input-format error.
#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ratype/ast.hpp"
#include "ratype/bool_formula.hpp"
#include "ratype/eval.hpp"
#include "ratype/infer.hpp"
#include "ratype/parse.hpp"
#include "ratype/set_equations.hpp"
#include "ratype/type_formula.hpp"
#include "ratype/typecheck.hpp"

namespace ratype {
namespace detail {

inline std::string read_input(const std::string& path, std::istream& in) {
  std::ostringstream buf;
  if (path == "-") {
    buf << in.rdbuf();
  } else {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "'");
    buf << file.rdbuf();
  }
  return buf.str();
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"polymorphic type inference for the relational algebra"};
  app.require_subcommand(1);

  std::string expr_path = "-", expr_path2, schema_path, db_path, sys_path = "-";
  bool early_stop = false, simplify_output = false, oracle = false;
  int attr_budget = 2, value_budget = 2, row_budget = 2;

  CLI::App* cmd_infer = app.add_subcommand("infer", "print the principal type formula");
  cmd_infer->add_option("expr", expr_path, "expression file, or - for stdin");
  cmd_infer->add_flag("--early-stop", early_stop, "stop at the first unsatisfiable constraint");
  cmd_infer->add_flag("--simplify", simplify_output, "simplify printed Boolean formulas");

  CLI::App* cmd_check = app.add_subcommand("check", "typecheck against a concrete schema");
  cmd_check->add_option("--schema", schema_path, "type assignment file")->required();
  cmd_check->add_option("expr", expr_path, "expression file, or - for stdin");

  CLI::App* cmd_typable = app.add_subcommand("typable", "decide typability");
  cmd_typable->add_option("expr", expr_path, "expression file, or - for stdin");
  cmd_typable->add_flag("--oracle", oracle, "cross-check against brute-force enumeration");

  CLI::App* cmd_solve = app.add_subcommand("solve-eqs", "solve a system of set equations");
  cmd_solve->add_option("system", sys_path, "system file, or - for stdin");

  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate on a database");
  cmd_eval->add_option("--db", db_path, "database file")->required();
  cmd_eval->add_option("expr", expr_path, "expression file, or - for stdin");

  CLI::App* cmd_equiv = app.add_subcommand("equiv", "bounded polymorphic equivalence check");
  cmd_equiv->add_option("expr1", expr_path, "first expression file")->required();
  cmd_equiv->add_option("expr2", expr_path2, "second expression file")->required();
  cmd_equiv->add_option("--attrs", attr_budget, "fresh attributes to add (default 2, max 4)");
  cmd_equiv->add_option("--values", value_budget, "distinct values (default 2, max 3)");
  cmd_equiv->add_option("--rows", row_budget, "max rows per relation (default 2, max 2)");

  std::vector<const char*> argv;
  argv.push_back("ratype");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& help) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << "\n";
    return 2;
  }

  try {
    if (cmd_infer->parsed()) {
      ExprPtr e = parse_expr(detail::read_input(expr_path, in));
      InferResult res = infer(e, early_stop ? InferMode::EarlyStop : InferMode::Complete);
      if (const auto* diag = std::get_if<InferenceDiagnostic>(&res)) {
        err << "untypable: " << diag->message() << "\n";
        return 1;
      }
      out << render_type_formula(std::get<TypeFormula>(res), simplify_output);
      return 0;
    }

    if (cmd_check->parsed()) {
      TypeAssignment ta = parse_type_assignment(detail::read_input(schema_path, in));
      ExprPtr e = parse_expr(detail::read_input(expr_path, in));
      TypecheckResult res = typecheck(ta, e);
      if (!ok(res)) {
        err << "type error: " << error_of(res).message() << "\n";
        return 1;
      }
      out << render_type(type_of(res)) << "\n";
      return 0;
    }

    if (cmd_typable->parsed()) {
      ExprPtr e = parse_expr(detail::read_input(expr_path, in));
      bool is_typable = typable(e);
      if (oracle) {
        std::optional<TypeAssignment> witness = typable_bruteforce(e);
        if (witness.has_value() != is_typable) {
          err << "oracle disagreement: principal-formula satisfiability says "
              << (is_typable ? "typable" : "untypable") << ", brute force says "
              << (witness ? "typable" : "untypable") << "\n";
          return 2;
        }
      }
      out << (is_typable ? "typable" : "untypable") << "\n";
      return is_typable ? 0 : 1;
    }

    if (cmd_solve->parsed()) {
      EquationSystem sys = parse_equation_system(detail::read_input(sys_path, in));
      out << render_solution(sys, solve(sys));
      return 0;
    }

    if (cmd_eval->parsed()) {
      Database db = load_database(detail::read_input(db_path, in));
      ExprPtr e = parse_expr(detail::read_input(expr_path, in));
      try {
        out << render_relation("result", evaluate(db, e));
      } catch (const EvaluationTypeError& te) {
        err << "type error: " << te.error.message() << "\n";
        return 1;
      }
      return 0;
    }

    // equiv
    ExprPtr e1 = parse_expr(detail::read_input(expr_path, in));
    ExprPtr e2 = parse_expr(detail::read_input(expr_path2, in));
    PolyEquivResult res = poly_equiv_bounded(e1, e2, attr_budget, value_budget, row_budget);
    if (res.equivalent()) {
      out << "equivalent\n";
      return 0;
    }
    switch (res.outcome) {
      case PolyEquivResult::Outcome::LeftIllTyped:
        err << "not equivalent: first expression is ill-typed under the printed schema\n";
        break;
      case PolyEquivResult::Outcome::RightIllTyped:
        err << "not equivalent: second expression is ill-typed under the printed schema\n";
        break;
      case PolyEquivResult::Outcome::OutputTypesDiffer:
        err << "not equivalent: output types differ under the printed schema\n";
        break;
      default:
        err << "not equivalent: results differ on the printed database\n";
    }
    out << render_database(*res.counterexample);
    return 1;
  } catch (const ParseError& pe) {
    err << "error: " << pe.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  }
}

}  // namespace ratype
