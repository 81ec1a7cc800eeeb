#pragma once

#include <sstream>
#include <string>

#include "lpr/ast.hpp"
#include "lpr/program.hpp"

namespace lpr {

// Printing follows the parser's precedence table so that parse . print is the
// identity up to spans.

namespace detail {

inline void print_type(std::ostream& os, const Type& t, int ctx) {
  std::visit(overloaded{
                 [&](const UnitType&) { os << "Unit"; },
                 [&](const NatType&) { os << "Nat"; },
                 [&](const FunType& f) {
                   if (ctx > 0) os << '(';
                   print_type(os, f.param, 1);
                   os << " ->" << to_string(f.ann) << ' ';
                   print_type(os, f.result, 0);
                   if (ctx > 0) os << ')';
                 },
                 [&](const RefType& r) {
                   if (ctx > 1) os << '(';
                   os << "Ref ";
                   print_type(os, r.inner, 2);
                   if (ctx > 1) os << ')';
                 },
                 [&](const DisplacedType& d) {
                   if (ctx > 1) os << '(';
                   os << '^' << to_string(d.by) << ' ';
                   print_type(os, d.inner, 2);
                   if (ctx > 1) os << ')';
                 },
             },
             t.node().v);
}

enum Prec { kSeq = 0, kAssign = 1, kAdd = 2, kApp = 3, kPrefix = 4, kAtom = 5 };

inline void print_expr(std::ostream& os, const Expr& e, int ctx) {
  auto open = [&](int prec) {
    if (ctx > prec) os << '(';
  };
  auto close = [&](int prec) {
    if (ctx > prec) os << ')';
  };
  std::visit(
      overloaded{
          [&](const Var& v) { os << v.name; },
          [&](const Num& n) { os << n.value.str(); },
          [&](const UnitLit&) { os << "unit"; },
          [&](const Lam& l) {
            open(kSeq);
            os << '\\' << l.param << " : ";
            print_type(os, l.param_type, 0);
            if (l.ann) os << " @" << to_string(*l.ann);
            os << " . ";
            print_expr(os, l.body, kSeq);
            close(kSeq);
          },
          [&](const App& a) {
            open(kApp);
            print_expr(os, a.fn, kApp);
            os << ' ';
            print_expr(os, a.arg, kPrefix);
            close(kApp);
          },
          [&](const New& n) {
            open(kPrefix);
            os << "new ";
            print_expr(os, n.init, kPrefix);
            close(kPrefix);
          },
          [&](const Deref& d) {
            open(kPrefix);
            os << '!';
            print_expr(os, d.target, kPrefix);
            close(kPrefix);
          },
          [&](const Assign& a) {
            open(kAssign);
            print_expr(os, a.target, kAdd);
            os << " := ";
            print_expr(os, a.value, kAssign);
            close(kAssign);
          },
          [&](const Let& l) {
            open(kSeq);
            os << "let " << l.name << " = ";
            print_expr(os, l.bound, kSeq);
            os << " in ";
            print_expr(os, l.body, kSeq);
            close(kSeq);
          },
          [&](const Seq& s) {
            open(kSeq);
            print_expr(os, s.first, kAssign);
            os << "; ";
            print_expr(os, s.second, kSeq);
            close(kSeq);
          },
          [&](const Add& a) {
            open(kAdd);
            print_expr(os, a.lhs, kAdd);
            os << " + ";
            print_expr(os, a.rhs, kApp);
            close(kAdd);
          },
          [&](const DisplaceExpr& d) {
            open(kPrefix);
            os << '^' << to_string(d.by) << ' ';
            print_expr(os, d.inner, kPrefix);
            close(kPrefix);
          },
      },
      e.node().v);
}

}  // namespace detail

inline std::string to_string(const Type& t) {
  std::ostringstream os;
  detail::print_type(os, t, 0);
  return os.str();
}

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  detail::print_expr(os, e, detail::kSeq);
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const Type& t) { return os << to_string(t); }
inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

inline std::string to_string(const Program& p) {
  std::ostringstream os;
  for (const auto& c : p.constraints) os << to_string(c) << '\n';
  for (const auto& b : p.bindings) {
    if (b.name != kStatementBinder) os << b.name << " = ";
    detail::print_expr(os, b.expr, detail::kSeq);
    os << '\n';
  }
  detail::print_expr(os, p.body, detail::kSeq);
  os << '\n';
  return os.str();
}

}  // namespace lpr
