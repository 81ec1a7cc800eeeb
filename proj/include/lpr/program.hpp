#pragma once

#include <string>
#include <vector>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"

namespace lpr {

/// A source file: region declarations, top-level bindings, final expression.
/// Bare top-level statements before the final expression are bindings named
/// `_`.
struct Program {
  std::vector<RegionConstraint> constraints;
  std::vector<Binding> bindings;
  Expr body;
};

inline constexpr const char* kStatementBinder = "_";

/// The program as one expression: bindings become nested lets.
inline Expr program_to_expr(const Program& p) {
  Expr e = p.body;
  for (auto it = p.bindings.rbegin(); it != p.bindings.rend(); ++it)
    e = mk::let(it->name, it->expr, e, it->span);
  return e;
}

inline bool structurally_equal(const Program& a, const Program& b) {
  if (a.constraints != b.constraints) return false;
  if (a.bindings.size() != b.bindings.size()) return false;
  for (std::size_t i = 0; i < a.bindings.size(); ++i) {
    if (a.bindings[i].name != b.bindings[i].name) return false;
    if (!structurally_equal(a.bindings[i].expr, b.bindings[i].expr)) return false;
  }
  return structurally_equal(a.body, b.body);
}

}  // namespace lpr
