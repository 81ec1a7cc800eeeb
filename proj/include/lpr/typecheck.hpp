#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"
#include "lpr/errors.hpp"
#include "lpr/kinding.hpp"
#include "lpr/program.hpp"

namespace lpr {

struct CheckOptions {
  // Check explicit annotations against the captured variables only instead of
  // the whole context.
  bool captured_only = false;
  // Record mismatches and bad annotations and keep going with the type the
  // rule expects. Only used to push ill-typed programs into the evaluator.
  bool lenient = false;
};

/// Canonical form used for type comparison: levels canonicalized and
/// displacement pushed through arrows and references onto base types.
inline Type normalize_type(const Type& t, const AlgebraConfig& cfg);

namespace detail {

inline Type push_displacement(const Level& by, const Type& t, const AlgebraConfig& cfg) {
  if (cfg.canonicalize(by) == Level::concrete(0)) return t;
  return std::visit(
      overloaded{
          [&](const UnitType&) { return Type::displace(cfg.canonicalize(by), t); },
          [&](const NatType&) { return Type::displace(cfg.canonicalize(by), t); },
          [&](const FunType& f) {
            return Type::fun(push_displacement(by, f.param, cfg),
                             push_displacement(by, f.result, cfg), cfg.add(f.ann, by));
          },
          [&](const RefType& r) {
            return Type::ref(push_displacement(by, r.inner, cfg));
          },
          [&](const DisplacedType& d) {
            return Type::displace(cfg.add(d.by, by), d.inner);
          },
      },
      t.node().v);
}

}  // namespace detail

inline Type normalize_type(const Type& t, const AlgebraConfig& cfg) {
  return std::visit(
      overloaded{
          [&](const UnitType&) { return t; },
          [&](const NatType&) { return t; },
          [&](const FunType& f) {
            return Type::fun(normalize_type(f.param, cfg), normalize_type(f.result, cfg),
                             cfg.canonicalize(f.ann));
          },
          [&](const RefType& r) { return Type::ref(normalize_type(r.inner, cfg)); },
          [&](const DisplacedType& d) {
            return detail::push_displacement(d.by, normalize_type(d.inner, cfg), cfg);
          },
      },
      t.node().v);
}

inline bool types_equal(const Type& a, const Type& b, const AlgebraConfig& cfg) {
  return normalize_type(a, cfg) == normalize_type(b, cfg);
}

struct Elaborated {
  Expr expr;  // every Lam annotated, every New carrying its stored type
  Type type;
};

/// Syntax-directed checker. One rule per constructor, no backtracking.
class Typechecker {
 public:
  explicit Typechecker(AlgebraConfig cfg, CheckOptions opts = {})
      : cfg_(std::move(cfg)), opts_(opts) {}

  Elaborated elaborate(const TypingContext& g, const Expr& e) {
    try {
      return go(g, e);
    } catch (const LevelError& err) {
      throw TypeError::incomparable(err.lhs, err.rhs, e.span());
    }
  }

  Type infer(const TypingContext& g, const Expr& e) { return elaborate(g, e).type; }

  /// Least admissible annotation for `lam`, judged against its captured
  /// variables only.
  Level minimal_annotation(const TypingContext& g, const Expr& lam) {
    const Lam* l = lam.as<Lam>();
    if (!l) throw std::invalid_argument("minimal_annotation expects a lambda");
    Type param = checked_param(*l, lam.span());
    Type result = go(g.extend(l->param, param), l->body).type;
    return minimal_for(g, lam, param, result);
  }

  const std::vector<TypeError>& recovered() const { return recovered_; }
  const AlgebraConfig& config() const { return cfg_; }

 private:
  Type checked_param(const Lam& l, Span s) {
    kind_of(l.param_type, cfg_, s);
    return normalize_type(l.param_type, cfg_);
  }

  Level minimal_for(const TypingContext& g, const Expr& lam, const Type& param,
                    const Type& result) {
    Level m = context_max(g.restrict_to(free_vars(lam)), {param, result}, cfg_,
                          lam.span());
    if (cfg_.variant() == Variant::ImpredicativeBase) return m.plus(1);
    return m;
  }

  void report(TypeError err) {
    if (!opts_.lenient) throw err;
    recovered_.push_back(std::move(err));
  }

  void expect(const Type& expected, const Type& actual, Span s) {
    if (!types_equal(expected, actual, cfg_))
      report(TypeError::mismatch(expected, actual, s));
  }

  Elaborated go(const TypingContext& g, const Expr& e) {
    const Span s = e.span();
    return std::visit(
        overloaded{
            [&](const Var& v) -> Elaborated {
              auto t = g.lookup(v.name);
              if (!t) throw TypeError::unbound(v.name, s);
              return {e, *t};
            },
            [&](const Num&) -> Elaborated { return {e, Type::nat()}; },
            [&](const UnitLit&) -> Elaborated { return {e, Type::unit()}; },
            [&](const Lam& l) -> Elaborated {
              Type param = checked_param(l, s);
              Elaborated body = go(g.extend(l.param, param), l.body);
              Level k;
              if (l.ann) {
                detail::require_level_allowed(*l.ann, cfg_, s);
                TypingContext scope =
                    opts_.captured_only ? g.restrict_to(free_vars(e)) : g;
                Level gmax = context_max(scope, {param, body.type}, cfg_, s);
                k = cfg_.canonicalize(*l.ann);
                if (!cfg_.fun_side_condition(k, gmax)) {
                  const bool strict = cfg_.variant() == Variant::ImpredicativeBase;
                  Tri ord = strict ? cfg_.level_lt(gmax, k) : cfg_.level_leq(gmax, k);
                  if (ord == Tri::Incomparable)
                    throw TypeError::incomparable(gmax, k, s);
                  report(TypeError::bad_annotation(*l.ann, gmax, strict, s));
                }
              } else {
                k = minimal_for(g, e, param, body.type);
              }
              Type t = Type::fun(param, body.type, k);
              return {make_expr(Lam{l.param, l.param_type, k, body.expr}, s), t};
            },
            [&](const App& a) -> Elaborated {
              Elaborated fn = go(g, a.fn);
              Elaborated arg = go(g, a.arg);
              const FunType* f = fn.type.as<FunType>();
              if (!f) throw TypeError::not_a_function(fn.type, a.fn.span());
              expect(f->param, arg.type, a.arg.span());
              return {make_expr(App{fn.expr, arg.expr}, s), f->result};
            },
            [&](const New& n) -> Elaborated {
              Elaborated init = go(g, n.init);
              kind_of(init.type, cfg_, s);
              return {make_expr(New{init.expr, init.type}, s), Type::ref(init.type)};
            },
            [&](const Deref& d) -> Elaborated {
              Elaborated target = go(g, d.target);
              const RefType* r = target.type.as<RefType>();
              if (!r) throw TypeError::not_a_ref(target.type, d.target.span());
              return {make_expr(Deref{target.expr}, s), r->inner};
            },
            [&](const Assign& a) -> Elaborated {
              Elaborated target = go(g, a.target);
              Elaborated value = go(g, a.value);
              const RefType* r = target.type.as<RefType>();
              if (!r) throw TypeError::not_a_ref(target.type, a.target.span());
              expect(r->inner, value.type, a.value.span());
              return {make_expr(Assign{target.expr, value.expr}, s), Type::unit()};
            },
            [&](const Let& l) -> Elaborated {
              Elaborated bound = go(g, l.bound);
              Elaborated body = go(g.extend(l.name, bound.type), l.body);
              return {make_expr(Let{l.name, bound.expr, body.expr}, s), body.type};
            },
            [&](const Seq& q) -> Elaborated {
              Elaborated first = go(g, q.first);
              expect(Type::unit(), first.type, q.first.span());
              Elaborated second = go(g, q.second);
              return {make_expr(Seq{first.expr, second.expr}, s), second.type};
            },
            [&](const Add& a) -> Elaborated {
              Elaborated lhs = go(g, a.lhs);
              expect(Type::nat(), lhs.type, a.lhs.span());
              Elaborated rhs = go(g, a.rhs);
              expect(Type::nat(), rhs.type, a.rhs.span());
              return {make_expr(Add{lhs.expr, rhs.expr}, s), Type::nat()};
            },
            [&](const DisplaceExpr& d) -> Elaborated {
              if (!cfg_.polymorphic_levels())
                throw TypeError::unsupported("displacement needs the polymorphic variant",
                                             s);
              Elaborated inner = go(g, d.inner);
              Type t = normalize_type(Type::displace(d.by, inner.type), cfg_);
              return {make_expr(DisplaceExpr{d.by, inner.expr}, s), t};
            },
        },
        e.node().v);
  }

  AlgebraConfig cfg_;
  CheckOptions opts_;
  std::vector<TypeError> recovered_;
};

inline Type infer(const TypingContext& g, const Expr& e, const AlgebraConfig& cfg,
                  CheckOptions opts = {}) {
  return Typechecker(cfg, opts).infer(g, e);
}

inline Level minimal_annotation(const TypingContext& g, const Expr& lam,
                                const AlgebraConfig& cfg) {
  return Typechecker(cfg).minimal_annotation(g, lam);
}

struct CheckedProgram {
  Program elaborated;
  Type type;
  std::vector<Type> binding_types;
  std::vector<TypeError> recovered;  // lenient mode only
};

/// Builds the algebra for `variant` from the program's region declarations,
/// reporting bad declarations as TypeErrors.
inline AlgebraConfig config_for(const Program& p, Variant variant) {
  if (!p.constraints.empty() && variant != Variant::Polymorphic)
    throw TypeError::unsupported("region declarations need the polymorphic variant",
                                 Span{1, 1});
  try {
    return AlgebraConfig::for_variant(variant, p.constraints);
  } catch (const InconsistentConstraints& e) {
    throw TypeError::inconsistent(e.what(), Span{1, 1});
  } catch (const ConstraintError& e) {
    throw TypeError::inconsistent(e.what(), Span{1, 1});
  }
}

/// Checks bindings in order, each under the context of the ones before it.
/// Errors carry the name of the binding they arose in.
inline CheckedProgram check_program(const Program& p, const AlgebraConfig& cfg,
                                    CheckOptions opts = {}) {
  Typechecker tc(cfg, opts);
  CheckedProgram out;
  out.elaborated.constraints = p.constraints;
  TypingContext g;
  for (const auto& b : p.bindings) {
    try {
      Elaborated el = tc.elaborate(g, b.expr);
      out.elaborated.bindings.push_back({b.name, el.expr, b.span});
      out.binding_types.push_back(el.type);
      g = g.extend(b.name, el.type);
    } catch (TypeError& e) {
      e.binding = b.name;
      throw;
    }
  }
  Elaborated body = tc.elaborate(g, p.body);
  out.elaborated.body = body.expr;
  out.type = body.type;
  out.recovered = tc.recovered();
  return out;
}

}  // namespace lpr
