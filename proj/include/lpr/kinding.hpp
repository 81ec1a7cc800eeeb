#pragma once

#include <span>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"
#include "lpr/errors.hpp"

namespace lpr {

namespace detail {

inline void require_level_allowed(const Level& l, const AlgebraConfig& cfg, Span s) {
  if (!l.is_concrete() && !cfg.polymorphic_levels())
    throw TypeError::unsupported(
        "symbolic level " + to_string(l) + " needs the polymorphic variant", s);
}

inline Level join(const Level& a, const Level& b, const AlgebraConfig& cfg, Span s) {
  auto m = cfg.max(a, b);
  if (!m) throw TypeError::incomparable(cfg.canonicalize(a), cfg.canonicalize(b), s);
  return *m;
}

}  // namespace detail

/// The universe level of a type (tau :: Type_i). Throws TypeError when a
/// function annotation sits below its operand levels or levels are
/// incomparable.
inline Level kind_of(const Type& t, const AlgebraConfig& cfg, Span s = {}) {
  return std::visit(
      overloaded{
          [](const UnitType&) { return Level::concrete(0); },
          [](const NatType&) { return Level::concrete(0); },
          [&](const RefType& r) { return cfg.ref_level(kind_of(r.inner, cfg, s)); },
          [&](const FunType& f) {
            detail::require_level_allowed(f.ann, cfg, s);
            Level ka = kind_of(f.param, cfg, s);
            Level kb = kind_of(f.result, cfg, s);
            Level need = detail::join(ka, kb, cfg, s);
            if (cfg.variant() == Variant::ImpredicativeBase)
              need = detail::join(need, Level::concrete(1), cfg, s);
            switch (cfg.level_leq(need, f.ann)) {
              case Tri::True:
                return cfg.canonicalize(f.ann);
              case Tri::False:
                throw TypeError::bad_annotation(f.ann, need, false, s);
              case Tri::Incomparable:
                throw TypeError::incomparable(need, cfg.canonicalize(f.ann), s);
            }
            return f.ann;
          },
          [&](const DisplacedType& d) {
            if (!cfg.polymorphic_levels())
              throw TypeError::unsupported(
                  "displacement needs the polymorphic variant", s);
            Level inner = kind_of(d.inner, cfg, s);
            try {
              return cfg.add(inner, d.by);
            } catch (const LevelError& e) {
              throw TypeError::incomparable(e.lhs, e.rhs, s);
            }
          },
      },
      t.node().v);
}

/// Least upper bound of the kinds of every visible binding in `g` and every
/// type in `extra`; level 0 when both are empty.
inline Level context_max(const TypingContext& g, std::span<const Type> extra,
                         const AlgebraConfig& cfg, Span s = {}) {
  Level acc = Level::concrete(0);
  for (const auto& [name, type] : g.visible())
    acc = detail::join(acc, kind_of(type, cfg, s), cfg, s);
  for (const auto& type : extra) acc = detail::join(acc, kind_of(type, cfg, s), cfg, s);
  return acc;
}

inline Level context_max(const TypingContext& g, std::initializer_list<Type> extra,
                         const AlgebraConfig& cfg, Span s = {}) {
  return context_max(g, std::span<const Type>(extra.begin(), extra.size()), cfg, s);
}

}  // namespace lpr
