#pragma once

// Randomized properties shared by the unit suite and the acceptance runner.
// Case i uses variant i % 3 and its own generator stream, so any failure can
// be replayed from (seed, i).

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lpr.hpp"

namespace props {

using namespace lpr;

struct Outcome {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string counterexample;

  bool ok() const { return failures == 0; }
  void fail(int i, const std::string& why) {
    if (failures++ == 0) counterexample = "case " + std::to_string(i) + ": " + why;
  }
};

inline AlgebraConfig variant_for(int i) {
  switch (i % 3) {
    case 0: return AlgebraConfig::predicative();
    case 1: return AlgebraConfig::impredicative();
    default: return AlgebraConfig::polymorphic();
  }
}

inline GenConfig gen_config(std::uint64_t seed, int i, int depth = 5) {
  GenConfig gc;
  gc.seed = seed;
  gc.maxDepth = depth;
  gc.maxLevel = 2;
  gc.variant = variant_for(i);
  return gc;
}

inline std::set<LocId> ids(const Heap& h) {
  std::set<LocId> out;
  for (const auto& [id, c] : h.cells) out.insert(id);
  return out;
}

inline Outcome infer_determinism(int cases, std::uint64_t seed) {
  Outcome o{"determinism of infer"};
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i);
    auto [p, target] = gen_program(gc, i);
    CheckedProgram a = check_program(p, gc.variant);
    CheckedProgram b = check_program(p, gc.variant);
    if (!(a.type == b.type) || !structurally_equal(a.elaborated, b.elaborated))
      o.fail(i, to_string(p));
  }
  return o;
}

inline Outcome weakening(int cases, std::uint64_t seed) {
  Outcome o{"weakening"};
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i);
    auto [p, target] = gen_program(gc, i);
    Expr e = program_to_expr(p);
    Type t = infer({}, e, gc.variant);
    Generator g(gc, 1'000'000 + i);
    Type sigma = g.type_at(i % 3, 3);
    // Unrestricted weakening holds when annotations are judged by captured
    // variables; under the whole-context rule it holds for level-0 bindings.
    TypingContext wide = TypingContext{}.extend("w_fresh", sigma);
    TypingContext low = TypingContext{}.extend("w_fresh", g.type_at(0, 3));
    try {
      Type t1 = infer(wide, e, gc.variant, {.captured_only = true});
      Type t2 = infer(low, e, gc.variant);
      if (!types_equal(t, t1, gc.variant) || !types_equal(t, t2, gc.variant))
        o.fail(i, to_string(p));
      Level before = context_max({}, {t}, gc.variant);
      Level after = context_max(wide, {t}, gc.variant);
      if (gc.variant.level_leq(before, after) != Tri::True) o.fail(i, "context_max shrank");
    } catch (const TypeError& err) {
      o.fail(i, std::string(err.what()) + " in " + to_string(p));
    }
  }
  return o;
}

inline Outcome annotation_monotonicity(int cases, std::uint64_t seed) {
  Outcome o{"annotation monotonicity"};
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i, 4);
    const AlgebraConfig& cfg = gc.variant;
    Generator g(gc, 2'000'000 + i);
    TypingContext ctx;
    const int n = i % 3;
    for (int j = 0; j < n; ++j) ctx = ctx.extend("v" + std::to_string(j), g.type_at((i / 3 + j) % 3, 2));
    Type a = g.type_at(i % 2, 2);
    TypingContext inner = ctx.extend("p", a);
    std::int64_t cm = static_cast<std::int64_t>(context_max(inner, {}, cfg).offset);
    std::int64_t lb = (i / 7) % 3;
    Type b = g.feasible(lb, 2, cm) ? g.type_at(lb, 2, cm) : Type::nat();
    Expr body = gen_expr(gc, inner, b);
    std::int64_t k = std::max<std::int64_t>(cm, g.kind(b)) +
                     (cfg.variant() == Variant::ImpredicativeBase ? 1 : 0);
    try {
      for (std::int64_t extra = 0; extra <= 2; ++extra) {
        Level kk = Level::concrete(static_cast<std::uint64_t>(k + extra));
        Type t = infer(ctx, mk::lam("p", a, body, kk), cfg);
        if (!(t == Type::fun(a, b, kk))) o.fail(i, "type changed: " + to_string(t));
      }
      Level m = minimal_annotation(ctx, mk::lam("p", a, body), cfg);
      if (cfg.level_leq(m, Level::concrete(static_cast<std::uint64_t>(k))) != Tri::True)
        o.fail(i, "minimal annotation above a valid one");
    } catch (const TypeError& err) {
      o.fail(i, std::string(err.what()) + " for body " + to_string(body));
    }
  }
  return o;
}

inline Outcome lowering_laws(int cases, std::uint64_t seed) {
  Outcome o{"lowering idempotence and antitonicity"};
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i);
    const AlgebraConfig& cfg = gc.variant;
    auto [p, target] = gen_program(gc, i);
    RunResult r = run(cfg, check_program(p, cfg).elaborated);
    const bool clean = audit_heap(r.heap, cfg).empty();
    std::set<LocId> prev;
    for (std::uint64_t lvl = 0; lvl <= 5; ++lvl) {
      Level l = Level::concrete(lvl);
      Lowered once = lower_heap(r.heap, l, cfg);
      Lowered twice = lower_heap(once.heap, l, cfg);
      auto cur = ids(once.heap);
      if (ids(twice.heap) != cur || !twice.dropped.empty()) o.fail(i, "not idempotent at " + to_string(l));
      if (!std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()))
        o.fail(i, "not antitone at " + to_string(l));
      if (clean && !audit_heap(once.heap, cfg).empty()) o.fail(i, "audit broken by lowering");
      if (cur.size() + once.dropped.size() != r.heap.size()) o.fail(i, "cells lost");
      prev = std::move(cur);
    }
  }
  return o;
}

inline Outcome audit_every_step(int cases, std::uint64_t seed) {
  Outcome o{"audit after every step"};
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i);
    const AlgebraConfig& cfg = gc.variant;
    auto [p, target] = gen_program(gc, i);
    std::map<LocId, Level> seen;
    bool shrank = false;
    RunOptions opts{.full_audit = true};
    opts.on_step = [&](const StepEvent&, const Heap& h) {
      for (const auto& [id, lvl] : seen) {
        const Cell* c = h.find(id);
        if (!c || !(c->level == lvl)) shrank = true;
      }
      for (const auto& [id, c] : h.cells) seen.emplace(id, c.level);
    };
    RunResult r = run(cfg, check_program(p, cfg).elaborated, opts);
    if (!r.violations.empty()) o.fail(i, r.violations.front().message + " in " + to_string(p));
    if (shrank) o.fail(i, "heap lost or retagged a cell");
    if (r.status != RunStatus::Value) o.fail(i, std::string(to_string(r.status)) + " in " + to_string(p));
  }
  return o;
}

inline Outcome displacement_identity(int cases, std::uint64_t seed) {
  Outcome o{"displacement by 0 is the identity"};
  const Level zero = Level::concrete(0);
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i);
    gc.variant = AlgebraConfig::polymorphic();
    const AlgebraConfig& cfg = gc.variant;
    Generator g(gc, 3'000'000 + i);
    Type t = g.type_at(i % 3, 3);
    if (!(displace_type(zero, t) == t)) o.fail(i, "displace_type changed " + to_string(t));
    if (!(normalize_type(Type::displace(zero, t), cfg) == normalize_type(t, cfg)))
      o.fail(i, "normalization kept ^0 on " + to_string(t));
    if (!(kind_of(Type::displace(zero, t), cfg) == kind_of(t, cfg))) o.fail(i, "kind changed");
    auto [p, target] = gen_program(gc, i);
    Expr e = program_to_expr(p);
    Expr shifted = mk::displace(zero, e);
    Type te = infer({}, e, cfg);
    Type ts = infer({}, shifted, cfg);
    if (!types_equal(te, ts, cfg)) o.fail(i, to_string(te) + " vs " + to_string(ts));
    Typechecker tc(cfg);
    RunResult a = run_expr(cfg, tc.elaborate({}, e).expr);
    RunResult b = run_expr(cfg, tc.elaborate({}, shifted).expr);
    if (a.steps != b.steps || show_value(*a.value) != show_value(*b.value))
      o.fail(i, "evaluation changed for " + to_string(p));
  }
  return o;
}

inline std::vector<RegionConstraint> random_constraints(std::uint64_t s) {
  std::vector<RegionConstraint> cs;
  const char* names[] = {"a", "b", "g"};
  const int n = static_cast<int>(s % 3);
  for (int j = 0; j < n; ++j) {
    std::uint64_t x = splitmix64(s + j);
    Level l = Level::symbolic(names[x % 3], (x >> 8) % 3);
    Level r = Level::symbolic(names[(x >> 16) % 3], (x >> 24) % 2);
    cs.push_back((x >> 32) % 2 ? RegionConstraint::equal(l, r) : RegionConstraint::disjoint(l, r));
  }
  return cs;
}

inline Outcome parse_print_roundtrip(int cases, std::uint64_t seed) {
  Outcome o{"parse/print round trip"};
  for (int i = 0; i < cases; ++i, ++o.cases) {
    GenConfig gc = gen_config(seed, i);
    auto [p, target] = gen_program(gc, i);
    if (gc.variant.polymorphic_levels()) p.constraints = random_constraints(seed + i);
    std::string text = to_string(p);
    try {
      Program q = parse_program(text);
      if (!structurally_equal(p, q) || to_string(q) != text) o.fail(i, text);
      Type t = parse_type(to_string(target));
      if (!(t == target)) o.fail(i, "type " + to_string(target));
    } catch (const ParseError& err) {
      o.fail(i, std::string(err.what()) + " in\n" + text);
    }
  }
  return o;
}

inline std::vector<std::function<Outcome(int, std::uint64_t)>> all() {
  return {infer_determinism,      weakening,           annotation_monotonicity,
          lowering_laws,          audit_every_step,    displacement_identity,
          parse_print_roundtrip};
}

}  // namespace props
