#pragma once

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpr/algebra.hpp"
#include "lpr/eval.hpp"
#include "lpr/heap.hpp"
#include "lpr/kinding.hpp"
#include "lpr/typecheck.hpp"

namespace lpr {

class GcUnsafe : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Lowered {
  Heap heap;
  std::vector<LocId> dropped;
};

namespace detail {

// Retained iff what the cell holds lives strictly below the bound. A reference
// cell whose level equals its content level (level-0 refs in the impredicative
// base, self-referential regions) is retained up to and including the bound.
inline bool retained(const Cell& c, const Level& i, const AlgebraConfig& cfg) {
  if (cfg.level_lt(c.content_level, i) == Tri::True) return true;
  return c.kind == CellKind::Ref &&
         cfg.canonicalize(c.level) == cfg.canonicalize(c.content_level) &&
         cfg.level_leq(c.level, i) == Tri::True;
}

template <class Keep>
Lowered restrict(const Heap& h, Keep keep) {
  Lowered out;
  out.heap.next = h.next;
  for (const auto& [id, c] : h.cells) {
    if (keep(c))
      out.heap.cells.emplace(id, c);
    else
      out.dropped.push_back(id);
  }
  return out;
}

}  // namespace detail

/// Level-based collection: keeps the cells a value of level `i` may still
/// depend on and drops the rest. Reachability plays no part.
inline Lowered lower_heap(const Heap& h, const Level& i, const AlgebraConfig& cfg) {
  return detail::restrict(h, [&](const Cell& c) { return detail::retained(c, i, cfg); });
}

/// Region form for the polymorphic variant: keeps cells whose canonical region
/// is live. Cells at concrete levels are always kept.
inline Lowered lower_heap_regions(const Heap& h, const std::set<std::string>& live,
                                  const AlgebraConfig& cfg) {
  return detail::restrict(h, [&](const Cell& c) {
    Level l = cfg.canonicalize(c.level);
    return l.is_concrete() || live.contains(*l.region);
  });
}

/// Locations reachable from `v`, following stored locations and closure
/// environments.
inline std::set<LocId> reachable(const Heap& h, const Value& v) {
  std::set<LocId> seen;
  std::vector<Value> todo{v};
  while (!todo.empty()) {
    Value x = std::move(todo.back());
    todo.pop_back();
    for (LocId id : value_deps(x)) {
      if (!seen.insert(id).second) continue;
      if (const Cell* c = h.find(id)) todo.push_back(c->contents);
    }
  }
  return seen;
}

/// True iff everything `v` reaches in `h` survives lowering to `i`.
inline bool gc_safe(const Heap& h, const Value& v, const Level& i, const AlgebraConfig& cfg) {
  Lowered low = lower_heap(h, i, cfg);
  for (LocId id : reachable(h, v))
    if (!low.heap.find(id)) return false;
  return true;
}

namespace detail {

inline void observe(const Heap& h, const Value& v, std::set<LocId>& path, std::string& out) {
  std::visit(overloaded{
                 [&](const NumV& n) { out += n.n.str(); },
                 [&](const UnitV&) { out += "unit"; },
                 [&](const LocV& l) {
                   const Cell* c = h.find(l.id);
                   if (!c) {
                     out += "<missing>";
                   } else if (path.contains(l.id)) {
                     out += "<back " + cell_name(l.id) + ">";
                   } else {
                     path.insert(l.id);
                     out += "ref(";
                     observe(h, c->contents, path, out);
                     out += ")";
                     path.erase(l.id);
                   }
                 },
                 [&](const ClosV& c) {
                   out += "<closure @" + to_string(c.clo->level) + " {";
                   bool first = true;
                   c.clo->env.for_each([&](const std::string& name, const Value& x) {
                     if (!first) out += ", ";
                     first = false;
                     out += name + "=";
                     observe(h, x, path, out);
                   });
                   out += "}>";
                 },
             },
             v);
}

}  // namespace detail

/// Everything a program could learn about `v` by reading through `h`.
inline std::string observe(const Heap& h, const Value& v) {
  std::set<LocId> path;
  std::string out;
  detail::observe(h, v, path, out);
  return out;
}

struct LevelCount {
  std::size_t retained = 0;
  std::size_t dropped = 0;
};

struct GcReport {
  RunResult run;
  Type type;
  Level bound;
  std::map<Level, LevelCount> per_level;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::string before;
  std::string after;

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& [level, n] : per_level)
      os << "level " << to_string(level) << ": retained " << n.retained << ", dropped "
         << n.dropped << "\n";
    os << "total: retained " << retained << " cells, dropped " << dropped << " cells\n";
    os << "value: " << before << "\n";
    os << "type: " << to_string(type) << " (level " << to_string(bound) << ")\n";
    os << "gc-safe: yes\n";
    return os.str();
  }
};

class RunFailed : public std::runtime_error {
 public:
  RunResult result;
  explicit RunFailed(RunResult r)
      : std::runtime_error(std::string("evaluation ended with ") + to_string(r.status)),
        result(std::move(r)) {}
};

/// Typechecks and runs `p`, lowers the final heap to the level of the result
/// type and checks that the value reads back unchanged. Throws TypeError,
/// RunFailed or GcUnsafe.
inline GcReport collect_and_verify(const AlgebraConfig& cfg, const Program& p,
                                   std::uint64_t budget = kDefaultBudget) {
  CheckedProgram checked = check_program(p, cfg);
  RunResult r = run(cfg, checked.elaborated, {.budget = budget});
  if (r.status != RunStatus::Value) throw RunFailed(std::move(r));
  GcReport rep;
  rep.type = checked.type;
  rep.bound = cfg.canonicalize(kind_of(checked.type, cfg));
  Lowered low = lower_heap(r.heap, rep.bound, cfg);
  for (const auto& [id, c] : r.heap.cells) {
    auto& n = rep.per_level[cfg.canonicalize(c.level)];
    if (low.heap.find(id))
      ++n.retained, ++rep.retained;
    else
      ++n.dropped, ++rep.dropped;
  }
  if (!gc_safe(r.heap, *r.value, rep.bound, cfg))
    throw GcUnsafe("result reaches a cell dropped at level " + to_string(rep.bound));
  rep.before = observe(r.heap, *r.value);
  rep.after = observe(low.heap, *r.value);
  if (rep.before != rep.after)
    throw GcUnsafe("result reads back as " + rep.after + " instead of " + rep.before);
  rep.run = std::move(r);
  return rep;
}

}  // namespace lpr
