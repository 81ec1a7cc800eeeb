#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"

namespace lpr {

using LocId = std::uint64_t;

struct Closure;

struct NumV {
  Natural n;
};
struct UnitV {};
struct LocV {
  LocId id;
};
/// A function value. The closure record is also allocated in the heap at
/// `cell`, at the closure's annotation level.
struct ClosV {
  std::shared_ptr<const Closure> clo;
  LocId cell;
};

using Value = std::variant<NumV, UnitV, LocV, ClosV>;

/// Persistent runtime environment.
class Env {
 public:
  Env extend(std::string name, Value v) const {
    Env e;
    e.head_ = std::make_shared<const Entry>(Entry{std::move(name), std::move(v), head_});
    return e;
  }
  const Value* lookup(std::string_view name) const {
    for (const Entry* e = head_.get(); e; e = e->next.get())
      if (e->name == name) return &e->value;
    return nullptr;
  }
  template <class F>
  void for_each(F&& f) const {
    for (const Entry* e = head_.get(); e; e = e->next.get()) f(e->name, e->value);
  }

 private:
  struct Entry {
    std::string name;
    Value value;
    std::shared_ptr<const Entry> next;
  };
  std::shared_ptr<const Entry> head_;
};

struct Closure {
  std::string param;
  Type param_type;
  Expr body;
  Env env;  // free variables of the lambda only
  Level level;
};

enum class CellKind { Ref, Closure };

struct Cell {
  CellKind kind;
  Level level;          // where the cell lives
  Level content_level;  // level of the stored value's type
  Value contents;
};

/// Level-tagged store. Evaluation only ever adds cells.
struct Heap {
  std::map<LocId, Cell> cells;
  LocId next = 0;

  LocId alloc(Cell c) {
    LocId id = next++;
    cells.emplace(id, std::move(c));
    return id;
  }
  const Cell* find(LocId id) const {
    auto it = cells.find(id);
    return it == cells.end() ? nullptr : &it->second;
  }
  Cell* find(LocId id) {
    auto it = cells.find(id);
    return it == cells.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }
};

inline std::string cell_name(LocId id) { return "l" + std::to_string(id); }

inline std::string cell_label(LocId id, const Cell& c) {
  return cell_name(id) + "@" + to_string(c.level);
}

inline std::string show_value(const Value& v) {
  return std::visit(overloaded{
                        [](const NumV& n) { return n.n.str(); },
                        [](const UnitV&) { return std::string("unit"); },
                        [](const LocV& l) { return "<loc " + cell_name(l.id) + ">"; },
                        [](const ClosV& c) {
                          return "<closure @" + to_string(c.clo->level) + ">";
                        },
                    },
                    v);
}

/// Locations a value depends on directly: the cell a location names, or the
/// dependencies of everything a closure captured.
inline void value_deps(const Value& v, std::set<LocId>& out) {
  std::visit(overloaded{
                 [](const NumV&) {},
                 [](const UnitV&) {},
                 [&](const LocV& l) { out.insert(l.id); },
                 [&](const ClosV& c) {
                   c.clo->env.for_each(
                       [&](const std::string&, const Value& x) { value_deps(x, out); });
                 },
             },
             v);
}

inline std::set<LocId> value_deps(const Value& v) {
  std::set<LocId> out;
  value_deps(v, out);
  return out;
}

struct HeapEdge {
  LocId from;
  LocId to;
  bool dependency;  // closure-environment dependency rather than a stored location
  friend auto operator<=>(const HeapEdge&, const HeapEdge&) = default;
};

inline std::vector<HeapEdge> cell_edges(LocId id, const Cell& c) {
  std::vector<HeapEdge> out;
  if (c.kind == CellKind::Ref) {
    if (const auto* l = std::get_if<LocV>(&c.contents)) {
      out.push_back({id, l->id, false});
      return out;
    }
  }
  for (LocId d : value_deps(c.contents)) out.push_back({id, d, true});
  return out;
}

inline std::vector<HeapEdge> heap_edges(const Heap& h) {
  std::vector<HeapEdge> out;
  for (const auto& [id, c] : h.cells) {
    auto es = cell_edges(id, c);
    out.insert(out.end(), es.begin(), es.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Cycles in the location graph: strongly connected components with more than
/// one cell, or a single cell with a self edge. Cells listed in id order.
inline std::vector<std::vector<LocId>> heap_cycles(const Heap& h) {
  std::map<LocId, std::vector<LocId>> succ;
  std::set<LocId> self_loop;
  for (const auto& e : heap_edges(h)) {
    if (!h.find(e.to)) continue;
    succ[e.from].push_back(e.to);
    if (e.from == e.to) self_loop.insert(e.from);
  }
  // Iterative Tarjan.
  std::map<LocId, std::size_t> index, low;
  std::vector<LocId> stack;
  std::set<LocId> on_stack;
  std::size_t counter = 0;
  std::vector<std::vector<LocId>> out;
  for (const auto& [root, _] : h.cells) {
    if (index.contains(root)) continue;
    std::vector<std::pair<LocId, std::size_t>> work{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack.insert(root);
    while (!work.empty()) {
      auto& [v, i] = work.back();
      const auto& next = succ[v];
      if (i < next.size()) {
        LocId w = next[i++];
        if (!index.contains(w)) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack.insert(w);
          work.push_back({w, 0});
        } else if (on_stack.contains(w)) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<LocId> comp;
        LocId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          comp.push_back(w);
        } while (w != v);
        if (comp.size() > 1 || self_loop.contains(v)) {
          std::sort(comp.begin(), comp.end());
          out.push_back(std::move(comp));
        }
      }
      LocId done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Violation {
  enum class Kind { Stratification, Cycle, Dangling };
  Kind kind;
  std::vector<LocId> cells;
  std::string message;
  std::uint64_t step = 0;  // set by the evaluator
  std::string redex;

  friend bool operator==(const Violation& a, const Violation& b) {
    return a.kind == b.kind && a.cells == b.cells && a.message == b.message;
  }
};

inline const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::Stratification: return "stratification";
    case Violation::Kind::Cycle: return "cycle";
    case Violation::Kind::Dangling: return "dangling";
  }
  return "?";
}

namespace detail {

inline bool below(const Level& lower, const Level& upper, const AlgebraConfig& cfg) {
  if (cfg.level_lt(lower, upper) == Tri::True) return true;
  return cfg.variant() == Variant::ImpredicativeBase &&
         cfg.canonicalize(lower) == Level::concrete(0) &&
         cfg.canonicalize(upper) == Level::concrete(0);
}

// A cell may hold a value of level `stored` only if the reference relation
// places such references at the cell's level.
inline bool may_store(const Level& cell, const Level& stored, const AlgebraConfig& cfg) {
  if (cfg.variant() == Variant::Polymorphic)
    return cfg.canonicalize(cell) == cfg.ref_level(stored);
  return below(stored, cell, cfg);
}

inline bool may_capture(const Level& closure, const Level& dep, const AlgebraConfig& cfg) {
  if (cfg.variant() == Variant::ImpredicativeBase)
    return cfg.level_lt(dep, closure) == Tri::True;
  return cfg.level_leq(dep, closure) == Tri::True;
}

inline void audit_cell(const Heap& h, LocId id, const Cell& c, const AlgebraConfig& cfg,
                       std::vector<Violation>& out) {
  auto dangling = [&](LocId to) {
    out.push_back({Violation::Kind::Dangling, {id, to},
                   "cell " + cell_label(id, c) + " refers to missing " + cell_name(to)});
  };
  auto check_captures = [&](const ClosV& clo) {
    for (LocId d : value_deps(Value{clo})) {
      const Cell* dc = h.find(d);
      if (!dc) {
        dangling(d);
        continue;
      }
      if (!may_capture(clo.clo->level, dc->level, cfg))
        out.push_back({Violation::Kind::Stratification, {id, d},
                       "closure at level " + to_string(clo.clo->level) + " in cell " +
                           cell_label(id, c) + " captures " + cell_label(d, *dc)});
    }
  };
  if (c.kind == CellKind::Closure) {
    if (const auto* clo = std::get_if<ClosV>(&c.contents)) check_captures(*clo);
    return;
  }
  if (const auto* l = std::get_if<LocV>(&c.contents)) {
    const Cell* target = h.find(l->id);
    if (!target) return dangling(l->id);
    if (!may_store(c.level, target->level, cfg))
      out.push_back({Violation::Kind::Stratification, {id, l->id},
                     "cell " + cell_label(id, c) + " stores " +
                         cell_label(l->id, *target) + ", which is not below it"});
  } else if (const auto* clo = std::get_if<ClosV>(&c.contents)) {
    if (!may_store(c.level, clo->clo->level, cfg))
      out.push_back({Violation::Kind::Stratification, {id},
                     "cell " + cell_label(id, c) + " stores a closure at level " +
                         to_string(clo->clo->level) + ", which is not below it"});
    check_captures(*clo);
  }
}

inline bool cycle_allowed(const Heap& h, const std::vector<LocId>& cyc,
                          const AlgebraConfig& cfg) {
  switch (cfg.variant()) {
    case Variant::Predicative:
      return false;
    case Variant::ImpredicativeBase:
      return std::all_of(cyc.begin(), cyc.end(), [&](LocId id) {
        return cfg.canonicalize(h.find(id)->level) == Level::concrete(0);
      });
    case Variant::Polymorphic: {
      Level first = cfg.canonicalize(h.find(cyc.front())->level);
      if (cfg.ref_level(first) != first) return false;
      return std::all_of(cyc.begin(), cyc.end(), [&](LocId id) {
        return cfg.canonicalize(h.find(id)->level) == first;
      });
    }
  }
  return false;
}

inline std::string describe_cycle(const std::vector<LocId>& cyc) {
  std::string s = "cycle through";
  for (LocId id : cyc) s += " " + cell_name(id);
  return s;
}

}  // namespace detail

/// Checks every heap edge against the active reference relation and runs a
/// cycle detector over the location graph.
inline std::vector<Violation> audit_heap(const Heap& h, const AlgebraConfig& cfg) {
  std::vector<Violation> out;
  for (const auto& [id, c] : h.cells) detail::audit_cell(h, id, c, cfg, out);
  for (const auto& cyc : heap_cycles(h))
    if (!detail::cycle_allowed(h, cyc, cfg))
      out.push_back({Violation::Kind::Cycle, cyc, detail::describe_cycle(cyc)});
  return out;
}

/// Cycles the active variant tolerates (ground cycles in the impredicative
/// base, self-referential regions under declared constraints).
inline std::vector<std::vector<LocId>> legal_cycles(const Heap& h, const AlgebraConfig& cfg) {
  std::vector<std::vector<LocId>> out;
  for (auto& cyc : heap_cycles(h))
    if (detail::cycle_allowed(h, cyc, cfg)) out.push_back(std::move(cyc));
  return out;
}

/// Graphviz rendering: one node per cell grouped by level, solid edges for
/// stored locations, dashed edges for closure dependencies.
inline std::string heap_to_dot(const Heap& h) {
  std::ostringstream os;
  os << "digraph heap {\n";
  std::map<Level, std::vector<LocId>> by_level;
  for (const auto& [id, c] : h.cells) by_level[c.level].push_back(id);
  for (const auto& [level, ids] : by_level) {
    const std::string name = to_string(level);
    os << "  subgraph \"cluster_level_" << name << "\" {\n";
    os << "    label=\"Type_" << name << "\";\n";
    for (LocId id : ids)
      os << "    " << cell_name(id) << " [label=\"" << cell_label(id, *h.find(id))
         << "\"" << (h.find(id)->kind == CellKind::Closure ? ", shape=box" : "")
         << "];\n";
    os << "  }\n";
  }
  for (const auto& e : heap_edges(h)) {
    os << "  " << cell_name(e.from) << " -> " << cell_name(e.to);
    if (e.dependency) os << " [style=dashed]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace lpr
