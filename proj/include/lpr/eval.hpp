#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"
#include "lpr/heap.hpp"
#include "lpr/kinding.hpp"
#include "lpr/program.hpp"

namespace lpr {

struct StepBudget {
  std::uint64_t remaining = 100000;
};

inline constexpr std::uint64_t kDefaultBudget = 100000;

/// Left-to-right call-by-value machine over <heap, expression-with-env>.
/// Each call to step() performs exactly one reduction (lambda allocation,
/// application, new, deref, assign, let, seq, add); moving into subterms and
/// looking up variables are bookkeeping and do not count. The input must be
/// elaborated: lambdas annotated, `new` nodes carrying their stored type.
class Machine {
 public:
  enum class Outcome { Reduced, Done, Stuck };

  struct StepResult {
    Outcome outcome;
    const char* redex = "";
  };

  Machine(AlgebraConfig cfg, Expr program, Env env = {})
      : cfg_(std::move(cfg)), root_(program) {
    control_ = EvalState{std::move(program), std::move(env)};
  }

  /// Runs bookkeeping transitions until a reduction is next or evaluation is
  /// finished. Returns true when finished (with a value or stuck).
  bool settle() {
    while (true) {
      if (stuck_) return true;
      if (auto* ev = std::get_if<EvalState>(&control_)) {
        if (!eval_admin(*ev)) return false;
        continue;
      }
      if (stack_.empty()) {
        result_ = std::get<Value>(control_);
        return true;
      }
      if (!continue_admin()) return false;
    }
  }

  StepResult step() {
    if (settle()) return {stuck_ ? Outcome::Stuck : Outcome::Done};
    touched_.reset();
    const char* redex = reduce();
    if (stuck_) return {Outcome::Stuck};
    return {Outcome::Reduced, redex};
  }

  const Heap& heap() const { return heap_; }
  const std::optional<Value>& result() const { return result_; }
  const std::optional<std::string>& stuck_reason() const { return stuck_; }
  /// Cell allocated or written by the last reduction, if any.
  std::optional<LocId> touched() const { return touched_; }

 private:
  struct EvalState {
    Expr expr;
    Env env;
  };
  using Control = std::variant<EvalState, Value>;

  struct AppArg { Expr arg; Env env; };
  struct AppCall { Value fn; };
  struct NewK { Level cell_level; Level content_level; };
  struct DerefK {};
  struct AssignTarget { Expr value; Env env; };
  struct AssignWrite { Value target; };
  struct LetK { std::string name; Expr body; Env env; };
  struct SeqK { Expr second; Env env; };
  struct AddRhs { Expr rhs; Env env; };
  struct AddDo { Value lhs; };
  using Frame = std::variant<AppArg, AppCall, NewK, DerefK, AssignTarget, AssignWrite,
                             LetK, SeqK, AddRhs, AddDo>;

  void get_stuck(std::string why) { stuck_ = std::move(why); }

  // Returns false when the current expression is a redex (a lambda).
  bool eval_admin(EvalState& ev) {
    const Expr e = ev.expr;
    const Env env = ev.env;
    return std::visit(
        overloaded{
            [&](const Var& v) {
              const Value* val = env.lookup(v.name);
              if (!val) {
                get_stuck("unbound variable " + v.name);
                return true;
              }
              control_ = *val;
              return true;
            },
            [&](const Num& n) {
              control_ = Value{NumV{n.value}};
              return true;
            },
            [&](const UnitLit&) {
              control_ = Value{UnitV{}};
              return true;
            },
            [&](const Lam&) { return false; },
            [&](const App& a) {
              stack_.push_back(AppArg{a.arg, env});
              control_ = EvalState{a.fn, env};
              return true;
            },
            [&](const New& n) {
              if (!n.stored) {
                get_stuck("allocation without a stored type");
                return true;
              }
              auto [cell, content] = new_levels(e, *n.stored);
              stack_.push_back(NewK{cell, content});
              control_ = EvalState{n.init, env};
              return true;
            },
            [&](const Deref& d) {
              stack_.push_back(DerefK{});
              control_ = EvalState{d.target, env};
              return true;
            },
            [&](const Assign& a) {
              stack_.push_back(AssignTarget{a.value, env});
              control_ = EvalState{a.target, env};
              return true;
            },
            [&](const Let& l) {
              stack_.push_back(LetK{l.name, l.body, env});
              control_ = EvalState{l.bound, env};
              return true;
            },
            [&](const Seq& s) {
              stack_.push_back(SeqK{s.second, env});
              control_ = EvalState{s.first, env};
              return true;
            },
            [&](const Add& a) {
              stack_.push_back(AddRhs{a.rhs, env});
              control_ = EvalState{a.lhs, env};
              return true;
            },
            [&](const DisplaceExpr& d) {
              // Displacement only moves levels; it is erased at runtime.
              control_ = EvalState{d.inner, env};
              return true;
            },
        },
        e.node().v);
  }

  // Returns false when the top frame is a redex.
  bool continue_admin() {
    Value v = std::get<Value>(control_);
    Frame& top = stack_.back();
    if (auto* f = std::get_if<AppArg>(&top)) {
      EvalState next{f->arg, f->env};
      stack_.back() = AppCall{std::move(v)};
      control_ = std::move(next);
      return true;
    }
    if (auto* f = std::get_if<AssignTarget>(&top)) {
      EvalState next{f->value, f->env};
      stack_.back() = AssignWrite{std::move(v)};
      control_ = std::move(next);
      return true;
    }
    if (auto* f = std::get_if<AddRhs>(&top)) {
      EvalState next{f->rhs, f->env};
      stack_.back() = AddDo{std::move(v)};
      control_ = std::move(next);
      return true;
    }
    return false;
  }

  const char* reduce() {
    if (auto* ev = std::get_if<EvalState>(&control_)) {
      const Lam& l = std::get<Lam>(ev->expr.node().v);
      Env captured;
      for (const auto& name : captures(ev->expr))
        if (const Value* val = ev->env.lookup(name)) captured = captured.extend(name, *val);
      Level k = cfg_.canonicalize(*l.ann);
      auto clo = std::make_shared<const Closure>(
          Closure{l.param, l.param_type, l.body, std::move(captured), k});
      LocId id = heap_.alloc(Cell{CellKind::Closure, k, k, UnitV{}});
      Value v = ClosV{std::move(clo), id};
      heap_.find(id)->contents = v;
      touched_ = id;
      control_ = std::move(v);
      return "lam";
    }
    Value v = std::get<Value>(control_);
    Frame frame = std::move(stack_.back());
    stack_.pop_back();
    return std::visit(
        overloaded{
            [&](AppCall& f) -> const char* {
              const auto* c = std::get_if<ClosV>(&f.fn);
              if (!c) {
                get_stuck("application of a non-function " + show_value(f.fn));
                return "app";
              }
              control_ = EvalState{c->clo->body, c->clo->env.extend(c->clo->param, v)};
              return "app";
            },
            [&](NewK& f) -> const char* {
              LocId id = heap_.alloc(Cell{CellKind::Ref, f.cell_level, f.content_level, v});
              touched_ = id;
              control_ = Value{LocV{id}};
              return "new";
            },
            [&](DerefK&) -> const char* {
              const auto* l = std::get_if<LocV>(&v);
              const Cell* c = l ? heap_.find(l->id) : nullptr;
              if (!c) {
                get_stuck("dereference of " + show_value(v));
                return "deref";
              }
              control_ = c->contents;
              return "deref";
            },
            [&](AssignWrite& f) -> const char* {
              const auto* l = std::get_if<LocV>(&f.target);
              Cell* c = l ? heap_.find(l->id) : nullptr;
              if (!c) {
                get_stuck("assignment to " + show_value(f.target));
                return "assign";
              }
              c->contents = std::move(v);
              touched_ = l->id;
              control_ = Value{UnitV{}};
              return "assign";
            },
            [&](LetK& f) -> const char* {
              control_ = EvalState{f.body, f.env.extend(f.name, std::move(v))};
              return "let";
            },
            [&](SeqK& f) -> const char* {
              control_ = EvalState{f.second, f.env};
              return "seq";
            },
            [&](AddDo& f) -> const char* {
              const auto* a = std::get_if<NumV>(&f.lhs);
              const auto* b = std::get_if<NumV>(&v);
              if (!a || !b) {
                get_stuck("addition of non-numbers");
                return "add";
              }
              control_ = Value{NumV{a->n + b->n}};
              return "add";
            },
            [&](auto&) -> const char* {
              get_stuck("internal: bookkeeping frame in reduction position");
              return "?";
            },
        },
        frame);
  }

  const std::vector<std::string>& captures(const Expr& lam) {
    auto [it, inserted] = captures_.try_emplace(lam.get());
    if (inserted) {
      auto fv = free_vars(lam);
      it->second.assign(fv.begin(), fv.end());
    }
    return it->second;
  }

  std::pair<Level, Level> new_levels(const Expr& site, const Type& stored) {
    auto it = new_levels_.find(site.get());
    if (it != new_levels_.end()) return it->second;
    Level content = cfg_.canonicalize(kind_of(stored, cfg_, site.span()));
    Level cell = cfg_.ref_level(content);
    new_levels_.emplace(site.get(), std::make_pair(cell, content));
    return {cell, content};
  }

  AlgebraConfig cfg_;
  Expr root_;  // keeps node addresses used as cache keys alive
  Heap heap_;
  Control control_;
  std::vector<Frame> stack_;
  std::optional<Value> result_;
  std::optional<std::string> stuck_;
  std::optional<LocId> touched_;
  std::unordered_map<const ExprNode*, std::vector<std::string>> captures_;
  std::unordered_map<const ExprNode*, std::pair<Level, Level>> new_levels_;
};

enum class RunStatus { Value, BudgetExceeded, Stuck };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Value: return "value";
    case RunStatus::BudgetExceeded: return "budget_exceeded";
    case RunStatus::Stuck: return "stuck";
  }
  return "?";
}

struct StepEvent {
  std::uint64_t step;
  const char* redex;
  std::size_t heap_size;
};

struct RunOptions {
  std::uint64_t budget = kDefaultBudget;
  // Re-audit the whole heap after every step instead of only the touched cell.
  bool full_audit = false;
  std::function<void(const StepEvent&, const Heap&)> on_step;
};

struct RunResult {
  RunStatus status = RunStatus::Value;
  std::optional<Value> value;
  Heap heap;
  std::uint64_t steps = 0;
  std::vector<Violation> violations;  // first occurrence of each, tagged with its step
  std::string stuck_reason;
};

namespace detail {

inline bool reaches_cell(const Heap& h, const std::set<LocId>& from, LocId target) {
  std::set<LocId> seen;
  std::vector<LocId> todo(from.begin(), from.end());
  while (!todo.empty()) {
    LocId id = todo.back();
    todo.pop_back();
    if (id == target) return true;
    if (!seen.insert(id).second) continue;
    if (const Cell* c = h.find(id))
      for (const auto& e : cell_edges(id, *c)) todo.push_back(e.to);
  }
  return false;
}

class Auditor {
 public:
  explicit Auditor(const AlgebraConfig& cfg, std::vector<Violation>& out)
      : cfg_(cfg), out_(out) {}

  void after_step(const Heap& h, std::optional<LocId> touched, std::uint64_t step,
                  const char* redex, bool full) {
    std::vector<Violation> found;
    if (full) {
      found = audit_heap(h, cfg_);
    } else if (touched) {
      const Cell& c = *h.find(*touched);
      audit_cell(h, *touched, c, cfg_, found);
      if (c.kind == CellKind::Ref && reaches_cell(h, value_deps(c.contents), *touched)) {
        for (const auto& cyc : heap_cycles(h))
          if (std::binary_search(cyc.begin(), cyc.end(), *touched) &&
              !cycle_allowed(h, cyc, cfg_))
            found.push_back({Violation::Kind::Cycle, cyc, describe_cycle(cyc)});
      }
    }
    for (auto& v : found) {
      if (!seen_.insert(v.message).second) continue;
      v.step = step;
      v.redex = redex;
      out_.push_back(std::move(v));
    }
  }

 private:
  const AlgebraConfig& cfg_;
  std::vector<Violation>& out_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Evaluates an elaborated expression under a step budget, auditing the heap
/// after every reduction.
inline RunResult run_expr(const AlgebraConfig& cfg, const Expr& e, RunOptions opts = {}) {
  Machine m(cfg, e);
  RunResult r;
  detail::Auditor auditor(cfg, r.violations);
  StepBudget budget{opts.budget};
  while (true) {
    if (budget.remaining == 0) {
      if (!m.settle()) {
        r.status = RunStatus::BudgetExceeded;
        break;
      }
    }
    auto s = m.step();
    if (s.outcome == Machine::Outcome::Done) {
      r.status = RunStatus::Value;
      r.value = m.result();
      break;
    }
    if (s.outcome == Machine::Outcome::Stuck) {
      r.status = RunStatus::Stuck;
      r.stuck_reason = *m.stuck_reason();
      break;
    }
    --budget.remaining;
    ++r.steps;
    auditor.after_step(m.heap(), m.touched(), r.steps, s.redex, opts.full_audit);
    if (opts.on_step) opts.on_step({r.steps, s.redex, m.heap().size()}, m.heap());
  }
  r.heap = m.heap();
  if (!opts.full_audit) {
    // Catch anything the per-step checks could not attribute to a step.
    detail::Auditor final_audit(cfg, r.violations);
    std::vector<Violation> all = audit_heap(r.heap, cfg);
    for (auto& v : all) {
      bool known = std::any_of(r.violations.begin(), r.violations.end(),
                               [&](const Violation& x) { return x.message == v.message; });
      if (!known) {
        v.step = r.steps;
        v.redex = "final";
        r.violations.push_back(std::move(v));
      }
    }
  }
  return r;
}

/// Runs an elaborated program (see check_program).
inline RunResult run(const AlgebraConfig& cfg, const Program& elaborated,
                     RunOptions opts = {}) {
  return run_expr(cfg, program_to_expr(elaborated), std::move(opts));
}

}  // namespace lpr
