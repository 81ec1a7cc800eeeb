#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <type_traits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpr/algebra.hpp"
#include "lpr/ast.hpp"
#include "lpr/eval.hpp"
#include "lpr/gc.hpp"
#include "lpr/kinding.hpp"
#include "lpr/printer.hpp"
#include "lpr/program.hpp"
#include "lpr/typecheck.hpp"

namespace lpr {

class Unsatisfiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Weights = std::array<double, kExprConstructorCount>;

// Indexed like ExprVariant: var num unit lam app new deref assign let seq add displace.
inline constexpr Weights kDefaultWeights{4, 2, 1, 2, 2, 2, 2, 1, 2, 1, 2, 1};

struct GenConfig {
  std::uint64_t seed = 0;
  int maxDepth = 6;
  int maxLevel = 3;
  Weights weights = kDefaultWeights;
  AlgebraConfig variant = AlgebraConfig::predicative();

  void validate() const {
    if (maxDepth < 1) throw std::invalid_argument("maxDepth must be at least 1");
    if (maxLevel < 0) throw std::invalid_argument("maxLevel must be nonnegative");
    for (double w : weights)
      if (!(w >= 0)) throw std::invalid_argument("weights must be nonnegative");
    if (weights[0] <= 0 && weights[1] <= 0 && weights[2] <= 0)
      throw std::invalid_argument("at least one of var, num, unit needs positive weight");
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace detail {

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max() / 4;

template <class T, class... Ts>
constexpr std::size_t index_in() {
  constexpr bool hit[] = {std::is_same_v<T, Ts>...};
  for (std::size_t i = 0; i < sizeof...(Ts); ++i)
    if (hit[i]) return i;
  return sizeof...(Ts);
}

template <class T, class V>
struct variant_index;
template <class T, class... Ts>
struct variant_index<T, std::variant<Ts...>> {
  static constexpr std::size_t value = index_in<T, Ts...>();
};

template <class T>
constexpr std::size_t index_of() {
  return variant_index<T, ExprVariant>::value;
}

}  // namespace detail

/// Random programs that typecheck by construction.
///
/// Explicit annotations are checked against the whole context, so a lambda of
/// type A ->k B can only be built while every visible binding sits at level k
/// or lower. `ctx_bound(T)` is the highest context level under which the
/// generator can still build T from scratch, and every recursive call keeps
/// the current context at or below that bound for its target.
class Generator {
 public:
  Generator(const GenConfig& gc, std::uint64_t stream)
      : gc_(gc), rng_(splitmix64(gc.seed ^ splitmix64(stream))) {
    gc_.validate();
  }

  // ---- types

  bool feasible(std::int64_t level, int depth, std::int64_t ctx) const {
    if (depth < 1 || level < 0) return false;
    if (level == 0) return true;
    if (depth < 2) return false;
    if (poly()) return true;
    if (fun_bound(level) >= std::max<std::int64_t>(ctx, 0)) return true;
    auto inner = ref_inner(level);
    return inner && feasible(*inner, depth - 1, ctx);
  }

  /// A type of kind exactly `level` and depth at most `depth`. With ctx >= 0
  /// the result can also be built by the generator under any context of level
  /// ctx or lower.
  Type type_at(std::int64_t level, int depth, std::int64_t ctx = -1) {
    if (!feasible(level, depth, ctx))
      throw Unsatisfiable("no type at level " + std::to_string(level) + " within depth " +
                          std::to_string(depth));
    enum Opt { Base, Disp, Ref, Fun };
    std::vector<Opt> opts;
    if (level == 0) opts.push_back(Base);
    if (level > 0 && depth >= 2 && poly()) opts.push_back(Disp);
    if (auto inner = ref_inner(level); inner && feasible(*inner, depth - 1, ctx))
      opts.push_back(Ref);
    if (depth >= 2 && level >= fun_min() && (ctx < 0 || fun_bound(level) >= ctx))
      opts.push_back(Fun);
    switch (opts[pick(opts.size())]) {
      case Base:
        return coin() ? Type::nat() : Type::unit();
      case Disp:
        return Type::displace(Level::concrete(level), coin() ? Type::nat() : Type::unit());
      case Ref:
        return Type::ref(type_at(*ref_inner(level), depth - 1, ctx));
      case Fun: {
        // Operand levels: at most the annotation for plain kinding, at most the
        // side-condition bound when the type must be buildable.
        std::int64_t top = ctx < 0 ? level : fun_bound(level);
        std::int64_t la = uniform(0, top);
        if (!feasible(la, depth - 1, -1)) la = 0;
        Type a = type_at(la, depth - 1);
        std::int64_t need = ctx < 0 ? -1 : std::max(ctx, la);
        std::vector<std::int64_t> lbs;
        for (std::int64_t lb = 0; lb <= top; ++lb)
          if (feasible(lb, depth - 1, need)) lbs.push_back(lb);
        Type b = type_at(lbs[pick(lbs.size())], depth - 1, need);
        return Type::fun(a, b, Level::concrete(level));
      }
    }
    return Type::nat();
  }

  std::int64_t kind(const Type& t) const {
    return static_cast<std::int64_t>(kind_of(t, gc_.variant).offset);
  }

  /// Highest context level under which `t` can be built from scratch, or -1.
  std::int64_t ctx_bound(const Type& t) const {
    return std::visit(
        overloaded{
            [](const UnitType&) { return detail::kUnbounded; },
            [](const NatType&) { return detail::kUnbounded; },
            [](const DisplacedType&) { return detail::kUnbounded; },
            [&](const RefType& r) { return ctx_bound(r.inner); },
            [&](const FunType& f) -> std::int64_t {
              std::int64_t k = static_cast<std::int64_t>(f.ann.offset);
              std::int64_t kb = fun_bound(k);
              std::int64_t body = ctx_bound(f.result);
              std::int64_t ka = kind(f.param);
              if (ka > kb || kind(f.result) > kb || ka > body) return -1;
              return std::min(kb, body);
            },
        },
        t.node().v);
  }

  // ---- expressions

  struct Scoped {
    std::string name;
    Type type;
    std::int64_t level;
  };

  Expr expr(const TypingContext& g, const Type& target) {
    scope_.clear();
    cm_.clear();
    auto vis = g.visible();
    for (auto it = vis.rbegin(); it != vis.rend(); ++it) push(it->first, it->second);
    if (ctx_bound(target) < ctx_max() && !has_var(target))
      throw std::invalid_argument("target " + to_string(target) +
                                  " cannot be built under this context");
    return gen(target, gc_.maxDepth);
  }

  /// Bindings of random types followed by a body of type `target()`.
  Program program() {
    scope_.clear();
    cm_.clear();
    const int td = type_depth();
    std::int64_t level = uniform(0, gc_.maxLevel);
    target_ = feasible(level, td, 0) ? type_at(level, td, 0) : Type::nat();
    Program p;
    const int n = static_cast<int>(uniform(0, 2));
    for (int i = 0; i < n; ++i) {
      Type s = pick_type(ctx_bound(target_));
      std::string name = "b" + std::to_string(i);
      p.bindings.push_back({name, gen(s, gc_.maxDepth - 1), {}});
      push(name, s);
    }
    p.body = gen(target_, gc_.maxDepth);
    return p;
  }

  const Type& target() const { return target_; }

 private:
  bool poly() const { return gc_.variant.variant() == Variant::Polymorphic; }
  bool impred() const { return gc_.variant.variant() == Variant::ImpredicativeBase; }

  std::int64_t fun_min() const { return impred() ? 1 : 0; }
  // Highest context and operand level a lambda annotated with `k` admits.
  std::int64_t fun_bound(std::int64_t k) const { return impred() ? k - 1 : k; }

  // Level of T such that Ref T sits at `level`.
  std::optional<std::int64_t> ref_inner(std::int64_t level) const {
    if (impred()) {
      if (level == 0) return 0;
      if (level >= 2) return level - 1;
      return std::nullopt;
    }
    if (level >= 1) return level - 1;
    return std::nullopt;
  }

  int type_depth() const { return std::min(gc_.maxDepth, 3); }

  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  bool coin() { return pick(2) == 0; }

  std::int64_t ctx_max() const { return scope_.empty() ? 0 : cm_.back(); }

  void push(std::string name, Type t) {
    std::int64_t k = kind(t);
    cm_.push_back(std::max(ctx_max(), k));
    scope_.push_back({std::move(name), std::move(t), k});
  }
  void pop() {
    scope_.pop_back();
    cm_.pop_back();
  }

  std::string fresh() { return "x" + std::to_string(fresh_++); }

  bool has_var(const Type& t) const {
    return std::any_of(scope_.begin(), scope_.end(),
                       [&](const Scoped& s) { return s.type == t; });
  }

  // A type of kind at most `max_kind` that can be built in the current scope.
  Type pick_type(std::int64_t max_kind) {
    const std::int64_t cm = ctx_max();
    std::int64_t hi = std::min<std::int64_t>(gc_.maxLevel, max_kind);
    std::int64_t l = uniform(0, std::max<std::int64_t>(hi, 0));
    if (hi < 0 || !feasible(l, type_depth(), cm)) return Type::nat();
    return type_at(l, type_depth(), cm);
  }

  // The fallback inhabitant: 0, unit, a lambda, or new of an inhabitant.
  Expr canonical(const Type& t) {
    return std::visit(
        overloaded{
            [&](const UnitType&) { return mk::unit(); },
            [&](const NatType&) { return mk::num(0); },
            [&](const DisplacedType& d) { return mk::displace(d.by, canonical(d.inner)); },
            [&](const RefType& r) { return mk::new_(canonical(r.inner)); },
            [&](const FunType& f) {
              std::string x = fresh();
              push(x, f.param);
              Expr body = canonical(f.result);
              pop();
              return mk::lam(x, f.param, body, f.ann);
            },
        },
        t.node().v);
  }

  Expr variable(const Type& t) {
    std::vector<const Scoped*> hits;
    for (const auto& s : scope_)
      if (s.type == t) hits.push_back(&s);
    return mk::var(hits[pick(hits.size())]->name);
  }

  // Whether `want` is reached from `have` by dereferencing and applying, with
  // every argument buildable here.
  bool reaches(const Type& have, const Type& want, int fuel) const {
    if (have == want) return true;
    if (fuel == 0) return false;
    if (const auto* r = have.as<RefType>()) return reaches(r->inner, want, fuel - 1);
    if (const auto* f = have.as<FunType>())
      return (has_var(f->param) || ctx_bound(f->param) >= ctx_max()) &&
             reaches(f->result, want, fuel - 1);
    return false;
  }

  std::vector<const Scoped*> eliminable(const Type& want) const {
    std::vector<const Scoped*> out;
    for (const auto& s : scope_)
      if (!(s.type == want) && reaches(s.type, want, 3)) out.push_back(&s);
    return out;
  }

  Expr eliminate(const Type& have, const Type& want, Expr e, int d) {
    if (have == want) return e;
    if (const auto* r = have.as<RefType>()) return eliminate(r->inner, want, mk::deref(e), d);
    const auto& f = *have.as<FunType>();
    return eliminate(f.result, want, mk::app(e, gen(f.param, d)), d);
  }

  Expr gen(const Type& t, int depth) {
    const bool var_ok = has_var(t);
    if (var_ok && ctx_bound(t) < ctx_max()) return variable(t);
    if (depth <= 1) return var_ok && coin() ? variable(t) : canonical(t);

    const auto* fun = t.as<FunType>();
    const auto* ref = t.as<RefType>();
    const auto* disp = t.as<DisplacedType>();
    const bool is_nat = t.as<NatType>() != nullptr;
    const bool is_unit = t.as<UnitType>() != nullptr;

    std::array<bool, kExprConstructorCount> ok{};
    std::vector<const Scoped*> elim = eliminable(t);
    ok[detail::index_of<Var>()] = var_ok || !elim.empty();
    ok[detail::index_of<Num>()] = is_nat;
    ok[detail::index_of<UnitLit>()] = is_unit;
    ok[detail::index_of<Lam>()] = fun != nullptr;
    ok[detail::index_of<App>()] = true;
    ok[detail::index_of<New>()] = ref != nullptr;
    ok[detail::index_of<Deref>()] = true;
    ok[detail::index_of<Assign>()] = is_unit;
    ok[detail::index_of<Let>()] = true;
    ok[detail::index_of<Seq>()] = true;
    ok[detail::index_of<Add>()] = is_nat;
    ok[detail::index_of<DisplaceExpr>()] = poly() && (is_nat || is_unit || disp);

    double total = 0;
    for (std::size_t i = 0; i < ok.size(); ++i)
      if (ok[i]) total += gc_.weights[i];
    if (total <= 0) return canonical(t);
    double r = std::uniform_real_distribution<double>(0, total)(rng_);
    std::size_t choice = 0;
    for (std::size_t i = 0; i < ok.size(); ++i) {
      if (!ok[i] || gc_.weights[i] <= 0) continue;
      choice = i;
      if (r < gc_.weights[i]) break;
      r -= gc_.weights[i];
    }

    const int d = depth - 1;
    switch (choice) {
      case detail::index_of<Var>(): {
        if (elim.empty() || (var_ok && coin())) return variable(t);
        Scoped s = *elim[pick(elim.size())];
        return eliminate(s.type, t, mk::var(s.name), d);
      }
      case detail::index_of<Num>():
        return mk::num(uniform(0, 9));
      case detail::index_of<UnitLit>():
        return mk::unit();
      case detail::index_of<Lam>(): {
        std::string x = fresh();
        push(x, fun->param);
        Expr body = gen(fun->result, d);
        pop();
        return mk::lam(x, fun->param, body, fun->ann);
      }
      case detail::index_of<App>(): {
        const std::int64_t cm = ctx_max();
        Type a = pick_type(ctx_bound(t));
        std::int64_t k = std::max({cm, kind(a), kind(t)}) + (impred() ? 1 : 0);
        Type f = Type::fun(a, t, Level::concrete(k));
        Expr fn = gen(f, d);
        return mk::app(fn, gen(a, d));
      }
      case detail::index_of<New>():
        return mk::new_(gen(ref->inner, d));
      case detail::index_of<Deref>():
        return mk::deref(gen(Type::ref(t), d));
      case detail::index_of<Assign>(): {
        Type s = pick_type(detail::kUnbounded);
        Expr target = gen(Type::ref(s), d);
        return mk::assign(target, gen(s, d));
      }
      case detail::index_of<Let>(): {
        Type s = pick_type(ctx_bound(t));
        Expr bound = gen(s, d);
        std::string x = fresh();
        push(x, s);
        Expr body = gen(t, d);
        pop();
        return mk::let(x, bound, body);
      }
      case detail::index_of<Seq>(): {
        Expr first = gen(Type::unit(), d);
        return mk::seq(first, gen(t, d));
      }
      case detail::index_of<Add>(): {
        Expr lhs = gen(Type::nat(), d);
        return mk::add(lhs, gen(Type::nat(), d));
      }
      case detail::index_of<DisplaceExpr>(): {
        if (!disp) return mk::displace(Level::concrete(0), gen(t, d));
        std::int64_t n = static_cast<std::int64_t>(disp->by.offset);
        std::int64_t m = uniform(1, n);
        Type inner = m == n ? disp->inner : Type::displace(Level::concrete(n - m), disp->inner);
        return mk::displace(Level::concrete(m), gen(inner, d));
      }
    }
    return canonical(t);
  }

  GenConfig gc_;
  std::mt19937_64 rng_;
  std::vector<Scoped> scope_;
  std::vector<std::int64_t> cm_;
  std::size_t fresh_ = 0;
  Type target_ = Type::nat();
};

/// A type of kind exactly `at`, no deeper than gc.maxDepth.
inline Type gen_type(const GenConfig& gc, const Level& at) {
  if (!at.is_concrete()) throw Unsatisfiable("symbolic levels are not generated");
  if (at.offset > static_cast<std::uint64_t>(gc.maxLevel))
    throw Unsatisfiable("level " + to_string(at) + " is above maxLevel");
  Generator g(gc, 0);
  return g.type_at(static_cast<std::int64_t>(at.offset), gc.maxDepth);
}

/// An expression of type `target` under `g`.
inline Expr gen_expr(const GenConfig& gc, const TypingContext& g, const Type& target) {
  Generator gen(gc, 0);
  return gen.expr(g, target);
}

/// The program at position `index` of the stream for `gc`, with its intended type.
inline std::pair<Program, Type> gen_program(const GenConfig& gc, std::uint64_t index) {
  Generator gen(gc, index);
  Program p = gen.program();
  return {std::move(p), gen.target()};
}

inline void count_constructors(const Expr& e, std::array<std::size_t, kExprConstructorCount>& out) {
  ++out[e.node().v.index()];
  std::visit(overloaded{
                 [](const Var&) {},
                 [](const Num&) {},
                 [](const UnitLit&) {},
                 [&](const Lam& l) { count_constructors(l.body, out); },
                 [&](const App& a) {
                   count_constructors(a.fn, out);
                   count_constructors(a.arg, out);
                 },
                 [&](const New& n) { count_constructors(n.init, out); },
                 [&](const Deref& d) { count_constructors(d.target, out); },
                 [&](const Assign& a) {
                   count_constructors(a.target, out);
                   count_constructors(a.value, out);
                 },
                 [&](const Let& l) {
                   count_constructors(l.bound, out);
                   count_constructors(l.body, out);
                 },
                 [&](const Seq& s) {
                   count_constructors(s.first, out);
                   count_constructors(s.second, out);
                 },
                 [&](const Add& a) {
                   count_constructors(a.lhs, out);
                   count_constructors(a.rhs, out);
                 },
                 [&](const DisplaceExpr& d) { count_constructors(d.inner, out); },
             },
             e.node().v);
}

struct CampaignRecord {
  std::uint64_t seed_offset = 0;
  std::string status;  // value, budget_exceeded, stuck, generator_unsound
  std::uint64_t steps = 0;
  std::size_t heap_peak = 0;
  std::size_t violations = 0;
  std::size_t legal_cycles = 0;
  bool gc_safe = true;
  std::vector<std::string> messages;
  std::array<std::size_t, kExprConstructorCount> constructors{};

  nlohmann::json to_json() const {
    nlohmann::json j{{"seed_offset", seed_offset}, {"status", status},
                     {"steps", steps},             {"heap_peak", heap_peak},
                     {"violations", violations},   {"gc_safe", gc_safe}};
    if (legal_cycles) j["legal_cycles"] = legal_cycles;
    if (!messages.empty()) j["messages"] = messages;
    return j;
  }
};

struct CampaignReport {
  Variant variant = Variant::Predicative;
  std::vector<CampaignRecord> records;
  std::uint64_t max_steps = 0;
  std::size_t max_heap = 0;
  std::size_t budget_exceeded = 0;
  std::size_t stuck = 0;
  std::size_t violations = 0;
  std::size_t gc_unsafe = 0;
  std::size_t unsound = 0;
  std::size_t legal_cycles = 0;
  std::array<std::size_t, kExprConstructorCount> constructors{};

  bool ok() const {
    return budget_exceeded == 0 && stuck == 0 && violations == 0 && gc_unsafe == 0 &&
           unsound == 0;
  }

  /// How a failure is classified: termination is proved for the predicative
  /// hierarchy only.
  const char* failure_label() const {
    return variant == Variant::Predicative ? "implementation bug" : "conjecture counterexample";
  }

  nlohmann::json summary() const {
    nlohmann::json cov;
    for (std::size_t i = 0; i < kExprConstructorCount; ++i)
      cov[kExprConstructorNames[i]] = constructors[i];
    nlohmann::json j{{"summary", true},
                     {"variant", to_string(variant)},
                     {"programs", records.size()},
                     {"max_steps", max_steps},
                     {"max_heap", max_heap},
                     {"budget_exceeded", budget_exceeded},
                     {"stuck", stuck},
                     {"violations", violations},
                     {"gc_unsafe", gc_unsafe},
                     {"generator_unsound", unsound},
                     {"legal_cycles", legal_cycles},
                     {"constructors", cov},
                     {"ok", ok()}};
    if (!ok()) j["failure"] = failure_label();
    return j;
  }

  /// One JSON object per program, then the summary object.
  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records) out += r.to_json().dump() + "\n";
    out += summary().dump() + "\n";
    return out;
  }
};

/// Generates, checks, runs, audits and collects one program.
inline CampaignRecord fuzz_one(const GenConfig& gc, std::uint64_t index, std::uint64_t budget) {
  CampaignRecord rec;
  rec.seed_offset = index;
  auto [program, target] = gen_program(gc, index);
  for (const auto& b : program.bindings) count_constructors(b.expr, rec.constructors);
  count_constructors(program.body, rec.constructors);
  const AlgebraConfig& cfg = gc.variant;
  CheckedProgram checked;
  try {
    checked = check_program(program, cfg);
  } catch (const TypeError& e) {
    rec.status = "generator_unsound";
    rec.messages.push_back(std::string(e.what()) + " in " + to_string(program));
    return rec;
  }
  if (!types_equal(checked.type, target, cfg)) {
    rec.status = "generator_unsound";
    rec.messages.push_back("inferred " + to_string(checked.type) + " instead of " +
                           to_string(target));
    return rec;
  }
  RunResult r = run(cfg, checked.elaborated, {.budget = budget});
  rec.status = to_string(r.status);
  rec.steps = r.steps;
  rec.heap_peak = r.heap.size();
  rec.violations = r.violations.size();
  for (const auto& v : r.violations) rec.messages.push_back(v.message);
  rec.legal_cycles = legal_cycles(r.heap, cfg).size();
  if (r.status == RunStatus::Stuck) rec.messages.push_back(r.stuck_reason);
  if (r.status == RunStatus::Value) {
    Level bound = cfg.canonicalize(kind_of(checked.type, cfg));
    Lowered low = lower_heap(r.heap, bound, cfg);
    rec.gc_safe = gc_safe(r.heap, *r.value, bound, cfg) &&
                  observe(r.heap, *r.value) == observe(low.heap, *r.value);
    if (!rec.gc_safe) rec.messages.push_back("result does not survive lowering");
  }
  return rec;
}

/// Runs `n` generated programs, `jobs` at a time. The report does not depend
/// on `jobs`.
inline CampaignReport fuzz_campaign(const GenConfig& gc, std::size_t n,
                                    std::uint64_t budget = kDefaultBudget,
                                    unsigned jobs = 1) {
  gc.validate();
  CampaignReport rep;
  rep.variant = gc.variant.variant();
  rep.records.resize(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) rep.records[i] = fuzz_one(gc, i, budget);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& r : rep.records) {
    rep.max_steps = std::max(rep.max_steps, r.steps);
    rep.max_heap = std::max(rep.max_heap, r.heap_peak);
    rep.budget_exceeded += r.status == "budget_exceeded";
    rep.stuck += r.status == "stuck";
    rep.unsound += r.status == "generator_unsound";
    rep.violations += r.violations;
    rep.gc_unsafe += !r.gc_safe;
    rep.legal_cycles += r.legal_cycles;
    for (std::size_t i = 0; i < kExprConstructorCount; ++i) rep.constructors[i] += r.constructors[i];
  }
  return rep;
}

}  // namespace lpr
