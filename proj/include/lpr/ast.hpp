#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lpr/level.hpp"

namespace lpr {

using Natural = boost::multiprecision::cpp_int;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

struct Span {
  int line = 0;
  int col = 0;
};

// ---------------------------------------------------------------------------
// Types

struct TypeNode;

class Type {
 public:
  Type() = default;
  explicit Type(std::shared_ptr<const TypeNode> n) : node_(std::move(n)) {}

  static Type unit();
  static Type nat();
  static Type fun(Type param, Type result, Level ann);
  static Type ref(Type inner);
  static Type displace(Level by, Type inner);

  const TypeNode& node() const { return *node_; }
  bool empty() const { return node_ == nullptr; }

  template <class T>
  const T* as() const;

  friend bool operator==(const Type& a, const Type& b);

 private:
  std::shared_ptr<const TypeNode> node_;
};

struct UnitType {};
struct NatType {};
struct FunType {
  Type param;
  Type result;
  Level ann;
};
struct RefType {
  Type inner;
};
struct DisplacedType {
  Level by;
  Type inner;
};

struct TypeNode {
  std::variant<UnitType, NatType, FunType, RefType, DisplacedType> v;
};

template <class T>
const T* Type::as() const {
  return std::get_if<T>(&node_->v);
}

inline Type Type::unit() {
  static const Type t{std::make_shared<const TypeNode>(TypeNode{UnitType{}})};
  return t;
}
inline Type Type::nat() {
  static const Type t{std::make_shared<const TypeNode>(TypeNode{NatType{}})};
  return t;
}
inline Type Type::fun(Type param, Type result, Level ann) {
  return Type{std::make_shared<const TypeNode>(
      TypeNode{FunType{std::move(param), std::move(result), std::move(ann)}})};
}
inline Type Type::ref(Type inner) {
  return Type{
      std::make_shared<const TypeNode>(TypeNode{RefType{std::move(inner)}})};
}
inline Type Type::displace(Level by, Type inner) {
  return Type{std::make_shared<const TypeNode>(
      TypeNode{DisplacedType{std::move(by), std::move(inner)}})};
}

inline bool operator==(const Type& a, const Type& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const auto& x = a.node_->v;
  const auto& y = b.node_->v;
  if (x.index() != y.index()) return false;
  return std::visit(
      overloaded{
          [](const UnitType&) { return true; },
          [](const NatType&) { return true; },
          [&](const FunType& f) {
            const auto& g = std::get<FunType>(y);
            return f.ann == g.ann && f.param == g.param && f.result == g.result;
          },
          [&](const RefType& r) { return r.inner == std::get<RefType>(y).inner; },
          [&](const DisplacedType& d) {
            const auto& e = std::get<DisplacedType>(y);
            return d.by == e.by && d.inner == e.inner;
          },
      },
      x);
}

/// Shifts every level annotation inside `t` by `beta`. Base types carry no
/// annotation and are returned unchanged.
inline Type displace_type(const Level& beta, const Type& t) {
  return std::visit(
      overloaded{
          [&](const UnitType&) { return t; },
          [&](const NatType&) { return t; },
          [&](const FunType& f) {
            return Type::fun(displace_type(beta, f.param),
                             displace_type(beta, f.result), shift(f.ann, beta));
          },
          [&](const RefType& r) {
            return Type::ref(displace_type(beta, r.inner));
          },
          [&](const DisplacedType& d) {
            return Type::displace(shift(d.by, beta),
                                  displace_type(beta, d.inner));
          },
      },
      t.node().v);
}

// ---------------------------------------------------------------------------
// Expressions

struct ExprNode;

class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}

  const ExprNode& node() const { return *node_; }
  const ExprNode* get() const { return node_.get(); }
  bool empty() const { return node_ == nullptr; }

  template <class T>
  const T* as() const;
  Span span() const;

 private:
  std::shared_ptr<const ExprNode> node_;
};

struct Var {
  std::string name;
};
struct Num {
  Natural value;
};
struct UnitLit {};
struct Lam {
  std::string param;
  Type param_type;
  std::optional<Level> ann;  // omitted in surface syntax means "infer"
  Expr body;
};
struct App {
  Expr fn;
  Expr arg;
};
struct New {
  Expr init;
  std::optional<Type> stored;  // filled in by elaboration
};
struct Deref {
  Expr target;
};
struct Assign {
  Expr target;
  Expr value;
};
struct Let {
  std::string name;
  Expr bound;
  Expr body;
};
struct Seq {
  Expr first;
  Expr second;
};
struct Add {
  Expr lhs;
  Expr rhs;
};
struct DisplaceExpr {
  Level by;
  Expr inner;
};

using ExprVariant = std::variant<Var, Num, UnitLit, Lam, App, New, Deref, Assign,
                                 Let, Seq, Add, DisplaceExpr>;

inline constexpr std::size_t kExprConstructorCount =
    std::variant_size_v<ExprVariant>;

inline constexpr const char* kExprConstructorNames[] = {
    "var",    "num", "unit", "lam", "app", "new",
    "deref",  "assign", "let", "seq", "add", "displace"};

struct ExprNode {
  ExprVariant v;
  Span span;
};

template <class T>
const T* Expr::as() const {
  return std::get_if<T>(&node_->v);
}
inline Span Expr::span() const { return node_ ? node_->span : Span{}; }

template <class T>
Expr make_expr(T alt, Span span = {}) {
  return Expr{std::make_shared<const ExprNode>(ExprNode{std::move(alt), span})};
}

namespace mk {
inline Expr var(std::string n, Span s = {}) { return make_expr(Var{std::move(n)}, s); }
inline Expr num(Natural n, Span s = {}) { return make_expr(Num{std::move(n)}, s); }
inline Expr unit(Span s = {}) { return make_expr(UnitLit{}, s); }
inline Expr lam(std::string p, Type t, Expr body, std::optional<Level> ann = {},
                Span s = {}) {
  return make_expr(Lam{std::move(p), std::move(t), std::move(ann), std::move(body)}, s);
}
inline Expr app(Expr f, Expr a, Span s = {}) {
  return make_expr(App{std::move(f), std::move(a)}, s);
}
inline Expr new_(Expr e, Span s = {}) { return make_expr(New{std::move(e), {}}, s); }
inline Expr deref(Expr e, Span s = {}) { return make_expr(Deref{std::move(e)}, s); }
inline Expr assign(Expr t, Expr v, Span s = {}) {
  return make_expr(Assign{std::move(t), std::move(v)}, s);
}
inline Expr let(std::string n, Expr b, Expr body, Span s = {}) {
  return make_expr(Let{std::move(n), std::move(b), std::move(body)}, s);
}
inline Expr seq(Expr a, Expr b, Span s = {}) {
  return make_expr(Seq{std::move(a), std::move(b)}, s);
}
inline Expr add(Expr a, Expr b, Span s = {}) {
  return make_expr(Add{std::move(a), std::move(b)}, s);
}
inline Expr displace(Level by, Expr e, Span s = {}) {
  return make_expr(DisplaceExpr{std::move(by), std::move(e)}, s);
}
}  // namespace mk

namespace detail {

inline void collect_free(const Expr& e, std::multiset<std::string>& bound,
                         std::set<std::string>& out) {
  std::visit(
      overloaded{
          [&](const Var& v) {
            if (!bound.contains(v.name)) out.insert(v.name);
          },
          [](const Num&) {},
          [](const UnitLit&) {},
          [&](const Lam& l) {
            auto it = bound.insert(l.param);
            collect_free(l.body, bound, out);
            bound.erase(it);
          },
          [&](const App& a) {
            collect_free(a.fn, bound, out);
            collect_free(a.arg, bound, out);
          },
          [&](const New& n) { collect_free(n.init, bound, out); },
          [&](const Deref& d) { collect_free(d.target, bound, out); },
          [&](const Assign& a) {
            collect_free(a.target, bound, out);
            collect_free(a.value, bound, out);
          },
          [&](const Let& l) {
            collect_free(l.bound, bound, out);
            auto it = bound.insert(l.name);
            collect_free(l.body, bound, out);
            bound.erase(it);
          },
          [&](const Seq& s) {
            collect_free(s.first, bound, out);
            collect_free(s.second, bound, out);
          },
          [&](const Add& a) {
            collect_free(a.lhs, bound, out);
            collect_free(a.rhs, bound, out);
          },
          [&](const DisplaceExpr& d) { collect_free(d.inner, bound, out); },
      },
      e.node().v);
}

// Compares two expressions up to consistent renaming of bound variables.
// Binder maps run innermost-last; free variables must match by name.
inline bool alpha_eq(const Expr& a, const Expr& b,
                     std::vector<std::pair<std::string, std::string>>& binders,
                     bool compare_names) {
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return false;
  auto same_var = [&](const std::string& p, const std::string& q) {
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      bool lp = it->first == p;
      bool lq = it->second == q;
      if (lp || lq) return lp && lq;
    }
    return p == q;
  };
  auto under = [&](const std::string& p, const std::string& q, const Expr& l,
                   const Expr& r) {
    if (compare_names && p != q) return false;
    binders.emplace_back(p, q);
    bool ok = alpha_eq(l, r, binders, compare_names);
    binders.pop_back();
    return ok;
  };
  return std::visit(
      overloaded{
          [&](const Var& v) { return same_var(v.name, std::get<Var>(y).name); },
          [&](const Num& n) { return n.value == std::get<Num>(y).value; },
          [](const UnitLit&) { return true; },
          [&](const Lam& l) {
            const auto& m = std::get<Lam>(y);
            return l.param_type == m.param_type && l.ann == m.ann &&
                   under(l.param, m.param, l.body, m.body);
          },
          [&](const App& p) {
            const auto& q = std::get<App>(y);
            return alpha_eq(p.fn, q.fn, binders, compare_names) &&
                   alpha_eq(p.arg, q.arg, binders, compare_names);
          },
          [&](const New& n) {
            const auto& m = std::get<New>(y);
            return n.stored == m.stored &&
                   alpha_eq(n.init, m.init, binders, compare_names);
          },
          [&](const Deref& d) {
            return alpha_eq(d.target, std::get<Deref>(y).target, binders,
                            compare_names);
          },
          [&](const Assign& p) {
            const auto& q = std::get<Assign>(y);
            return alpha_eq(p.target, q.target, binders, compare_names) &&
                   alpha_eq(p.value, q.value, binders, compare_names);
          },
          [&](const Let& l) {
            const auto& m = std::get<Let>(y);
            return alpha_eq(l.bound, m.bound, binders, compare_names) &&
                   under(l.name, m.name, l.body, m.body);
          },
          [&](const Seq& p) {
            const auto& q = std::get<Seq>(y);
            return alpha_eq(p.first, q.first, binders, compare_names) &&
                   alpha_eq(p.second, q.second, binders, compare_names);
          },
          [&](const Add& p) {
            const auto& q = std::get<Add>(y);
            return alpha_eq(p.lhs, q.lhs, binders, compare_names) &&
                   alpha_eq(p.rhs, q.rhs, binders, compare_names);
          },
          [&](const DisplaceExpr& d) {
            const auto& q = std::get<DisplaceExpr>(y);
            return d.by == q.by &&
                   alpha_eq(d.inner, q.inner, binders, compare_names);
          },
      },
      x);
}

}  // namespace detail

inline std::set<std::string> free_vars(const Expr& e) {
  std::multiset<std::string> bound;
  std::set<std::string> out;
  detail::collect_free(e, bound, out);
  return out;
}

/// Syntactic equality, ignoring source spans.
inline bool structurally_equal(const Expr& a, const Expr& b) {
  std::vector<std::pair<std::string, std::string>> binders;
  return detail::alpha_eq(a, b, binders, true);
}

inline bool alpha_equivalent(const Expr& a, const Expr& b) {
  std::vector<std::pair<std::string, std::string>> binders;
  return detail::alpha_eq(a, b, binders, false);
}

/// Renames every binder to `prefix<n>`, producing an alpha-equivalent term.
inline Expr rename_binders(const Expr& e, const std::string& prefix) {
  int counter = 0;
  std::map<std::string, std::vector<std::string>> scope;
  auto lookup = [&](const std::string& n) {
    auto it = scope.find(n);
    return (it == scope.end() || it->second.empty()) ? n : it->second.back();
  };
  auto go = [&](auto&& self, const Expr& x) -> Expr {
    Span s = x.span();
    return std::visit(
        overloaded{
            [&](const Var& v) { return mk::var(lookup(v.name), s); },
            [&](const Num&) { return x; },
            [&](const UnitLit&) { return x; },
            [&](const Lam& l) {
              std::string fresh = prefix + std::to_string(counter++);
              scope[l.param].push_back(fresh);
              Expr body = self(self, l.body);
              scope[l.param].pop_back();
              return make_expr(Lam{fresh, l.param_type, l.ann, body}, s);
            },
            [&](const App& a) {
              return mk::app(self(self, a.fn), self(self, a.arg), s);
            },
            [&](const New& n) {
              return make_expr(New{self(self, n.init), n.stored}, s);
            },
            [&](const Deref& d) { return mk::deref(self(self, d.target), s); },
            [&](const Assign& a) {
              return mk::assign(self(self, a.target), self(self, a.value), s);
            },
            [&](const Let& l) {
              Expr bound = self(self, l.bound);
              std::string fresh = prefix + std::to_string(counter++);
              scope[l.name].push_back(fresh);
              Expr body = self(self, l.body);
              scope[l.name].pop_back();
              return mk::let(fresh, bound, body, s);
            },
            [&](const Seq& q) {
              return mk::seq(self(self, q.first), self(self, q.second), s);
            },
            [&](const Add& a) {
              return mk::add(self(self, a.lhs), self(self, a.rhs), s);
            },
            [&](const DisplaceExpr& d) {
              return mk::displace(d.by, self(self, d.inner), s);
            },
        },
        x.node().v);
  };
  return go(go, e);
}

// ---------------------------------------------------------------------------
// Typing contexts

/// Persistent ordered context. Extension shares the tail, so existing
/// contexts are never mutated.
class TypingContext {
 public:
  TypingContext() = default;

  TypingContext extend(std::string name, Type type) const {
    TypingContext c;
    c.head_ = std::make_shared<const Entry>(
        Entry{std::move(name), std::move(type), head_});
    c.size_ = size_ + 1;
    return c;
  }

  std::optional<Type> lookup(std::string_view name) const {
    for (const Entry* e = head_.get(); e; e = e->next.get())
      if (e->name == name) return e->type;
    return std::nullopt;
  }

  bool contains(std::string_view name) const { return lookup(name).has_value(); }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  /// Bindings not shadowed by an inner binding of the same name, innermost
  /// first.
  std::vector<std::pair<std::string, Type>> visible() const {
    std::vector<std::pair<std::string, Type>> out;
    std::set<std::string_view> seen;
    for (const Entry* e = head_.get(); e; e = e->next.get())
      if (seen.insert(e->name).second) out.emplace_back(e->name, e->type);
    return out;
  }

  TypingContext restrict_to(const std::set<std::string>& names) const {
    auto vis = visible();
    TypingContext c;
    for (auto it = vis.rbegin(); it != vis.rend(); ++it)
      if (names.contains(it->first)) c = c.extend(it->first, it->second);
    return c;
  }

 private:
  struct Entry {
    std::string name;
    Type type;
    std::shared_ptr<const Entry> next;
  };
  std::shared_ptr<const Entry> head_;
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Programs

struct Binding {
  std::string name;
  Expr expr;
  Span span;
};

}  // namespace lpr
