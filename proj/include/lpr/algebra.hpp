#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lpr/level.hpp"

namespace lpr {

enum class Variant { Predicative, ImpredicativeBase, Polymorphic };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Predicative: return "predicative";
    case Variant::ImpredicativeBase: return "impredicative";
    case Variant::Polymorphic: return "poly";
  }
  return "?";
}

struct RegionConstraint {
  enum class Kind { Disjoint, Equal };
  Kind kind;
  Level a;
  Level b;

  static RegionConstraint equal(Level a, Level b) {
    return {Kind::Equal, std::move(a), std::move(b)};
  }
  static RegionConstraint disjoint(Level a, Level b) {
    return {Kind::Disjoint, std::move(a), std::move(b)};
  }
  friend bool operator==(const RegionConstraint&, const RegionConstraint&) = default;
};

inline std::string to_string(const RegionConstraint& c) {
  return "region " + to_string(c.a) +
         (c.kind == RegionConstraint::Kind::Equal ? " = " : " # ") +
         to_string(c.b);
}

class InconsistentConstraints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed declaration (e.g. a concrete level in a region constraint).
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Tri { True, False, Incomparable };

inline const char* to_string(Tri t) {
  switch (t) {
    case Tri::True: return "true";
    case Tri::False: return "false";
    case Tri::Incomparable: return "incomparable";
  }
  return "?";
}

namespace detail {

// Equal-closure over points (region, offset). Successor is a function on
// levels, so an equation a+p = b+q also equates every pair a+(p+n), b+(q+n).
// Points up to a finite window are stored explicitly; anything above the
// window is reduced by congruence onto a point inside it.
class RegionSolver {
 public:
  explicit RegionSolver(const std::vector<RegionConstraint>& cs) {
    std::uint64_t max_off = 0;
    for (const auto& c : cs) {
      for (const Level* l : {&c.a, &c.b}) {
        if (l->is_concrete())
          throw ConstraintError("region constraints relate region symbols, got " +
                                to_string(*l) + " in `" + to_string(c) + "`");
        region_index(*l->region);
        max_off = std::max(max_off, l->offset);
      }
    }
    window_ = 2 * max_off + 2;
    const std::size_t points = regions_.size() * (window_ + 1);
    parent_.resize(points);
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});

    for (const auto& c : cs) {
      if (c.kind != RegionConstraint::Kind::Equal) continue;
      unite(point(c.a), point(c.b));
    }
    close_under_successor();

    rep_.assign(points, 0);
    floor_.assign(points, 0);
    std::vector<bool> seen(points, false);
    for (std::size_t p = 0; p < points; ++p) {
      std::size_t root = find(p);
      if (!seen[root]) {
        seen[root] = true;
        rep_[root] = p;
        floor_[root] = offset_of(p);
        continue;
      }
      if (better(p, rep_[root])) rep_[root] = p;
      floor_[root] = std::max(floor_[root], offset_of(p));
    }

    for (const auto& c : cs) {
      if (c.kind != RegionConstraint::Kind::Disjoint) continue;
      Level ca = canonicalize(c.a);
      Level cb = canonicalize(c.b);
      if (ca == cb)
        throw InconsistentConstraints("constraints equate " + to_string(c.a) +
                                      " and " + to_string(c.b) +
                                      ", which are declared disjoint");
      disjoint_.insert({ca, cb});
      disjoint_.insert({cb, ca});
    }
  }

  Level canonicalize(const Level& l) const {
    if (l.is_concrete()) return l;
    auto it = index_.find(*l.region);
    if (it == index_.end()) return l;
    if (l.offset <= window_) return level_of(rep_[find(point(l))]);
    Level top = canonicalize(Level::symbolic(*l.region, window_));
    if (top.offset < window_)
      return canonicalize(top.plus(l.offset - window_));
    return Level::symbolic(*top.region, l.offset);
  }

  // Lower bound on the numeric height of a symbolic level: a+n is at least n
  // for every member a+n of its class.
  std::uint64_t floor(const Level& l) const {
    if (l.is_concrete()) return l.offset;
    auto it = index_.find(*l.region);
    if (it == index_.end() || l.offset > window_) return l.offset;
    return floor_[find(point(l))];
  }

  bool declared_disjoint(const Level& ca, const Level& cb) const {
    return disjoint_.contains({ca, cb});
  }

  // Whether canonical `to` is some successor (possibly zero steps) of `from`.
  bool reaches(const Level& from, const Level& to) const {
    if (from.is_concrete() || to.is_concrete()) return false;
    const std::uint64_t bound = 2 * window_ + to.offset + 2;
    for (std::uint64_t t = 0; t <= bound; ++t)
      if (canonicalize(from.plus(t)) == to) return true;
    return false;
  }

  std::uint64_t window() const { return window_; }

 private:
  std::size_t region_index(const std::string& r) {
    auto [it, inserted] = index_.emplace(r, regions_.size());
    if (inserted) regions_.push_back(r);
    return it->second;
  }
  std::size_t point(const Level& l) const {
    return index_.at(*l.region) * (window_ + 1) + l.offset;
  }
  std::uint64_t offset_of(std::size_t p) const { return p % (window_ + 1); }
  Level level_of(std::size_t p) const {
    return Level::symbolic(regions_[p / (window_ + 1)], offset_of(p));
  }
  // Representative preference: lowest offset, then region name.
  bool better(std::size_t p, std::size_t q) const {
    if (offset_of(p) != offset_of(q)) return offset_of(p) < offset_of(q);
    return regions_[p / (window_ + 1)] < regions_[q / (window_ + 1)];
  }

  std::size_t find(std::size_t p) const {
    while (parent_[p] != p) p = parent_[p];
    return p;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

  void close_under_successor() {
    bool changed = true;
    while (changed) {
      changed = false;
      std::map<std::size_t, std::size_t> first_succ;
      for (std::size_t p = 0; p < parent_.size(); ++p) {
        if (offset_of(p) == window_) continue;
        std::size_t root = find(p);
        auto [it, inserted] = first_succ.emplace(root, p + 1);
        if (!inserted) changed |= unite(it->second, p + 1);
      }
    }
  }

  std::map<std::string, std::size_t> index_;
  std::vector<std::string> regions_;
  std::uint64_t window_ = 0;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rep_;
  std::vector<std::uint64_t> floor_;
  std::set<std::pair<Level, Level>> disjoint_;
};

}  // namespace detail

/// The two knobs of the framework (function side condition and reference
/// level relation), plus declared region constraints for the polymorphic
/// variant. Immutable once built.
class AlgebraConfig {
 public:
  static AlgebraConfig predicative() { return AlgebraConfig(Variant::Predicative, {}); }
  static AlgebraConfig impredicative() {
    return AlgebraConfig(Variant::ImpredicativeBase, {});
  }
  /// Throws InconsistentConstraints or ConstraintError.
  static AlgebraConfig polymorphic(std::vector<RegionConstraint> constraints = {}) {
    return AlgebraConfig(Variant::Polymorphic, std::move(constraints));
  }
  static AlgebraConfig for_variant(Variant v,
                                   std::vector<RegionConstraint> constraints = {}) {
    return AlgebraConfig(v, std::move(constraints));
  }

  Variant variant() const { return variant_; }
  const std::vector<RegionConstraint>& constraints() const { return constraints_; }
  bool polymorphic_levels() const { return variant_ == Variant::Polymorphic; }

  Level canonicalize(const Level& l) const {
    return solver_ ? solver_->canonicalize(l) : l;
  }

  Tri level_leq(const Level& a, const Level& b) const {
    Level ca = canonicalize(a);
    Level cb = canonicalize(b);
    if (ca.is_concrete() && cb.is_concrete())
      return ca.offset <= cb.offset ? Tri::True : Tri::False;
    if (ca.is_concrete())
      return ca.offset <= floor(cb) ? Tri::True : Tri::Incomparable;
    if (cb.is_concrete())
      return floor(ca) > cb.offset ? Tri::False : Tri::Incomparable;
    if (ca == cb) return Tri::True;
    if (solver_ && solver_->declared_disjoint(ca, cb)) return Tri::Incomparable;
    if (*ca.region == *cb.region && !solver_)
      return ca.offset <= cb.offset ? Tri::True : Tri::False;
    if (solver_) {
      if (solver_->reaches(ca, cb)) return Tri::True;
      if (solver_->reaches(cb, ca)) return Tri::False;
    }
    if (*ca.region == *cb.region)
      return ca.offset <= cb.offset ? Tri::True : Tri::False;
    return Tri::Incomparable;
  }

  Tri level_lt(const Level& a, const Level& b) const {
    return level_leq(a.plus(1), b);
  }

  bool levels_equal(const Level& a, const Level& b) const {
    return canonicalize(a) == canonicalize(b);
  }

  /// Least upper bound, or nullopt when the levels are incomparable.
  std::optional<Level> max(const Level& a, const Level& b) const {
    if (level_leq(a, b) == Tri::True) return canonicalize(b);
    if (level_leq(b, a) == Tri::True) return canonicalize(a);
    return std::nullopt;
  }

  bool fun_side_condition(const Level& k, const Level& gamma_max) const {
    if (variant_ == Variant::ImpredicativeBase)
      return level_lt(gamma_max, k) == Tri::True;
    return level_leq(gamma_max, k) == Tri::True;
  }

  Level ref_level(const Level& inner) const {
    switch (variant_) {
      case Variant::Predicative:
        return inner.plus(1);
      case Variant::ImpredicativeBase: {
        Level c = canonicalize(inner);
        return c == Level::concrete(0) ? c : c.plus(1);
      }
      case Variant::Polymorphic:
        return canonicalize(inner.plus(1));
    }
    return inner.plus(1);
  }

  /// Displacement arithmetic: `base` shifted by `by`. Throws LevelError when
  /// the two name regions the constraints do not equate.
  Level add(const Level& base, const Level& by) const {
    try {
      return canonicalize(shift(base, by));
    } catch (const LevelError&) {
      Level cb = canonicalize(base);
      Level cy = canonicalize(by);
      if (cb.is_concrete() || cy.is_concrete() || *cb.region != *cy.region)
        throw;
      return canonicalize(shift(cb, cy));
    }
  }

 private:
  AlgebraConfig(Variant v, std::vector<RegionConstraint> cs)
      : variant_(v), constraints_(std::move(cs)) {
    if (!constraints_.empty() && variant_ != Variant::Polymorphic)
      throw ConstraintError("region constraints require the polymorphic variant");
    if (variant_ == Variant::Polymorphic && !constraints_.empty())
      solver_ = std::make_shared<const detail::RegionSolver>(constraints_);
  }

  std::uint64_t floor(const Level& l) const {
    return solver_ ? solver_->floor(l) : l.offset;
  }

  Variant variant_;
  std::vector<RegionConstraint> constraints_;
  std::shared_ptr<const detail::RegionSolver> solver_;
};

inline Level canonicalize(const Level& l, const AlgebraConfig& cfg) {
  return cfg.canonicalize(l);
}
inline Tri level_leq(const Level& a, const Level& b, const AlgebraConfig& cfg) {
  return cfg.level_leq(a, b);
}
inline bool fun_side_condition(const Level& k, const Level& gamma_max,
                               const AlgebraConfig& cfg) {
  return cfg.fun_side_condition(k, gamma_max);
}
inline Level ref_level(const Level& inner, const AlgebraConfig& cfg) {
  return cfg.ref_level(inner);
}

}  // namespace lpr
