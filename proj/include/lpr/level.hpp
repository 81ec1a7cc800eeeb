#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace lpr {

/// A universe level. Concrete levels have no region and their offset is the
/// level itself; symbolic levels name a region and sit `offset` steps above it.
struct Level {
  std::optional<std::string> region;
  std::uint64_t offset = 0;

  static Level concrete(std::uint64_t n) { return Level{std::nullopt, n}; }
  static Level symbolic(std::string r, std::uint64_t off = 0) {
    return Level{std::move(r), off};
  }

  bool is_concrete() const { return !region.has_value(); }

  Level plus(std::uint64_t n) const { return Level{region, offset + n}; }

  friend bool operator==(const Level&, const Level&) = default;

  // Concrete levels order before symbolic ones; used for map keys and stable
  // output, not as the universe ordering (see algebra.hpp for that).
  friend std::strong_ordering operator<=>(const Level& a, const Level& b) {
    if (a.is_concrete() != b.is_concrete())
      return a.is_concrete() ? std::strong_ordering::less
                             : std::strong_ordering::greater;
    if (!a.is_concrete()) {
      if (auto c = *a.region <=> *b.region; c != 0) return c;
    }
    return a.offset <=> b.offset;
  }
};

inline std::string to_string(const Level& l) {
  if (l.is_concrete()) return std::to_string(l.offset);
  if (l.offset == 0) return *l.region;
  return *l.region + "+" + std::to_string(l.offset);
}

inline std::ostream& operator<<(std::ostream& os, const Level& l) { return os << to_string(l); }

class LevelError : public std::runtime_error {
 public:
  LevelError(Level a, Level b)
      : std::runtime_error("cannot add levels " + to_string(a) + " and " +
                           to_string(b)),
        lhs(std::move(a)),
        rhs(std::move(b)) {}
  Level lhs;
  Level rhs;
};

/// Structural level addition. Offsets add; a region symbol is kept. Adding two
/// symbolic levels is only defined when they name the same region.
inline Level shift(const Level& base, const Level& by) {
  if (by.is_concrete()) return base.plus(by.offset);
  if (base.is_concrete()) return by.plus(base.offset);
  if (*base.region != *by.region) throw LevelError(base, by);
  return base.plus(by.offset);
}

}  // namespace lpr
