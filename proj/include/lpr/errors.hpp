#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "lpr/ast.hpp"
#include "lpr/printer.hpp"

namespace lpr {

enum class TypeErrorKind {
  Mismatch,
  UnboundVariable,
  NotAFunction,
  NotARef,
  BadFunctionAnnotation,
  IncomparableLevels,
  InconsistentConstraints,
  UnsupportedConstruct,
};

class TypeError : public std::runtime_error {
 public:
  TypeErrorKind kind;
  Span span;
  std::optional<Type> expected;  // Mismatch
  std::optional<Type> actual;    // Mismatch, NotAFunction, NotARef
  std::string name;              // UnboundVariable; detail for Unsupported
  std::optional<Level> ann;      // BadFunctionAnnotation
  std::optional<Level> bound;    // BadFunctionAnnotation
  bool strict = false;           // BadFunctionAnnotation: ann must exceed bound
  std::optional<Level> level_a;  // IncomparableLevels
  std::optional<Level> level_b;
  std::optional<std::string> binding;  // top-level binding the error arose in

  static TypeError mismatch(Type expected, Type actual, Span s) {
    TypeError e(TypeErrorKind::Mismatch, s,
                "expected " + to_string(expected) + " but got " + to_string(actual));
    e.expected = std::move(expected);
    e.actual = std::move(actual);
    return e;
  }
  static TypeError unbound(std::string name, Span s) {
    TypeError e(TypeErrorKind::UnboundVariable, s, "unbound variable " + name);
    e.name = std::move(name);
    return e;
  }
  static TypeError not_a_function(Type actual, Span s) {
    TypeError e(TypeErrorKind::NotAFunction, s,
                "expected a function but got " + to_string(actual));
    e.actual = std::move(actual);
    return e;
  }
  static TypeError not_a_ref(Type actual, Span s) {
    TypeError e(TypeErrorKind::NotARef, s,
                "expected a reference but got " + to_string(actual));
    e.actual = std::move(actual);
    return e;
  }
  static TypeError bad_annotation(Level ann, Level bound, bool strict, Span s) {
    TypeError e(TypeErrorKind::BadFunctionAnnotation, s,
                "function annotation " + to_string(ann) + " must be " +
                    (strict ? "> " : ">= ") + to_string(bound));
    e.ann = std::move(ann);
    e.bound = std::move(bound);
    e.strict = strict;
    return e;
  }
  static TypeError incomparable(Level a, Level b, Span s) {
    TypeError e(TypeErrorKind::IncomparableLevels, s,
                "levels " + to_string(a) + " and " + to_string(b) +
                    " are incomparable");
    e.level_a = std::move(a);
    e.level_b = std::move(b);
    return e;
  }
  static TypeError inconsistent(const std::string& why, Span s = {}) {
    return TypeError(TypeErrorKind::InconsistentConstraints, s,
                     "inconsistent region constraints: " + why);
  }
  static TypeError unsupported(std::string what, Span s) {
    TypeError e(TypeErrorKind::UnsupportedConstruct, s, what);
    e.name = std::move(what);
    return e;
  }

  TypeError with_span(Span s) const {
    TypeError e = *this;
    if (e.span.line == 0) e.span = s;
    return e;
  }

 private:
  TypeError(TypeErrorKind k, Span s, const std::string& msg)
      : std::runtime_error(msg), kind(k), span(s) {}
};

/// One-line diagnostic: `error: <message> at <file>:<line>:<col>`.
inline std::string render_diagnostic(const TypeError& e, const std::string& file) {
  std::string out = "error: ";
  out += e.what();
  if (e.span.line > 0)
    out += " at " + file + ":" + std::to_string(e.span.line) + ":" +
           std::to_string(e.span.col);
  return out;
}

}  // namespace lpr
