#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "lpr.hpp"

using namespace lpr;

namespace {

Level L(std::uint64_t n) { return Level::concrete(n); }
Level S(const std::string& r, std::uint64_t off = 0) { return Level::symbolic(r, off); }
const Type N = Type::nat();

std::string sample(const std::string& name) {
  std::ifstream in(std::string(LPR_SAMPLES) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParseError parse_error(const std::string& src) {
  try {
    parse_program(src);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "parsed: " << src;
  return ParseError({}, {}, "");
}

}  // namespace

TEST(Parse, LandinProgram) {
  Program p = parse_program(sample("landin.lpr"));
  ASSERT_EQ(p.bindings.size(), 4u);
  EXPECT_EQ(p.bindings[0].name, "id");
  EXPECT_EQ(p.bindings[1].name, "r");
  EXPECT_EQ(p.bindings[2].name, "f");
  EXPECT_EQ(p.bindings[3].name, kStatementBinder);
  EXPECT_NE(p.bindings[3].expr.as<Assign>(), nullptr);
  const App* body = p.body.as<App>();
  ASSERT_NE(body, nullptr);
  EXPECT_EQ(body->fn.as<Var>()->name, "f");
  EXPECT_EQ(p.bindings[3].expr.span().line, 4);
}

TEST(Parse, LambdaAnnotations) {
  Expr plain = parse_expr("\\x : Nat . x");
  const Lam* l = plain.as<Lam>();
  ASSERT_NE(l, nullptr);
  EXPECT_FALSE(l->ann.has_value());
  EXPECT_EQ(l->param_type, N);
  Expr annotated = parse_expr("\\u : Unit @b+2 . u");
  const Lam* m = annotated.as<Lam>();
  ASSERT_NE(m, nullptr);
  EXPECT_EQ(*m->ann, S("b", 2));
}

TEST(Parse, RegionDeclarations) {
  Program p = parse_program("region b+1 = b\nregion a # b # g\n0\n");
  ASSERT_EQ(p.constraints.size(), 4u);
  EXPECT_EQ(p.constraints[0], RegionConstraint::equal(S("b", 1), S("b")));
  EXPECT_EQ(p.constraints[1], RegionConstraint::disjoint(S("a"), S("b")));
  EXPECT_EQ(p.constraints[3], RegionConstraint::disjoint(S("b"), S("g")));
}

TEST(Parse, Types) {
  EXPECT_EQ(parse_type("Nat ->1 Nat ->0 Nat"),
            Type::fun(N, Type::fun(N, N, L(0)), L(1)));
  EXPECT_EQ(parse_type("(Nat ->0 Nat) ->1 Nat"), Type::fun(Type::fun(N, N, L(0)), N, L(1)));
  EXPECT_EQ(parse_type("Ref Ref Nat"), Type::ref(Type::ref(N)));
  EXPECT_EQ(parse_type("Ref (^b Nat)"), Type::ref(Type::displace(S("b"), N)));
  EXPECT_EQ(parse_type("Unit ->a+1 Unit"), Type::fun(Type::unit(), Type::unit(), S("a", 1)));
}

TEST(Parse, Precedence) {
  // ! binds tightest, then application, then +, then :=, then ;.
  Expr e = parse_expr("r := !f x + 1; !r");
  const Seq* s = e.as<Seq>();
  ASSERT_NE(s, nullptr);
  const Assign* a = s->first.as<Assign>();
  ASSERT_NE(a, nullptr);
  const Add* add = a->value.as<Add>();
  ASSERT_NE(add, nullptr);
  const App* app = add->lhs.as<App>();
  ASSERT_NE(app, nullptr);
  EXPECT_NE(app->fn.as<Deref>(), nullptr);
  EXPECT_TRUE(structurally_equal(parse_expr("a b c"),
                                 mk::app(mk::app(mk::var("a"), mk::var("b")), mk::var("c"))));
  EXPECT_TRUE(structurally_equal(parse_expr("1 + 2 + 3"),
                                 mk::add(mk::add(mk::num(1), mk::num(2)), mk::num(3))));
}

TEST(Parse, Comments) {
  Program p = parse_program("-- leading\nx = 1 -- trailing\nx + 1\n");
  EXPECT_EQ(p.bindings.size(), 1u);
}

TEST(ParseErrors, PositionAndExpectedSet) {
  ParseError e = parse_error("id = \\x . x\nid 0\n");
  EXPECT_EQ(e.span.line, 1);
  EXPECT_EQ(e.span.col, 9);
  EXPECT_EQ(e.expected, std::vector<std::string>{"':'"});
  EXPECT_EQ(e.found, "'.'");
  EXPECT_EQ(render_diagnostic(e, "t.lpr"), "parse error: expected ':' but found '.' at t.lpr:1:9");
}

TEST(ParseErrors, MissingBody) {
  ParseError e = parse_error("x = 1\n");
  EXPECT_EQ(e.found, "end of input");
  ParseError u = parse_error("x = (1\n2\n");
  EXPECT_EQ(u.span.line, 2);
  EXPECT_TRUE(std::find(u.expected.begin(), u.expected.end(), "')'") != u.expected.end());
}

TEST(RoundTrip, Samples) {
  for (const char* name : {"landin.lpr", "ex.lpr", "cyclic-list.lpr", "regions.lpr"}) {
    Program p = parse_program(sample(name));
    std::string text = to_string(p);
    Program q = parse_program(text);
    EXPECT_TRUE(structurally_equal(p, q)) << name << "\n" << text;
    EXPECT_EQ(to_string(q), text) << name;
  }
}
