#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lpr.hpp"
#include "lpr/cli.hpp"

using namespace lpr;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const std::string& name) { return std::string(LPR_SAMPLES) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& text) {
  std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Cli, CheckKnot) {
  Result r = cli({"check", sample("landin.lpr")});
  EXPECT_EQ(r.code, kExitTypeError);
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(r.err, "error: expected Nat ->0 Nat but got Nat ->1 Nat at " + sample("landin.lpr") +
                       ":4:6\n");
  Result imp = cli({"check", sample("landin.lpr"), "--variant", "impredicative"});
  EXPECT_EQ(imp.code, kExitTypeError);
}

TEST(Cli, CheckPrintsBindingTypes) {
  Result r = cli({"check", sample("ex.lpr")});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "ex : Nat ->0 Nat\nresult : Nat\n");
  Result g = cli({"check", sample("regions.lpr"), "--variant", "poly"});
  EXPECT_EQ(g.code, kExitOk);
  EXPECT_EQ(g.out, "cell : Ref (^b Nat)\ndeep : Ref (Ref (^a Nat))\nresult : ^b Nat\n");
}

TEST(Cli, InferAnnotationsJudgesCapturedVariables) {
  std::string f = temp_file("weak.lpr", "r = new 1\ng = \\x : Nat @0 . x\ng 2\n");
  EXPECT_EQ(cli({"check", f}).code, kExitTypeError);
  Result r = cli({"check", f, "--infer-annotations"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "r : Ref Nat\ng : Nat ->0 Nat\nresult : Nat\n");
}

TEST(Cli, RunEx) {
  Result r = cli({"run", sample("ex.lpr")});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "7\n");
}

TEST(Cli, RunTrace) {
  Result r = cli({"run", sample("ex.lpr"), "--trace"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.substr(0, 3), "#1 ");
  EXPECT_NE(r.out.find(" new heap-size="), std::string::npos);
  EXPECT_EQ(r.out.substr(r.out.size() - 2), "7\n");
}

TEST(Cli, RunBudget) {
  Result r = cli({"run", sample("ex.lpr"), "--budget", "2"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_EQ(r.err, "error: step budget of 2 exceeded\n");
}

TEST(Cli, HeapDot) {
  Result r = cli({"run", sample("regions.lpr"), "--variant", "poly", "--heap-dot", "-"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.find("digraph heap {"), 0u);
  EXPECT_NE(r.out.find("cluster_level_b"), std::string::npos);
  EXPECT_EQ(r.out.substr(r.out.size() - 2), "3\n");
}

TEST(Cli, Gc) {
  Result r = cli({"gc", sample("ex.lpr")});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out,
            "level 0: retained 0, dropped 1\n"
            "level 1: retained 0, dropped 1\n"
            "total: retained 0 cells, dropped 2 cells\n"
            "value: 7\n"
            "type: Nat (level 0)\n"
            "gc-safe: yes\n");
}

TEST(Cli, AuditKnot) {
  Result r = cli({"audit", sample("landin.lpr"), "--unsafe", "--budget", "1000"});
  EXPECT_EQ(r.code, kExitViolation);
  EXPECT_NE(r.out.find("status: budget_exceeded\n"), std::string::npos);
  EXPECT_NE(r.out.find("stratification violation at step"), std::string::npos);
  EXPECT_NE(r.out.find("(assign): cycle through"), std::string::npos);
  EXPECT_EQ(r.err.find("warning: ignored expected Nat ->0 Nat but got Nat ->1 Nat"), 0u);
  EXPECT_EQ(cli({"audit", sample("landin.lpr")}).code, kExitTypeError);
}

TEST(Cli, AuditCyclicList) {
  Result r = cli({"audit", sample("cyclic-list.lpr"), "--variant", "impredicative"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("status: value\n"), std::string::npos);
  EXPECT_NE(r.out.find("value: 3\n"), std::string::npos);
  EXPECT_EQ(cli({"check", sample("cyclic-list.lpr")}).code, kExitTypeError);
}

TEST(Cli, Fuzz) {
  Result r = cli({"fuzz", "--n", "40", "--seed", "9", "--depth", "4"});
  EXPECT_EQ(r.code, kExitOk);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["programs"], 40);
  EXPECT_EQ(j["ok"], true);
  EXPECT_EQ(j["variant"], "predicative");
  std::string report = ::testing::TempDir() + "fuzz.jsonl";
  Result w = cli({"fuzz", "--n", "10", "--variant", "poly", "--report", report, "--jobs", "3"});
  EXPECT_EQ(w.code, kExitOk);
  std::ifstream in(report);
  int lines = 0;
  for (std::string line; std::getline(in, line); ++lines) nlohmann::json::parse(line);
  EXPECT_EQ(lines, 11);
}

TEST(Cli, FuzzIsDeterministic) {
  std::vector<std::string> args{"fuzz", "--n", "60", "--seed", "12", "--variant", "impredicative"};
  EXPECT_EQ(cli(args).out, cli(args).out);
  args.insert(args.end(), {"--jobs", "4"});
  EXPECT_EQ(cli(args).out, cli({"fuzz", "--n", "60", "--seed", "12", "--variant",
                                "impredicative"})
                               .out);
}

TEST(Cli, UsageAndInputErrors) {
  EXPECT_EQ(cli({}).code, kExitParseError);
  EXPECT_EQ(cli({"check"}).code, kExitParseError);
  EXPECT_EQ(cli({"check", "/nonexistent/x.lpr"}).code, kExitParseError);
  EXPECT_EQ(cli({"run", sample("ex.lpr"), "--variant", "bogus"}).code, kExitParseError);
  std::string bad = temp_file("bad.lpr", "x = \\y . y\nx\n");
  Result r = cli({"check", bad});
  EXPECT_EQ(r.code, kExitParseError);
  EXPECT_EQ(r.err.find("parse error: "), 0u);
  EXPECT_EQ(cli({"check", sample("regions.lpr")}).code, kExitTypeError);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}
