#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "lpr/algebra.hpp"
#include "lpr/errors.hpp"
#include "lpr/eval.hpp"
#include "lpr/gc.hpp"
#include "lpr/heap.hpp"
#include "lpr/parser.hpp"
#include "lpr/printer.hpp"
#include "lpr/termgen.hpp"
#include "lpr/typecheck.hpp"

namespace lpr {

enum ExitCode : int {
  kExitOk = 0,
  kExitTypeError = 1,
  kExitParseError = 2,
  kExitRuntime = 3,
  kExitViolation = 4,
};

namespace detail {

struct CliError {
  int code;
};

inline std::string read_file(const std::string& path, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read " << path << "\n";
    throw CliError{kExitParseError};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Program load(const std::string& path, std::ostream& err) {
  std::string src = read_file(path, err);
  try {
    return parse_program(src);
  } catch (const ParseError& e) {
    err << render_diagnostic(e, path) << "\n";
    throw CliError{kExitParseError};
  }
}

inline AlgebraConfig configure(const Program& p, Variant v, const std::string& path,
                               std::ostream& err) {
  try {
    return config_for(p, v);
  } catch (const TypeError& e) {
    err << render_diagnostic(e, path) << "\n";
    throw CliError{kExitTypeError};
  }
}

inline CheckedProgram typecheck(const Program& p, const AlgebraConfig& cfg, CheckOptions opts,
                                const std::string& path, std::ostream& err) {
  try {
    return check_program(p, cfg, opts);
  } catch (const TypeError& e) {
    err << render_diagnostic(e, path) << "\n";
    throw CliError{kExitTypeError};
  }
}

inline void write_dot(const std::string& target, const Heap& h, std::ostream& out,
                      std::ostream& err) {
  if (target.empty()) return;
  if (target == "-") {
    out << heap_to_dot(h);
    return;
  }
  std::ofstream f(target);
  if (!f) {
    err << "error: cannot write " << target << "\n";
    throw CliError{kExitRuntime};
  }
  f << heap_to_dot(h);
}

inline void print_violation(std::ostream& os, const Violation& v) {
  os << to_string(v.kind) << " violation at step " << v.step << " (" << v.redex
     << "): " << v.message << "\n";
}

inline const std::map<std::string, Variant>& variant_names() {
  static const std::map<std::string, Variant> m{{"predicative", Variant::Predicative},
                                                {"impredicative", Variant::ImpredicativeBase},
                                                {"poly", Variant::Polymorphic}};
  return m;
}

}  // namespace detail

/// Command-line driver. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Checker, interpreter and fuzzer for a lambda calculus with stratified references",
               "lpr"};
  app.require_subcommand(1);

  auto add_variant = [](CLI::App* sub, Variant& v) {
    sub->add_option("--variant", v, "predicative, impredicative or poly")
        ->transform(CLI::CheckedTransformer(detail::variant_names(), CLI::ignore_case));
  };

  std::string file;
  Variant variant = Variant::Predicative;
  std::uint64_t budget = kDefaultBudget;

  auto* check = app.add_subcommand("check", "typecheck a program");
  bool infer_annotations = false;
  check->add_option("file", file)->required();
  add_variant(check, variant);
  check->add_flag("--infer-annotations", infer_annotations,
                  "judge explicit annotations by captured variables only");

  auto* runc = app.add_subcommand("run", "typecheck and evaluate a program");
  bool trace = false;
  std::string dot;
  runc->add_option("file", file)->required();
  add_variant(runc, variant);
  runc->add_option("--budget", budget, "step budget");
  runc->add_flag("--trace", trace, "print one line per reduction");
  runc->add_option("--heap-dot", dot, "write the final heap as DOT (- for stdout)");

  auto* gcc = app.add_subcommand("gc", "run, collect at the result level, verify");
  gcc->add_option("file", file)->required();
  add_variant(gcc, variant);
  gcc->add_option("--budget", budget, "step budget");

  auto* fuzz = app.add_subcommand("fuzz", "run a generated-program campaign");
  std::size_t n = 100;
  std::uint64_t seed = 0;
  int depth = 6;
  int max_level = 3;
  unsigned jobs = 1;
  std::string report;
  add_variant(fuzz, variant);
  fuzz->add_option("--n", n, "number of programs");
  fuzz->add_option("--seed", seed, "campaign seed");
  fuzz->add_option("--depth", depth, "maximum expression depth")->check(CLI::PositiveNumber);
  fuzz->add_option("--max-level", max_level, "highest level of generated types");
  fuzz->add_option("--budget", budget, "step budget per program");
  fuzz->add_option("--jobs", jobs, "worker threads (0 for one per core)");
  fuzz->add_option("--report", report, "write one JSON record per program to this file");

  auto* audit = app.add_subcommand("audit", "run with a heap audit after every step");
  bool unsafe = false;
  audit->add_option("file", file)->required();
  add_variant(audit, variant);
  audit->add_flag("--unsafe", unsafe, "keep going past type mismatches");
  audit->add_option("--budget", budget, "step budget");
  audit->add_option("--heap-dot", dot, "write the final heap as DOT (- for stdout)");

  std::vector<std::string> argv_store{"lpr"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParseError;
  }

  try {
    if (check->parsed()) {
      Program p = detail::load(file, err);
      AlgebraConfig cfg = detail::configure(p, variant, file, err);
      CheckedProgram c = detail::typecheck(p, cfg, {.captured_only = infer_annotations}, file, err);
      for (std::size_t i = 0; i < c.elaborated.bindings.size(); ++i)
        if (c.elaborated.bindings[i].name != kStatementBinder)
          out << c.elaborated.bindings[i].name << " : " << to_string(c.binding_types[i]) << "\n";
      out << "result : " << to_string(c.type) << "\n";
      return kExitOk;
    }

    if (runc->parsed()) {
      Program p = detail::load(file, err);
      AlgebraConfig cfg = detail::configure(p, variant, file, err);
      CheckedProgram c = detail::typecheck(p, cfg, {}, file, err);
      RunOptions opts{.budget = budget};
      if (trace)
        opts.on_step = [&](const StepEvent& ev, const Heap&) {
          out << "#" << ev.step << " " << ev.redex << " heap-size=" << ev.heap_size << "\n";
        };
      RunResult r = run(cfg, c.elaborated, opts);
      detail::write_dot(dot, r.heap, out, err);
      for (const auto& v : r.violations) detail::print_violation(err, v);
      if (r.status == RunStatus::BudgetExceeded) {
        err << "error: step budget of " << budget << " exceeded\n";
        return kExitRuntime;
      }
      if (r.status == RunStatus::Stuck) {
        err << "error: stuck: " << r.stuck_reason << "\n";
        return kExitRuntime;
      }
      out << show_value(*r.value) << "\n";
      return r.violations.empty() ? kExitOk : kExitViolation;
    }

    if (gcc->parsed()) {
      Program p = detail::load(file, err);
      AlgebraConfig cfg = detail::configure(p, variant, file, err);
      detail::typecheck(p, cfg, {}, file, err);
      try {
        out << collect_and_verify(cfg, p, budget).to_text();
        return kExitOk;
      } catch (const RunFailed& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
      } catch (const GcUnsafe& e) {
        err << "error: collection unsafe: " << e.what() << "\n";
        return kExitViolation;
      }
    }

    if (fuzz->parsed()) {
      GenConfig gc;
      gc.seed = seed;
      gc.maxDepth = depth;
      gc.maxLevel = max_level;
      gc.variant = AlgebraConfig::for_variant(variant);
      if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
      CampaignReport rep = fuzz_campaign(gc, n, budget, jobs);
      if (!report.empty()) {
        std::ofstream f(report);
        if (!f) {
          err << "error: cannot write " << report << "\n";
          return kExitRuntime;
        }
        f << rep.to_jsonl();
      }
      out << rep.summary().dump() << "\n";
      if (rep.ok()) return kExitOk;
      for (const auto& r : rep.records)
        for (const auto& m : r.messages)
          err << rep.failure_label() << ": program " << r.seed_offset << ": " << m << "\n";
      return kExitViolation;
    }

    if (audit->parsed()) {
      Program p = detail::load(file, err);
      AlgebraConfig cfg = detail::configure(p, variant, file, err);
      CheckedProgram c = detail::typecheck(p, cfg, {.lenient = unsafe}, file, err);
      for (const auto& e : c.recovered)
        err << "warning: ignored " << render_diagnostic(e, file).substr(7) << "\n";
      RunResult r = run(cfg, c.elaborated, {.budget = budget, .full_audit = true});
      out << "status: " << to_string(r.status) << "\n";
      out << "steps: " << r.steps << "\n";
      out << "cells: " << r.heap.size() << "\n";
      if (r.status == RunStatus::Stuck) out << "stuck: " << r.stuck_reason << "\n";
      for (const auto& v : r.violations) detail::print_violation(out, v);
      for (const auto& cyc : legal_cycles(r.heap, cfg))
        out << "legal " << detail::describe_cycle(cyc) << " at level "
            << to_string(cfg.canonicalize(r.heap.find(cyc.front())->level)) << "\n";
      if (r.value) out << "value: " << show_value(*r.value) << "\n";
      detail::write_dot(dot, r.heap, out, err);
      return r.violations.empty() ? kExitOk : kExitViolation;
    }
  } catch (const detail::CliError& e) {
    return e.code;
  }
  return kExitOk;
}

}  // namespace lpr
