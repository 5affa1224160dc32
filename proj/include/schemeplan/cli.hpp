#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "schemeplan/casl.hpp"
#include "schemeplan/classmodel.hpp"
#include "schemeplan/dsl.hpp"
#include "schemeplan/report.hpp"
#include "schemeplan/service.hpp"
#include "schemeplan/tables.hpp"

namespace schemeplan::cli {

enum Exit : int {
  kPass = 0,
  kViolations = 1,
  kInconclusive = 2,
  kUsage = 64,
  kDataError = 65,
};

inline int exit_code(VerdictKind k) {
  switch (k) {
    case VerdictKind::Safe: return kPass;
    case VerdictKind::Unsafe: return kViolations;
    case VerdictKind::Inconclusive: return kInconclusive;
  }
  return kViolations;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

inline SchemePlan load_plan(const std::string& path) {
  auto text = read_file(path);
  try {
    return parse_plan(text);
  } catch (ParseError& e) {
    throw ParseError(e.kind, e.line, e.column, path + ":" + std::to_string(e.line) + ":" + std::to_string(e.column) +
                                                   ": " + e.message,
                     e.expected);
  }
}

// Region bound from the environment, used when --bound is absent.
inline std::optional<std::size_t> env_bound() {
  const char* v = std::getenv("SCHEMEPLAN_BOUND");
  if (!v || !*v) return std::nullopt;
  std::string s(v);
  if (!std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw UsageError("SCHEMEPLAN_BOUND must be a non-negative integer, got '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

inline void print_violations(std::ostream& os, const std::vector<Violation>& vs) {
  for (const auto& v : vs) {
    os << (v.severity == Severity::Error ? "error" : "warning") << ": " << v.location.to_string() << ": " << v.message
       << " [" << v.code << "]\n";
  }
}

inline void print_verdict(std::ostream& os, const char* label, const Verdict& v, const SchemePlan& plan) {
  os << label << ": " << to_string(v.kind) << " (" << v.states << " states, region bound " << v.region_bound << ")\n";
  if (!v.reason.empty()) os << "  " << v.reason << '\n';
  if (v.kind != VerdictKind::Unsafe) return;
  if (v.open_route) os << "  route " << *v.open_route << " is open while region " << *v.region << " is assigned\n";
  else if (v.region && v.witness.size() == 2) {
    os << "  MAs " << v.witness[0] << " and " << v.witness[1] << " share region " << *v.region << '\n';
  }
  os << "  counterexample (" << v.counterexample.size() << " events):\n";
  std::istringstream lines(print_trace(Interlocking(plan), v.counterexample));
  for (std::string line; std::getline(lines, line);) os << "    " << line << '\n';
}

struct Options {
  std::string plan_path;
  std::string second_path;
  std::string output;
  bool json = false;
  bool write = false;
  std::string mode = "both";
  std::optional<std::size_t> bound;
  std::size_t max_states = 1000000;
  unsigned threads = 1;
  bool weak_static = false;
  bool lowercase = false;
  std::string target = "modal";
  bool unicode = false;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string store;
  long session_ttl = 1800;
};

inline int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  auto plan = load_plan(o.plan_path);
  auto vs = check_plan(plan);
  if (o.json) out << nlohmann::json{{"valid", !has_errors(vs)}, {"violations", to_json(vs)}}.dump(2) << '\n';
  else {
    print_violations(err, vs);
    if (!has_errors(vs)) out << plan.name << ": ok\n";
  }
  return has_errors(vs) ? kViolations : kPass;
}

inline int cmd_tables(const Options& o, std::ostream& out, std::ostream& err) {
  auto plan = load_plan(o.plan_path);
  auto generated = generate_tables(plan);
  auto vs = check_plan(generated);
  auto text = print_plan(generated);
  if (o.write) write_file(o.plan_path, text);
  if (o.json) out << nlohmann::json{{"plan", to_wire(generated)}, {"violations", to_json(vs)}}.dump(2) << '\n';
  else if (!o.write) out << text;
  print_violations(err, vs);
  return has_errors(vs) ? kViolations : kPass;
}

inline int cmd_regions(const Options& o, std::ostream& out, std::ostream& err) {
  auto plan = load_plan(o.plan_path);
  auto vs = check_plan(plan);
  if (has_errors(vs)) {
    print_violations(err, vs);
    return kViolations;
  }
  auto cat = build_catalog(plan);
  if (o.json) {
    out << to_json(cat).dump(2) << '\n';
    return kPass;
  }
  for (const auto& rg : cat.regions) out << cat.name(rg) << " = " << rg << '\n';
  for (const auto& rid : cat.route_order) {
    out << rid << ':';
    for (const auto& rg : cat.by_route.at(rid)) out << ' ' << cat.name(rg);
    out << '\n';
  }
  return kPass;
}

inline int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  auto plan = load_plan(o.plan_path);
  auto vs = check_plan(plan);
  if (has_errors(vs)) {
    print_violations(err, vs);
    return kViolations;
  }
  VerifyRequest req;
  auto mode = parse_verify_mode(o.mode);
  if (!mode) throw UsageError("--mode must be static, explore, both or lemma");
  req.mode = *mode;
  req.threads = std::max(1u, o.threads);
  req.weak_static = o.weak_static;
  req.bound.max_states = o.max_states;
  if (auto b = o.bound ? o.bound : env_bound()) {
    req.bound.max_total_regions = *b;
    req.bound.automatic = false;
  }
  auto res = run_verification(plan, req);
  if (o.json) {
    out << res.doc.dump(2) << '\n';
    return exit_code(res.kind);
  }

  const auto& reports = res.doc["reports"];
  if (reports.contains("static")) {
    auto st = check_routes_static(plan, req.weak_static);
    out << "static (" << (st.weak ? "weak" : "strict") << "): " << (st.pass() ? "Safe" : "Unsafe") << '\n';
    for (const auto& rc : st.routes) {
      if (rc.pass) continue;
      out << "  route " << rc.route << " does not clear:";
      for (const auto& u : rc.missing) out << ' ' << u;
      out << '\n';
    }
  }
  if (reports.contains("safety")) {
    print_verdict(out, "safety", verdict_from_json(reports["safety"]), plan);
    print_verdict(out, "route condition", verdict_from_json(reports["routeCondition"]), plan);
  }
  if (req.mode == VerifyMode::Lemma) {
    auto line = [&](const std::string& what, const nlohmann::json& r) {
      out << what << ": safety " << r["safety"]["verdict"].get<std::string>() << ", route condition "
          << r["routeCondition"]["verdict"].get<std::string>() << ", "
          << (r["inconclusive"].get<bool>() ? "inconclusive" : r["agree"].get<bool>() ? "agree" : "DISAGREE") << '\n';
    };
    line("plan", reports["plan"]);
    for (const auto& m : reports["mutants"]) {
      line("mutant " + m["route"].get<std::string>() + " -" + m["removed"].get<std::string>(), m);
    }
    out << "agree: " << (res.doc["agree"].get<bool>() ? "true" : "false") << '\n';
  }
  return exit_code(res.kind);
}

inline int cmd_emit_casl(const Options& o, std::ostream& out, std::ostream& err) {
  auto plan = load_plan(o.plan_path);
  auto vs = check_plan(plan);
  if (has_errors(vs)) {
    print_violations(err, vs);
    return kViolations;
  }
  EmitOptions opt;
  opt.lowercase_leading = o.lowercase;
  std::vector<std::string> warnings;
  auto text = emit_scheme_plan(plan, opt, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (o.output.empty()) out << text;
  else write_file(o.output, text);
  return kPass;
}

inline int cmd_compile_cm(const Options& o, std::ostream& out, std::ostream&) {
  auto text = read_file(o.plan_path);
  ClassModel model;
  try {
    model = parse_class_model(text);
  } catch (ParseError& e) {
    throw ParseError(e.kind, e.line, e.column, o.plan_path + ":" + std::to_string(e.line) + ":" +
                                                   std::to_string(e.column) + ": " + e.message,
                     e.expected);
  }
  auto n = o.unicode ? Notation::unicode() : Notation::ascii();
  auto result = o.target == "casl" ? emit_casl(model, n) : emit_modal(model, n);
  if (o.output.empty()) out << result;
  else write_file(o.output, result);
  return kPass;
}

inline int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
  auto plan = load_plan(o.plan_path);
  auto vs = check_plan(plan);
  if (has_errors(vs)) {
    print_violations(err, vs);
    return kViolations;
  }
  std::vector<TraceLine> lines;
  try {
    lines = parse_trace(read_file(o.second_path));
  } catch (const TraceSyntaxError& e) {
    err << o.second_path << ":" << e.what() << '\n';
    return kDataError;
  }
  Interlocking il(plan);
  try {
    auto events = resolve_trace(il, lines);
    auto states = replay(il, events);
    if (o.json) {
      nlohmann::json steps = nlohmann::json::array();
      for (std::size_t i = 0; i < states.size(); ++i) {
        nlohmann::json s = {{"step", i}, {"state", to_json(states[i])}};
        if (i > 0) s["event"] = to_json(events[i - 1]);
        steps.push_back(std::move(s));
      }
      out << nlohmann::json{{"steps", steps}}.dump(2) << '\n';
    } else {
      const auto& cat = il.catalog();
      for (std::size_t i = 0; i < states.size(); ++i) {
        out << "t" << i;
        if (i > 0) out << "  " << to_string(events[i - 1]);
        out << "\n   ";
        if (states[i].assigned.empty()) out << " {}";
        for (const auto& ma : states[i].assigned) {
          out << " [";
          for (std::size_t k = 0; k < ma.regions.size(); ++k) out << (k ? "," : "") << cat.name(ma.regions[k]);
          out << ']';
        }
        out << '\n';
      }
    }
  } catch (const ReplayError& e) {
    err << o.second_path << ": " << e.what() << '\n';
    return kViolations;
  }
  return kPass;
}

inline int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  ServiceConfig cfg;
  cfg.store_dir = o.store;
  cfg.session_ttl = std::chrono::seconds(o.session_ttl);
  cfg.threads = std::max(1u, o.threads);
  cfg.default_bound.max_states = o.max_states;
  if (auto b = o.bound ? o.bound : env_bound()) {
    cfg.default_bound.max_total_regions = *b;
    cfg.default_bound.automatic = false;
  }
  Service svc(cfg);
  httplib::Server server;
  mount(server, svc);
  out << "listening on " << o.host << ":" << o.port << std::endl;
  if (!server.listen(o.host, o.port)) {
    err << "cannot listen on " << o.host << ":" << o.port << '\n';
    return kUsage;
  }
  return kPass;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scheme-plan workbench: validate, tabulate, verify and emit railway scheme plans", "schemeplan"};
  app.require_subcommand(1);
  Options o;

  auto* check = app.add_subcommand("check", "Validate a plan and its tables");
  check->add_option("plan", o.plan_path, "Plan file")->required();
  check->add_flag("--json", o.json, "Print violations as JSON");

  auto* tables = app.add_subcommand("tables", "Generate routes, control and release tables");
  tables->add_option("plan", o.plan_path, "Plan file")->required();
  tables->add_flag("--write", o.write, "Rewrite the plan file in place");
  tables->add_flag("--json", o.json, "Print the generated plan as a wire document");

  auto* regions = app.add_subcommand("regions", "List the region catalog");
  regions->add_option("plan", o.plan_path, "Plan file")->required();
  regions->add_flag("--json", o.json, "Print as JSON");

  auto* verify = app.add_subcommand("verify", "Check the plan for safety");
  verify->add_option("plan", o.plan_path, "Plan file")->required();
  verify->add_option("--mode", o.mode, "static, explore, both or lemma")
      ->check(CLI::IsMember({"static", "explore", "both", "lemma"}));
  verify->add_option("--bound", o.bound, "Maximum total assigned regions (default 2 x catalog size)");
  verify->add_option("--max-states", o.max_states, "Maximum explored states");
  verify->add_option("--threads", o.threads, "Exploration workers")->check(CLI::Range(1u, 256u));
  verify->add_flag("--weak-static", o.weak_static, "Static check with the per-region condition");
  verify->add_flag("--json", o.json, "Print verdicts as JSON");

  auto* casl = app.add_subcommand("emit-casl", "Write the CASL specification of a plan");
  casl->add_option("plan", o.plan_path, "Plan file")->required();
  casl->add_option("-o,--output", o.output, "Output file (default stdout)");
  casl->add_flag("--lowercase", o.lowercase, "Lowercase the leading letter of constants");

  auto* cm = app.add_subcommand("compile-cm", "Compile a class model to ModalCASL or CASL signatures");
  cm->add_option("model", o.plan_path, "Class-model file")->required();
  cm->add_option("--target", o.target, "modal or casl")->check(CLI::IsMember({"modal", "casl"}));
  cm->add_flag("--unicode", o.unicode, "Use mathematical symbols instead of ASCII");
  cm->add_option("-o,--output", o.output, "Output file (default stdout)");

  auto* rep = app.add_subcommand("replay", "Replay a trace of extend/reduce events");
  rep->add_option("plan", o.plan_path, "Plan file")->required();
  rep->add_option("trace", o.second_path, "Trace file")->required();
  rep->add_flag("--json", o.json, "Print states as JSON");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", o.port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", o.host, "Address to bind");
  serve->add_option("--store", o.store, "Plan store directory (default: memory only)");
  serve->add_option("--session-ttl", o.session_ttl, "Idle seconds before a simulation session expires");
  serve->add_option("--bound", o.bound, "Default region bound for verification");
  serve->add_option("--max-states", o.max_states, "Default maximum explored states");
  serve->add_option("--threads", o.threads, "Exploration workers")->check(CLI::Range(1u, 256u));

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "schemeplan: " << e.what() << '\n';
    if (auto subs = app.get_subcommands(); !subs.empty()) err << subs.front()->help();
    else err << app.help();
    return kUsage;
  }

  try {
    if (*check) return cmd_check(o, out, err);
    if (*tables) return cmd_tables(o, out, err);
    if (*regions) return cmd_regions(o, out, err);
    if (*verify) return cmd_verify(o, out, err);
    if (*casl) return cmd_emit_casl(o, out, err);
    if (*cm) return cmd_compile_cm(o, out, err);
    if (*rep) return cmd_replay(o, out, err);
    if (*serve) return cmd_serve(o, out, err);
  } catch (const UsageError& e) {
    err << "schemeplan: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << e.message << (e.expected.empty() ? "" : " (expected " + e.expected + ")") << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "schemeplan: " << e.what() << '\n';
    return kViolations;
  }
  return kUsage;
}

}  // namespace schemeplan::cli
