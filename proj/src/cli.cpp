#include "dbevo/cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dbevo/ddl.hpp"
#include "dbevo/patch.hpp"
#include "dbevo/plan.hpp"
#include "dbevo/server.hpp"
#include "dbevo/utf8.hpp"

namespace dbevo {

namespace {

// Carries an exit code up to run_cli once the diagnostic has been reported.
struct Exit {
  int code;
};

class Reporter {
 public:
  Reporter(std::ostream& err, bool json) : err_(err), json_(json) {}

  void error(ErrorCode code, const std::string& message, std::optional<Span> span = std::nullopt,
             nlohmann::json extra = nlohmann::json::object()) {
    emit("error", code, message, span, std::move(extra));
  }
  void warning(ErrorCode code, const std::string& message, std::optional<Span> span = std::nullopt) {
    emit("warning", code, message, span, nlohmann::json::object());
  }
  void note(const std::string& message) {
    if (json_) {
      err_ << nlohmann::json{{"severity", "note"}, {"message", message}}.dump() << '\n';
    } else {
      err_ << "note: " << message << '\n';
    }
  }

 private:
  void emit(const char* severity, ErrorCode code, const std::string& message, std::optional<Span> span,
            nlohmann::json extra) {
    if (json_) {
      nlohmann::json j{{"severity", severity}, {"code", to_string(code)}, {"message", message}};
      if (span) j["span"] = {{"start", span->start}, {"end", span->end}};
      for (auto& [k, v] : extra.items()) j[k] = v;
      err_ << j.dump() << '\n';
      return;
    }
    err_ << severity << ": " << to_string(code) << ": " << message;
    if (span) err_ << " at [" << span->start << "," << span->end << ")";
    err_ << '\n';
  }

  std::ostream& err_;
  bool json_;
};

std::string read_file(const std::string& path, Reporter& rep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    rep.error(ErrorCode::ParseFailure, "cannot read " + path);
    throw Exit{kExitInput};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text, Reporter& rep) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    rep.error(ErrorCode::ParseFailure, "cannot write " + path);
    throw Exit{kExitInput};
  }
}

// Parse errors and checked-context errors are fatal; unchecked warnings are reported.
SchemaModel load_model(const std::string& path, Reporter& rep) {
  std::string text = read_file(path, rep);
  Catalog cat;
  try {
    cat = parse_dump(text);
  } catch (const Error& e) {
    rep.error(e.code(), e.what(), e.span());
    throw Exit{kExitInput};
  }
  SchemaModel m = analyze(std::move(cat));
  for (const auto& d : m.diagnostics()) {
    std::string msg = d.message + " in " + d.root;
    if (d.severity == Diagnostic::Severity::Error) {
      rep.error(d.code, msg, d.span);
    } else {
      rep.warning(d.code, msg, d.span);
    }
  }
  if (m.has_errors()) throw Exit{kExitInput};
  return m;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::PendingDecisions:
    case ErrorCode::UnresolvedHumanDecision: return kExitUndecided;
    case ErrorCode::ContradictoryOperators:
    case ErrorCode::ContradictsModel:
    case ErrorCode::IllegalOnReferencedEntity: return kExitContradiction;
    case ErrorCode::CycleDetected: return kExitCycle;
    default: return kExitInput;
  }
}

struct InspectArgs {
  std::string schema;
  std::string graph;
  std::string deps;
};

int inspect(const InspectArgs& a, bool json, std::ostream& out, Reporter& rep) {
  SchemaModel m = load_model(a.schema, rep);
  if (!a.graph.empty()) {
    DependencyGraph g = dependency_graph(m);
    out << (a.graph == "dot" ? g.to_dot() : g.to_json());
    // Mutually recursive procedures are legal; the cycle is reported, not fatal.
    if (g.cycle) rep.warning(ErrorCode::CycleDetected, "the dependency graph has a cycle");
    return kExitOk;
  }
  nlohmann::json counts{{"tables", m.count(EntityKind::Table)},
                        {"views", m.count(EntityKind::View)},
                        {"procedures", m.count(EntityKind::StoredProcedure)},
                        {"triggers", m.count(EntityKind::Trigger)},
                        {"columns", m.count(EntityKind::Column)},
                        {"constraints", m.count(EntityKind::Constraint)}};
  nlohmann::json deps = nlohmann::json::array();
  if (!a.deps.empty()) {
    try {
      for (std::size_t rid : dependents_of(m, EntityPath::parse(a.deps), true)) {
        const Reference& r = m.reference(rid);
        const Entity& root = m.entity(r.root);
        deps.push_back({{"address", to_json(address_of(m, r))},
                        {"root", root.path.str()},
                        {"kind", to_string(r.kind)},
                        {"checked", r.checked},
                        {"text", utf8::substr(root.source_text, r.span)}});
      }
    } catch (const Error& e) {
      rep.error(e.code(), e.what(), e.span());
      return kExitInput;
    }
  }
  if (json) {
    nlohmann::json j{{"counts", counts}};
    if (!a.deps.empty()) j["dependents"] = deps;
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << "tables:" << counts["tables"] << " views:" << counts["views"] << " procedures:" << counts["procedures"]
      << '\n';
  out << "triggers:" << counts["triggers"] << " columns:" << counts["columns"]
      << " constraints:" << counts["constraints"] << '\n';
  if (!a.deps.empty()) {
    out << "dependents of " << a.deps << ": " << deps.size() << '\n';
    for (const auto& d : deps) {
      out << "  " << d["root"].get<std::string>() << " [" << d["address"]["start"] << "," << d["address"]["end"]
          << ") " << d["kind"].get<std::string>() << (d["checked"].get<bool>() ? " checked " : " unchecked ")
          << d["text"].get<std::string>() << '\n';
    }
  }
  return kExitOk;
}

struct PlanArgs {
  std::string schema;
  std::string ops;
  std::string decisions;
  bool auto_accept_single = false;
  std::string out;
  bool commit = false;
  std::string report;
  std::vector<std::string> waive;
};

int plan(const PlanArgs& a, std::ostream& out, Reporter& rep) {
  SchemaModel base = load_model(a.schema, rep);
  std::vector<Operator> ops;
  std::vector<Decision> decisions;
  try {
    ops = parse_operator_script(read_file(a.ops, rep));
    if (!a.decisions.empty()) decisions = decision_log_from_json(nlohmann::json::parse(read_file(a.decisions, rep)));
  } catch (const Error& e) {
    rep.error(e.code(), e.what(), e.span());
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    rep.error(ErrorCode::ParseFailure, std::string("decision log is not JSON: ") + e.what());
    return kExitInput;
  }
  // Batch runs are reproducible: a human decision passes only when its entity is waived.
  std::vector<Waiver> waivers;
  for (const auto& w : a.waive) waivers.push_back({w, "waived on the command line"});
  PlanOptions options;
  options.auto_accept_single = a.auto_accept_single;

  try {
    Plan p = derive_plan(base, ops, decisions, waivers, options);
    for (const auto& d : p.unused_decisions) {
      rep.warning(ErrorCode::UnknownReference, "unused decision " + to_json(d).dump());
    }
    if (!p.closed()) {
      nlohmann::json refs = nlohmann::json::array();
      auto tree = p.tree_json();
      for (const auto& r : tree["references"]) {
        if (r["status"] == "pending") refs.push_back(r);
      }
      rep.error(ErrorCode::PendingDecisions, std::to_string(p.pending()) + " impacted references await a decision",
                std::nullopt, {{"pending", refs}});
      if (refs.size() > 0) {
        for (const auto& r : refs) {
          rep.note("reference #" + r["index"].dump() + " " + r["actionable"].get<std::string>() + " (" +
                   r["subset"].get<std::string>() + ") " + r["text"].get<std::string>());
        }
      }
      return kExitUndecided;
    }
    SqlPatch patch = build_patch(p, {a.commit});
    SimulationReport report = simulate_plan_patch(p, patch);
    for (const auto& w : report.warnings) rep.warning(ErrorCode::UnresolvedInCheckedContext, w);
    if (a.out.empty()) {
      out << patch.text();
    } else {
      write_file(a.out, patch.text(), rep);
    }
    if (!a.report.empty()) write_file(a.report, report.to_json().dump(2) + "\n", rep);
    if (!report.ok()) {
      for (const auto& v : report.violations) {
        rep.error(v.code, "statement " + std::to_string(v.statement) + ": " + v.message);
      }
      if (!report.matches_expected) rep.error(ErrorCode::ContradictsModel, "patch does not reach the planned model");
      return kExitContradiction;
    }
    return kExitOk;
  } catch (const Error& e) {
    rep.error(e.code(), e.what(), e.span());
    return exit_for(e.code());
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PostgreSQL schema evolution planner", "dbevo"};
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "Machine-readable diagnostics and output");

  InspectArgs ia;
  auto* inspect_cmd = app.add_subcommand("inspect", "Parse a dump and report its entities and dependencies");
  inspect_cmd->add_option("--schema", ia.schema, "Schema dump")->required();
  inspect_cmd->add_option("--graph", ia.graph, "Export the dependency graph")->check(CLI::IsMember({"dot", "json"}));
  inspect_cmd->add_option("--deps", ia.deps, "List the references to an entity path");
  inspect_cmd->add_flag("--json", json);

  PlanArgs pa;
  auto* plan_cmd = app.add_subcommand("plan", "Expand operators, apply decisions and emit the patch");
  plan_cmd->add_option("--schema", pa.schema, "Schema dump")->required();
  plan_cmd->add_option("--ops", pa.ops, "Operator script (JSON array)")->required();
  plan_cmd->add_option("--decisions", pa.decisions, "Decision log (JSON array)");
  plan_cmd->add_flag("--auto-accept-single", pa.auto_accept_single, "Accept references with one candidate");
  plan_cmd->add_option("--out", pa.out, "Write the patch here instead of standard output");
  plan_cmd->add_flag("--commit", pa.commit, "End the patch with COMMIT instead of ROLLBACK");
  plan_cmd->add_option("--report", pa.report, "Write the simulation report as JSON");
  plan_cmd->add_option("--waive", pa.waive, "Accept human decisions on this entity path")->take_all();
  plan_cmd->add_flag("--json", json);

  ServeOptions so;
  std::string data_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Run the session service");
  serve_cmd->add_option("--host", so.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", so.port, "Port, 0 for any free one")->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "Session directory (default: DBE_DATA_DIR)");
  serve_cmd->add_flag("--json", json);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  Reporter rep(err, json);
  try {
    if (*inspect_cmd) return inspect(ia, json, out, rep);
    if (*plan_cmd) return plan(pa, out, rep);
    if (!data_dir.empty()) so.data_dir = data_dir;
    if (!serve(so, err)) {
      err << "cannot bind " << so.host << ':' << so.port << '\n';
      return kExitInput;
    }
    return kExitOk;
  } catch (const Exit& e) {
    return e.code;
  }
}

}  // namespace dbevo
