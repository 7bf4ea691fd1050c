// Acceptance runner: one PASS or FAIL line per primary criterion. Exit status 1 when any fails.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "matrix_cells.hpp"
#include "properties.hpp"

using namespace dbevo;
using namespace dbevo::testing;

namespace {

// Pinned tolerances.
constexpr double kGoldenSeconds = 1.0;
constexpr int kRandomModels = 1000;
constexpr std::size_t kMatrixCells = 39;
constexpr std::size_t kMovedViews = 23;
// Hand count on the committed seven-operator fixture: two SELECT items with two candidates
// each, whose renames open two more.
constexpr std::size_t kSevenOperatorDecisions = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const char* kRenameUid = R"({"op":"RenameColumn","target":"public.person.uid","args":{"new_name":"login"}})";

std::vector<std::string> heads(const SqlPatch& patch) {
  std::vector<std::string> out;
  for (const auto& c : patch.commands) {
    std::string s = squash(c.sql);
    out.push_back(s.substr(0, s.find(" AS")));
  }
  return out;
}

Outcome golden() {
  auto t0 = std::chrono::steady_clock::now();
  SchemaModel m = fixture_model("running_example.sql");
  Plan p = decide_all(m, {op(kRenameUid)}, OpKind::RenameReferenceInSelectClause);
  SqlPatch patch = build_patch(p);
  SimulationReport rep = simulate_plan_patch(p, patch);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::vector<std::string> want{
      "DROP VIEW \"permanents_directory\" RESTRICT;",
      "DROP VIEW \"members_directory\" RESTRICT;",
      "CREATE OR REPLACE FUNCTION \"id_for_uid\"(uidperson varchar) RETURNS int4",
      "ALTER TABLE \"person\" RENAME COLUMN \"uid\" TO \"login\";",
      "CREATE VIEW \"members_directory\"",
      "CREATE VIEW \"permanents_directory\"",
  };
  auto got = heads(patch);
  bool body = squash(patch.text()).find("WHERE uidperson = login;") != std::string::npos &&
              squash(patch.text()).find("SELECT person.id, person.lastname, person.login FROM person WHERE "
                                        "((person.login)::text <> ''::text);") != std::string::npos;
  std::ostringstream d;
  d << got.size() << " statements, " << std::fixed << std::setprecision(3) << secs << " s (limit " << kGoldenSeconds
    << " s)";
  return {p.closed() && got == want && body && rep.ok() && secs < kGoldenSeconds, d.str()};
}

Outcome alias_branch() {
  SchemaModel m = fixture_model("running_example.sql");
  Plan first = derive_plan(m, {op(kRenameUid)}, {});
  Decision alias{first.refs.at(0).address, OpKind::AliasInSelectClause, std::nullopt};
  Plan p = derive_plan(m, {op(kRenameUid)}, {alias}, {}, PlanOptions{true});
  bool outer = false;
  for (const auto& n : p.nodes) outer |= n.actionable == "public.permanents_directory";
  for (const auto& r : p.refs) outer |= r.actionable == "public.permanents_directory";
  SqlPatch patch = build_patch(p);
  std::string text = patch.text();
  bool aliased = false;
  for (const auto& c : patch.commands)
    aliased |= c.sql.find("VIEW \"members_directory\"") != std::string::npos && c.sql.starts_with("CREATE") &&
               c.sql.find("login AS uid") != std::string::npos;
  bool ok = p.closed() && !outer && aliased && text.find("permanents_directory") == std::string::npos &&
            simulate_plan_patch(p, patch).ok();
  return {ok, std::to_string(p.nodes.size()) + " operators, outer view untouched: " + (outer ? "no" : "yes")};
}

Outcome moved_views() {
  SchemaModel m = load_schema(web_views_fixture(static_cast<int>(kMovedViews), 31));
  std::vector<Operator> ops;
  for (std::size_t v = 1; v <= kMovedViews; ++v) {
    ops.push_back(operator_from_json({{"op", "MoveView"},
                                      {"target", "public.web_view" + std::to_string(v)},
                                      {"args", {{"namespace", "web"}}}}));
  }
  Plan p = derive_plan(m, ops, {});
  SqlPatch patch = build_patch(p);
  std::size_t alters = 0;
  for (const auto& c : patch.commands)
    alters += c.sql.starts_with("ALTER VIEW") && c.sql.find("SET SCHEMA \"web\"") != std::string::npos;
  bool ok = p.pending() == 0 && alters == kMovedViews && patch.commands.size() == kMovedViews &&
            simulate_plan_patch(p, patch).ok();
  return {ok, std::to_string(p.pending()) + " pending, " + std::to_string(alters) + " ALTER VIEW of " +
                  std::to_string(patch.commands.size()) + " statements"};
}

Outcome qualification() {
  SchemaModel m = fixture_model("phd.sql");
  std::vector<Operator> ops{
      op(R"j({"op":"MoveStoredProcedure","target":"public.supervised_count(int4)","args":{"namespace":"phd"}})j"),
      op(R"j({"op":"MoveStoredProcedure","target":"public.supervisor_limit()","args":{"namespace":"phd"}})j"),
      op(R"j({"op":"MoveStoredProcedure","target":"public.thesis_guard()","args":{"namespace":"phd"}})j")};
  Plan open = derive_plan(m, ops, {});
  std::vector<std::string> renames;
  for (const auto& r : open.refs) {
    for (const auto& c : r.candidates) {
      if (c.candidate.kind != OpKind::RenameReferenceInStoredProcedure) continue;
      renames.push_back(r.text + "() -> " + c.candidate.arg("replacement") + "()");
    }
  }
  Plan p = derive_plan(m, ops, {}, {}, PlanOptions{true});
  SqlPatch patch = build_patch(p);
  bool ok = renames == std::vector<std::string>{"supervised_count() -> phd.supervised_count()",
                                                "supervisor_limit() -> phd.supervisor_limit()"} &&
            p.closed() &&
            patch.text().find("IF phd.supervised_count(NEW.supervisor) >= phd.supervisor_limit() THEN") !=
                std::string::npos &&
            simulate_plan_patch(p, patch).ok();
  std::string detail;
  for (const auto& r : renames) detail += (detail.empty() ? "" : ", ") + r;
  return {ok, detail.empty() ? "no call-site recommendation" : detail};
}

Outcome seven_operators() {
  SchemaModel m = fixture_model("staff_directory.sql");
  auto ops = parse_operator_script(read_fixture("seven_operators.json"));
  auto run = [&] { return decide_all(m, ops, OpKind::RenameReferenceInSelectClause, {}, PlanOptions{true}); };
  auto decisions = [](const Plan& p) {
    return static_cast<std::size_t>(std::count_if(p.refs.begin(), p.refs.end(), [](const ImpactedReference& r) {
      return r.status == RefStatus::Decided;
    }));
  };
  Plan a = run();
  Plan b = run();
  SqlPatch pa = build_patch(a);
  bool ok = a.closed() && decisions(a) == kSevenOperatorDecisions && decisions(b) == decisions(a) &&
            build_patch(b).text() == pa.text() && simulate_plan_patch(a, pa).ok();
  return {ok, std::to_string(decisions(a)) + " decisions (expected " + std::to_string(kSevenOperatorDecisions) + "), " +
                  std::to_string(pa.commands.size()) + " statements, deterministic"};
}

Outcome conformance_matrix() {
  std::size_t passed = 0;
  std::string first;
  for (const auto& c : matrix::cells()) {
    auto f = matrix::check_cell(c);
    if (f.empty()) {
      ++passed;
    } else if (first.empty()) {
      first = "; first failure " + matrix::cell_name(c) + ": " + f.front();
    }
  }
  std::size_t total = matrix::cells().size();
  return {passed == total && total == kMatrixCells,
          std::to_string(passed) + "/" + std::to_string(total) + " cells" + first};
}

Outcome property(const PropertyRun& r, const std::string& what) {
  std::string detail = std::to_string(r.runs) + " " + what + ", " + std::to_string(r.failures.size()) + " failures";
  if (!r.ok()) detail += "; first: " + r.failures.front().substr(0, r.failures.front().find('\n'));
  return {r.ok() && r.runs >= kRandomModels, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"running-example golden patch", golden},
      {"alias branch", alias_branch},
      {"23 independent view moves", moved_views},
      {"trigger procedure move qualification", qualification},
      {"seven-operator structural replay", seven_operators},
      {"conformance matrix", conformance_matrix},
      {"partition property", [] { return property(partition_property(20240611, kRandomModels), "models"); }},
      {"patch-validity property", [] { return property(patch_validity_property(777, kRandomModels), "models"); }},
      {"ordering property", [] { return property(ordering_property(4242, kRandomModels), "DAGs"); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << '\n';
  }
  return failed ? 1 : 0;
}
