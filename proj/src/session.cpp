#include "dbevo/session.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "dbevo/utf8.hpp"

namespace dbevo {

namespace {

constexpr const char* kFormatTag = "dbevo-session";

Error corrupt(const std::string& what) { return Error(ErrorCode::CorruptSessionFile, "corrupt session file: " + what); }

bool same_decision(const Decision& a, const Decision& b) { return to_json(a) == to_json(b); }

std::size_t locate_ref(const Plan& plan, const std::variant<std::size_t, RefAddress>& r) {
  if (const auto* idx = std::get_if<std::size_t>(&r)) {
    if (*idx >= plan.refs.size()) throw Error(ErrorCode::UnknownReference, "no impacted reference #" + std::to_string(*idx));
    return *idx;
  }
  const auto& a = std::get<RefAddress>(r);
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < plan.refs.size(); ++i) {
    if (plan.refs[i].address != a) continue;
    if (plan.refs[i].status == RefStatus::Pending) return i;
    if (!first) first = i;
  }
  if (!first) {
    throw Error(ErrorCode::UnknownReference, "no impacted reference at " + a.owner + " [" + std::to_string(a.start) +
                                                 "," + std::to_string(a.end) + ")");
  }
  return *first;
}

// Identifies an impacted reference independently of its span, which moves when decisions
// of earlier roots rewrite the text it sits in.
struct RefKey {
  int root = 0;
  std::string holder;
  std::string label;
  std::string actionable;
  std::string text;
  int ordinal = 0;
  friend bool operator==(const RefKey&, const RefKey&) = default;
};

std::vector<RefKey> ref_keys(const Plan& plan) {
  std::vector<RefKey> keys;
  for (const auto& r : plan.refs) {
    const PlanNode& n = plan.nodes.at(static_cast<std::size_t>(r.op_id));
    RefKey k{r.root, std::string(to_string(n.op.kind)) + " " + n.op.target + " " + n.actionable, r.label,
             r.actionable, r.text, 0};
    for (const auto& prev : keys) k.ordinal += prev.root == k.root && prev.holder == k.holder && prev.label == k.label &&
                                               prev.actionable == k.actionable && prev.text == k.text;
    keys.push_back(std::move(k));
  }
  return keys;
}

bool is_unused(const Plan& plan, const Decision& d) {
  for (const auto& u : plan.unused_decisions)
    if (same_decision(u, d)) return true;
  return false;
}

}  // namespace

DecisionRequest decision_request_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("reference")) {
    throw Error(ErrorCode::InvalidOperator, "a decision needs \"reference\"");
  }
  DecisionRequest d;
  const auto& r = j.at("reference");
  if (r.is_number_unsigned()) {
    d.reference = r.get<std::size_t>();
  } else if (r.is_object()) {
    d.reference = ref_address_from_json(r);
  } else {
    throw Error(ErrorCode::InvalidOperator, "\"reference\" must be an index or an address");
  }
  if (j.contains("chosen")) {
    if (!j.at("chosen").is_string()) throw Error(ErrorCode::InvalidOperator, "\"chosen\" must be an operator kind");
    d.chosen = j.at("chosen").get<std::string>();
  }
  if (j.contains("recommendation")) {
    if (!j.at("recommendation").is_number_integer()) {
      throw Error(ErrorCode::InvalidOperator, "\"recommendation\" must be an index");
    }
    d.recommendation = j.at("recommendation").get<int>();
  }
  if (d.chosen.has_value() == d.recommendation.has_value()) {
    throw Error(ErrorCode::InvalidOperator, "give exactly one of \"chosen\" and \"recommendation\"");
  }
  if (j.contains("operator") && !j.at("operator").is_null()) d.replacement = operator_from_json(j.at("operator"));
  return d;
}

Session::Session(std::string id, std::string dump, PlanOptions options)
    : id_(std::move(id)), dump_(std::move(dump)), options_(options), base_(load_schema(dump_)) {
  created_ = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
                 .count();
  rederive();
}

void Session::rederive() { plan_ = derive_plan(base_, operators_, decisions_, {}, options_); }

void Session::readdress(const Plan& before, const std::function<int(int)>& root_map) {
  auto old_keys = ref_keys(before);
  for (std::size_t round = 0; round <= decisions_.size(); ++round) {
    auto new_keys = ref_keys(plan_);
    bool changed = false;
    for (auto& d : decisions_) {
      if (!is_unused(plan_, d)) continue;
      for (std::size_t i = 0; i < before.refs.size(); ++i) {
        const auto& r0 = before.refs[i];
        if (r0.address != d.reference || r0.status != RefStatus::Decided) continue;
        RefKey k = old_keys[i];
        k.root = root_map(k.root);
        for (std::size_t j = 0; j < plan_.refs.size(); ++j) {
          if (new_keys[j] == k && plan_.refs[j].status == RefStatus::Pending) {
            d.reference = plan_.refs[j].address;
            changed = true;
            break;
          }
        }
        break;
      }
    }
    if (!changed) return;
    rederive();
  }
}

void Session::add_operator(const Operator& op) {
  Operator o = op;
  o.id = static_cast<int>(operators_.size());
  o.provenance = Provenance::UserStated;
  o.parent = -1;
  operators_.push_back(std::move(o));
  try {
    rederive();
  } catch (...) {
    operators_.pop_back();
    rederive();
    throw;
  }
}

void Session::remove_operator(int op) {
  if (op < 0 || op >= static_cast<int>(operators_.size())) {
    throw Error(ErrorCode::UnknownOperator, "no user operator #" + std::to_string(op));
  }
  Plan before = plan_;
  auto saved_ops = operators_;
  auto saved_decisions = decisions_;
  operators_.erase(operators_.begin() + op);
  for (std::size_t i = 0; i < operators_.size(); ++i) operators_[i].id = static_cast<int>(i);
  try {
    rederive();
    readdress(before, [op](int root) { return root > op ? root - 1 : root; });
    std::vector<Decision> kept;
    for (const auto& d : decisions_)
      if (!is_unused(plan_, d)) kept.push_back(d);
    decisions_ = std::move(kept);
    rederive();
  } catch (...) {
    operators_ = std::move(saved_ops);
    decisions_ = std::move(saved_decisions);
    plan_ = std::move(before);
    throw;
  }
}

void Session::decide(const DecisionRequest& request) {
  std::size_t idx = locate_ref(plan_, request.reference);
  const ImpactedReference& r = plan_.refs[idx];
  if (r.status != RefStatus::Pending) {
    throw Error(ErrorCode::AlreadyDecided,
                "reference #" + std::to_string(idx) + " is " + std::string(to_string(r.status)));
  }
  Decision d;
  d.reference = r.address;
  if (request.recommendation) {
    int k = *request.recommendation;
    if (k < 0 || k >= static_cast<int>(r.candidates.size())) {
      throw Error(ErrorCode::UnknownRecommendation,
                  "reference #" + std::to_string(idx) + " has no recommendation #" + std::to_string(k));
    }
    d.chosen = r.candidates[static_cast<std::size_t>(k)].candidate.kind;
  } else {
    d.chosen = parse_op_kind(*request.chosen);
    bool offered = false;
    for (const auto& c : r.candidates) offered = offered || c.candidate.kind == d.chosen;
    if (!offered) {
      throw Error(ErrorCode::UnknownRecommendation,
                  *request.chosen + " is not recommended for reference #" + std::to_string(idx));
    }
  }
  d.replacement = request.replacement;
  Plan before = plan_;
  auto saved = decisions_;
  decisions_.push_back(std::move(d));
  try {
    rederive();
    // Earlier decisions on later roots follow their references to the rewritten text.
    readdress(before, [](int root) { return root; });
  } catch (...) {
    decisions_ = std::move(saved);
    plan_ = std::move(before);
    throw;
  }
}

nlohmann::json Session::recommendations(std::size_t ref) const {
  if (ref >= plan_.refs.size()) throw Error(ErrorCode::UnknownReference, "no impacted reference #" + std::to_string(ref));
  const ImpactedReference& r = plan_.refs[ref];
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"id", c.id}, {"operator", dbevo::to_json(c.candidate, true)}, {"description", c.description}});
  }
  nlohmann::json out{{"reference", ref},
                     {"address", dbevo::to_json(r.address)},
                     {"status", to_string(r.status)},
                     {"subset", r.label},
                     {"target", r.target},
                     {"actionable", r.actionable},
                     {"checked", r.checked},
                     {"candidates", cands},
                     {"source", nullptr}};
  // The reference lives in the model state its root operator was evaluated on.
  const SchemaModel& m = plan_.states.at(static_cast<std::size_t>(r.root));
  std::size_t rid = find_reference(m, r.address);
  const Entity& root = m.entity(m.reference(rid).root);
  Span span = m.reference(rid).span;
  out["source"] = {{"entity", root.path.str()},
                   {"kind", to_string(root.kind)},
                   {"text", root.source_text},
                   {"highlight", {{"start", span.start}, {"end", span.end}}},
                   {"highlighted", utf8::substr(root.source_text, span)}};
  return out;
}

nlohmann::json Session::summary() const {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& o : operators_) ops.push_back(dbevo::to_json(o));
  return {{"id", id_},
          {"created", created_},
          {"operators", ops},
          {"decisions", decision_log_to_json(decisions_)},
          {"pending", plan_.pending()},
          {"closed", plan_.closed()},
          {"depth", plan_.depth()}};
}

PatchOutput Session::patch(bool commit, const std::vector<Waiver>& waivers) const {
  PatchOptions po;
  po.commit = commit;
  if (waivers.empty()) {
    PatchOutput out{build_patch(plan_, po), {}};
    out.report = simulate_plan_patch(plan_, out.patch);
    return out;
  }
  Plan p = derive_plan(base_, operators_, decisions_, waivers, options_);
  PatchOutput out{build_patch(p, po), {}};
  out.report = simulate_plan_patch(p, out.patch);
  return out;
}

nlohmann::json Session::to_json() const {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& o : operators_) ops.push_back(dbevo::to_json(o));
  return {{"format", kFormatTag},
          {"version", kSessionFormatVersion},
          {"id", id_},
          {"created", created_},
          {"options", {{"autoAcceptSingle", options_.auto_accept_single}}},
          {"dump", dump_},
          {"operators", ops},
          {"decisions", decision_log_to_json(decisions_)}};
}

Session Session::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kFormatTag) throw corrupt("not a session file");
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kSessionFormatVersion) {
    throw corrupt("unsupported format version");
  }
  try {
    PlanOptions opts;
    if (j.contains("options")) opts.auto_accept_single = j.at("options").value("autoAcceptSingle", false);
    Session s(j.at("id").get<std::string>(), j.at("dump").get<std::string>(), opts);
    s.created_ = j.at("created").get<std::int64_t>();
    for (const auto& o : j.at("operators")) s.operators_.push_back(operator_from_json(o));
    for (std::size_t i = 0; i < s.operators_.size(); ++i) s.operators_[i].id = static_cast<int>(i);
    s.decisions_ = decision_log_from_json(j.at("decisions"));
    s.rederive();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseFailure) throw;
    throw corrupt(std::string(to_string(e.code())) + ": " + e.what());
  }
}

SessionStore::SessionStore(std::optional<std::filesystem::path> data_dir) : dir_(std::move(data_dir)) {
  salt_ = std::random_device{}();
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::vector<std::string> SessionStore::load_all() {
  std::vector<std::string> failed;
  if (!dir_) return failed;
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(*dir_)) {
    if (f.is_regular_file() && f.path().extension() == ".json") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      std::ifstream in(f);
      auto j = nlohmann::json::parse(in);
      auto e = std::make_shared<Entry>();
      e->session = std::make_unique<Session>(Session::from_json(j));
      std::lock_guard lock(mutex_);
      sessions_[e->session->id()] = e;
    } catch (const std::exception&) {
      failed.push_back(f.string());
    }
  }
  return failed;
}

std::string SessionStore::next_id() {
  std::ostringstream s;
  s << std::hex << (salt_ & 0xffffff) << '-' << ++counter_;
  return s.str();
}

std::string SessionStore::create(std::string dump, PlanOptions options) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    do id = next_id();
    while (sessions_.count(id));
  }
  auto e = std::make_shared<Entry>();
  e->session = std::make_unique<Session>(id, std::move(dump), options);
  persist(*e->session);
  std::lock_guard lock(mutex_);
  sessions_[id] = e;
  return id;
}

void SessionStore::remove(const std::string& id) {
  std::shared_ptr<Entry> e;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session " + id);
    e = it->second;
    sessions_.erase(it);
  }
  std::unique_lock lock(e->mutex);
  if (dir_) std::filesystem::remove(*dir_ / (id + ".json"));
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session " + id);
  return it->second;
}

void SessionStore::persist(const Session& s) const {
  if (!dir_) return;
  auto target = *dir_ / (s.id() + ".json");
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << s.to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownReference:
    case ErrorCode::UnknownRecommendation:
    case ErrorCode::UnknownOperator: return 404;
    case ErrorCode::AlreadyDecided:
    case ErrorCode::ContradictoryOperators:
    case ErrorCode::PendingDecisions:
    case ErrorCode::UnresolvedHumanDecision:
    case ErrorCode::CycleDetected: return 409;
    default: return 422;
  }
}

nlohmann::json error_json(const Error& e) {
  nlohmann::json j{{"code", to_string(e.code())}, {"message", e.what()}};
  if (e.span()) j["span"] = {{"start", e.span()->start}, {"end", e.span()->end}};
  return j;
}

}  // namespace dbevo
