#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dbevo/patch.hpp"
#include "dbevo/plan.hpp"

namespace dbevo {

inline constexpr int kSessionFormatVersion = 1;

// How a decision request names its choice: an operator kind, or an index into the
// reference's candidate list.
struct DecisionRequest {
  std::variant<std::size_t, RefAddress> reference;  // index into Plan::refs, or wire address
  std::optional<std::string> chosen;
  std::optional<int> recommendation;
  std::optional<Operator> replacement;
};
DecisionRequest decision_request_from_json(const nlohmann::json& j);

struct PatchOutput {
  SqlPatch patch;
  SimulationReport report;
};

// A dump, the user operators and the decision log. Everything else is derived from them.
class Session {
 public:
  Session(std::string id, std::string dump, PlanOptions options = {});

  const std::string& id() const { return id_; }
  const std::string& dump() const { return dump_; }
  std::int64_t created() const { return created_; }
  const std::vector<Operator>& operators() const { return operators_; }
  const std::vector<Decision>& decisions() const { return decisions_; }
  const PlanOptions& options() const { return options_; }
  const SchemaModel& base() const { return base_; }
  const Plan& plan() const { return plan_; }

  // Each mutation re-derives the plan and leaves the session unchanged when it throws.
  void add_operator(const Operator& op);
  // `op` is a root id. Decisions that no longer address an impacted reference are dropped.
  void remove_operator(int op);
  void decide(const DecisionRequest& request);

  // Candidates of a reference plus the source of its actionable entity with the reference span.
  nlohmann::json recommendations(std::size_t ref) const;
  nlohmann::json summary() const;

  PatchOutput patch(bool commit, const std::vector<Waiver>& waivers = {}) const;

  nlohmann::json to_json() const;
  // Throws CorruptSessionFile for an unknown format or version, ParseFailure for a bad dump.
  static Session from_json(const nlohmann::json& j);

 private:
  void rederive();
  // Rewrites the addresses of decisions that `before` used and the current plan no longer
  // matches. `root_map` maps root indices of `before` to the current ones.
  void readdress(const Plan& before, const std::function<int(int)>& root_map);

  std::string id_;
  std::string dump_;
  std::int64_t created_ = 0;
  PlanOptions options_;
  SchemaModel base_;
  std::vector<Operator> operators_;
  std::vector<Decision> decisions_;
  Plan plan_;
};

// Thread-safe registry. Mutations of one session are serialized; reads take a shared lock.
// With a data directory every mutation is written to <dir>/<id>.json.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> data_dir = std::nullopt);

  // Loads every session file of the data directory; returns the files that failed.
  std::vector<std::string> load_all();

  std::string create(std::string dump, PlanOptions options = {});
  void remove(const std::string& id);
  std::vector<std::string> ids() const;

  template <class F>
  auto read(const std::string& id, F&& f) const {
    auto e = entry(id);
    std::shared_lock lock(e->mutex);
    return f(static_cast<const Session&>(*e->session));
  }

  template <class F>
  auto write(const std::string& id, F&& f) {
    auto e = entry(id);
    std::unique_lock lock(e->mutex);
    if constexpr (std::is_void_v<decltype(f(*e->session))>) {
      f(*e->session);
      persist(*e->session);
    } else {
      auto r = f(*e->session);
      persist(*e->session);
      return r;
    }
  }

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    std::unique_ptr<Session> session;
  };
  std::shared_ptr<Entry> entry(const std::string& id) const;
  void persist(const Session& s) const;
  std::string next_id();

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_ = 0;
};

// Status code for an error raised by the planner.
int http_status(ErrorCode code);
nlohmann::json error_json(const Error& e);

}  // namespace dbevo
