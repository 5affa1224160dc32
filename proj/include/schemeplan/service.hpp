#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "schemeplan/report.hpp"
#include "schemeplan/tables.hpp"
#include "schemeplan/wire.hpp"

namespace schemeplan {

struct StoredPlan {
  std::string id;
  long version = 0;
  nlohmann::json plan;  // wire document
};

// Plans kept as `<id>.json` envelopes {"version", "plan"} in one directory.
// With an empty directory path the store is memory only.
class PlanStore {
 public:
  explicit PlanStore(std::filesystem::path dir = {}) : dir_(std::move(dir)) {
    if (dir_.empty()) return;
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      auto doc = nlohmann::json::parse(in, nullptr, false);
      if (doc.is_discarded() || !doc.contains("version") || !doc.contains("plan")) continue;
      auto id = entry.path().stem().string();
      plans_[id] = {id, doc["version"].get<long>(), doc["plan"]};
      bump_counter(id);
    }
  }

  std::optional<StoredPlan> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = plans_.find(id);
    if (it == plans_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, p] : plans_) out.push_back(id);
    return out;
  }

  StoredPlan create(nlohmann::json plan) {
    std::lock_guard lock(mu_);
    std::string id;
    do {
      id = "plan-" + std::to_string(++counter_);
    } while (plans_.count(id));
    StoredPlan sp{id, 1, std::move(plan)};
    write(sp);
    plans_[id] = sp;
    return sp;
  }

  enum class Outcome { Ok, Missing, Conflict };

  // Replaces the plan when `expected` matches the stored version.
  Outcome update(const std::string& id, long expected, nlohmann::json plan, StoredPlan* out = nullptr) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(id);
    if (it == plans_.end()) return Outcome::Missing;
    if (it->second.version != expected) return Outcome::Conflict;
    StoredPlan sp{id, expected + 1, std::move(plan)};
    write(sp);
    it->second = sp;
    if (out) *out = sp;
    return Outcome::Ok;
  }

  Outcome remove(const std::string& id, std::optional<long> expected) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(id);
    if (it == plans_.end()) return Outcome::Missing;
    if (expected && *expected != it->second.version) return Outcome::Conflict;
    if (!dir_.empty()) std::filesystem::remove(dir_ / (id + ".json"));
    plans_.erase(it);
    return Outcome::Ok;
  }

 private:
  void write(const StoredPlan& sp) const {
    if (dir_.empty()) return;
    auto path = dir_ / (sp.id + ".json");
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << nlohmann::json{{"version", sp.version}, {"plan", sp.plan}}.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  void bump_counter(const std::string& id) {
    if (id.rfind("plan-", 0) != 0) return;
    try {
      counter_ = std::max(counter_, std::stol(id.substr(5)));
    } catch (const std::exception&) {
    }
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, StoredPlan> plans_;
  long counter_ = 0;
};

// Simulation session over a snapshot of a stored plan. `mu` gives a single
// writer; a step that finds it held is refused.
struct SimSession {
  std::string id;
  std::string plan_id;
  Interlocking il;
  std::vector<Event> log;
  std::vector<InterlockingState> states;  // states[i] after i events
  std::chrono::steady_clock::time_point last_used;
  std::mutex mu;

  SimSession(std::string id, std::string plan_id, const SchemePlan& plan)
      : id(std::move(id)), plan_id(std::move(plan_id)), il(plan), states{il.initial_state()} {}
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

struct ServiceConfig {
  std::filesystem::path store_dir;
  std::chrono::seconds session_ttl{1800};
  Bound default_bound;
  unsigned threads = 1;
};

class Service {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using Query = std::multimap<std::string, std::string>;

  explicit Service(ServiceConfig cfg = {}, Clock clock = [] { return std::chrono::steady_clock::now(); })
      : cfg_(std::move(cfg)), clock_(std::move(clock)), store_(cfg_.store_dir) {}

  Response handle(const std::string& method, const std::string& path, const Query& query, const std::string& body) {
    expire_sessions();
    try {
      return route(method, path, query, body);
    } catch (const SchemaError& e) {
      return {400, {{"error", e.what()}, {"pointer", e.pointer}}};
    } catch (const nlohmann::json::exception& e) {
      return {400, {{"error", e.what()}}};
    }
  }

  std::shared_ptr<SimSession> session(const std::string& sid) {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(sid);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::size_t session_count() {
    std::lock_guard lock(sessions_mu_);
    return sessions_.size();
  }

  PlanStore& store() { return store_; }

 private:
  static Response error(int status, const std::string& msg) { return {status, {{"error", msg}}}; }

  static std::vector<std::string> segments(const std::string& path) {
    std::vector<std::string> out;
    std::stringstream ss(path);
    for (std::string s; std::getline(ss, s, '/');) {
      if (!s.empty()) out.push_back(s);
    }
    return out;
  }

  static bool flag(const Query& q, const std::string& key) {
    auto it = q.find(key);
    return it != q.end() && it->second != "false" && it->second != "0";
  }

  static nlohmann::json parse_body(const std::string& body) {
    if (body.empty()) return nlohmann::json::object();
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("", "body is not valid JSON");
    return doc;
  }

  static nlohmann::json envelope(const StoredPlan& sp) {
    return {{"id", sp.id}, {"version", sp.version}, {"plan", sp.plan}};
  }

  Response route(const std::string& method, const std::string& path, const Query& q, const std::string& body) {
    auto seg = segments(path);
    if (seg == std::vector<std::string>{"healthz"} || seg == std::vector<std::string>{"v1", "healthz"}) {
      return {200, {{"status", "ok"}}};
    }
    if (seg.size() < 2 || seg[0] != "v1" || seg[1] != "plans") return error(404, "no such endpoint");

    if (seg.size() == 2) {
      if (method == "GET") return {200, {{"plans", store_.ids()}}};
      if (method == "POST") return create_plan(q, body);
      return error(405, "method not allowed");
    }
    const std::string& id = seg[2];
    if (seg.size() == 3) {
      if (method == "GET") return get_plan(id);
      if (method == "PUT") return put_plan(id, q, body);
      if (method == "DELETE") return delete_plan(id, q);
      return error(405, "method not allowed");
    }
    const std::string& action = seg[3];
    if (seg.size() == 4 && action == "tables:generate" && method == "POST") return generate(id);
    if (seg.size() == 4 && action == "verify" && method == "POST") return verify(id, body);
    if (seg.size() == 4 && action == "regions" && method == "GET") return regions(id);
    if (action == "sim") {
      if (seg.size() == 4 && method == "POST") return sim_create(id);
      if (seg.size() == 5 && method == "GET") return sim_get(id, seg[4]);
      if (seg.size() == 5 && method == "DELETE") return sim_delete(id, seg[4]);
      if (seg.size() == 6 && seg[5] == "step" && method == "POST") return sim_step(id, seg[4], body);
      if (seg.size() == 6 && seg[5] == "undo" && method == "POST") return sim_undo(id, seg[4]);
    }
    return error(404, "no such endpoint");
  }

  // Accepts either a bare wire document or {"version", "plan"}.
  static std::pair<std::optional<long>, nlohmann::json> unwrap(const nlohmann::json& doc) {
    if (doc.is_object() && doc.contains("plan") && !doc.contains("formatVersion")) {
      std::optional<long> v;
      if (doc.contains("version")) {
        if (!doc["version"].is_number_integer()) throw SchemaError("/version", "expected an integer");
        v = doc["version"].get<long>();
      }
      return {v, doc["plan"]};
    }
    return {std::nullopt, doc};
  }

  // Parses and checks a wire plan; `violations` collects both levels.
  static SchemePlan load(const nlohmann::json& doc, std::vector<Violation>& violations) {
    auto plan = from_wire(doc);
    violations = check_plan(plan);
    return plan;
  }

  Response create_plan(const Query& q, const std::string& body) {
    auto [version, doc] = unwrap(parse_body(body));
    std::vector<Violation> vs;
    auto plan = load(doc, vs);
    if (has_errors(vs) && !flag(q, "force")) return {422, {{"error", "plan is invalid"}, {"violations", to_json(vs)}}};
    auto sp = store_.create(to_wire(plan));
    auto out = envelope(sp);
    out["violations"] = to_json(vs);
    return {201, out};
  }

  Response get_plan(const std::string& id) {
    auto sp = store_.get(id);
    if (!sp) return error(404, "no plan '" + id + "'");
    return {200, envelope(*sp)};
  }

  Response put_plan(const std::string& id, const Query& q, const std::string& body) {
    auto [version, doc] = unwrap(parse_body(body));
    if (!version) throw SchemaError("/version", "required field missing");
    std::vector<Violation> vs;
    auto plan = load(doc, vs);
    if (!store_.get(id)) return error(404, "no plan '" + id + "'");
    if (has_errors(vs) && !flag(q, "force")) return {422, {{"error", "plan is invalid"}, {"violations", to_json(vs)}}};
    StoredPlan sp;
    switch (store_.update(id, *version, to_wire(plan), &sp)) {
      case PlanStore::Outcome::Missing: return error(404, "no plan '" + id + "'");
      case PlanStore::Outcome::Conflict: return error(409, "version conflict");
      case PlanStore::Outcome::Ok: break;
    }
    auto out = envelope(sp);
    out["violations"] = to_json(vs);
    return {200, out};
  }

  Response delete_plan(const std::string& id, const Query& q) {
    std::optional<long> expected;
    if (auto it = q.find("version"); it != q.end()) {
      try {
        expected = std::stol(it->second);
      } catch (const std::exception&) {
        return error(400, "version must be an integer");
      }
    }
    switch (store_.remove(id, expected)) {
      case PlanStore::Outcome::Missing: return error(404, "no plan '" + id + "'");
      case PlanStore::Outcome::Conflict: return error(409, "version conflict");
      case PlanStore::Outcome::Ok: break;
    }
    return {204, nullptr};
  }

  // Loads a stored plan that must be valid for the semantic endpoints.
  std::variant<Response, std::pair<StoredPlan, SchemePlan>> valid_plan(const std::string& id) {
    auto sp = store_.get(id);
    if (!sp) return error(404, "no plan '" + id + "'");
    std::vector<Violation> vs;
    auto plan = load(sp->plan, vs);
    if (has_errors(vs)) return Response{422, {{"error", "plan is invalid"}, {"violations", to_json(vs)}}};
    return std::pair{*sp, std::move(plan)};
  }

  Response generate(const std::string& id) {
    auto sp = store_.get(id);
    if (!sp) return error(404, "no plan '" + id + "'");
    auto plan = from_wire(sp->plan);
    auto pv = validate_plan(plan);
    if (has_errors(pv)) return {422, {{"error", "plan is invalid"}, {"violations", to_json(pv)}}};
    SchemePlan generated;
    try {
      generated = generate_tables(plan);
    } catch (const std::exception& e) {
      return error(422, e.what());
    }
    StoredPlan updated;
    switch (store_.update(id, sp->version, to_wire(generated), &updated)) {
      case PlanStore::Outcome::Missing: return error(404, "no plan '" + id + "'");
      case PlanStore::Outcome::Conflict: return error(409, "version conflict");
      case PlanStore::Outcome::Ok: break;
    }
    auto out = envelope(updated);
    out["violations"] = to_json(check_plan(generated));
    return {200, out};
  }

  Response verify(const std::string& id, const std::string& body) {
    auto loaded = valid_plan(id);
    if (auto* r = std::get_if<Response>(&loaded)) return *r;
    const auto& plan = std::get<1>(loaded).second;
    auto doc = parse_body(body);
    wire::object_at(doc, "");
    VerifyRequest req;
    req.bound = cfg_.default_bound;
    req.threads = cfg_.threads;
    if (doc.contains("mode")) {
      auto m = parse_verify_mode(wire::string_at(doc["mode"], "/mode"));
      if (!m) throw SchemaError("/mode", "expected static, explore, both or lemma");
      req.mode = *m;
    }
    if (doc.contains("bound")) {
      if (!doc["bound"].is_number_unsigned()) throw SchemaError("/bound", "expected a non-negative integer");
      req.bound.max_total_regions = doc["bound"].get<std::size_t>();
      req.bound.automatic = false;
    }
    if (doc.contains("maxStates")) {
      if (!doc["maxStates"].is_number_unsigned()) throw SchemaError("/maxStates", "expected a non-negative integer");
      req.bound.max_states = doc["maxStates"].get<std::size_t>();
    }
    if (doc.contains("weakStatic")) req.weak_static = doc["weakStatic"].get<bool>();
    return {200, run_verification(plan, req).doc};
  }

  Response regions(const std::string& id) {
    auto loaded = valid_plan(id);
    if (auto* r = std::get_if<Response>(&loaded)) return *r;
    return {200, to_json(build_catalog(std::get<1>(loaded).second))};
  }

  static nlohmann::json describe(const SimSession& s) {
    const auto& state = s.states.back();
    nlohmann::json enabled = nlohmann::json::array();
    for (const auto& e : s.il.enabled_events(state)) enabled.push_back(to_json(e));
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& ma : state.assigned) {
      nlohmann::json names = nlohmann::json::array();
      for (const auto& rg : ma.regions) names.push_back(s.il.catalog().name(rg));
      regions.push_back(names);
    }
    return {{"sid", s.id},      {"planId", s.plan_id},           {"step", s.log.size()}, {"state", to_json(state)},
            {"regions", regions}, {"enabled", enabled},          {"log", to_json(s.log)}};
  }

  Response sim_create(const std::string& id) {
    auto loaded = valid_plan(id);
    if (auto* r = std::get_if<Response>(&loaded)) return *r;
    auto sid = "sim-" + std::to_string(++session_counter_);
    auto s = std::make_shared<SimSession>(sid, id, std::get<1>(loaded).second);
    s->last_used = clock_();
    {
      std::lock_guard lock(sessions_mu_);
      sessions_[sid] = s;
    }
    return {201, describe(*s)};
  }

  std::shared_ptr<SimSession> find_session(const std::string& plan_id, const std::string& sid) {
    auto s = session(sid);
    if (!s || s->plan_id != plan_id) return nullptr;
    return s;
  }

  Response sim_get(const std::string& id, const std::string& sid) {
    auto s = find_session(id, sid);
    if (!s) return error(404, "no session '" + sid + "'");
    std::lock_guard lock(s->mu);
    s->last_used = clock_();
    return {200, describe(*s)};
  }

  Response sim_delete(const std::string& id, const std::string& sid) {
    if (!find_session(id, sid)) return error(404, "no session '" + sid + "'");
    std::lock_guard lock(sessions_mu_);
    sessions_.erase(sid);
    return {204, nullptr};
  }

  // Body: {"event": <event>} or {"index": n} into the enabled list.
  Response sim_step(const std::string& id, const std::string& sid, const std::string& body) {
    auto s = find_session(id, sid);
    if (!s) return error(404, "no session '" + sid + "'");
    std::unique_lock lock(s->mu, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "session is busy");
    s->last_used = clock_();
    auto doc = parse_body(body);
    wire::object_at(doc, "");
    const auto& state = s->states.back();
    Event event;
    if (doc.contains("index")) {
      auto enabled = s->il.enabled_events(state);
      if (!doc["index"].is_number_unsigned() || doc["index"].get<std::size_t>() >= enabled.size()) {
        return error(409, "no enabled event at that index");
      }
      event = enabled[doc["index"].get<std::size_t>()];
    } else {
      event = event_from_json(wire::field(doc, "event", ""), "/event");
    }
    InterlockingState next;
    try {
      next = s->il.apply(state, event);
    } catch (const EventNotEnabled& e) {
      return error(409, e.what());
    } catch (const MissingClearEntry& e) {
      return error(409, e.what());
    }
    s->log.push_back(std::move(event));
    s->states.push_back(std::move(next));
    return {200, describe(*s)};
  }

  Response sim_undo(const std::string& id, const std::string& sid) {
    auto s = find_session(id, sid);
    if (!s) return error(404, "no session '" + sid + "'");
    std::unique_lock lock(s->mu, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "session is busy");
    s->last_used = clock_();
    if (s->log.empty()) return error(409, "session is at its initial state");
    s->log.pop_back();
    s->states.pop_back();
    return {200, describe(*s)};
  }

  void expire_sessions() {
    auto now = clock_();
    std::lock_guard lock(sessions_mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock slock(it->second->mu, std::try_to_lock);
      if (slock.owns_lock() && now - it->second->last_used > cfg_.session_ttl) {
        slock.unlock();
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }

  ServiceConfig cfg_;
  Clock clock_;
  PlanStore store_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SimSession>> sessions_;
  std::atomic<long> session_counter_{0};
};

// Routes every request on `server` through `svc`.
inline void mount(httplib::Server& server, Service& svc) {
  auto forward = [&svc](const httplib::Request& req, httplib::Response& res) {
    Service::Query q(req.params.begin(), req.params.end());
    auto r = svc.handle(req.method, req.path, q, req.body);
    res.status = r.status;
    if (r.status != 204) res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  server.Put(".*", forward);
  server.Delete(".*", forward);
}

}  // namespace schemeplan
