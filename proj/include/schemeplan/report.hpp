#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "schemeplan/semantics.hpp"
#include "schemeplan/verifier.hpp"
#include "schemeplan/wire.hpp"

namespace schemeplan {

// JSON forms of semantic values and verdicts. Regions and MAs are written as
// unit lists so that the output does not depend on catalog numbering.

inline nlohmann::json to_json(const Region& rg) { return wire::ids(rg.units); }

inline nlohmann::json to_json(const MovementAuthority& ma) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& rg : ma.regions) out.push_back(to_json(rg));
  return out;
}

inline nlohmann::json to_json(const InterlockingState& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& ma : s.assigned) out.push_back(to_json(ma));
  return out;
}

inline nlohmann::json to_json(const Event& e) {
  if (const auto* x = std::get_if<Extend>(&e)) {
    return {{"kind", "extend"}, {"from", to_json(x->from)}, {"route", x->route.str()}};
  }
  return {{"kind", "reduce"}, {"ma", to_json(std::get<Reduce>(e).ma)}};
}

inline nlohmann::json to_json(const std::vector<Event>& events) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : events) out.push_back(to_json(e));
  return out;
}

inline Region region_from_json(const nlohmann::json& v, const std::string& at) {
  return Region{wire::id_list<UnitId>(v, at)};
}

inline MovementAuthority ma_from_json(const nlohmann::json& v, const std::string& at) {
  MovementAuthority ma;
  const auto& arr = wire::array_at(v, at);
  for (std::size_t i = 0; i < arr.size(); ++i) ma.regions.push_back(region_from_json(arr[i], at + "/" + std::to_string(i)));
  return ma;
}

inline Event event_from_json(const nlohmann::json& v, const std::string& at = "") {
  wire::object_at(v, at);
  auto kind = wire::string_field(v, "kind", at);
  if (kind == "extend") {
    MovementAuthority from;
    if (v.contains("from")) from = ma_from_json(v["from"], at + "/from");
    return Extend{std::move(from), RouteId(wire::string_field(v, "route", at))};
  }
  if (kind == "reduce") return Reduce{ma_from_json(wire::field(v, "ma", at), at + "/ma")};
  throw SchemaError(at + "/kind", "expected 'extend' or 'reduce'");
}

inline nlohmann::json to_json(const Verdict& v) {
  nlohmann::json out = {{"verdict", to_string(v.kind)}, {"states", v.states}, {"regionBound", v.region_bound}};
  if (v.kind == VerdictKind::Unsafe) {
    out["counterexample"] = to_json(v.counterexample);
    nlohmann::json w = nlohmann::json::array();
    for (const auto& ma : v.witness) w.push_back(to_json(ma));
    out["witness"] = w;
  }
  if (v.open_route) out["openRoute"] = v.open_route->str();
  if (v.region) out["region"] = to_json(*v.region);
  if (!v.reason.empty()) out["reason"] = v.reason;
  return out;
}

inline Verdict verdict_from_json(const nlohmann::json& v, const std::string& at = "") {
  wire::object_at(v, at);
  Verdict out;
  auto kind = wire::string_field(v, "verdict", at);
  if (kind == "Safe") out.kind = VerdictKind::Safe;
  else if (kind == "Unsafe") out.kind = VerdictKind::Unsafe;
  else if (kind == "Inconclusive") out.kind = VerdictKind::Inconclusive;
  else throw SchemaError(at + "/verdict", "unknown verdict '" + kind + "'");
  if (v.contains("states")) out.states = v["states"].get<std::size_t>();
  if (v.contains("regionBound")) out.region_bound = v["regionBound"].get<std::size_t>();
  if (v.contains("counterexample")) {
    const auto& arr = wire::array_at(v["counterexample"], at + "/counterexample");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.counterexample.push_back(event_from_json(arr[i], at + "/counterexample/" + std::to_string(i)));
    }
  }
  if (v.contains("witness")) {
    const auto& arr = wire::array_at(v["witness"], at + "/witness");
    for (std::size_t i = 0; i < arr.size(); ++i) out.witness.push_back(ma_from_json(arr[i], at + "/witness/" + std::to_string(i)));
  }
  if (v.contains("openRoute")) out.open_route = RouteId(wire::string_at(v["openRoute"], at + "/openRoute"));
  if (v.contains("region")) out.region = region_from_json(v["region"], at + "/region");
  if (v.contains("reason")) out.reason = wire::string_at(v["reason"], at + "/reason");
  return out;
}

inline nlohmann::json to_json(const StaticReport& r) {
  nlohmann::json routes = nlohmann::json::array();
  for (const auto& rc : r.routes) {
    routes.push_back({{"route", rc.route.str()}, {"pass", rc.pass}, {"missing", wire::ids(rc.missing)}});
  }
  return {{"verdict", r.pass() ? "Safe" : "Unsafe"}, {"condition", r.weak ? "weak" : "strict"}, {"routes", routes}};
}

inline nlohmann::json to_json(const LemmaReport& r) {
  return {{"agree", r.agree},
          {"inconclusive", r.inconclusive},
          {"safety", to_json(r.safety)},
          {"routeCondition", to_json(r.route_condition)}};
}

inline nlohmann::json to_json(const RegionCatalog& cat) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& rg : cat.regions) regions.push_back({{"name", cat.name(rg)}, {"units", to_json(rg)}});
  nlohmann::json routes = nlohmann::json::object();
  for (const auto& rid : cat.route_order) {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& rg : cat.by_route.at(rid)) names.push_back(cat.name(rg));
    routes[rid.str()] = names;
  }
  return {{"regions", regions}, {"routes", routes}};
}

enum class VerifyMode { Static, Explore, Both, Lemma };

inline std::optional<VerifyMode> parse_verify_mode(const std::string& s) {
  if (s == "static") return VerifyMode::Static;
  if (s == "explore") return VerifyMode::Explore;
  if (s == "both") return VerifyMode::Both;
  if (s == "lemma") return VerifyMode::Lemma;
  return std::nullopt;
}

inline const char* to_string(VerifyMode m) {
  switch (m) {
    case VerifyMode::Static: return "static";
    case VerifyMode::Explore: return "explore";
    case VerifyMode::Both: return "both";
    case VerifyMode::Lemma: return "lemma";
  }
  return "?";
}

struct VerifyRequest {
  VerifyMode mode = VerifyMode::Both;
  Bound bound;
  unsigned threads = 1;
  bool weak_static = false;
};

// Outcome of one verification job. `kind` is the overall verdict: Unsafe if
// any check (or, in lemma mode, any agreement test) fails, else Inconclusive
// if any was truncated, else Safe.
struct VerifyResult {
  VerdictKind kind = VerdictKind::Safe;
  nlohmann::json doc;
};

namespace report_detail {

inline VerdictKind worst(VerdictKind a, VerdictKind b) {
  if (a == VerdictKind::Unsafe || b == VerdictKind::Unsafe) return VerdictKind::Unsafe;
  if (a == VerdictKind::Inconclusive || b == VerdictKind::Inconclusive) return VerdictKind::Inconclusive;
  return VerdictKind::Safe;
}

inline VerdictKind lemma_kind(const LemmaReport& r) {
  if (r.inconclusive) return VerdictKind::Inconclusive;
  return r.agree ? VerdictKind::Safe : VerdictKind::Unsafe;
}

}  // namespace report_detail

// Shared by the command line and the service so both produce identical JSON.
inline VerifyResult run_verification(const SchemePlan& plan, const VerifyRequest& req) {
  using report_detail::worst;
  VerifyResult res;
  res.doc = {{"mode", to_string(req.mode)}};
  nlohmann::json reports = nlohmann::json::object();

  if (req.mode == VerifyMode::Static || req.mode == VerifyMode::Both) {
    auto st = check_routes_static(plan, req.weak_static);
    auto k = st.pass() ? VerdictKind::Safe : VerdictKind::Unsafe;
    res.doc["static"] = to_string(k);
    reports["static"] = to_json(st);
    res.kind = worst(res.kind, k);
  }
  if (req.mode == VerifyMode::Explore || req.mode == VerifyMode::Both) {
    Interlocking il(plan);
    auto sp = explore(il, req.bound, req.threads);
    auto safety = check_safety(il, sp);
    auto route = check_route_condition(il, sp);
    res.doc["safety"] = to_string(safety.kind);
    res.doc["routeCondition"] = to_string(route.kind);
    reports["safety"] = to_json(safety);
    reports["routeCondition"] = to_json(route);
    res.kind = worst(res.kind, worst(safety.kind, route.kind));
  }
  if (req.mode == VerifyMode::Lemma) {
    auto base = check_lemma_equivalence(plan, req.bound, req.threads);
    auto kind = report_detail::lemma_kind(base);
    reports["plan"] = to_json(base);
    nlohmann::json mutants = nlohmann::json::array();
    std::size_t disagreements = 0;
    for (const auto& m : clear_table_mutants(plan)) {
      auto r = check_lemma_equivalence(m.plan, req.bound, req.threads);
      auto j = to_json(r);
      j["route"] = m.route.str();
      j["removed"] = m.removed.str();
      mutants.push_back(std::move(j));
      if (!r.inconclusive && !r.agree) ++disagreements;
      kind = worst(kind, report_detail::lemma_kind(r));
    }
    reports["mutants"] = std::move(mutants);
    res.doc["agree"] = kind == VerdictKind::Safe;
    res.doc["disagreements"] = disagreements;
    res.kind = kind;
  }
  res.doc["verdict"] = to_string(res.kind);
  res.doc["reports"] = std::move(reports);
  return res;
}

}  // namespace schemeplan
