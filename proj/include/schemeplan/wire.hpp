#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "schemeplan/model.hpp"

namespace schemeplan {

inline constexpr int kFormatVersion = 1;

// Schema violation in a wire document; `pointer` is a JSON pointer.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer(std::move(pointer)) {}
  std::string pointer;
};

namespace wire {

using nlohmann::json;

inline json ids(const std::vector<UnitId>& units) {
  json out = json::array();
  for (const auto& u : units) out.push_back(u.str());
  return out;
}

inline const json& field(const json& obj, const std::string& key, const std::string& at) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(at + "/" + key, "required field missing");
  return *it;
}

inline std::string string_at(const json& v, const std::string& at) {
  if (!v.is_string()) throw SchemaError(at, "expected a string");
  return v.get<std::string>();
}

inline std::string string_field(const json& obj, const std::string& key, const std::string& at) {
  return string_at(field(obj, key, at), at + "/" + key);
}

inline const json& array_at(const json& v, const std::string& at) {
  if (!v.is_array()) throw SchemaError(at, "expected an array");
  return v;
}

inline const json& object_at(const json& v, const std::string& at) {
  if (!v.is_object()) throw SchemaError(at, "expected an object");
  return v;
}

// JSON pointer escaping for object keys.
inline std::string escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

template <class Id>
std::vector<Id> id_list(const json& v, const std::string& at) {
  std::vector<Id> out;
  const auto& arr = array_at(v, at);
  for (std::size_t i = 0; i < arr.size(); ++i) out.emplace_back(string_at(arr[i], at + "/" + std::to_string(i)));
  return out;
}

}  // namespace wire

inline nlohmann::json to_wire(const SchemePlan& plan) {
  using nlohmann::json;
  json doc;
  doc["formatVersion"] = kFormatVersion;
  doc["name"] = plan.name;

  json units = json::array();
  for (const auto& u : plan.units) {
    if (const auto* p = u.as_point()) {
      units.push_back({{"id", u.id.str()}, {"kind", "point"}, {"stem", p->stem.str()},
                       {"left", p->left.str()}, {"right", p->right.str()}});
    } else {
      const auto& l = std::get<Linear>(u.shape);
      units.push_back({{"id", u.id.str()}, {"kind", "linear"}, {"connectors", {l.end_a.str(), l.end_b.str()}}});
    }
  }
  doc["units"] = std::move(units);

  json markers = json::array();
  for (const auto& m : plan.markers) {
    json jm = {{"kind", to_string(m.kind)}, {"at", m.at.str()}};
    if (!m.name.empty()) jm["name"] = m.name.str();
    markers.push_back(std::move(jm));
  }
  doc["markers"] = std::move(markers);

  json routes = json::array();
  for (const auto& r : plan.routes) {
    json steps = json::array();
    for (const auto& s : r.steps) {
      steps.push_back({{"unit", s.unit.str()}, {"from", s.path.from.str()}, {"to", s.path.to.str()}});
    }
    routes.push_back({{"id", r.id.str()}, {"steps", std::move(steps)}});
  }
  doc["routes"] = std::move(routes);

  json clear = json::object();
  for (const auto& [rid, e] : plan.control) {
    clear[rid.str()] = {{"units", wire::ids(e.clear)}, {"normal", wire::ids(e.normal)}, {"reverse", wire::ids(e.reverse)}};
  }
  doc["clear"] = std::move(clear);

  json release = json::object();
  for (const auto& [rid, entries] : plan.release) {
    json arr = json::array();
    for (const auto& e : entries) arr.push_back({{"point", e.point.str()}, {"clearedBy", e.cleared_by.str()}});
    release[rid.str()] = std::move(arr);
  }
  doc["release"] = std::move(release);
  return doc;
}

// Structural decoding only; call validate_plan for well-formedness.
// Unknown fields are ignored.
inline SchemePlan from_wire(const nlohmann::json& doc) {
  using namespace wire;
  SchemePlan plan;
  object_at(doc, "");

  const auto& version = field(doc, "formatVersion", "");
  if (!version.is_number_integer()) throw SchemaError("/formatVersion", "expected an integer");
  if (version.get<int>() != kFormatVersion) {
    throw SchemaError("/formatVersion", "unsupported format version " + version.dump());
  }
  plan.name = string_field(doc, "name", "");

  const auto& units = array_at(field(doc, "units", ""), "/units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    const std::string at = "/units/" + std::to_string(i);
    const auto& ju = object_at(units[i], at);
    Unit u;
    u.id = UnitId(string_field(ju, "id", at));
    const std::string kind = string_field(ju, "kind", at);
    if (kind == "linear") {
      const auto& cs = array_at(field(ju, "connectors", at), at + "/connectors");
      if (cs.size() != 2) throw SchemaError(at + "/connectors", "a linear unit has exactly 2 connectors");
      u.shape = Linear{ConnectorId(string_at(cs[0], at + "/connectors/0")),
                       ConnectorId(string_at(cs[1], at + "/connectors/1"))};
    } else if (kind == "point") {
      u.shape = Point{ConnectorId(string_field(ju, "stem", at)), ConnectorId(string_field(ju, "left", at)),
                      ConnectorId(string_field(ju, "right", at))};
    } else {
      throw SchemaError(at + "/kind", "expected \"linear\" or \"point\"");
    }
    plan.units.push_back(std::move(u));
  }

  if (auto it = doc.find("markers"); it != doc.end()) {
    const auto& markers = array_at(*it, "/markers");
    for (std::size_t i = 0; i < markers.size(); ++i) {
      const std::string at = "/markers/" + std::to_string(i);
      const auto& jm = object_at(markers[i], at);
      Marker m;
      const std::string kind = string_field(jm, "kind", at);
      if (kind == "entry") m.kind = MarkerKind::Entry;
      else if (kind == "exit") m.kind = MarkerKind::Exit;
      else if (kind == "boundary") m.kind = MarkerKind::Boundary;
      else throw SchemaError(at + "/kind", "expected \"entry\", \"exit\" or \"boundary\"");
      if (jm.contains("name")) m.name = MarkerName(string_field(jm, "name", at));
      m.at = ConnectorId(string_field(jm, "at", at));
      plan.markers.push_back(std::move(m));
    }
  }

  if (auto it = doc.find("routes"); it != doc.end()) {
    const auto& routes = array_at(*it, "/routes");
    for (std::size_t i = 0; i < routes.size(); ++i) {
      const std::string at = "/routes/" + std::to_string(i);
      const auto& jr = object_at(routes[i], at);
      Route r;
      r.id = RouteId(string_field(jr, "id", at));
      const auto& steps = array_at(field(jr, "steps", at), at + "/steps");
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::string sat = at + "/steps/" + std::to_string(k);
        const auto& js = object_at(steps[k], sat);
        r.steps.push_back({UnitId(string_field(js, "unit", sat)),
                           {ConnectorId(string_field(js, "from", sat)), ConnectorId(string_field(js, "to", sat))}});
      }
      plan.routes.push_back(std::move(r));
    }
  }

  if (auto it = doc.find("clear"); it != doc.end()) {
    for (const auto& [key, value] : object_at(*it, "/clear").items()) {
      const std::string at = "/clear/" + escape(key);
      const auto& je = object_at(value, at);
      ClearEntry e;
      e.clear = id_list<UnitId>(field(je, "units", at), at + "/units");
      if (je.contains("normal")) e.normal = id_list<UnitId>(je["normal"], at + "/normal");
      if (je.contains("reverse")) e.reverse = id_list<UnitId>(je["reverse"], at + "/reverse");
      plan.control[RouteId(key)] = std::move(e);
    }
  }

  if (auto it = doc.find("release"); it != doc.end()) {
    for (const auto& [key, value] : object_at(*it, "/release").items()) {
      const std::string at = "/release/" + escape(key);
      const auto& arr = array_at(value, at);
      auto& entries = plan.release[RouteId(key)];
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string eat = at + "/" + std::to_string(i);
        const auto& je = object_at(arr[i], eat);
        entries.push_back({UnitId(string_field(je, "point", eat)), UnitId(string_field(je, "clearedBy", eat))});
      }
    }
  }
  return plan;
}

inline nlohmann::json to_json(const Violation& v) {
  return {{"code", v.code},
          {"message", v.message},
          {"severity", v.severity == Severity::Error ? "error" : "warning"},
          {"location", {{"section", to_string(v.location.section)}, {"id", v.location.id}, {"index", v.location.index}}}};
}

inline nlohmann::json to_json(const std::vector<Violation>& vs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : vs) out.push_back(to_json(v));
  return out;
}

}  // namespace schemeplan
