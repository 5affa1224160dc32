#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "schemeplan/ids.hpp"

namespace schemeplan {

struct Linear {
  ConnectorId end_a;
  ConnectorId end_b;
  friend bool operator==(const Linear&, const Linear&) = default;
};

// A point (switch): the stem joins either leg, the legs never join each other.
struct Point {
  ConnectorId stem;
  ConnectorId left;
  ConnectorId right;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Unit {
  UnitId id;
  std::variant<Linear, Point> shape;

  bool is_point() const { return std::holds_alternative<Point>(shape); }
  const Point* as_point() const { return std::get_if<Point>(&shape); }

  std::vector<ConnectorId> connectors() const {
    if (const auto* p = std::get_if<Point>(&shape)) return {p->stem, p->left, p->right};
    const auto& l = std::get<Linear>(shape);
    return {l.end_a, l.end_b};
  }

  friend bool operator==(const Unit&, const Unit&) = default;
};

struct Path {
  ConnectorId from;
  ConnectorId to;
  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path&, const Path&) = default;
};

struct UnitPathPair {
  UnitId unit;
  Path path;
  friend bool operator==(const UnitPathPair&, const UnitPathPair&) = default;
  friend auto operator<=>(const UnitPathPair&, const UnitPathPair&) = default;
};

struct Route {
  RouteId id;
  std::vector<UnitPathPair> steps;
  friend bool operator==(const Route&, const Route&) = default;
};

enum class MarkerKind { Entry, Exit, Boundary };

inline const char* to_string(MarkerKind kind) {
  switch (kind) {
    case MarkerKind::Entry: return "entry";
    case MarkerKind::Exit: return "exit";
    case MarkerKind::Boundary: return "boundary";
  }
  return "?";
}

// Boundaries stand in for signals and carry an optional name.
struct Marker {
  MarkerKind kind = MarkerKind::Boundary;
  MarkerName name;
  ConnectorId at;
  friend bool operator==(const Marker&, const Marker&) = default;
};

// Normal/reverse point columns are carried for fidelity with printed tables
// and never interpreted.
struct ClearEntry {
  std::vector<UnitId> clear;
  std::vector<UnitId> normal;
  std::vector<UnitId> reverse;
  friend bool operator==(const ClearEntry&, const ClearEntry&) = default;
};

struct ReleaseEntry {
  UnitId point;
  UnitId cleared_by;
  friend bool operator==(const ReleaseEntry&, const ReleaseEntry&) = default;
};

using ControlTable = std::map<RouteId, ClearEntry>;
using ReleaseTable = std::map<RouteId, std::vector<ReleaseEntry>>;

struct SchemePlan {
  std::string name;
  std::vector<Unit> units;
  std::vector<Marker> markers;
  std::vector<Route> routes;
  ControlTable control;
  ReleaseTable release;

  const Unit* find_unit(const UnitId& id) const {
    auto it = std::find_if(units.begin(), units.end(), [&](const Unit& u) { return u.id == id; });
    return it == units.end() ? nullptr : &*it;
  }

  const Route* find_route(const RouteId& id) const {
    auto it = std::find_if(routes.begin(), routes.end(), [&](const Route& r) { return r.id == id; });
    return it == routes.end() ? nullptr : &*it;
  }

  // Cleared-by units of a route in release-table order.
  std::vector<UnitId> release_units(const RouteId& id) const {
    std::vector<UnitId> out;
    if (auto it = release.find(id); it != release.end()) {
      for (const auto& e : it->second) out.push_back(e.cleared_by);
    }
    return out;
  }

  friend bool operator==(const SchemePlan&, const SchemePlan&) = default;
};

// ---------------------------------------------------------------------------
// Diagnostics

enum class Severity { Error, Warning };

enum class Section { Plan, Unit, Connector, Marker, Route, Clear, Release };

inline const char* to_string(Section s) {
  switch (s) {
    case Section::Plan: return "plan";
    case Section::Unit: return "unit";
    case Section::Connector: return "connector";
    case Section::Marker: return "marker";
    case Section::Route: return "route";
    case Section::Clear: return "clear";
    case Section::Release: return "release";
  }
  return "?";
}

struct Location {
  Section section = Section::Plan;
  std::string id;
  int index = 0;  // 1-based step/entry index, 0 when not applicable

  std::string to_string() const {
    std::string out = schemeplan::to_string(section);
    if (!id.empty()) out += " " + id;
    if (index > 0) out += (section == Section::Route ? " step " : " entry ") + std::to_string(index);
    return out;
  }

  friend bool operator==(const Location&, const Location&) = default;
  friend auto operator<=>(const Location&, const Location&) = default;
};

struct Violation {
  std::string code;
  std::string message;
  Location location;
  Severity severity = Severity::Error;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline bool has_errors(const std::vector<Violation>& violations) {
  return std::any_of(violations.begin(), violations.end(),
                     [](const Violation& v) { return v.severity == Severity::Error; });
}

inline void sort_violations(std::vector<Violation>& violations) {
  std::stable_sort(violations.begin(), violations.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.location, a.code) < std::tie(b.location, b.code);
  });
}

// ---------------------------------------------------------------------------
// Paths and routes

inline std::vector<Path> legal_paths(const Unit& unit) {
  if (const auto* p = unit.as_point()) {
    return {{p->stem, p->left}, {p->stem, p->right}, {p->left, p->stem}, {p->right, p->stem}};
  }
  const auto& l = std::get<Linear>(unit.shape);
  return {{l.end_a, l.end_b}, {l.end_b, l.end_a}};
}

inline bool is_legal_path(const Unit& unit, const Path& path) {
  auto paths = legal_paths(unit);
  return std::find(paths.begin(), paths.end(), path) != paths.end();
}

inline std::vector<UnitId> route_units(const Route& route) {
  std::vector<UnitId> out;
  out.reserve(route.steps.size());
  for (const auto& step : route.steps) out.push_back(step.unit);
  return out;
}

// Connector -> units attached to it, in declaration order.
class Topology {
 public:
  explicit Topology(const SchemePlan& plan) {
    for (const auto& unit : plan.units) {
      for (const auto& c : unit.connectors()) attached_[c].push_back(unit.id);
    }
    for (const auto& m : plan.markers) markers_[m.at].push_back(m);
  }

  const std::vector<UnitId>& units_at(const ConnectorId& c) const {
    static const std::vector<UnitId> none;
    auto it = attached_.find(c);
    return it == attached_.end() ? none : it->second;
  }

  bool has_connector(const ConnectorId& c) const { return attached_.count(c) > 0; }

  bool has_marker(const ConnectorId& c, MarkerKind kind) const {
    auto it = markers_.find(c);
    if (it == markers_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const Marker& m) { return m.kind == kind; });
  }

  const std::map<ConnectorId, std::vector<UnitId>>& connectors() const { return attached_; }

 private:
  std::map<ConnectorId, std::vector<UnitId>> attached_;
  std::map<ConnectorId, std::vector<Marker>> markers_;
};

// ---------------------------------------------------------------------------
// Well-formedness

namespace detail {

inline void check_identifier(std::vector<Violation>& out, const std::string& text, Location loc,
                             const char* what) {
  if (!is_identifier(text)) {
    out.push_back({"invalid-identifier", std::string(what) + " '" + text + "' is not a valid identifier", loc});
  }
}

inline void check_unit_refs(std::vector<Violation>& out, const std::set<UnitId>& known,
                            const std::vector<UnitId>& refs, Section section, const std::string& owner) {
  std::set<UnitId> seen;
  for (const auto& u : refs) {
    if (!known.count(u)) {
      out.push_back({"unknown-unit", "unit '" + u.str() + "' is not declared", {section, owner}});
    }
    if (!seen.insert(u).second) {
      out.push_back({"duplicate-unit", "unit '" + u.str() + "' listed twice", {section, owner}});
    }
  }
}

}  // namespace detail

// Checks identifiers, unit shapes, connector degrees, markers, route legality
// and that every table reference resolves. Table completeness is checked by
// validate_tables.
inline std::vector<Violation> validate_plan(const SchemePlan& plan) {
  std::vector<Violation> out;
  if (!plan.name.empty() || !plan.units.empty() || !plan.routes.empty()) {
    detail::check_identifier(out, plan.name, {Section::Plan, plan.name}, "plan name");
  }

  std::map<UnitId, const Unit*> units;
  for (const auto& unit : plan.units) {
    Location loc{Section::Unit, unit.id.str()};
    detail::check_identifier(out, unit.id.str(), loc, "unit id");
    if (!units.emplace(unit.id, &unit).second) {
      out.push_back({"duplicate-id", "unit '" + unit.id.str() + "' declared twice", loc});
    }
    auto cs = unit.connectors();
    for (const auto& c : cs) detail::check_identifier(out, c.str(), loc, "connector");
    std::set<ConnectorId> distinct(cs.begin(), cs.end());
    if (distinct.size() != cs.size()) {
      out.push_back({"connectors-not-distinct", "connectors must be distinct", loc});
    }
  }

  Topology topo(plan);
  for (const auto& [c, attached] : topo.connectors()) {
    if (attached.size() > 2) {
      out.push_back({"connector-degree",
                     "connector '" + c.str() + "' joins " + std::to_string(attached.size()) + " units (at most 2)",
                     {Section::Connector, c.str()}});
    }
  }

  std::set<MarkerName> marker_names;
  for (const auto& m : plan.markers) {
    Location loc{Section::Marker, m.name.empty() ? m.at.str() : m.name.str()};
    if (!m.name.empty()) {
      detail::check_identifier(out, m.name.str(), loc, "marker name");
      if (!marker_names.insert(m.name).second) {
        out.push_back({"duplicate-id", "marker '" + m.name.str() + "' declared twice", loc});
      }
    } else if (m.kind != MarkerKind::Boundary) {
      out.push_back({"missing-name", std::string(to_string(m.kind)) + " marker needs a name", loc});
    }
    if (!topo.has_connector(m.at)) {
      out.push_back({"unknown-connector", "marker connector '" + m.at.str() + "' is not used by any unit", loc});
    } else if (m.kind != MarkerKind::Boundary && topo.units_at(m.at).size() != 1) {
      out.push_back({"marker-not-terminal",
                     std::string(to_string(m.kind)) + " connector '" + m.at.str() + "' must attach to exactly one unit",
                     loc});
    }
  }

  std::set<RouteId> route_ids;
  for (const auto& route : plan.routes) {
    const std::string rid = route.id.str();
    detail::check_identifier(out, rid, {Section::Route, rid}, "route id");
    if (!route_ids.insert(route.id).second) {
      out.push_back({"duplicate-id", "route '" + rid + "' declared twice", {Section::Route, rid}});
    }
    if (route.steps.empty()) {
      out.push_back({"empty-route", "route has no steps", {Section::Route, rid}});
    }
    std::set<UnitId> visited;
    for (std::size_t i = 0; i < route.steps.size(); ++i) {
      const auto& step = route.steps[i];
      Location loc{Section::Route, rid, static_cast<int>(i + 1)};
      auto it = units.find(step.unit);
      if (it == units.end()) {
        out.push_back({"unknown-unit", "unit '" + step.unit.str() + "' is not declared", loc});
      } else if (!is_legal_path(*it->second, step.path)) {
        out.push_back({"illegal-path",
                       "(" + step.path.from.str() + "," + step.path.to.str() + ") is not a path of unit '" +
                           step.unit.str() + "'",
                       loc});
      }
      if (i > 0 && route.steps[i - 1].path.to != step.path.from) {
        out.push_back({"route-not-chained",
                       "step starts at '" + step.path.from.str() + "' but previous step ends at '" +
                           route.steps[i - 1].path.to.str() + "'",
                       loc});
      }
      if (!visited.insert(step.unit).second) {
        out.push_back({"repeated-unit", "unit '" + step.unit.str() + "' occurs twice in the route", loc});
      }
    }
  }

  std::set<UnitId> unit_ids;
  for (const auto& [id, _] : units) unit_ids.insert(id);

  for (const auto& [rid, entry] : plan.control) {
    if (!route_ids.count(rid)) {
      out.push_back({"unknown-route", "clear entry for undeclared route '" + rid.str() + "'",
                     {Section::Clear, rid.str()}});
    }
    detail::check_unit_refs(out, unit_ids, entry.clear, Section::Clear, rid.str());
    detail::check_unit_refs(out, unit_ids, entry.normal, Section::Clear, rid.str());
    detail::check_unit_refs(out, unit_ids, entry.reverse, Section::Clear, rid.str());
  }

  for (const auto& [rid, entries] : plan.release) {
    if (!route_ids.count(rid)) {
      out.push_back({"unknown-route", "release entry for undeclared route '" + rid.str() + "'",
                     {Section::Release, rid.str()}});
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      Location loc{Section::Release, rid.str(), static_cast<int>(i + 1)};
      for (const auto* u : {&entries[i].point, &entries[i].cleared_by}) {
        if (!unit_ids.count(*u)) {
          out.push_back({"unknown-unit", "unit '" + u->str() + "' is not declared", loc});
        }
      }
    }
  }

  sort_violations(out);
  return out;
}

}  // namespace schemeplan
