#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "schemeplan/model.hpp"

namespace schemeplan {

// Traversal from the listed start connectors came back to a unit already on
// the path. Boundaries are expected to cut every loop.
class CyclicPathError : public std::runtime_error {
 public:
  CyclicPathError(std::vector<ConnectorId> starts, const std::string& detail)
      : std::runtime_error("track loop without a boundary: " + detail), starts(std::move(starts)) {}
  std::vector<ConnectorId> starts;
};

namespace tables_detail {

struct Start {
  ConnectorId at;
  UnitId unit;
  friend auto operator<=>(const Start&, const Start&) = default;
};

inline bool ends_route(const Topology& topo, const ConnectorId& c) {
  return topo.has_marker(c, MarkerKind::Exit) || topo.has_marker(c, MarkerKind::Boundary);
}

inline std::vector<ConnectorId> exits_from(const Unit& unit, const ConnectorId& in) {
  std::vector<ConnectorId> out;
  for (const auto& p : legal_paths(unit)) {
    if (p.from == in) out.push_back(p.to);
  }
  return out;
}

inline std::vector<std::string> unit_strings(const Route& r) {
  std::vector<std::string> out;
  for (const auto& s : r.steps) out.push_back(s.unit.str());
  return out;
}

inline std::string describe_steps(const std::vector<UnitPathPair>& steps) {
  std::string out;
  for (const auto& s : steps) out += (out.empty() ? "" : " ") + s.unit.str();
  return out;
}

}  // namespace tables_detail

// Enumerates routes signal to signal: from each entry (and each boundary a
// route runs into) along direction-consistent paths until an exit or the next
// boundary. Facing points branch. Paths that run into a buffer are dropped.
inline std::vector<Route> extract_routes(const SchemePlan& plan) {
  using tables_detail::Start;
  Topology topo(plan);
  std::map<UnitId, const Unit*> units;
  for (const auto& u : plan.units) units.emplace(u.id, &u);

  std::deque<Start> work;
  std::set<Start> queued;
  auto enqueue = [&](const ConnectorId& c, const UnitId& u) {
    Start s{c, u};
    if (queued.insert(s).second) work.push_back(s);
  };
  for (const auto& m : plan.markers) {
    if (m.kind != MarkerKind::Entry) continue;
    for (const auto& u : topo.units_at(m.at)) enqueue(m.at, u);
  }

  std::vector<Route> found;
  std::vector<ConnectorId> cyclic;
  std::string cycle_detail;

  struct Partial {
    std::vector<UnitPathPair> steps;
    ConnectorId at;
    UnitId next;
  };

  while (!work.empty()) {
    Start start = work.front();
    work.pop_front();
    std::vector<Partial> stack{{{}, start.at, start.unit}};
    bool looped = false;
    while (!stack.empty()) {
      Partial cur = std::move(stack.back());
      stack.pop_back();
      const Unit& unit = *units.at(cur.next);
      bool repeated = std::any_of(cur.steps.begin(), cur.steps.end(),
                                  [&](const UnitPathPair& s) { return s.unit == unit.id; });
      if (repeated) {
        if (!looped) cycle_detail += (cycle_detail.empty() ? "" : "; ") + start.at.str() + ": " +
                                     tables_detail::describe_steps(cur.steps) + " " + unit.id.str();
        looped = true;
        continue;
      }
      auto exits = tables_detail::exits_from(unit, cur.at);
      // Reverse order so the depth-first stack pops branches in leg order.
      for (auto it = exits.rbegin(); it != exits.rend(); ++it) {
        Partial next{cur.steps, *it, UnitId{}};
        next.steps.push_back({unit.id, {cur.at, *it}});
        if (tables_detail::ends_route(topo, *it)) {
          found.push_back({RouteId{}, next.steps});
          if (topo.has_marker(*it, MarkerKind::Boundary)) {
            for (const auto& u : topo.units_at(*it)) {
              if (u != unit.id) enqueue(*it, u);
            }
          }
          continue;
        }
        const auto& attached = topo.units_at(*it);
        for (const auto& u : attached) {
          if (u == unit.id) continue;
          Partial cont = next;
          cont.next = u;
          stack.push_back(std::move(cont));
        }
      }
    }
    if (looped) cyclic.push_back(start.at);
  }
  if (!cyclic.empty()) throw CyclicPathError(cyclic, cycle_detail);

  auto key = [](const Route& r) {
    return std::make_tuple(r.steps.front().path.from.str(), tables_detail::unit_strings(r), r.steps);
  };
  std::sort(found.begin(), found.end(), [&](const Route& a, const Route& b) { return key(a) < key(b); });
  found.erase(std::unique(found.begin(), found.end(),
                          [](const Route& a, const Route& b) { return a.steps == b.steps; }),
              found.end());

  std::set<RouteId> taken;
  for (const auto& r : plan.routes) taken.insert(r.id);
  int n = 0;
  for (auto& r : found) {
    auto same = std::find_if(plan.routes.begin(), plan.routes.end(),
                             [&](const Route& existing) { return existing.steps == r.steps; });
    if (same != plan.routes.end()) {
      r.id = same->id;
      continue;
    }
    do {
      r.id = RouteId("R" + std::to_string(++n));
    } while (taken.count(r.id));
    taken.insert(r.id);
  }
  return found;
}

// clear(r) = units(r). Point annotations follow the printed tables: a route
// over the right leg needs the point normal, over the left leg reverse.
inline ControlTable generate_control_table(const SchemePlan& plan, const std::vector<Route>& routes) {
  ControlTable table;
  for (const auto& r : routes) {
    ClearEntry e;
    e.clear = route_units(r);
    for (const auto& s : r.steps) {
      const Unit* u = plan.find_unit(s.unit);
      const Point* p = u ? u->as_point() : nullptr;
      if (!p) continue;
      if (s.path.from == p->right || s.path.to == p->right) e.normal.push_back(s.unit);
      if (s.path.from == p->left || s.path.to == p->left) e.reverse.push_back(s.unit);
    }
    table[r.id] = std::move(e);
  }
  return table;
}

// Facing points are released by themselves. A trailing point is released once
// the track the routes through it share after the merge is clear: the end of
// the common prefix of their post-point tails, kept strictly before the next
// point on the route so release order stays strict.
inline ReleaseTable generate_release_table(const SchemePlan& plan, const std::vector<Route>& routes) {
  ReleaseTable table;
  auto point_of = [&](const UnitId& id) -> const Point* {
    const Unit* u = plan.find_unit(id);
    return u ? u->as_point() : nullptr;
  };

  for (const auto& r : routes) {
    auto& entries = table[r.id];
    const auto units = route_units(r);
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      const auto& step = r.steps[i];
      const Point* p = point_of(step.unit);
      if (!p) continue;
      if (step.path.from == p->stem) {
        entries.push_back({step.unit, step.unit});
        continue;
      }

      std::size_t limit = units.size() - 1;
      for (std::size_t j = i + 1; j < units.size(); ++j) {
        if (point_of(units[j])) {
          limit = j - 1;
          break;
        }
      }

      std::size_t shared = units.size() - 1 - i;
      for (const auto& other : routes) {
        if (&other == &r) continue;
        for (std::size_t k = 0; k < other.steps.size(); ++k) {
          if (other.steps[k].unit != step.unit || other.steps[k].path.to != step.path.to) continue;
          std::size_t common = 0;
          while (i + 1 + common < r.steps.size() && k + 1 + common < other.steps.size() &&
                 r.steps[i + 1 + common].unit == other.steps[k + 1 + common].unit) {
            ++common;
          }
          shared = std::min(shared, common);
        }
      }
      if (shared == 0) shared = units.size() - 1 - i;
      std::size_t idx = std::min(i + shared, limit);
      entries.push_back({step.unit, units[idx]});
    }
  }
  return table;
}

// Fills in routes (when the plan has none) and both tables.
inline SchemePlan generate_tables(const SchemePlan& plan) {
  SchemePlan out = plan;
  if (out.routes.empty()) out.routes = extract_routes(plan);
  out.control = generate_control_table(out, out.routes);
  out.release = generate_release_table(out, out.routes);
  return out;
}

inline std::vector<Violation> validate_tables(const SchemePlan& plan) {
  std::vector<Violation> out;
  std::set<UnitId> routed;
  for (const auto& r : plan.routes) {
    for (const auto& s : r.steps) routed.insert(s.unit);
  }

  for (const auto& r : plan.routes) {
    if (!plan.control.count(r.id)) {
      out.push_back({"missing-clear-entry", "route '" + r.id.str() + "' has no clear entry", {Section::Clear, r.id.str()}});
    }
  }
  for (const auto& [rid, e] : plan.control) {
    for (const auto& u : e.clear) {
      if (!routed.count(u)) {
        out.push_back({"clear-unit-unrouted", "clear unit '" + u.str() + "' is not on any route",
                       {Section::Clear, rid.str()}, Severity::Warning});
      }
    }
  }

  for (const auto& [rid, entries] : plan.release) {
    const Route* route = plan.find_route(rid);
    if (!route) continue;
    const auto units = route_units(*route);
    auto pos = [&](const UnitId& u) -> int {
      auto it = std::find(units.begin(), units.end(), u);
      return it == units.end() ? -1 : static_cast<int>(it - units.begin());
    };
    int last = -1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      Location loc{Section::Release, rid.str(), static_cast<int>(i + 1)};
      const auto& e = entries[i];
      const Unit* pu = plan.find_unit(e.point);
      if (pu && !pu->is_point()) {
        out.push_back({"release-not-point", "'" + e.point.str() + "' is not a point", loc});
      }
      if (pos(e.point) < 0) {
        out.push_back({"release-point-off-route", "point '" + e.point.str() + "' is not on the route", loc});
      }
      int at = pos(e.cleared_by);
      if (at < 0) {
        out.push_back({"release-unit-off-route", "cleared-by unit '" + e.cleared_by.str() + "' is not on the route", loc});
        continue;
      }
      if (at <= last) {
        out.push_back({"release-order", "cleared-by units must be distinct and in route order", loc});
      }
      last = std::max(last, at);
    }
  }
  sort_violations(out);
  return out;
}

// Plan-level checks followed by table checks; table checks are skipped while
// the plan itself has errors since they assume resolvable ids.
inline std::vector<Violation> check_plan(const SchemePlan& plan) {
  auto out = validate_plan(plan);
  if (!has_errors(out)) {
    auto more = validate_tables(plan);
    out.insert(out.end(), more.begin(), more.end());
  }
  sort_violations(out);
  return out;
}

}  // namespace schemeplan
