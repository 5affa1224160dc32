#pragma once

#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "schemeplan/model.hpp"

namespace schemeplan {

// Nonempty run of units; regions are identified by value, so routes that
// share a prefix up to a release point share the region.
struct Region {
  std::vector<UnitId> units;

  friend bool operator==(const Region&, const Region&) = default;
  friend auto operator<=>(const Region&, const Region&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Region& r) {
    os << '[';
    for (std::size_t i = 0; i < r.units.size(); ++i) os << (i ? "," : "") << r.units[i];
    return os << ']';
  }
};

class ReleaseNotOnRoute : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cuts after each release unit; an empty tail left by a cut at the last unit
// is dropped.
inline std::vector<Region> split_regions(const std::vector<UnitId>& units, const std::vector<UnitId>& release) {
  std::vector<Region> out;
  Region cur;
  std::size_t next = 0;
  for (const auto& u : units) {
    cur.units.push_back(u);
    if (next < release.size() && release[next] == u) {
      out.push_back(std::move(cur));
      cur = {};
      ++next;
    }
  }
  if (next != release.size()) {
    throw ReleaseNotOnRoute("release unit '" + release[next].str() +
                            "' is not on the route after the previous release unit");
  }
  if (!cur.units.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::vector<Region> regions_of_route(const SchemePlan& plan, const RouteId& id) {
  const Route* r = plan.find_route(id);
  if (!r) throw std::invalid_argument("unknown route '" + id.str() + "'");
  try {
    return split_regions(route_units(*r), plan.release_units(id));
  } catch (const ReleaseNotOnRoute& e) {
    throw ReleaseNotOnRoute("route " + id.str() + ": " + e.what());
  }
}

struct RegionCatalog {
  std::vector<Region> regions;  // index i is named RG<i+1>
  std::map<RouteId, std::vector<Region>> by_route;
  std::vector<RouteId> route_order;

  int index_of(const Region& r) const {
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (regions[i] == r) return static_cast<int>(i);
    }
    return -1;
  }

  std::string name(const Region& r) const {
    int i = index_of(r);
    return i < 0 ? "?" : "RG" + std::to_string(i + 1);
  }

  std::size_t size() const { return regions.size(); }
};

// Numbering follows route declaration order, then position in the route.
inline RegionCatalog build_catalog(const SchemePlan& plan) {
  RegionCatalog cat;
  for (const auto& r : plan.routes) {
    auto regs = regions_of_route(plan, r.id);
    for (const auto& rg : regs) {
      if (cat.index_of(rg) < 0) cat.regions.push_back(rg);
    }
    cat.route_order.push_back(r.id);
    cat.by_route[r.id] = std::move(regs);
  }
  return cat;
}

}  // namespace schemeplan
