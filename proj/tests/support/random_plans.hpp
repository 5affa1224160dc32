#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "schemeplan/schemeplan.hpp"

namespace random_plans {

struct Options {
  int max_units = 8;
  double drop_clear = 0.35;    // chance a route loses clear units
  double drop_release = 0.25;  // chance a route loses release entries
};

// Grows a directed layout from one or two entries: linear units, facing
// points that split a frontier end in two, trailing points that merge two
// ends, and boundaries at some internal connectors. Open ends become exits.
// The plan is acyclic by construction; tables come from the generator and
// are then perturbed.
inline schemeplan::SchemePlan generate(std::mt19937& rng, const Options& opt = {}) {
  using namespace schemeplan;
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  SchemePlan plan;
  plan.name = "Random";
  int next_c = 0, next_u = 0;
  auto conn = [&] { return ConnectorId("c" + std::to_string(++next_c)); };

  std::vector<ConnectorId> frontier;
  std::vector<ConnectorId> fresh;  // connectors with no unit yet
  int entries = chance(0.3) ? 2 : 1;
  for (int i = 0; i < entries; ++i) {
    auto c = conn();
    plan.markers.push_back({MarkerKind::Entry, MarkerName("N" + std::to_string(i + 1)), c});
    frontier.push_back(c);
    fresh.push_back(c);
  }
  int limit = std::uniform_int_distribution<int>(1, opt.max_units)(rng);

  auto maybe_boundary = [&](const ConnectorId& c) {
    if (std::find(fresh.begin(), fresh.end(), c) != fresh.end()) return;
    if (chance(0.3)) plan.markers.push_back({MarkerKind::Boundary, MarkerName{}, c});
  };
  auto take = [&](std::size_t i) {
    auto c = frontier[i];
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(i));
    fresh.erase(std::remove(fresh.begin(), fresh.end(), c), fresh.end());
    return c;
  };

  while (next_u < limit && !frontier.empty()) {
    int action = static_cast<int>(pick(10));
    bool can_merge = frontier.size() >= 2 && next_u + 1 < limit;
    if (action >= 8 && can_merge) {
      auto i = pick(frontier.size());
      auto a = frontier[i];
      bool a_fresh = std::find(fresh.begin(), fresh.end(), a) != fresh.end();
      std::size_t j;
      do {
        j = pick(frontier.size());
      } while (j == i);
      auto b = frontier[j];
      bool b_fresh = std::find(fresh.begin(), fresh.end(), b) != fresh.end();
      if (a_fresh || b_fresh) continue;  // never merge straight out of an entry
      maybe_boundary(a);
      maybe_boundary(b);
      take(std::max(i, j));
      take(std::min(i, j));
      auto stem = conn();
      plan.units.push_back({UnitId("P" + std::to_string(++next_u)), Point{stem, a, b}});
      frontier.push_back(stem);
    } else if (action >= 6) {
      auto i = pick(frontier.size());
      maybe_boundary(frontier[i]);
      auto s = take(i);
      auto l = conn(), r = conn();
      plan.units.push_back({UnitId("P" + std::to_string(++next_u)), Point{s, l, r}});
      frontier.push_back(l);
      frontier.push_back(r);
    } else {
      auto i = pick(frontier.size());
      maybe_boundary(frontier[i]);
      auto a = take(i);
      auto b = conn();
      plan.units.push_back({UnitId("L" + std::to_string(++next_u)), Linear{a, b}});
      frontier.push_back(b);
    }
  }
  int exits = 0;
  for (const auto& c : frontier) {
    if (std::find(fresh.begin(), fresh.end(), c) != fresh.end()) continue;
    plan.markers.push_back({MarkerKind::Exit, MarkerName("E" + std::to_string(++exits)), c});
  }
  // Drop entries that never got a unit.
  plan.markers.erase(std::remove_if(plan.markers.begin(), plan.markers.end(),
                                    [&](const Marker& m) {
                                      return std::find(fresh.begin(), fresh.end(), m.at) != fresh.end();
                                    }),
                     plan.markers.end());

  plan = generate_tables(plan);

  for (auto& [rid, entry] : plan.control) {
    if (!chance(opt.drop_clear) || entry.clear.empty()) continue;
    auto drop = 1 + pick(entry.clear.size());
    std::shuffle(entry.clear.begin(), entry.clear.end(), rng);
    entry.clear.resize(entry.clear.size() - std::min(drop, entry.clear.size()));
  }
  for (auto& [rid, entries_] : plan.release) {
    if (!chance(opt.drop_release) || entries_.empty()) continue;
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(pick(entries_.size())));
  }
  return plan;
}

// Generates until a plan with at least one route passes the plan checks.
inline schemeplan::SchemePlan generate_valid(std::mt19937& rng, const Options& opt = {}) {
  for (;;) {
    auto plan = generate(rng, opt);
    if (!plan.routes.empty() && !schemeplan::has_errors(schemeplan::check_plan(plan))) return plan;
  }
}

}  // namespace random_plans
