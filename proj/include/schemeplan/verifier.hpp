#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "schemeplan/model.hpp"
#include "schemeplan/regions.hpp"
#include "schemeplan/semantics.hpp"

namespace schemeplan {

// Two MAs overlap when some region value belongs to both.
inline bool share(const MovementAuthority& a, const MovementAuthority& b) {
  for (const auto& x : a.regions) {
    if (std::find(b.regions.begin(), b.regions.end(), x) != b.regions.end()) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Static route check

struct RouteCheck {
  RouteId route;
  bool pass = true;
  std::vector<UnitId> missing;
};

struct StaticReport {
  std::vector<RouteCheck> routes;
  bool weak = false;

  bool pass() const {
    return std::all_of(routes.begin(), routes.end(), [](const RouteCheck& r) { return r.pass; });
  }
};

// Strict: units(r) within clear(r). Weak (deterministic occupancy only): every
// region of r meets clear(r); `missing` then lists the units of regions that
// do not.
inline StaticReport check_routes_static(const SchemePlan& plan, bool weak = false) {
  StaticReport report;
  report.weak = weak;
  for (const auto& r : plan.routes) {
    RouteCheck rc;
    rc.route = r.id;
    std::vector<UnitId> clear;
    if (auto it = plan.control.find(r.id); it != plan.control.end()) clear = it->second.clear;
    auto in_clear = [&](const UnitId& u) { return std::find(clear.begin(), clear.end(), u) != clear.end(); };
    if (!weak) {
      for (const auto& u : route_units(r)) {
        if (!in_clear(u)) rc.missing.push_back(u);
      }
    } else {
      for (const auto& rg : regions_of_route(plan, r.id)) {
        if (std::none_of(rg.units.begin(), rg.units.end(), in_clear)) {
          rc.missing.insert(rc.missing.end(), rg.units.begin(), rg.units.end());
        }
      }
    }
    rc.pass = rc.missing.empty();
    report.routes.push_back(std::move(rc));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Explicit-state exploration

struct Bound {
  std::size_t max_total_regions = 0;  // 0 with `automatic` set means 2 * |catalog|
  std::size_t max_states = 1000000;
  bool automatic = true;

  static Bound regions(std::size_t n, std::size_t states = 1000000) { return {n, states, false}; }
};

inline std::size_t resolve_region_bound(const Bound& b, const RegionCatalog& cat) {
  return b.automatic ? 2 * cat.size() : b.max_total_regions;
}

struct StateSpace {
  std::vector<compact::State> states;  // discovery (breadth-first) order
  std::vector<int> parent;             // -1 for the initial state
  std::vector<compact::Event> via;     // event from parent, in the parent's indexing
  std::vector<int> depth;
  std::size_t transitions = 0;
  bool truncated = false;
  std::size_t region_bound = 0;
  std::size_t max_ma_length = 0;

  std::size_t size() const { return states.size(); }
};

// Level-synchronous breadth-first closure from the initial state. Successors
// of a level may be computed by several workers; they are merged in frontier
// order so the result does not depend on the worker count.
inline StateSpace explore(const Interlocking& il, const Bound& bound = {}, unsigned threads = 1) {
  StateSpace sp;
  sp.region_bound = resolve_region_bound(bound, il.catalog());
  std::unordered_map<compact::State, int, compact::StateHash> seen;

  auto add = [&](compact::State s, int parent, compact::Event via, int depth) {
    seen.emplace(s, static_cast<int>(sp.states.size()));
    for (const auto& ma : s) sp.max_ma_length = std::max(sp.max_ma_length, ma.size());
    sp.states.push_back(std::move(s));
    sp.parent.push_back(parent);
    sp.via.push_back(via);
    sp.depth.push_back(depth);
  };
  add({}, -1, {}, 0);

  struct Succ {
    compact::Event event;
    compact::State state;
  };

  std::size_t level_begin = 0;
  int depth = 0;
  while (level_begin < sp.states.size()) {
    const std::size_t level_end = sp.states.size();
    const std::size_t n = level_end - level_begin;
    std::vector<std::vector<Succ>> succ(n);

    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const auto& s = sp.states[level_begin + i];
        for (const auto& e : il.enabled(s)) succ[i].push_back({e, il.apply(s, e)});
      }
    };
    unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (workers == 1) {
      work(0, n);
    } else {
      std::vector<std::thread> pool;
      std::size_t chunk = (n + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo < hi) pool.emplace_back(work, lo, hi);
      }
      for (auto& t : pool) t.join();
    }

    ++depth;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& [event, state] : succ[i]) {
        if (compact::total_regions(state) > sp.region_bound) {
          sp.truncated = true;
          continue;
        }
        ++sp.transitions;
        if (seen.count(state)) continue;
        if (sp.states.size() >= bound.max_states) {
          sp.truncated = true;
          continue;
        }
        add(std::move(state), static_cast<int>(level_begin + i), event, depth);
      }
    }
    level_begin = level_end;
  }
  return sp;
}

inline StateSpace explore(const SchemePlan& plan, const Bound& bound = {}, unsigned threads = 1) {
  return explore(Interlocking(plan), bound, threads);
}

inline std::vector<Event> trace_to(const Interlocking& il, const StateSpace& sp, int index) {
  std::vector<int> chain;
  for (int i = index; i > 0; i = sp.parent[i]) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  std::vector<Event> out;
  for (int i : chain) out.push_back(il.decode(sp.states[sp.parent[i]], sp.via[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Verdicts

enum class VerdictKind { Safe, Unsafe, Inconclusive };

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Safe: return "Safe";
    case VerdictKind::Unsafe: return "Unsafe";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::Safe;
  std::vector<Event> counterexample;
  // Safety: the two overlapping MAs. Route condition: the MA holding a region
  // of `open_route`.
  std::vector<MovementAuthority> witness;
  std::optional<RouteId> open_route;
  std::optional<Region> region;
  std::string reason;
  std::size_t states = 0;
  std::size_t region_bound = 0;
};

namespace verifier_detail {

struct SafetyHit {
  int a, b;
  compact::RegionIx region;
};

inline std::optional<SafetyHit> safety_violation(const compact::State& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      for (auto r : s[i]) {
        if (std::find(s[j].begin(), s[j].end(), r) != s[j].end()) {
          return SafetyHit{static_cast<int>(i), static_cast<int>(j), r};
        }
      }
    }
  }
  return std::nullopt;
}

struct RouteHit {
  int ma;
  int route;
  compact::RegionIx region;
};

inline std::optional<RouteHit> route_violation(const Interlocking& il, const compact::State& s) {
  auto occ = il.occupied(s);
  for (std::size_t r = 0; r < il.route_count(); ++r) {
    if (!il.route_open(occ, static_cast<int>(r))) continue;
    const auto& regs = il.route_regions(static_cast<int>(r));
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (auto rg : s[i]) {
        if (std::find(regs.begin(), regs.end(), rg) != regs.end()) {
          return RouteHit{static_cast<int>(i), static_cast<int>(r), rg};
        }
      }
    }
  }
  return std::nullopt;
}

inline Verdict inconclusive_or_safe(const StateSpace& sp) {
  Verdict v;
  v.states = sp.size();
  v.region_bound = sp.region_bound;
  if (sp.truncated) {
    v.kind = VerdictKind::Inconclusive;
    v.reason = "state space truncated at " + std::to_string(sp.region_bound) + " assigned regions / " +
               std::to_string(sp.size()) + " states without a violation";
  }
  return v;
}

}  // namespace verifier_detail

// Shortest violating trace: the first violating state in breadth-first
// discovery order.
inline Verdict check_safety(const Interlocking& il, const StateSpace& sp) {
  for (std::size_t i = 0; i < sp.size(); ++i) {
    auto hit = verifier_detail::safety_violation(sp.states[i]);
    if (!hit) continue;
    Verdict v;
    v.kind = VerdictKind::Unsafe;
    v.states = sp.size();
    v.region_bound = sp.region_bound;
    v.counterexample = trace_to(il, sp, static_cast<int>(i));
    v.witness = {il.decode(sp.states[i][hit->a]), il.decode(sp.states[i][hit->b])};
    v.region = il.region_values()[hit->region];
    return v;
  }
  return verifier_detail::inconclusive_or_safe(sp);
}

inline Verdict check_route_condition(const Interlocking& il, const StateSpace& sp) {
  for (std::size_t i = 0; i < sp.size(); ++i) {
    auto hit = verifier_detail::route_violation(il, sp.states[i]);
    if (!hit) continue;
    Verdict v;
    v.kind = VerdictKind::Unsafe;
    v.states = sp.size();
    v.region_bound = sp.region_bound;
    v.counterexample = trace_to(il, sp, static_cast<int>(i));
    v.witness = {il.decode(sp.states[i][hit->ma])};
    v.open_route = il.route_id(hit->route);
    v.region = il.region_values()[hit->region];
    return v;
  }
  return verifier_detail::inconclusive_or_safe(sp);
}

inline Verdict check_safety(const SchemePlan& plan, const Bound& bound = {}, unsigned threads = 1) {
  Interlocking il(plan);
  return check_safety(il, explore(il, bound, threads));
}

inline Verdict check_route_condition(const SchemePlan& plan, const Bound& bound = {}, unsigned threads = 1) {
  Interlocking il(plan);
  return check_route_condition(il, explore(il, bound, threads));
}

struct LemmaReport {
  bool agree = false;
  bool inconclusive = false;
  Verdict safety;
  Verdict route_condition;
};

// Both properties over one state space. A truncated space is inconclusive
// unless both checks already found violations.
inline LemmaReport check_lemma_equivalence(const SchemePlan& plan, const Bound& bound = {}, unsigned threads = 1) {
  Interlocking il(plan);
  auto sp = explore(il, bound, threads);
  LemmaReport rep;
  rep.safety = check_safety(il, sp);
  rep.route_condition = check_route_condition(il, sp);
  auto a = rep.safety.kind, b = rep.route_condition.kind;
  rep.inconclusive = a == VerdictKind::Inconclusive || b == VerdictKind::Inconclusive;
  rep.agree = !rep.inconclusive && a == b;
  return rep;
}

// ---------------------------------------------------------------------------
// Clear-table mutants

struct Mutant {
  RouteId route;
  UnitId removed;
  SchemePlan plan;
};

// One mutant per (route, clear unit) cell, produced on demand. Rows follow
// route declaration order; rows of undeclared routes come last.
class MutantRange {
 public:
  explicit MutantRange(const SchemePlan& plan) : plan_(&plan) {
    for (const auto& r : plan.routes) {
      if (auto it = plan.control.find(r.id); it != plan.control.end()) {
        for (std::size_t k = 0; k < it->second.clear.size(); ++k) cells_.push_back({r.id, k});
      }
    }
    for (const auto& [rid, e] : plan.control) {
      if (plan.find_route(rid)) continue;
      for (std::size_t k = 0; k < e.clear.size(); ++k) cells_.push_back({rid, k});
    }
  }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Mutant;
    using difference_type = std::ptrdiff_t;
    using pointer = void;
    using reference = Mutant;

    iterator(const MutantRange* owner, std::size_t i) : owner_(owner), i_(i) {}
    Mutant operator*() const { return owner_->make(i_); }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    iterator operator++(int) {
      auto copy = *this;
      ++i_;
      return copy;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.i_ == b.i_; }

   private:
    const MutantRange* owner_;
    std::size_t i_;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, cells_.size()}; }
  std::size_t size() const { return cells_.size(); }

 private:
  struct Cell {
    RouteId route;
    std::size_t index;
  };

  Mutant make(std::size_t i) const {
    const auto& cell = cells_[i];
    Mutant m{cell.route, {}, *plan_};
    auto& clear = m.plan.control.at(cell.route).clear;
    m.removed = clear[cell.index];
    clear.erase(clear.begin() + static_cast<std::ptrdiff_t>(cell.index));
    return m;
  }

  const SchemePlan* plan_;
  std::vector<Cell> cells_;
};

inline MutantRange clear_table_mutants(const SchemePlan& plan) { return MutantRange(plan); }

}  // namespace schemeplan
