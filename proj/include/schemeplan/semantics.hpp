#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "schemeplan/model.hpp"
#include "schemeplan/regions.hpp"

namespace schemeplan {

struct MovementAuthority {
  std::vector<Region> regions;

  bool empty() const { return regions.empty(); }
  std::size_t size() const { return regions.size(); }

  friend bool operator==(const MovementAuthority&, const MovementAuthority&) = default;
  friend auto operator<=>(const MovementAuthority&, const MovementAuthority&) = default;

  friend std::ostream& operator<<(std::ostream& os, const MovementAuthority& ma) {
    os << '[';
    for (std::size_t i = 0; i < ma.regions.size(); ++i) os << (i ? "," : "") << ma.regions[i];
    return os << ']';
  }
};

// Set of assigned nonempty MAs, kept sorted and duplicate free. The empty MA
// is implicitly always available and never stored.
struct InterlockingState {
  std::vector<MovementAuthority> assigned;

  static InterlockingState of(std::vector<MovementAuthority> mas) {
    InterlockingState s;
    for (auto& m : mas) {
      if (!m.empty()) s.assigned.push_back(std::move(m));
    }
    std::sort(s.assigned.begin(), s.assigned.end());
    s.assigned.erase(std::unique(s.assigned.begin(), s.assigned.end()), s.assigned.end());
    return s;
  }

  bool contains(const MovementAuthority& ma) const {
    return std::binary_search(assigned.begin(), assigned.end(), ma);
  }

  std::size_t total_regions() const {
    std::size_t n = 0;
    for (const auto& m : assigned) n += m.size();
    return n;
  }

  friend bool operator==(const InterlockingState&, const InterlockingState&) = default;
  friend auto operator<=>(const InterlockingState&, const InterlockingState&) = default;
};

struct Extend {
  MovementAuthority from;
  RouteId route;
  friend bool operator==(const Extend&, const Extend&) = default;
  friend auto operator<=>(const Extend&, const Extend&) = default;
};

struct Reduce {
  MovementAuthority ma;
  friend bool operator==(const Reduce&, const Reduce&) = default;
  friend auto operator<=>(const Reduce&, const Reduce&) = default;
};

// Canonical event order: extensions before reductions, then by fields.
using Event = std::variant<Extend, Reduce>;

inline std::string to_string(const Event& e) {
  std::ostringstream os;
  if (const auto* x = std::get_if<Extend>(&e)) {
    os << "extend " << x->from << " by " << x->route;
  } else {
    os << "reduce " << std::get<Reduce>(e).ma;
  }
  return os.str();
}

class MissingClearEntry : public std::runtime_error {
 public:
  explicit MissingClearEntry(const RouteId& r)
      : std::runtime_error("route '" + r.str() + "' has no clear entry"), route(r) {}
  RouteId route;
};

class EventNotEnabled : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Compact encoding used by the explorer: regions and routes are numbered in
// value order so that lexicographic order on the encoding equals the
// canonical order on values.
namespace compact {

using RegionIx = std::uint16_t;
using MA = std::vector<RegionIx>;
using State = std::vector<MA>;

struct Event {
  bool reduce = false;
  int ma = -1;  // index into the pre-state, -1 for the empty MA
  int route = -1;
  friend bool operator==(const Event&, const Event&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept {
    std::size_t seed = s.size();
    for (const auto& ma : s) {
      hash_combine(seed, ma.size());
      for (auto r : ma) hash_combine(seed, r);
    }
    return seed;
  }
};

inline std::size_t total_regions(const State& s) {
  std::size_t n = 0;
  for (const auto& m : s) n += m.size();
  return n;
}

class UnitMask {
 public:
  UnitMask() = default;
  explicit UnitMask(std::size_t bits) : words_((bits + 63) / 64, 0) {}

  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1; }

  UnitMask& operator|=(const UnitMask& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }

  bool intersects(const UnitMask& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & o.words_[i]) return true;
    }
    return false;
  }

 private:
  std::vector<std::uint64_t> words_;
};

}  // namespace compact

// Operational semantics of MA assignment over one plan. Precomputes regions
// per route, clear masks and which connectors each route-final region leads to.
class Interlocking {
 public:
  explicit Interlocking(const SchemePlan& plan) : plan_(plan), catalog_(build_catalog(plan)) {
    for (std::size_t i = 0; i < plan.units.size(); ++i) unit_ix_.emplace(plan.units[i].id, i);

    regions_ = catalog_.regions;
    std::sort(regions_.begin(), regions_.end());
    for (const auto& rg : regions_) {
      compact::UnitMask m(unit_ix_.size());
      for (const auto& u : rg.units) {
        if (auto it = unit_ix_.find(u); it != unit_ix_.end()) m.set(it->second);
      }
      region_masks_.push_back(std::move(m));
    }
    region_exits_.resize(regions_.size());

    std::vector<const Route*> sorted;
    for (const auto& r : plan.routes) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const Route* a, const Route* b) { return a->id < b->id; });
    for (const Route* r : sorted) {
      RouteInfo info;
      info.id = r->id;
      for (const auto& rg : catalog_.by_route.at(r->id)) info.regions.push_back(region_ix(rg));
      info.clear = compact::UnitMask(unit_ix_.size());
      if (auto it = plan.control.find(r->id); it != plan.control.end()) {
        info.has_clear = true;
        for (const auto& u : it->second.clear) {
          if (auto ut = unit_ix_.find(u); ut != unit_ix_.end()) info.clear.set(ut->second);
        }
      }
      if (!r->steps.empty()) {
        info.entry = r->steps.front().path.from;
        info.exit = r->steps.back().path.to;
      }
      if (!info.regions.empty()) {
        auto& exits = region_exits_[info.regions.back()];
        if (std::find(exits.begin(), exits.end(), info.exit) == exits.end()) exits.push_back(info.exit);
      }
      route_ix_.emplace(r->id, routes_.size());
      routes_.push_back(std::move(info));
    }
  }

  const SchemePlan& plan() const { return plan_; }
  const RegionCatalog& catalog() const { return catalog_; }
  std::size_t route_count() const { return routes_.size(); }
  const RouteId& route_id(int ix) const { return routes_.at(ix).id; }
  const std::vector<Region>& region_values() const { return regions_; }

  InterlockingState initial_state() const { return {}; }

  // ---- value API ---------------------------------------------------------

  bool is_unit_open(const InterlockingState& s, const UnitId& unit) const {
    for (const auto& ma : s.assigned) {
      for (const auto& rg : ma.regions) {
        if (std::find(rg.units.begin(), rg.units.end(), unit) != rg.units.end()) return false;
      }
    }
    return true;
  }

  bool is_route_open(const InterlockingState& s, const RouteId& route) const {
    auto it = plan_.control.find(route);
    if (it == plan_.control.end()) throw MissingClearEntry(route);
    for (const auto& u : it->second.clear) {
      if (!is_unit_open(s, u)) return false;
    }
    return true;
  }

  bool can_extend(const InterlockingState& s, const MovementAuthority& from, const RouteId& route) const {
    auto rt = route_ix_.find(route);
    if (rt == route_ix_.end()) return false;
    if (!from.empty() && !s.contains(from)) return false;
    if (!is_route_open(s, route)) return false;
    if (from.empty()) return true;
    auto cf = encode(from);
    return cf && connects(*cf, static_cast<int>(rt->second));
  }

  std::vector<Event> enabled_events(const InterlockingState& s) const {
    auto cs = encode(s);
    std::vector<Event> out;
    for (const auto& e : enabled(cs)) out.push_back(decode(cs, e));
    return out;
  }

  InterlockingState apply(const InterlockingState& s, const Event& e) const {
    auto cs = encode(s);
    auto ce = encode_event(cs, e);
    if (!ce) throw EventNotEnabled(to_string(e) + ": not enabled");
    auto en = enabled(cs);
    if (std::find(en.begin(), en.end(), *ce) == en.end()) throw EventNotEnabled(to_string(e) + ": not enabled");
    return decode(apply(cs, *ce));
  }

  // ---- compact API -------------------------------------------------------

  std::optional<compact::MA> encode(const MovementAuthority& ma) const {
    compact::MA out;
    for (const auto& rg : ma.regions) {
      int ix = region_ix(rg);
      if (ix < 0) return std::nullopt;
      out.push_back(static_cast<compact::RegionIx>(ix));
    }
    return out;
  }

  // MAs over regions unknown to the plan cannot arise; encoding them is a
  // caller error.
  compact::State encode(const InterlockingState& s) const {
    compact::State out;
    for (const auto& ma : s.assigned) {
      auto c = encode(ma);
      if (!c) throw std::invalid_argument("state mentions a region that no route of the plan has");
      out.push_back(std::move(*c));
    }
    return out;
  }

  MovementAuthority decode(const compact::MA& ma) const {
    MovementAuthority out;
    for (auto r : ma) out.regions.push_back(regions_[r]);
    return out;
  }

  InterlockingState decode(const compact::State& s) const {
    InterlockingState out;
    for (const auto& ma : s) out.assigned.push_back(decode(ma));
    return out;
  }

  Event decode(const compact::State& pre, const compact::Event& e) const {
    if (e.reduce) return Reduce{decode(pre[e.ma])};
    return Extend{e.ma < 0 ? MovementAuthority{} : decode(pre[e.ma]), routes_[e.route].id};
  }

  std::optional<compact::Event> encode_event(const compact::State& pre, const Event& e) const {
    auto find_ma = [&](const MovementAuthority& ma) -> std::optional<int> {
      auto c = encode(ma);
      if (!c) return std::nullopt;
      auto it = std::lower_bound(pre.begin(), pre.end(), *c);
      if (it == pre.end() || *it != *c) return std::nullopt;
      return static_cast<int>(it - pre.begin());
    };
    if (const auto* x = std::get_if<Extend>(&e)) {
      auto rt = route_ix_.find(x->route);
      if (rt == route_ix_.end()) return std::nullopt;
      int from = -1;
      if (!x->from.empty()) {
        auto ix = find_ma(x->from);
        if (!ix) return std::nullopt;
        from = *ix;
      }
      return compact::Event{false, from, static_cast<int>(rt->second)};
    }
    const auto& r = std::get<Reduce>(e);
    if (r.ma.empty()) return std::nullopt;
    auto ix = find_ma(r.ma);
    if (!ix) return std::nullopt;
    return compact::Event{true, *ix, -1};
  }

  compact::UnitMask occupied(const compact::State& s) const {
    compact::UnitMask m(unit_ix_.size());
    for (const auto& ma : s) {
      for (auto r : ma) m |= region_masks_[r];
    }
    return m;
  }

  bool route_open(const compact::UnitMask& occ, int route) const {
    const auto& info = routes_[route];
    if (!info.has_clear) throw MissingClearEntry(info.id);
    return !occ.intersects(info.clear);
  }

  const compact::MA& route_regions(int route) const { return routes_[route].regions; }

  // Enabled events in canonical order.
  std::vector<compact::Event> enabled(const compact::State& s) const {
    auto occ = occupied(s);
    std::vector<char> open(routes_.size());
    for (std::size_t r = 0; r < routes_.size(); ++r) open[r] = route_open(occ, static_cast<int>(r));
    std::vector<compact::Event> out;
    for (std::size_t r = 0; r < routes_.size(); ++r) {
      if (open[r]) out.push_back({false, -1, static_cast<int>(r)});
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t r = 0; r < routes_.size(); ++r) {
        if (open[r] && connects(s[i], static_cast<int>(r))) out.push_back({false, static_cast<int>(i), static_cast<int>(r)});
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back({true, static_cast<int>(i), -1});
    return out;
  }

  compact::State apply(const compact::State& s, const compact::Event& e) const {
    compact::State out = s;
    compact::MA added;
    if (e.reduce) {
      added.assign(s[e.ma].begin() + 1, s[e.ma].end());
      out.erase(out.begin() + e.ma);
    } else {
      if (e.ma >= 0) {
        added = s[e.ma];
        out.erase(out.begin() + e.ma);
      }
      const auto& rr = routes_[e.route].regions;
      added.insert(added.end(), rr.begin(), rr.end());
    }
    if (!added.empty()) {
      auto it = std::lower_bound(out.begin(), out.end(), added);
      if (it == out.end() || *it != added) out.insert(it, std::move(added));
    }
    return out;
  }

 private:
  struct RouteInfo {
    RouteId id;
    compact::MA regions;
    compact::UnitMask clear;
    bool has_clear = false;
    ConnectorId entry;
    ConnectorId exit;
  };

  int region_ix(const Region& rg) const {
    auto it = std::lower_bound(regions_.begin(), regions_.end(), rg);
    if (it == regions_.end() || *it != rg) return -1;
    return static_cast<int>(it - regions_.begin());
  }

  // The MA ends where some route ending in its last region ends; the route
  // must start there.
  bool connects(const compact::MA& from, int route) const {
    if (from.empty()) return true;
    const auto& exits = region_exits_[from.back()];
    return std::find(exits.begin(), exits.end(), routes_[route].entry) != exits.end();
  }

  SchemePlan plan_;
  RegionCatalog catalog_;
  std::map<UnitId, std::size_t> unit_ix_;
  std::vector<Region> regions_;
  std::vector<compact::UnitMask> region_masks_;
  std::vector<std::vector<ConnectorId>> region_exits_;
  std::vector<RouteInfo> routes_;
  std::map<RouteId, std::size_t> route_ix_;
};

// ---------------------------------------------------------------------------
// Traces

class ReplayError : public std::runtime_error {
 public:
  ReplayError(std::size_t step, const std::string& reason)
      : std::runtime_error("step " + std::to_string(step) + ": " + reason), step(step), reason(reason) {}
  std::size_t step;  // 1-based event number
  std::string reason;
};

// States before and after every event; result[0] is the initial state.
inline std::vector<InterlockingState> replay(const Interlocking& il, const std::vector<Event>& events) {
  std::vector<InterlockingState> states{il.initial_state()};
  for (std::size_t i = 0; i < events.size(); ++i) {
    try {
      states.push_back(il.apply(states.back(), events[i]));
    } catch (const std::exception& e) {
      throw ReplayError(i + 1, e.what());
    }
  }
  return states;
}

inline std::vector<InterlockingState> replay(const SchemePlan& plan, const std::vector<Event>& events) {
  return replay(Interlocking(plan), events);
}

// One trace line: `extend <index|empty> <route>` or `reduce <index>`, MA
// indices 0-based into the canonical order of the pre-state.
struct TraceLine {
  bool reduce = false;
  std::optional<std::size_t> ma;
  RouteId route;
  int line = 0;
};

class TraceSyntaxError : public std::runtime_error {
 public:
  TraceSyntaxError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line(line) {}
  int line;
};

inline std::vector<TraceLine> parse_trace(std::string_view text) {
  std::vector<TraceLine> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> words;
    for (std::string w; ls >> w;) words.push_back(w);
    if (words.empty()) continue;

    auto index = [&](const std::string& w) -> std::size_t {
      if (w.empty() || !std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw TraceSyntaxError(line, "expected an MA index, got '" + w + "'");
      }
      return static_cast<std::size_t>(std::stoul(w));
    };

    TraceLine t;
    t.line = line;
    if (words[0] == "extend" && words.size() == 3) {
      if (words[1] != "empty") t.ma = index(words[1]);
      if (!is_identifier(words[2])) throw TraceSyntaxError(line, "'" + words[2] + "' is not a route id");
      t.route = RouteId(words[2]);
    } else if (words[0] == "reduce" && words.size() == 2) {
      t.reduce = true;
      t.ma = index(words[1]);
    } else {
      throw TraceSyntaxError(line, "expected 'extend <index|empty> <route>' or 'reduce <index>'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Resolves indices against the states reached so far.
inline std::vector<Event> resolve_trace(const Interlocking& il, const std::vector<TraceLine>& lines) {
  std::vector<Event> events;
  InterlockingState state = il.initial_state();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t.ma && *t.ma >= state.assigned.size()) {
      throw ReplayError(i + 1, "MA index " + std::to_string(*t.ma) + " out of range (state has " +
                                   std::to_string(state.assigned.size()) + " MAs)");
    }
    Event e = t.reduce ? Event{Reduce{state.assigned[*t.ma]}}
                       : Event{Extend{t.ma ? state.assigned[*t.ma] : MovementAuthority{}, t.route}};
    try {
      state = il.apply(state, e);
    } catch (const std::exception& ex) {
      throw ReplayError(i + 1, ex.what());
    }
    events.push_back(std::move(e));
  }
  return events;
}

inline std::string print_trace(const Interlocking& il, const std::vector<Event>& events) {
  std::ostringstream os;
  InterlockingState state = il.initial_state();
  for (const auto& e : events) {
    auto index_of = [&](const MovementAuthority& ma) {
      auto it = std::lower_bound(state.assigned.begin(), state.assigned.end(), ma);
      return static_cast<std::size_t>(it - state.assigned.begin());
    };
    if (const auto* x = std::get_if<Extend>(&e)) {
      os << "extend " << (x->from.empty() ? std::string("empty") : std::to_string(index_of(x->from))) << ' '
         << x->route << '\n';
    } else {
      os << "reduce " << index_of(std::get<Reduce>(e).ma) << '\n';
    }
    state = il.apply(state, e);
  }
  return os.str();
}

}  // namespace schemeplan
