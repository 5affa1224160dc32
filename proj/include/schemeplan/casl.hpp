#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "schemeplan/model.hpp"
#include "schemeplan/regions.hpp"

namespace schemeplan {

struct EmitOptions {
  // Lower-case the first letter of every constant (LA1 -> lA1).
  bool lowercase_leading = false;
};

namespace casl {

inline const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = {
      // CASL keywords
      "and", "arch", "as", "assoc", "axiom", "axioms", "closed", "comm", "def", "else", "end", "exists", "false",
      "fit", "free", "from", "generated", "get", "given", "hide", "idem", "if", "in", "lambda", "library", "local",
      "not", "op", "ops", "pred", "preds", "result", "reveal", "sort", "sorts", "spec", "then", "to", "true", "type",
      "types", "unit", "units", "var", "vars", "version", "view", "when", "with", "within", "forall",
      // symbols of the fixed signature below
      "Time", "suc", "pre", "Pair", "first", "second", "pair", "List", "Station", "Unit", "Linear", "Point",
      "Connector", "UnitPathPair", "Route", "Region", "MA", "getUnit", "getPath", "has", "regions", "assigned",
      "canExtend", "canReduce", "ext", "clear", "isOpenAt", "eps", "share", "releasedBy", "Nil", "Cons"};
  return words;
}

// Maps plan identifiers to CASL constants. Units, connectors and routes share
// one namespace; clashes with reserved words or earlier names get a numeric
// suffix and a warning.
class Names {
 public:
  explicit Names(const EmitOptions& opt) : opt_(opt) {}

  std::string add(const std::string& kind, const std::string& id) {
    auto key = std::make_pair(kind, id);
    if (auto it = names_.find(key); it != names_.end()) return it->second;
    std::string base = id;
    if (opt_.lowercase_leading && !base.empty() && base[0] >= 'A' && base[0] <= 'Z') base[0] = static_cast<char>(base[0] - 'A' + 'a');
    std::string name = base;
    for (int n = 2; reserved_words().count(name) || used_.count(name); ++n) name = base + "_" + std::to_string(n);
    if (name != base) {
      warnings_.push_back(kind + " '" + id + "' emitted as '" + name + "' to avoid a name clash");
    }
    used_.insert(name);
    names_.emplace(key, name);
    return name;
  }

  std::string get(const std::string& kind, const std::string& id) const {
    auto it = names_.find(std::make_pair(kind, id));
    return it == names_.end() ? id : it->second;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  EmitOptions opt_;
  std::map<std::pair<std::string, std::string>, std::string> names_;
  std::set<std::string> used_;
  std::vector<std::string> warnings_;
};

inline Names build_names(const SchemePlan& plan, const EmitOptions& opt) {
  Names names(opt);
  for (const auto& u : plan.units) names.add("unit", u.id.str());
  for (const auto& u : plan.units) {
    for (const auto& c : u.connectors()) names.add("connector", c.str());
  }
  for (const auto& r : plan.routes) names.add("route", r.id.str());
  return names;
}

inline const char* static_preamble() {
  return R"(spec Pair [sort S] [sort T] =
  sort Pair[S,T]
  ops first : Pair[S,T] -> S;
      second : Pair[S,T] -> T;
      pair : S * T -> Pair[S,T]
  forall s : S; t : T
  . first(pair(s, t)) = s
  . second(pair(s, t)) = t
end

spec Time =
  sort Time
  ops 0 : Time;
      suc : Time -> Time;
      pre : Time ->? Time
  pred __<=__ : Time * Time
  forall n : Time . 0 <= n
end

spec Datatypes =
  Time
and
  Pair [sort Connector] [sort Connector]
end

spec StaticSignature =
  Datatypes
then
  List [sort UnitPathPair]
then
  sorts Station, Unit
  sorts Linear, Point < Unit
  sort Route < List[UnitPathPair]
  ops getUnit : UnitPathPair -> Unit;
      getPath : UnitPathPair -> Pair[Connector,Connector]
  preds has : Station * Unit;
        has : Unit * Connector;
        __eps__ : UnitPathPair * Route
end

spec DSL =
  StaticSignature
end

spec DSLExtension =
  DSL
then
  List [sort Unit]
then
  sort Region < List[Unit]
then
  List [sort Region]
then
  sort MA < List[Region]
  ops units : Route -> List[Unit];
      regions : Route -> MA
  preds assigned : MA * Time;
        canExtend : MA * Time;
        canReduce : MA * Time;
        ext : MA * Route * MA;
        clear : Route * Unit;
        releasedBy : Route * Unit * Unit;
        __isOpenAt__ : Unit * Time;
        __isOpenAt__ : Route * Time;
        __eps__ : Unit * Region;
        __eps__ : Region * MA;
        share : MA * MA
  forall m : MA . not m = [] => not assigned(m, 0)  %(no_ma_0)%
  forall t : Time . assigned([] as MA, t)  %(empty_ma_assigned_at_all_times)%
  forall ma1 : MA; t : Time
  . not ma1 = [] =>
      assigned(ma1, suc(t)) =>
        (assigned(ma1, t) /\ not canExtend(ma1, t) /\ not canReduce(ma1, t))
        \/ (not assigned(ma1, t) /\ canExtend(ma1, t) /\ not canReduce(ma1, t))
        \/ (not assigned(ma1, t) /\ not canExtend(ma1, t) /\ canReduce(ma1, t))  %(assigned_defn)%
  forall ma1, ma2 : MA; r : Route
  . ext(ma1, r, ma2) => ma2 = ma1 ++ regions(r)  %(ext_defn)%
  forall ma1 : MA; t : Time
  . canExtend(ma1, t) <=>
      exists ma2 : MA; r : Route
      . assigned(ma2, t) /\ ext(ma2, r, ma1) /\ r isOpenAt t
        /\ (not ma2 = [] => not assigned(ma2, suc(t)))  %(extends_defn)%
  forall ma1 : MA; t : Time
  . canReduce(ma1, t) <=>
      exists rg : Region
      . assigned((rg :: ma1) as MA, t) /\ not assigned((rg :: ma1) as MA, suc(t))  %(reduces_defn)%
  forall t : Time
  . forall m1, m2 : MA
    . ((assigned(m1, suc(t)) => canExtend(m1, t)) /\ (assigned(m2, suc(t)) => canExtend(m2, t)))
      => m1 = m2  %(one_MA_changes)%
  forall r : Route; t : Time
  . r isOpenAt t <=> forall u : Unit . clear(r, u) => u isOpenAt t  %(route_open_defn)%
  forall t : Time; r : Route; rg : Region; ma : MA
  . assigned(ma, t) /\ rg eps regions(r) /\ rg eps ma =>
      exists u : Unit; upp : UnitPathPair
      . not u isOpenAt t /\ u eps rg /\ getUnit(upp) = u /\ upp eps r  %(occupied)%
  forall ma1, ma2 : MA
  . share(ma1, ma2) <=> exists rg : Region . rg eps ma1 /\ rg eps ma2  %(share_defn)%
  . ((forall ma1, ma2 : MA
      . share(ma1, ma2) => ma1 = ma2 \/ not (assigned(ma1, 0) /\ assigned(ma2, 0)))
     /\ forall t : Time
        . (forall ma1, ma2 : MA
           . share(ma1, ma2) => ma1 = ma2 \/ not (assigned(ma1, t) /\ assigned(ma2, t)))
          => (forall ma1, ma2 : MA
              . share(ma1, ma2) => ma1 = ma2 \/ not (assigned(ma1, suc(t)) /\ assigned(ma2, suc(t)))))
    => forall t : Time
       . forall ma1, ma2 : MA
         . share(ma1, ma2) => ma1 = ma2 \/ not (assigned(ma1, t) /\ assigned(ma2, t))  %(time_induction)%
end

spec DSLemmas =
  DSLExtension
then %implies
  . (forall t : Time; m1, m2 : MA
     . share(m1, m2) => m1 = m2 \/ not (assigned(m1, t) /\ assigned(m2, t)))
    <=>
    (forall t : Time; r : Route; rg : Region; ma : MA
     . assigned(ma, t) /\ rg eps ma /\ rg eps regions(r) => not r isOpenAt t)  %(reduction_to_routes)%
end
)";
}

template <class T, class F>
std::string join(const std::vector<T>& xs, const std::string& sep, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + f(xs[i]);
  return out;
}

inline std::string unit_list(const Names& names, const std::vector<UnitId>& units) {
  return "[" + join(units, ", ", [&](const UnitId& u) { return names.get("unit", u.str()); }) + "]";
}

}  // namespace casl

// Plan-independent proof goal.
inline std::string emit_safety_goal() {
  return R"(then %implies
  forall t : Time; r : Route; rg : Region; ma : MA
  . assigned(ma, t) /\ rg eps ma /\ rg eps regions(r) => not r isOpenAt t  %(all_routes)%
  forall t : Time; ma1, ma2 : MA
  . share(ma1, ma2) => ma1 = ma2 \/ not (assigned(ma1, t) /\ assigned(ma2, t))  %(safety)%
)";
}

// One implied per-route lemma each.
inline std::string emit_route_lemmas(const SchemePlan& plan, const EmitOptions& opt = {}) {
  auto names = casl::build_names(plan, opt);
  std::ostringstream os;
  os << "then %implies\n";
  if (plan.routes.empty()) os << "  %% no routes\n";
  for (const auto& r : plan.routes) {
    const std::string R = names.get("route", r.id.str());
    os << "  forall t : Time; rg : Region; ma : MA\n"
       << "  . assigned(ma, t) /\\ rg eps ma /\\ rg eps regions(" << R << ") => not " << R << " isOpenAt t  %("
       << R << "_lemma)%\n";
  }
  return os.str();
}

// Full library text for a plan, laid out as the verification structure:
// data types, DSL, extension, lemmas, concrete plan, safety.
inline std::string emit_scheme_plan(const SchemePlan& plan, const EmitOptions& opt = {},
                                    std::vector<std::string>* warnings = nullptr) {
  auto names = casl::build_names(plan, opt);
  if (warnings) *warnings = names.warnings();
  std::ostringstream os;
  os << "library " << (plan.name.empty() ? std::string("SchemePlan") : plan.name) << "\n\n"
     << "from Basic/StructuredDatatypes get List\n\n"
     << casl::static_preamble() << '\n';

  os << "spec ConcreteSchemePlan =\n  DSLExtension\nthen\n";
  std::vector<std::string> connectors;
  for (const auto& u : plan.units) {
    for (const auto& c : u.connectors()) {
      auto n = names.get("connector", c.str());
      if (std::find(connectors.begin(), connectors.end(), n) == connectors.end()) connectors.push_back(n);
    }
  }
  auto ident = [](const std::string& s) { return s; };
  if (plan.units.empty() && plan.routes.empty()) os << "  %% empty plan\n";
  if (!plan.units.empty()) {
    os << "  free type Unit ::= "
       << casl::join(plan.units, " | ", [&](const Unit& u) { return names.get("unit", u.id.str()); }) << '\n';
    os << "  free type Connector ::= " << casl::join(connectors, " | ", ident) << '\n';
  }
  if (!plan.routes.empty()) {
    os << "  free type Route ::= "
       << casl::join(plan.routes, " | ", [&](const Route& r) { return names.get("route", r.id.str()); }) << '\n';
  }

  if (!plan.units.empty()) os << "  %% topology\n";
  for (const auto& u : plan.units) {
    const std::string un = names.get("unit", u.id.str());
    os << "  . " << un << " in " << (u.is_point() ? "Point" : "Linear") << '\n';
    for (const auto& c : u.connectors()) os << "  . has(" << un << ", " << names.get("connector", c.str()) << ")\n";
  }

  if (!plan.control.empty()) os << "  %% control table\n";
  for (const auto& r : plan.routes) {
    auto it = plan.control.find(r.id);
    if (it == plan.control.end()) continue;
    const std::string rn = names.get("route", r.id.str());
    for (const auto& u : it->second.clear) os << "  . clear(" << rn << ", " << names.get("unit", u.str()) << ")\n";
  }

  if (!plan.routes.empty()) os << "  %% routes and regions\n";
  for (const auto& r : plan.routes) {
    const std::string rn = names.get("route", r.id.str());
    os << "  . units(" << rn << ") = " << casl::unit_list(names, route_units(r)) << '\n';
    auto regs = regions_of_route(plan, r.id);
    os << "  . regions(" << rn << ") = ["
       << casl::join(regs, ", ", [&](const Region& rg) { return casl::unit_list(names, rg.units); }) << "]\n";
  }

  if (!plan.release.empty()) os << "  %% release table\n";
  for (const auto& r : plan.routes) {
    auto it = plan.release.find(r.id);
    if (it == plan.release.end()) continue;
    const std::string rn = names.get("route", r.id.str());
    for (const auto& e : it->second) {
      os << "  . releasedBy(" << rn << ", " << names.get("unit", e.point.str()) << ", "
         << names.get("unit", e.cleared_by.str()) << ")\n";
    }
  }
  os << "end\n\n";

  os << "spec Safety =\n  ConcreteSchemePlan\n"
     << emit_route_lemmas(plan, opt) << emit_safety_goal() << "end\n\n";

  os << "spec DSLForVerification =\n"
     << "  Datatypes\nthen\n  DSL\nthen\n  DSLExtension\nthen %implies\n  DSLemmas\n"
     << "then\n  ConcreteSchemePlan\nthen %implies\n  Safety\nend\n";
  return os.str();
}

// Counts `spec` openings against `end` closings, ignoring comments.
inline bool casl_balanced(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int depth = 0;
  while (std::getline(in, line)) {
    if (auto pos = line.find("%%"); pos != std::string::npos) line.erase(pos);
    std::istringstream ws(line);
    std::string first;
    if (!(ws >> first)) continue;
    if (first == "spec") ++depth;
    if (first == "end") {
      if (--depth < 0) return false;
    }
  }
  return depth == 0;
}

}  // namespace schemeplan
