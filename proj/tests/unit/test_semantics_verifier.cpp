#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "properties.hpp"
#include "schemeplan/schemeplan.hpp"

using namespace schemeplan;

namespace {

std::set<oracle::State> oracle_view(const Interlocking& il, const StateSpace& sp) {
  std::set<oracle::State> out;
  for (const auto& s : properties::decoded_states(il, sp)) out.insert(properties::to_oracle(s));
  return out;
}

MovementAuthority ma_of(const Interlocking& il, std::initializer_list<int> regions) {
  MovementAuthority ma;
  for (int ix : regions) ma.regions.push_back(il.catalog().regions.at(static_cast<std::size_t>(ix)));
  return ma;
}

}  // namespace

TEST(Semantics, InitialStateEnablesEveryOpenRoute) {
  Interlocking il(fixtures::station());
  auto evs = il.enabled_events(il.initial_state());
  EXPECT_EQ(evs.size(), 4u);
  for (const auto& e : evs) {
    ASSERT_TRUE(std::holds_alternative<Extend>(e));
    EXPECT_TRUE(std::get<Extend>(e).from.empty());
  }
}

TEST(Semantics, ExtendAndReduce) {
  Interlocking il(fixtures::station());
  auto s1 = il.apply(il.initial_state(), Extend{{}, RouteId("RX1")});
  EXPECT_EQ(s1, InterlockingState::of({ma_of(il, {0, 1})}));
  EXPECT_FALSE(il.is_route_open(s1, RouteId("RX2")));
  EXPECT_TRUE(il.is_route_open(s1, RouteId("R2Y")));
  auto s2 = il.apply(s1, Reduce{ma_of(il, {0, 1})});
  EXPECT_EQ(s2, InterlockingState::of({ma_of(il, {1})}));
  EXPECT_TRUE(il.is_route_open(s2, RouteId("RX2")));
  EXPECT_TRUE(il.is_route_open(s2, RouteId("R1Y")));
  auto s3 = il.apply(s2, Reduce{ma_of(il, {1})});
  EXPECT_EQ(s3, il.initial_state());
}

TEST(Semantics, ExtendFromMaNeedsConnectivity) {
  Interlocking il(fixtures::station());
  auto s = il.apply(il.initial_state(), Extend{{}, RouteId("RX1")});
  EXPECT_TRUE(il.can_extend(s, ma_of(il, {0, 1}), RouteId("R1Y")));
  EXPECT_FALSE(il.can_extend(s, ma_of(il, {0, 1}), RouteId("R2Y")));
  auto t = il.apply(s, Extend{ma_of(il, {0, 1}), RouteId("R1Y")});
  EXPECT_EQ(t, InterlockingState::of({ma_of(il, {0, 1, 3})}));
}

TEST(Semantics, DisabledEventThrows) {
  Interlocking il(fixtures::station());
  auto s = il.apply(il.initial_state(), Extend{{}, RouteId("RX1")});
  EXPECT_THROW(il.apply(s, Extend{{}, RouteId("RX2")}), EventNotEnabled);
  EXPECT_THROW(il.apply(il.initial_state(), Reduce{ma_of(il, {0})}), EventNotEnabled);
}

TEST(Semantics, CompactAndValueSemanticsAgree) {
  Interlocking il(fixtures::station());
  auto sp = explore(il);
  for (const auto& cs : sp.states) {
    auto s = il.decode(cs);
    EXPECT_EQ(il.encode(s), cs);
    auto evs = il.enabled_events(s);
    EXPECT_EQ(evs.size(), il.enabled(cs).size());
    for (const auto& e : evs) {
      auto ce = il.encode_event(cs, e);
      ASSERT_TRUE(ce.has_value());
      EXPECT_EQ(il.decode(il.apply(cs, *ce)), il.apply(s, e));
    }
  }
}

TEST(Trace, ParseResolveReplayTwoTrains) {
  Interlocking il(fixtures::station());
  auto lines = parse_trace(fixtures::slurp(fixtures::sample_path("two_trains.trace")));
  auto events = resolve_trace(il, lines);
  EXPECT_EQ(events.size(), 10u);
  auto states = replay(il, events);
  EXPECT_EQ(states.size(), 11u);
  EXPECT_TRUE(states.back().assigned.empty());
}

TEST(Trace, SyntaxAndReplayErrors) {
  Interlocking il(fixtures::station());
  EXPECT_THROW(parse_trace("extend\n"), TraceSyntaxError);
  EXPECT_THROW(parse_trace("jump 1\n"), TraceSyntaxError);
  EXPECT_THROW(resolve_trace(il, parse_trace("reduce 0\n")), ReplayError);
  EXPECT_THROW(resolve_trace(il, parse_trace("extend empty NOPE\n")), ReplayError);
}

TEST(Explore, StationMatchesNaiveOracle) {
  auto plan = fixtures::station();
  Interlocking il(plan);
  auto sp = explore(il);
  EXPECT_FALSE(sp.truncated);
  EXPECT_EQ(sp.region_bound, 8u);
  EXPECT_EQ(sp.size(), 26u);
  auto ref = oracle::Naive(plan).reach(8);
  EXPECT_FALSE(ref.truncated);
  EXPECT_EQ(oracle_view(il, sp), ref.states);
}

TEST(Explore, SmallBoundTruncates) {
  Interlocking il(fixtures::station());
  auto sp = explore(il, Bound::regions(2));
  EXPECT_TRUE(sp.truncated);
  auto v = check_safety(il, sp);
  EXPECT_EQ(v.kind, VerdictKind::Inconclusive);
  auto ref = oracle::Naive(fixtures::station()).reach(2);
  EXPECT_EQ(oracle_view(il, sp), ref.states);
}

TEST(Explore, StateCapTruncates) {
  Interlocking il(fixtures::benchmark("terminal.plan"));
  auto sp = explore(il, Bound::regions(0, 10));
  EXPECT_TRUE(sp.truncated);
  EXPECT_LE(sp.size(), 10u);
}

TEST(Explore, ThreadsGiveSameStates) {
  Interlocking il(fixtures::benchmark("terminal.plan"));
  auto a = explore(il, {}, 1);
  auto b = explore(il, {}, 4);
  EXPECT_EQ(std::set<compact::State>(a.states.begin(), a.states.end()),
            std::set<compact::State>(b.states.begin(), b.states.end()));
}

TEST(Verifier, StationSafeInAllModes) {
  auto plan = fixtures::station();
  EXPECT_TRUE(check_routes_static(plan).pass());
  EXPECT_EQ(check_safety(plan).kind, VerdictKind::Safe);
  EXPECT_EQ(check_route_condition(plan).kind, VerdictKind::Safe);
  auto lemma = check_lemma_equivalence(plan);
  EXPECT_TRUE(lemma.agree);
}

TEST(Verifier, Plat1MutantUnsafeWithShortTrace) {
  auto plan = fixtures::load("simple_station_no_plat1.plan");
  EXPECT_FALSE(check_routes_static(plan).pass());
  Interlocking il(plan);
  auto sp = explore(il);
  auto v = check_safety(il, sp);
  ASSERT_EQ(v.kind, VerdictKind::Unsafe);
  EXPECT_LE(v.counterexample.size(), 4u);
  EXPECT_EQ(v.witness.size(), 2u);
  auto r = check_route_condition(il, sp);
  ASSERT_EQ(r.kind, VerdictKind::Unsafe);
  EXPECT_TRUE(r.open_route.has_value());
  EXPECT_TRUE(properties::counterexample_replay(plan, v, r).empty());
}

TEST(Verifier, MutantsAgreeAndOnlyPlatformDropsAreUnsafe) {
  auto station = fixtures::station();
  auto range = clear_table_mutants(station);
  EXPECT_EQ(range.size(), 10u);
  std::set<std::string> unsafe;
  for (const auto& m : range) {
    auto rep = check_lemma_equivalence(m.plan);
    EXPECT_TRUE(rep.agree) << m.route.str() << "-" << m.removed.str();
    if (rep.safety.kind == VerdictKind::Unsafe) unsafe.insert(m.route.str() + "-" + m.removed.str());
    EXPECT_TRUE(properties::counterexample_replay(m.plan, rep.safety, rep.route_condition).empty());
  }
  EXPECT_EQ(unsafe, (std::set<std::string>{"RX1-PLAT1", "RX2-PLAT2"}));
}

// Dropping a clear unit only weakens the guard, so the mutant reaches at
// least everything the original reaches.
TEST(Verifier, MutationOnlyGrowsReachableSet) {
  auto station = fixtures::station();
  Interlocking base(station);
  auto ref = oracle_view(base, explore(base));
  for (const auto& m : clear_table_mutants(station)) {
    Interlocking il(m.plan);
    auto mine = oracle_view(il, explore(il, Bound::regions(8)));
    EXPECT_TRUE(std::includes(mine.begin(), mine.end(), ref.begin(), ref.end()))
        << m.route.str() << "-" << m.removed.str();
  }
}

TEST(Verifier, WeakStaticConditionIsLooser) {
  auto plan = fixtures::station();
  plan.control.at(RouteId("RX1")).clear = {UnitId("LA1"), UnitId("PLAT1")};
  auto strict = check_routes_static(plan);
  auto weak = check_routes_static(plan, true);
  EXPECT_FALSE(strict.pass());
  EXPECT_TRUE(weak.pass());
}

// A single-region route that clears none of its own units breaks the route
// condition, yet two equal MAs collapse in a set so safety never fails.
TEST(Verifier, KnownLemmaGap) {
  auto plan = parse_plan(
      "plan Gap\nunit linear A a b\nunit linear B b c\nmarker entry N at a\nmarker exit E at c\n"
      "route R : A(a,b) B(b,c)\nclear R :\n");
  ASSERT_FALSE(has_errors(check_plan(plan)));
  EXPECT_TRUE(properties::lemma_gap(plan));
  auto rep = check_lemma_equivalence(plan);
  EXPECT_EQ(rep.safety.kind, VerdictKind::Safe);
  EXPECT_EQ(rep.route_condition.kind, VerdictKind::Unsafe);
  EXPECT_FALSE(rep.agree);
}

TEST(Properties, FrameAndMonotoneBlockingOnBenchmarks) {
  for (const char* name : {"pass_through.plan", "double_junction.plan", "underground.plan"}) {
    Interlocking il(fixtures::benchmark(name));
    auto states = properties::decoded_states(il, explore(il));
    auto fr = properties::frame(il, states);
    auto mb = properties::monotone_blocking(il, states);
    EXPECT_TRUE(fr.empty()) << name << ": " << fr.front();
    EXPECT_TRUE(mb.empty()) << name << ": " << mb.front();
  }
}

TEST(Properties, RandomPlansAgainstOracle) {
  auto rep = properties::random_suite(60, 99u);
  EXPECT_EQ(rep.plans, 60);
  EXPECT_GT(rep.unsafe, 0);
  EXPECT_GT(rep.static_pass, 0);
  for (const auto& f : rep.failures) ADD_FAILURE() << f;
}

TEST(Report, VerdictJsonRoundTrip) {
  auto plan = fixtures::load("simple_station_no_plat1.plan");
  Interlocking il(plan);
  auto sp = explore(il);
  for (const auto& v : {check_safety(il, sp), check_route_condition(il, sp)}) {
    auto doc = to_json(v);
    auto back = verdict_from_json(doc);
    EXPECT_EQ(back.kind, v.kind);
    EXPECT_EQ(back.counterexample, v.counterexample);
    EXPECT_EQ(back.witness, v.witness);
    EXPECT_EQ(back.open_route, v.open_route);
    EXPECT_EQ(back.region, v.region);
    EXPECT_EQ(to_json(back), doc);
  }
}
