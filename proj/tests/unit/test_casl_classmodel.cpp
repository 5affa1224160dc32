#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "fixtures.hpp"
#include "schemeplan/schemeplan.hpp"

using namespace schemeplan;

namespace {

// Compares with the stored golden; SCHEMEPLAN_UPDATE_GOLDEN=1 rewrites it.
void expect_golden(const std::string& name, const std::string& text) {
  auto path = fixtures::golden_path(name);
  if (const char* u = std::getenv("SCHEMEPLAN_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::ofstream(path, std::ios::binary) << text;
  }
  EXPECT_EQ(text, fixtures::slurp(path)) << name << " differs from golden";
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

ClassModel domain_model() { return parse_class_model(fixtures::slurp(fixtures::sample_path("railway_domain.cm"))); }

}  // namespace

TEST(Casl, StationGolden) {
  auto text = emit_scheme_plan(fixtures::station());
  expect_golden("simple_station.casl", text);
  EXPECT_EQ(text, emit_scheme_plan(fixtures::station()));
  EXPECT_TRUE(casl_balanced(text));
}

TEST(Casl, StationFacts) {
  auto text = emit_scheme_plan(fixtures::station());
  EXPECT_TRUE(contains(text, "free type Unit ::= LA1 | P1 | PLAT1 | PLAT2 | P2 | LA2\n"));
  EXPECT_TRUE(contains(text, ". clear(RX1, LA1)\n"));
  EXPECT_TRUE(contains(text, ". clear(R2Y, LA2)\n"));
  EXPECT_FALSE(contains(text, ". clear(RX1, PLAT2)"));
}

TEST(Casl, LowercaseOption) {
  auto text = emit_scheme_plan(fixtures::station(), EmitOptions{true});
  EXPECT_TRUE(contains(text, "free type Unit ::= lA1 | p1 | pLAT1 | pLAT2 | p2 | lA2\n")) << text.substr(0, 2000);
  EXPECT_TRUE(contains(text, "clear(rX1, lA1)"));
}

TEST(Casl, MutantDropsOneFact) {
  auto base = emit_scheme_plan(fixtures::station());
  auto mut = emit_scheme_plan(fixtures::load("simple_station_no_plat1.plan"));
  EXPECT_TRUE(contains(base, ". clear(RX1, PLAT1)"));
  EXPECT_FALSE(contains(mut, ". clear(RX1, PLAT1)"));
}

TEST(Casl, ReservedWordsAreRenamed) {
  auto plan = parse_plan("plan R\nunit linear then a b\nmarker entry N at a\nmarker exit E at b\n");
  std::vector<std::string> warnings;
  auto text = emit_scheme_plan(generate_tables(plan), {}, &warnings);
  EXPECT_FALSE(warnings.empty());
  EXPECT_FALSE(contains(text, "::= then\n"));
  EXPECT_TRUE(casl_balanced(text));
}

TEST(Casl, BalancedOnBenchmarks) {
  for (const char* name : {"pass_through.plan", "double_junction.plan", "terminal.plan", "underground.plan"}) {
    EXPECT_TRUE(casl_balanced(emit_scheme_plan(fixtures::benchmark(name)))) << name;
  }
}

TEST(ClassModel, ParsesSample) {
  auto m = domain_model();
  EXPECT_EQ(m.name, "RailwayDomain");
  EXPECT_EQ(m.classes.size(), 9u);
  EXPECT_EQ(m.generalisations.size(), 2u);
  EXPECT_EQ(m.properties.size(), 3u);
  EXPECT_EQ(m.relations.size(), 6u);
  EXPECT_TRUE(m.relations.back().dynamic);
}

TEST(ClassModel, ModalGolden) { expect_golden("railway_domain.modal", emit_modal(domain_model(), Notation::unicode())); }

TEST(ClassModel, CaslGolden) { expect_golden("railway_domain.casl", emit_casl(domain_model(), Notation::unicode())); }

TEST(ClassModel, KeyAxioms) {
  auto modal = emit_modal(domain_model(), Notation::unicode());
  auto casl = emit_casl(domain_model(), Notation::unicode());
  EXPECT_TRUE(contains(modal, "• ∀ s : Station • ∃ u : Unit • has(s,u)\n"));
  EXPECT_TRUE(contains(modal, "• ∀ u : Unit • ∃ c1, c2 : Connector • ¬ (c1 = c2) ∧ has(u,c1) ∧ has(u,c2)\n"));
  EXPECT_TRUE(contains(modal, "flexible ops isClosedAt : Unit →? Boolean\n"));
  EXPECT_TRUE(contains(casl, "op isClosedAt : Unit × Time →? Boolean\n"));
  EXPECT_TRUE(contains(casl, "pred has : Route × Unit × Time\n"));
  EXPECT_TRUE(contains(casl, "• ∀ t : Time • ∀ r : Route • ∃ u : Unit • has(r,u,t)\n"));
}

TEST(ClassModel, AsciiNotation) {
  auto text = emit_modal(domain_model());
  EXPECT_TRUE(contains(text, ". forall s : Station . exists u : Unit . has(s,u)\n"));
  EXPECT_FALSE(contains(text, "∀"));
}

TEST(ClassModel, TimeVariableAvoidsClash) {
  auto m = parse_class_model("model M\nclass Train\nclass Track\nassoc Train [0..1] -- Track [1] dynamic\n");
  auto text = emit_casl(m, Notation::ascii());
  EXPECT_TRUE(contains(text, "forall time : Time . forall t : Train")) << text;
  EXPECT_FALSE(contains(text, "forall t : Time"));
}

TEST(ClassModel, Errors) {
  auto line_of = [](const std::string& text) {
    try {
      parse_class_model(text);
    } catch (const ParseError& e) {
      return e.line;
    }
    return 0;
  };
  EXPECT_EQ(line_of("model M\nclass A\nclass A\n"), 3);
  EXPECT_EQ(line_of("model M\nclass A\nassoc A [1] -- B [1]\n"), 3);
  EXPECT_EQ(line_of("model M\nclass A\nclass B\nassoc A [3..1] -- B [1]\n"), 4);
  EXPECT_EQ(line_of("model M\nclass A\nclass B\nassoc A [x] -- B [1]\n"), 4);
  EXPECT_GT(line_of("model M\nclass A\nclass B\nextends A B\nextends B A\n"), 0);
  EXPECT_EQ(line_of("model M\nclass A\nprop sometimes A x : T\n"), 3);
}

TEST(ClassModel, UpperBoundCollapse) {
  auto m = parse_class_model("model M\nclass A\nclass B\nassoc A [1] -- B [0..2]\n");
  auto text = emit_modal(m, Notation::ascii());
  EXPECT_TRUE(contains(text, "b1, b2, b3 : B")) << text;
  EXPECT_TRUE(contains(text, "=> b1 = b2 \\/ b1 = b3 \\/ b2 = b3")) << text;
}
