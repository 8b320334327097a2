#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "cepro/error.hpp"
#include "cepro/graph.hpp"
#include "cepro/rng.hpp"
#include "support/random_graph.hpp"

using namespace cepro;

namespace {

EquipmentNode node(const std::string& id, const std::string& type, const std::string& label = "") {
  return {id, type, label, {}};
}

Connection edge(const std::string& from, const std::string& to) { return {from, to, {}, {}}; }

}  // namespace

TEST_CASE("build_graph basics") {
  CHECK(build_graph({}, {}).empty());

  auto g = build_graph({node("R1", "Reactor"), node("C1", "Distillation column")},
                       {edge("R1", "C1")});
  CHECK(g.equipment.size() == 2);
  CHECK(g.connections.size() == 1);

  CHECK_THROWS_WITH_AS(build_graph({node("R1", "Reactor"), node("R1", "Reactor")}, {}),
                       "duplicate id R1", ConfigError);
}

TEST_CASE("standard ontology vocabulary") {
  auto ontology = EquipmentOntology::standard();
  CHECK(ontology.vocabulary().size() >= 20);
  for (const char* required :
       {"Centrifugal pump", "Cooler/Condenser", "Kettle HEX", "Fixed-bed reactor", "Reactor",
        "Gas-Liquid Separator", "Distillation column", "Mixer", "Splitter", "Compressor",
        "Storage tank", "Feed", "Product"})
    CHECK(ontology.contains(required));
  CHECK_FALSE(ontology.contains("Membrane Separator"));
  CHECK(*ontology.category_of("Reactor") == "reaction");

  // canonical names unique across categories
  auto vocab = ontology.vocabulary();
  std::set<std::string> unique(vocab.begin(), vocab.end());
  CHECK(unique.size() == vocab.size());
}

TEST_CASE("validate_topology: compliant linear process") {
  auto g = build_graph(
      {node("F1", "Feed"), node("R1", "Reactor"), node("D1", "Distillation column"),
       node("P1", "Product"), node("P2", "Product")},
      {edge("F1", "R1"), edge("R1", "D1"), edge("D1", "P1"), edge("D1", "P2")});
  auto report = validate_topology(g, EquipmentOntology::standard());
  CHECK(report.legal);
  CHECK(report.compliant);
  CHECK(report.violations.empty());
}

TEST_CASE("validate_topology: missing endpoint is L1") {
  auto g = build_graph({node("F1", "Feed"), node("P1", "Product")},
                       {edge("F1", "P1"), edge("F1", "X9")});
  auto report = validate_topology(g, EquipmentOntology::standard());
  CHECK_FALSE(report.legal);
  CHECK_FALSE(report.compliant);  // compliant implies legal
  bool found = false;
  for (const auto& v : report.violations)
    if (v.rule_id == "L1" &&
        std::find(v.targets.begin(), v.targets.end(), "X9") != v.targets.end())
      found = true;
  CHECK(found);
}

TEST_CASE("validate_topology: off-vocabulary type is L3") {
  auto g = build_graph({node("F1", "Feed"), node("S1", "Membrane Separator"),
                        node("P1", "Product")},
                       {edge("F1", "S1"), edge("S1", "P1")});
  auto report = validate_topology(g, EquipmentOntology::standard());
  CHECK_FALSE(report.legal);
  bool found = false;
  for (const auto& v : report.violations)
    if (v.rule_id == "L3" && v.targets == std::vector<std::string>{"S1"}) found = true;
  CHECK(found);
}

TEST_CASE("validate_topology: masked sentinel passes L3") {
  auto g = build_graph({node("F1", "Feed"), node("M1", "MASKED"), node("P1", "Product")},
                       {edge("F1", "M1"), edge("M1", "P1")});
  auto report = validate_topology(g, EquipmentOntology::standard());
  CHECK(report.legal);
}

TEST_CASE("validate_topology: compliance rules") {
  auto ontology = EquipmentOntology::standard();

  SUBCASE("empty graph legal but not compliant") {
    auto report = validate_topology(AbstractGraph{}, ontology);
    CHECK(report.legal);
    CHECK_FALSE(report.compliant);
    CHECK(report.violations.size() == 1);
    CHECK(report.violations[0].rule_id == "C0");
  }

  SUBCASE("C1/C2 missing inlet and outlet") {
    auto g = build_graph({node("R1", "Reactor"), node("P1", "Product")}, {edge("R1", "P1")});
    auto report = validate_topology(g, ontology);
    CHECK(report.legal);
    CHECK_FALSE(report.compliant);
    std::set<std::string> rules;
    for (const auto& v : report.violations) rules.insert(v.rule_id);
    CHECK(rules.count("C1"));  // reactor lacks an inlet
  }

  SUBCASE("C3 single-inlet mixer") {
    auto g = build_graph({node("F1", "Feed"), node("M1", "Mixer"), node("P1", "Product")},
                         {edge("F1", "M1"), edge("M1", "P1")});
    auto report = validate_topology(g, ontology);
    bool found = false;
    for (const auto& v : report.violations)
      if (v.rule_id == "C3") found = true;
    CHECK(found);
  }

  SUBCASE("C5 column with one outlet") {
    auto g = build_graph({node("F1", "Feed"), node("D1", "Distillation column"),
                          node("P1", "Product")},
                         {edge("F1", "D1"), edge("D1", "P1")});
    auto report = validate_topology(g, ontology);
    bool found = false;
    for (const auto& v : report.violations)
      if (v.rule_id == "C5") found = true;
    CHECK(found);
  }

  SUBCASE("C6 self-loop flagged as compliance, not legality") {
    auto g = build_graph({node("F1", "Feed"), node("R1", "Reactor"), node("P1", "Product")},
                         {edge("F1", "R1"), edge("R1", "R1"), edge("R1", "P1")});
    auto report = validate_topology(g, ontology);
    CHECK(report.legal);
    CHECK_FALSE(report.compliant);
  }

  SUBCASE("extra rule E1 wants feed and product") {
    auto g = build_graph({node("T1", "Storage tank"), node("R1", "Reactor")},
                         {edge("T1", "R1"), edge("R1", "T1")});
    auto base = validate_topology(g, ontology);
    bool e1 = false;
    for (const auto& v : base.violations)
      if (v.rule_id == "E1") e1 = true;
    CHECK_FALSE(e1);
    auto extra = validate_topology(g, ontology, {kExtraRuleFeedProduct});
    e1 = false;
    for (const auto& v : extra.violations)
      if (v.rule_id == "E1") e1 = true;
    CHECK(e1);
  }

  SUBCASE("extra rule E2 wants downstream separation after a reactor") {
    auto g = build_graph({node("F1", "Feed"), node("R1", "Reactor"), node("P1", "Product")},
                         {edge("F1", "R1"), edge("R1", "P1")});
    auto extra = validate_topology(g, ontology, {kExtraRuleReactorSeparation});
    bool e2 = false;
    for (const auto& v : extra.violations)
      if (v.rule_id == "E2") e2 = true;
    CHECK(e2);
  }
}

TEST_CASE("validation is pure and idempotent") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    auto g = testgen::random_graph(rng, 12);
    auto ontology = EquipmentOntology::standard();
    auto a = validate_topology(g, ontology);
    auto b = validate_topology(g, ontology);
    CHECK(a.legal == b.legal);
    CHECK(a.compliant == b.compliant);
    CHECK(a.violations.size() == b.violations.size());
    if (a.compliant) CHECK(a.legal);  // compliant implies legal
  }
}

TEST_CASE("mask_node") {
  auto g = build_graph({node("F1", "Feed"), node("R1", "Reactor"), node("P1", "Product")},
                       {edge("F1", "R1"), edge("R1", "P1")});

  SUBCASE("explicit target") {
    auto masked = mask_node(g, "R1");
    CHECK(masked.masked_id == "R1");
    CHECK(masked.truth_type == "Reactor");
    CHECK(masked.graph.find_node("R1")->type == kMaskedType);
    CHECK(masked.graph.find_node("R1")->label == kMaskedType);
    // node count, edge list, and other nodes unchanged
    CHECK(masked.graph.equipment.size() == g.equipment.size());
    CHECK(masked.graph.connections == g.connections);
    CHECK(*masked.graph.find_node("F1") == *g.find_node("F1"));
  }

  SUBCASE("seeded choice avoids feed and product") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto masked = mask_node(g, std::nullopt, seed);
      CHECK(masked.masked_id == "R1");  // only eligible interior node
    }
  }

  SUBCASE("same seed twice picks the same node") {
    auto big = build_graph({node("F1", "Feed"), node("R1", "Reactor"), node("R2", "Reactor"),
                            node("D1", "Distillation column"), node("P1", "Product")},
                           {edge("F1", "R1"), edge("R1", "R2"), edge("R2", "D1"),
                            edge("D1", "P1")});
    auto a = mask_node(big, std::nullopt, 99);
    auto b = mask_node(big, std::nullopt, 99);
    CHECK(a.masked_id == b.masked_id);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(mask_node(g, "ZZ"), ConfigError);
    CHECK_THROWS_AS(mask_node(g, std::nullopt, std::nullopt), ConfigError);
  }
}

TEST_CASE("serialization fixed points") {
  CHECK(serialize_graph(AbstractGraph{}) == "{\n  \"equipment\": [],\n  \"connections\": []\n}\n");
  CHECK(parse_graph(serialize_graph(AbstractGraph{})) == AbstractGraph{});

  auto g = build_graph({node("R1", "Reactor", "main"), node("C1", "Distillation column")},
                       {edge("R1", "C1")});
  auto text = serialize_graph(g);
  CHECK(parse_graph(text) == g);
  CHECK(serialize_graph(parse_graph(text)) == text);  // byte-identical fixpoint
}

TEST_CASE("parse_graph error locators") {
  CHECK_THROWS_WITH_AS(parse_graph(R"({"equipment":[],"connections":[{"from":"A"}]})"),
                       "graph: connections[0]: missing field 'to'", ParseError);
  CHECK_THROWS_AS(parse_graph(R"({"equipment":[{"type":"Reactor"}],"connections":[]})"),
                  ParseError);
  CHECK_THROWS_AS(parse_graph(R"({"equipment":[],"connections":[],"extra":1})"), ParseError);
  CHECK_THROWS_AS(parse_graph("not json"), ParseError);
  CHECK_THROWS_AS(
      parse_graph(
          R"({"equipment":[{"id":"A","type":"Reactor"},{"id":"A","type":"Reactor"}],"connections":[]})"),
      ParseError);
}

TEST_CASE("round-trip property over random graphs") {
  Rng rng(12345);
  for (int i = 0; i < 1000; ++i) {
    auto g = testgen::random_graph(rng);
    auto text = serialize_graph(g);
    CHECK(parse_graph(text) == g);
  }
}

TEST_CASE("connected_components") {
  CHECK(connected_components(AbstractGraph{}).empty());

  auto path = build_graph({node("A", "Feed"), node("B", "Reactor"), node("C", "Product")},
                          {edge("A", "B"), edge("B", "C")});
  auto comps = connected_components(path);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0] == std::vector<std::string>{"A", "B", "C"});

  auto split = build_graph({node("A", "Feed"), node("B", "Reactor"), node("C", "Product")},
                           {edge("A", "B")});
  comps = connected_components(split);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<std::string>{"A", "B"});
  CHECK(comps[1] == std::vector<std::string>{"C"});
}

TEST_CASE("connected_components partitions the node set") {
  Rng rng(777);
  for (int i = 0; i < 200; ++i) {
    auto g = testgen::random_graph(rng, 15);
    auto comps = connected_components(g);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& comp : comps) {
      for (const auto& id : comp) {
        CHECK(seen.insert(id).second);  // disjoint
        ++total;
      }
    }
    CHECK(total == g.equipment.size());  // union covers all nodes
  }
}
