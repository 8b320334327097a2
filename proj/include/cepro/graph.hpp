#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepro/io.hpp"

namespace cepro {

// Sentinel equipment type for held-out nodes in completion tasks.
inline constexpr const char* kMaskedType = "MASKED";

struct EquipmentNode {
  std::string id;
  std::string type;
  std::string label;
  std::map<std::string, std::string> attrs;

  bool operator==(const EquipmentNode&) const = default;
};

struct Connection {
  std::string from;
  std::string to;
  std::optional<std::string> stream;
  std::map<std::string, std::string> attrs;

  bool operator==(const Connection&) const = default;
};

// Directed multigraph of typed equipment nodes and stream connections.
// Node and edge list order is significant and preserved by serialization.
struct AbstractGraph {
  std::vector<EquipmentNode> equipment;
  std::vector<Connection> connections;

  bool operator==(const AbstractGraph&) const = default;

  bool empty() const { return equipment.empty(); }
  const EquipmentNode* find_node(const std::string& id) const;
};

// Controlled vocabulary of canonical equipment types, grouped by category.
class EquipmentOntology {
 public:
  static EquipmentOntology standard();

  void add_type(const std::string& category, const std::string& type);
  bool contains(const std::string& type) const;
  // Returns nullptr when the type is unknown.
  const std::string* category_of(const std::string& type) const;
  std::vector<std::string> vocabulary() const;  // category order, stable
  const std::vector<std::pair<std::string, std::vector<std::string>>>& categories() const {
    return categories_;
  }

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> categories_;
  std::map<std::string, std::string> type_to_category_;
};

enum class Severity { Legality, Compliance };

struct Violation {
  std::string rule_id;
  Severity severity = Severity::Legality;
  std::vector<std::string> targets;  // node ids and/or "connections[i]"
  std::string message;
};

struct ValidationReport {
  bool legal = true;
  bool compliant = true;
  std::vector<Violation> violations;
};

struct MaskedGraph {
  AbstractGraph graph;
  std::string masked_id;
  std::optional<std::string> truth_type;
};

// Extra compliance rules that a design task file may switch on by id.
// E1: at least one Feed and one Product node.
// E2: every reaction-category unit has a separation-category unit
//     reachable downstream.
inline constexpr const char* kExtraRuleFeedProduct = "E1";
inline constexpr const char* kExtraRuleReactorSeparation = "E2";

AbstractGraph build_graph(std::vector<EquipmentNode> nodes, std::vector<Connection> edges);

// Legality rules L1-L3 and compliance rules C0-C6 (plus any enabled extra
// rules). Violations are reported, never thrown.
ValidationReport validate_topology(const AbstractGraph& graph, const EquipmentOntology& ontology,
                                   const std::vector<std::string>& extra_rules = {});

MaskedGraph mask_node(const AbstractGraph& graph, std::optional<std::string> node_id,
                      std::optional<std::uint64_t> seed = std::nullopt);

std::string serialize_graph(const AbstractGraph& graph);
AbstractGraph parse_graph(const std::string& content);
AbstractGraph graph_from_json(const OJson& j, const std::string& what = "graph");
OJson graph_to_json(const AbstractGraph& graph);

// Partition of node ids by undirected reachability. Components ordered by
// first node occurrence; members keep node-list order.
std::vector<std::vector<std::string>> connected_components(const AbstractGraph& graph);

}  // namespace cepro
